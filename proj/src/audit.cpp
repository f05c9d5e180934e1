#include "dft/audit.hpp"

#include "dft/clock.hpp"
#include "dft/error.hpp"
#include "dft/text.hpp"

#include "json.hpp"

namespace dft {

using nlohmann::json;

std::string format_audit_event(const AuditEvent& e)
{
    json j = {{"seq", e.seq},
              {"actor", e.actor},
              {"action", e.action},
              {"parameters", e.parameters},
              {"timestamp", e.timestamp}};
    return j.dump();
}

AuditEvent parse_audit_event(const std::string& line)
{
    try {
        const auto j = json::parse(line);
        AuditEvent e;
        e.seq = j.at("seq").get<std::uint64_t>();
        e.actor = j.at("actor").get<std::string>();
        e.action = j.at("action").get<std::string>();
        e.parameters = j.at("parameters").get<std::map<std::string, std::string>>();
        e.timestamp = j.at("timestamp").get<std::string>();
        return e;
    } catch (const json::exception& ex) {
        throw Error("integrity.MalformedAuditLog", ex.what());
    }
}

std::vector<AuditEvent> read_audit_log(const std::filesystem::path& path)
{
    std::vector<AuditEvent> out;
    if (!std::filesystem::exists(path))
        return out;
    const auto content = text::read_file(path.string());
    for (auto line : text::lines(content))
        if (!text::trim(line).empty())
            out.push_back(parse_audit_event(std::string(line)));
    return out;
}

AuditLog::AuditLog(const std::filesystem::path& path) : path_(path)
{
    events_ = read_audit_log(path);
    for (std::size_t i = 0; i < events_.size(); ++i)
        if (events_[i].seq != i + 1)
            throw Error("integrity.MalformedAuditLog",
                        "audit log sequence gap at line " + std::to_string(i + 1) + " of " + path.string());
    last_seq_ = events_.size();
    out_.open(path, std::ios::app | std::ios::binary);
    if (!out_)
        throw Error("integrity.LogClosed", "cannot open audit log " + path.string());
}

AuditEvent AuditLog::record(const std::string& actor, const std::string& action,
                            std::map<std::string, std::string> parameters)
{
    std::lock_guard lock(mu_);
    if (!open_)
        throw Error("integrity.LogClosed", "audit log is closed");
    AuditEvent e{last_seq_ + 1, actor, action, std::move(parameters), utc_now()};
    if (path_) {
        out_ << format_audit_event(e) << '\n';
        out_.flush();
        if (!out_)
            throw Error("integrity.WriteFailure", "audit append failed");
    }
    last_seq_ = e.seq;
    events_.push_back(e);
    return e;
}

void AuditLog::close()
{
    std::lock_guard lock(mu_);
    open_ = false;
    if (out_.is_open())
        out_.close();
}

bool AuditLog::is_open() const
{
    std::lock_guard lock(mu_);
    return open_;
}

std::uint64_t AuditLog::last_seq() const
{
    std::lock_guard lock(mu_);
    return last_seq_;
}

std::vector<AuditEvent> AuditLog::events() const
{
    std::lock_guard lock(mu_);
    return events_;
}

} // namespace dft
