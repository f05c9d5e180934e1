#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace dft {

struct AuditEvent {
    std::uint64_t seq = 0;
    std::string actor;
    std::string action;
    std::map<std::string, std::string> parameters;
    std::string timestamp;
};

std::string format_audit_event(const AuditEvent& e);
AuditEvent parse_audit_event(const std::string& line);

/// Append-only, newline-delimited event log for one case. Sequence numbers
/// continue from the last event already on disk. Appends are serialized and
/// flushed before record() returns.
class AuditLog {
public:
    /// An unbacked log, used when no workspace is involved.
    AuditLog() = default;
    explicit AuditLog(const std::filesystem::path& path);

    AuditLog(const AuditLog&) = delete;
    AuditLog& operator=(const AuditLog&) = delete;

    AuditEvent record(const std::string& actor, const std::string& action,
                      std::map<std::string, std::string> parameters = {});
    void close();
    bool is_open() const;
    std::uint64_t last_seq() const;
    /// Events recorded through this object (or replayed from disk at open).
    std::vector<AuditEvent> events() const;

private:
    mutable std::mutex mu_;
    std::optional<std::filesystem::path> path_;
    std::ofstream out_;
    std::vector<AuditEvent> events_;
    std::uint64_t last_seq_ = 0;
    bool open_ = true;
};

std::vector<AuditEvent> read_audit_log(const std::filesystem::path& path);

} // namespace dft
