#include "dft/coordinator.hpp"

#include "dft/error.hpp"
#include "dft/sha256.hpp"
#include "dft/text.hpp"

#include <cstdio>
#include <mutex>
#include <sstream>

namespace dft {

using nlohmann::json;

namespace {

constexpr const char* year_header = "Year\tFiles\tDFCT members\tDMFT members\tTCU files";
constexpr const char* location_header = "DFT type\tHQ\tD1\tD2\tD3\tD4\tTotal";

Error malformed_row(std::size_t lineno, const std::string& why)
{
    return Error("coordinator.MalformedRow", "MalformedRow(" + std::to_string(lineno) + "): " + why);
}

long parse_count(std::string_view field, std::size_t lineno)
{
    const auto v = text::parse_u64(text::trim(field));
    if (!v)
        throw malformed_row(lineno, "not a count: " + std::string(field));
    return static_cast<long>(*v);
}

std::string format_seq(int year, unsigned long seq)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "DFT-%04d-%06lu", year, seq);
    return buf;
}

} // namespace

std::string_view to_string(District d)
{
    switch (d) {
    case District::HQ: return "HQ";
    case District::D1: return "D1";
    case District::D2: return "D2";
    case District::D3: return "D3";
    case District::D4: return "D4";
    }
    return "HQ";
}

District parse_district(std::string_view text)
{
    for (auto d : {District::HQ, District::D1, District::D2, District::D3, District::D4})
        if (to_string(d) == text)
            return d;
    throw Error("coordinator.InvalidMember", "unknown district: " + std::string(text));
}

std::string_view to_string(Qualification q)
{
    return q == Qualification::current ? "current" : "lapsed";
}

CoordinatorConfig parse_coordinator_config(std::string_view content)
{
    CoordinatorConfig c;
    std::size_t lineno = 0;
    for (auto raw : text::lines(content)) {
        ++lineno;
        const auto line = text::trim(raw);
        if (line.empty() || line.front() == '#')
            continue;
        const auto eq = line.find('=');
        const auto bad = [&](const std::string& why) {
            return Error("coordinator.InvalidConfig", "line " + std::to_string(lineno) + ": " + why);
        };
        if (eq == std::string_view::npos)
            throw bad("expected key = value");
        const auto key = text::trim(line.substr(0, eq));
        const auto value = text::trim(line.substr(eq + 1));
        if (key == "exhibit_reduction") {
            const auto v = text::parse_double(value);
            if (!v || *v < 0.0 || *v > 1.0)
                throw bad("exhibit_reduction must be in [0,1]");
            c.exhibit_reduction = *v;
            continue;
        }
        const auto n = text::parse_u64(value);
        if (!n)
            throw bad("not a count: " + std::string(value));
        if (key == "qualification_minimum")
            c.qualification_minimum = static_cast<int>(*n);
        else if (key == "backlog_total")
            c.backlog.total = static_cast<long>(*n);
        else if (key == "backlog_dft_assessed")
            c.backlog.dft_assessed = static_cast<long>(*n);
        else
            throw bad("unknown key " + std::string(key));
    }
    if (c.backlog.dft_assessed > c.backlog.total)
        throw Error("coordinator.InvalidConfig", "backlog_dft_assessed exceeds backlog_total");
    return c;
}

std::vector<YearRow> parse_year_rows(std::string_view content)
{
    std::vector<YearRow> rows;
    std::set<int> years;
    std::size_t lineno = 0;
    bool header = false;
    for (auto line : text::lines(content)) {
        ++lineno;
        if (text::trim(line).empty())
            continue;
        if (!header) {
            if (line != year_header)
                throw malformed_row(lineno, "expected header \"" + std::string(year_header) + "\"");
            header = true;
            continue;
        }
        const auto f = text::split(line, '\t');
        if (f.size() != 5)
            throw malformed_row(lineno, "expected 5 tab-separated fields");
        YearRow r;
        r.label = std::string(f[0]);
        const auto digits = r.label.substr(0, r.label.find_first_not_of("0123456789"));
        const auto year = text::parse_u64(digits);
        if (!year || digits.size() != 4)
            throw malformed_row(lineno, "row label must start with a year: " + r.label);
        r.year = static_cast<int>(*year);
        if (!years.insert(r.year).second)
            throw malformed_row(lineno, "duplicate year " + digits);
        r.dft_files = parse_count(f[1], lineno);
        r.dcft_members = parse_count(f[2], lineno);
        r.dmft_members = parse_count(f[3], lineno);
        r.tcu_files = parse_count(f[4], lineno);
        rows.push_back(std::move(r));
    }
    if (!header)
        throw malformed_row(lineno, "missing header");
    return rows;
}

std::string format_year_rows(const std::vector<YearRow>& rows)
{
    std::ostringstream out;
    out << year_header << '\n';
    for (const auto& r : rows)
        out << r.label << '\t' << r.dft_files << '\t' << r.dcft_members << '\t' << r.dmft_members << '\t'
            << r.tcu_files << '\n';
    return out.str();
}

std::vector<LocationRow> parse_location_rows(std::string_view content)
{
    std::vector<LocationRow> rows;
    std::size_t lineno = 0;
    bool header = false;
    std::string line_of_business;
    for (auto line : text::lines(content)) {
        ++lineno;
        if (text::trim(line).empty())
            continue;
        if (!header) {
            if (line != location_header)
                throw malformed_row(lineno, "expected header \"" + std::string(location_header) + "\"");
            header = true;
            continue;
        }
        const auto f = text::split(line, '\t');
        if (f.size() != 7)
            throw malformed_row(lineno, "expected 7 tab-separated fields");
        LocationRow r;
        r.label = std::string(f[0]);
        // Sub-rows ("- Police Stations Supported") belong to the line above.
        if (r.label.rfind("- ", 0) != 0)
            line_of_business = r.label.substr(0, r.label.find(' '));
        if (line_of_business.empty())
            throw malformed_row(lineno, "sub-row without a parent row");
        r.business_line = line_of_business;
        for (std::size_t i = 0; i < 5; ++i)
            r.by_district[i] = parse_count(f[i + 1], lineno);
        r.total = parse_count(f[6], lineno);
        rows.push_back(std::move(r));
    }
    if (!header)
        throw malformed_row(lineno, "missing header");
    return rows;
}

std::string format_location_rows(const std::vector<LocationRow>& rows)
{
    std::ostringstream out;
    out << location_header << '\n';
    for (const auto& r : rows) {
        out << r.label;
        for (auto v : r.by_district)
            out << '\t' << v;
        out << '\t' << r.total << '\n';
    }
    return out.str();
}

Coordinator::Coordinator(CoordinatorConfig config, std::optional<std::filesystem::path> journal, Clock clock)
    : config_(config), clock_(std::move(clock))
{
    if (!journal)
        return;
    if (std::filesystem::exists(*journal)) {
        const auto content = text::read_file(journal->string());
        std::size_t lineno = 0;
        for (auto line : text::lines(content)) {
            ++lineno;
            if (text::trim(line).empty())
                continue;
            try {
                apply(json::parse(line));
            } catch (const json::exception& e) {
                throw Error("coordinator.CorruptJournal",
                            journal->string() + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    } else if (journal->has_parent_path()) {
        std::filesystem::create_directories(journal->parent_path());
    }
    journal_.open(*journal, std::ios::app | std::ios::binary);
    if (!journal_)
        throw Error("coordinator.JournalUnavailable", "cannot open journal " + journal->string());
}

void Coordinator::append(const json& event)
{
    if (!journal_.is_open())
        return;
    journal_ << event.dump() << '\n';
    journal_.flush();
    if (!journal_)
        throw Error("coordinator.JournalUnavailable", "journal append failed");
}

void Coordinator::apply(const json& e)
{
    const auto type = e.at("type").get<std::string>();
    if (type == "member") {
        auto m = member_from_json(e.at("member"));
        const auto id = m.member_id;
        const auto counts = members_.count(id) ? members_[id].assessments_by_year : std::map<int, int>{};
        members_[id] = std::move(m);
        members_[id].assessments_by_year = counts;
    } else if (type == "file_number") {
        const auto n = file_number_from_json(e.at("file_number"));
        const int year = e.at("year").get<int>();
        const auto seq = e.at("seq").get<unsigned long>();
        next_seq_[year] = std::max(next_seq_[year], seq + 1);
        by_pair_[{n.member_id, n.investigation_id}] = n.value;
        numbers_[n.value] = n;
    } else if (type == "assessment") {
        AssessmentEntry a{e.at("file_number").get<std::string>(), e.at("member_id").get<std::string>(),
                          e.at("report_digest").get<std::string>(), e.at("year").get<int>(),
                          e.at("examined").get<int>(), e.at("forwarded").get<int>()};
        auto& digests = reports_by_number_[a.file_number];
        if (digests.empty())
            members_[a.member_id].assessments_by_year[a.year] += 1;
        digests.insert(a.report_digest);
        assessments_.push_back(std::move(a));
    } else if (type == "historical") {
        history_ = parse_year_rows(e.at("text").get<std::string>());
    } else if (type == "locations") {
        locations_ = parse_location_rows(e.at("text").get<std::string>());
    } else if (type == "backlog") {
        config_.backlog = {e.at("total").get<long>(), e.at("dft_assessed").get<long>()};
    } else {
        throw Error("coordinator.CorruptJournal", "unknown journal event " + type);
    }
}

MemberRecord Coordinator::register_member(MemberRecord m)
{
    if (m.member_id.empty())
        throw Error("coordinator.InvalidMember", "member_id is required");
    for (const auto& line : m.business_lines)
        if (line != "DCFT" && line != "DMFT")
            throw Error("coordinator.InvalidMember", "unknown business line " + line);
    m.assessments_by_year.clear();
    std::unique_lock lock(mutex_);
    if (const auto it = members_.find(m.member_id); it != members_.end()) {
        auto existing = it->second;
        existing.assessments_by_year.clear();
        if (existing == m)
            return it->second;
        throw Error("coordinator.DuplicateMember", "member " + m.member_id + " already registered differently");
    }
    const json e = {{"type", "member"}, {"member", to_json(m)}};
    append(e);
    apply(e);
    return members_.at(m.member_id);
}

MemberRecord Coordinator::member(const std::string& member_id) const
{
    std::shared_lock lock(mutex_);
    const auto it = members_.find(member_id);
    if (it == members_.end())
        throw Error("coordinator.UnknownMember", "UnknownMember(" + member_id + ")");
    return it->second;
}

std::vector<MemberRecord> Coordinator::members() const
{
    std::shared_lock lock(mutex_);
    std::vector<MemberRecord> out;
    for (const auto& [id, m] : members_)
        out.push_back(m);
    return out;
}

DftFileNumber Coordinator::issue_file_number(const std::string& member_id, const std::string& investigation_id)
{
    if (investigation_id.empty())
        throw Error("coordinator.InvalidRequest", "investigation_id is required");
    const auto now = clock_();
    std::unique_lock lock(mutex_);
    const auto m = members_.find(member_id);
    if (m == members_.end())
        throw Error("coordinator.UnknownMember", "UnknownMember(" + member_id + ")");
    const auto issued_at = format_utc(now);
    if (m->second.certified_on.empty() || m->second.certified_on > issued_at.substr(0, 10))
        throw Error("coordinator.NotCertified", "NotCertified(" + member_id + ")");
    if (const auto it = by_pair_.find({member_id, investigation_id}); it != by_pair_.end())
        return numbers_.at(it->second);

    const int year = utc_year(now);
    auto seq = next_seq_[year];
    if (seq == 0)
        seq = 1;
    DftFileNumber n{format_seq(year, seq), member_id, investigation_id, issued_at};
    const json e = {{"type", "file_number"}, {"year", year}, {"seq", seq}, {"file_number", to_json(n)}};
    append(e);
    apply(e);
    return n;
}

std::optional<DftFileNumber> Coordinator::file_number(const std::string& value) const
{
    std::shared_lock lock(mutex_);
    const auto it = numbers_.find(value);
    if (it == numbers_.end())
        return std::nullopt;
    return it->second;
}

MemberRecord Coordinator::record_assessment(const std::string& file_number, const ObservationReport& report)
{
    const auto errors = validate_report(report);
    if (!errors.empty())
        throw Error("report.InvalidReport", "InvalidReport(" + errors.front() + ")");
    if (report.dft_file_number != file_number)
        throw Error("coordinator.InvalidRequest",
                    "report is for " + report.dft_file_number + ", not " + file_number);
    const auto digest = sha256_hex(report_core(report));
    int forwarded = 0;
    for (const auto& d : report.threshold_decisions)
        forwarded += d.decision != Decision::does_not_meet;
    const int year = utc_year(clock_());

    std::unique_lock lock(mutex_);
    const auto n = numbers_.find(file_number);
    if (n == numbers_.end())
        throw Error("coordinator.UnknownFileNumber", "UnknownFileNumber(" + file_number + ")");
    if (reports_by_number_[file_number].count(digest))
        throw Error("coordinator.DuplicateReportForFileNumber", "DuplicateReportForFileNumber(" + file_number + ")");
    const json e = {{"type", "assessment"},
                    {"file_number", file_number},
                    {"member_id", n->second.member_id},
                    {"report_digest", digest},
                    {"year", year},
                    {"examined", static_cast<int>(report.items.size())},
                    {"forwarded", forwarded}};
    append(e);
    apply(e);
    return members_.at(n->second.member_id);
}

Qualification Coordinator::qualification_status(const std::string& member_id, int year,
                                                 std::optional<int> minimum) const
{
    const auto m = member(member_id);
    const int need = minimum.value_or(config_.qualification_minimum);
    const auto it = m.assessments_by_year.find(year);
    const int have = it == m.assessments_by_year.end() ? 0 : it->second;
    return have >= need ? Qualification::current : Qualification::lapsed;
}

MetricsSummary Coordinator::ingest_historical(std::string_view table_rows)
{
    const auto rows = parse_year_rows(table_rows);
    {
        std::unique_lock lock(mutex_);
        const json e = {{"type", "historical"}, {"text", format_year_rows(rows)}};
        append(e);
        apply(e);
    }
    return program_metrics();
}

std::string Coordinator::export_historical() const
{
    std::shared_lock lock(mutex_);
    return format_year_rows(history_);
}

std::vector<LocationRow> Coordinator::ingest_locations(std::string_view table_rows)
{
    const auto rows = parse_location_rows(table_rows);
    std::unique_lock lock(mutex_);
    const json e = {{"type", "locations"}, {"text", format_location_rows(rows)}};
    append(e);
    apply(e);
    return locations_;
}

std::string Coordinator::export_locations() const
{
    std::shared_lock lock(mutex_);
    return format_location_rows(locations_);
}

void Coordinator::set_backlog_snapshot(BacklogSnapshot s)
{
    if (s.total < 0 || s.dft_assessed < 0 || s.dft_assessed > s.total)
        throw Error("coordinator.InvalidRequest", "backlog snapshot needs 0 <= dft_assessed <= total");
    std::unique_lock lock(mutex_);
    const json e = {{"type", "backlog"}, {"total", s.total}, {"dft_assessed", s.dft_assessed}};
    append(e);
    apply(e);
}

MetricsSummary Coordinator::program_metrics(Period period) const
{
    std::shared_lock lock(mutex_);
    MetricsSummary s;
    s.exhibit_reduction_ratio = config_.exhibit_reduction;
    s.backlog = config_.backlog;
    for (const auto& r : history_)
        if (r.year >= period.from_year && r.year <= period.to_year)
            s.rows.push_back(r);

    std::map<int, YearRow> live;
    long examined = 0, forwarded = 0;
    std::set<std::string> counted;
    for (const auto& a : assessments_) {
        if (a.year < period.from_year || a.year > period.to_year)
            continue;
        auto& row = live[a.year];
        row.year = a.year;
        row.label = std::to_string(a.year);
        if (counted.insert(a.file_number).second) {
            ++row.dft_files;
            row.tcu_files += a.forwarded > 0;
        }
        examined += a.examined;
        forwarded += a.forwarded;
    }
    for (auto& [year, row] : live) {
        for (const auto& [id, m] : members_) {
            if (m.certified_on.empty() || std::stoi(m.certified_on.substr(0, 4)) > year)
                continue;
            row.dcft_members += m.business_lines.count("DCFT");
            row.dmft_members += m.business_lines.count("DMFT");
        }
        s.live_rows.push_back(row);
    }
    if (examined > 0)
        s.live_exhibit_reduction = 1.0 - static_cast<double>(forwarded) / static_cast<double>(examined);
    if (s.rows.empty() && s.live_rows.empty())
        throw Error("coordinator.NoData", "no program data in the requested period");
    return s;
}

json to_json(const MemberRecord& m)
{
    json counts = json::object();
    for (const auto& [y, c] : m.assessments_by_year)
        counts[std::to_string(y)] = c;
    return {{"member_id", m.member_id},
            {"name", m.name},
            {"station", m.station},
            {"district", to_string(m.district)},
            {"business_lines", m.business_lines},
            {"certified_on", m.certified_on},
            {"assessments_by_year", std::move(counts)}};
}

MemberRecord member_from_json(const json& j)
{
    MemberRecord m;
    m.member_id = j.at("member_id").get<std::string>();
    m.name = j.value("name", "");
    m.station = j.value("station", "");
    m.district = parse_district(j.value("district", "HQ"));
    m.business_lines = j.value("business_lines", std::set<std::string>{});
    m.certified_on = j.value("certified_on", "");
    if (j.contains("assessments_by_year"))
        for (const auto& [y, c] : j.at("assessments_by_year").items())
            m.assessments_by_year[std::stoi(y)] = c.get<int>();
    return m;
}

json to_json(const DftFileNumber& n)
{
    return {{"value", n.value},
            {"member_id", n.member_id},
            {"investigation_id", n.investigation_id},
            {"issued_at", n.issued_at}};
}

DftFileNumber file_number_from_json(const json& j)
{
    return {j.at("value").get<std::string>(), j.at("member_id").get<std::string>(),
            j.at("investigation_id").get<std::string>(), j.at("issued_at").get<std::string>()};
}

json to_json(const YearRow& r)
{
    return {{"label", r.label},
            {"year", r.year},
            {"dft_files", r.dft_files},
            {"dcft_members", r.dcft_members},
            {"dmft_members", r.dmft_members},
            {"tcu_files", r.tcu_files}};
}

json to_json(const MetricsSummary& m)
{
    json rows = json::array();
    for (const auto& r : m.rows)
        rows.push_back(to_json(r));
    json live = json::array();
    for (const auto& r : m.live_rows)
        live.push_back(to_json(r));
    return {{"rows", std::move(rows)},
            {"live_rows", std::move(live)},
            {"exhibit_reduction_ratio", m.exhibit_reduction_ratio},
            {"live_exhibit_reduction", m.live_exhibit_reduction ? json(*m.live_exhibit_reduction) : json(nullptr)},
            {"backlog",
             {{"total", m.backlog.total}, {"dft_assessed", m.backlog.dft_assessed}, {"dft_share", m.backlog.dft_share()}}}};
}

} // namespace dft
