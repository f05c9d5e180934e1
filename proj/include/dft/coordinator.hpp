#pragma once

#include "dft/clock.hpp"
#include "dft/report.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

namespace dft {

enum class District { HQ, D1, D2, D3, D4 };
std::string_view to_string(District d);
District parse_district(std::string_view text);

struct MemberRecord {
    std::string member_id;
    std::string name;
    std::string station;
    District district = District::HQ;
    std::set<std::string> business_lines; // "DCFT", "DMFT"
    std::string certified_on;             // YYYY-MM-DD; empty when not certified
    std::map<int, int> assessments_by_year;

    bool operator==(const MemberRecord&) const = default;
};

struct DftFileNumber {
    std::string value; // DFT-<year>-<6-digit sequence>
    std::string member_id;
    std::string investigation_id;
    std::string issued_at;

    bool operator==(const DftFileNumber&) const = default;
};

/// One row of the yearly program statistics. `label` keeps the source text
/// (e.g. "2015 (June)"); `year` is its leading number.
struct YearRow {
    std::string label;
    int year = 0;
    long dft_files = 0;
    long dcft_members = 0;
    long dmft_members = 0;
    long tcu_files = 0;

    bool operator==(const YearRow&) const = default;
};

/// Member locations by district. Totals are kept as published, not recomputed.
struct LocationRow {
    std::string label;
    std::string business_line;
    std::array<long, 5> by_district{}; // HQ, D1..D4
    long total = 0;

    bool operator==(const LocationRow&) const = default;
};

struct BacklogSnapshot {
    long total = 0;
    long dft_assessed = 0;

    double dft_share() const { return total == 0 ? 0.0 : static_cast<double>(dft_assessed) / static_cast<double>(total); }
};

struct MetricsSummary {
    std::vector<YearRow> rows;      // ingested history within the period
    std::vector<YearRow> live_rows; // accumulated from recorded assessments
    double exhibit_reduction_ratio = 0.0;        // configured
    std::optional<double> live_exhibit_reduction; // 1 - forwarded/examined
    BacklogSnapshot backlog;
};

struct Period {
    int from_year = 0;
    int to_year = 9999;
};

struct CoordinatorConfig {
    int qualification_minimum = 4;
    double exhibit_reduction = 0.75;
    BacklogSnapshot backlog;
};

/// "key = value" lines: qualification_minimum, exhibit_reduction,
/// backlog_total, backlog_dft_assessed. Throws coordinator.InvalidConfig.
CoordinatorConfig parse_coordinator_config(std::string_view text);

enum class Qualification { current, lapsed };
std::string_view to_string(Qualification q);

/// Tab-separated tables as published, with the original header row.
std::vector<YearRow> parse_year_rows(std::string_view text);
std::string format_year_rows(const std::vector<YearRow>& rows);
std::vector<LocationRow> parse_location_rows(std::string_view text);
std::string format_location_rows(const std::vector<LocationRow>& rows);

/// Member registry, file-number allocator and program metrics. State lives in
/// an append-only JSON-lines journal replayed on construction; without a path
/// the coordinator is in-memory. Safe to call from many threads.
class Coordinator {
public:
    explicit Coordinator(CoordinatorConfig config = {}, std::optional<std::filesystem::path> journal = std::nullopt,
                         Clock clock = system_clock());

    const CoordinatorConfig& config() const { return config_; }

    /// Idempotent for an identical record; throws coordinator.DuplicateMember
    /// when the id is taken by a different record.
    MemberRecord register_member(MemberRecord m);
    /// Throws coordinator.UnknownMember.
    MemberRecord member(const std::string& member_id) const;
    std::vector<MemberRecord> members() const;

    /// Throws coordinator.UnknownMember or coordinator.NotCertified.
    DftFileNumber issue_file_number(const std::string& member_id, const std::string& investigation_id);
    std::optional<DftFileNumber> file_number(const std::string& value) const;

    /// Validates the report and counts it once per file number. A different
    /// report under an already-counted number (another exhibit) leaves the
    /// count unchanged; the same report twice throws
    /// coordinator.DuplicateReportForFileNumber.
    MemberRecord record_assessment(const std::string& file_number, const ObservationReport& report);

    Qualification qualification_status(const std::string& member_id, int year,
                                        std::optional<int> minimum = std::nullopt) const;

    /// Throws coordinator.MalformedRow. Replaces any earlier history.
    MetricsSummary ingest_historical(std::string_view table_rows);
    std::string export_historical() const;
    std::vector<LocationRow> ingest_locations(std::string_view table_rows);
    std::string export_locations() const;
    void set_backlog_snapshot(BacklogSnapshot s);

    /// Throws coordinator.NoData when nothing falls in the period.
    MetricsSummary program_metrics(Period period = {}) const;

private:
    struct AssessmentEntry {
        std::string file_number;
        std::string member_id;
        std::string report_digest;
        int year = 0;
        int examined = 0;
        int forwarded = 0;
    };

    void apply(const nlohmann::json& event);
    void append(const nlohmann::json& event);

    CoordinatorConfig config_;
    Clock clock_;
    mutable std::shared_mutex mutex_;
    std::ofstream journal_;

    std::map<std::string, MemberRecord> members_;
    std::map<std::string, DftFileNumber> numbers_;                              // by value
    std::map<std::pair<std::string, std::string>, std::string> by_pair_;        // (member, investigation) -> value
    std::map<int, unsigned long> next_seq_;                                     // by year
    std::map<std::string, std::set<std::string>> reports_by_number_;            // value -> report digests
    std::vector<AssessmentEntry> assessments_;
    std::vector<YearRow> history_;
    std::vector<LocationRow> locations_;
};

nlohmann::json to_json(const MemberRecord& m);
MemberRecord member_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DftFileNumber& n);
DftFileNumber file_number_from_json(const nlohmann::json& j);
nlohmann::json to_json(const YearRow& r);
nlohmann::json to_json(const MetricsSummary& m);

} // namespace dft
