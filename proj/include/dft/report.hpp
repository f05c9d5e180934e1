#pragma once

#include "dft/assessment.hpp"
#include "dft/profiles.hpp"
#include "dft/triage.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dft {

inline constexpr int report_schema_version = 1;

/// One assessed evidence item. Hits carry their flagged marker inline.
struct ItemSection {
    std::string item_id;
    std::string description;
    std::string manifest;        // workspace-relative manifest file
    std::string manifest_digest; // SHA-256 of the manifest text
    std::vector<SearchRun> searches_run;
    std::vector<ArtifactHit> hits;
    std::optional<EncryptionFindings> encryption;
    ChecklistResult checklist;

    bool operator==(const ItemSection&) const = default;
};

/// Observations only: there is deliberately no field for conclusions.
struct ObservationReport {
    int schema_version = report_schema_version;
    std::string dft_file_number;
    std::string case_id;
    std::string member_id;
    std::string crime_type;
    std::vector<ItemSection> items; // ascending item_id
    std::string notes;
    std::vector<ThresholdDecision> threshold_decisions;
    std::string created_at;

    bool operator==(const ObservationReport&) const = default;
};

struct ManifestRef {
    std::string file;
    std::string digest;
};

struct ReportInputs {
    std::string dft_file_number;
    std::string member_id;
    CaseDescription case_description;
    SearchProfile profile;
    std::vector<Assessment> assessments;
    std::map<std::string, ManifestRef> manifests; // by item_id
    std::set<std::string> flags;                  // hit references
    std::string notes;
    std::vector<ThresholdDecision> threshold_decisions;
};

/// Throws report.MissingManifest or report.UnknownFlagReference.
ObservationReport build_report(const ReportInputs& in, const Clock& clock = system_clock());

/// Structural problems, each naming what is wrong; empty when valid.
std::vector<std::string> validate_report(const ObservationReport& r);

enum class ReportFormat { structured, readable };
ReportFormat parse_report_format(std::string_view text);

/// Throws report.InvalidReport when the report does not validate.
std::string render_report(const ObservationReport& r, ReportFormat format);

/// Accepts either rendering. Unknown or missing keys are rejected with
/// report.InvalidReport.
ObservationReport parse_report(std::string_view text);

/// Canonical text of everything except timestamps.
std::string report_core(const ObservationReport& r);

nlohmann::json to_json(const ObservationReport& r);
ObservationReport report_from_json(const nlohmann::json& j);

} // namespace dft
