#pragma once

#include "dft/assessment.hpp"
#include "dft/audit.hpp"
#include "dft/coordinator.hpp"
#include "dft/integrity.hpp"
#include "dft/profiles.hpp"
#include "dft/report.hpp"
#include "dft/triage.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dft {

/// "[ITEM=]PATH[#KIND]". Without a kind, directories are trees, *.tsv files
/// are record sources and anything else is a raw image.
struct EvidenceSpec {
    std::string item_id;
    std::filesystem::path path;
    SourceKind kind = SourceKind::raw_image;
};
EvidenceSpec parse_evidence_spec(std::string_view text, std::size_t position);

/// Held for the duration of one mutating operation. Throws cli.WorkspaceLocked.
class WorkspaceLock {
public:
    explicit WorkspaceLock(const std::filesystem::path& dir);
    ~WorkspaceLock();
    WorkspaceLock(const WorkspaceLock&) = delete;
    WorkspaceLock& operator=(const WorkspaceLock&) = delete;

private:
    std::filesystem::path path_;
};

struct VerifyOutcome {
    std::string item_id;
    VerificationResult result;
};

/// One case on disk:
///   workspace.json          case id, file number, member, profile, evidence
///   case.txt                case description
///   audit.log               every operation, JSON lines
///   manifests/<item>.manifest
///   hits/<item>.json        assessment (searches run, hits, findings)
///   hits/<item>.tsv         hits, tab-separated
///   hits/<item>.cards.tsv   card numbers grouped by bank code
///   rank.tsv                prioritized items
///   flags.json              flagged hit references
///   notes.txt               member notes
///   threshold/<item>.json   threshold decision
///   report.obsreport        structured Observation Report
///   report.md               readable rendering
/// Files other than audit.log are rewritten only with identical content or
/// when the inputs that produce them change.
class Workspace {
public:
    struct Settings {
        std::string case_id;
        std::string dft_file_number;
        std::string member_id;
        std::string profile; // built-in name or profile file
        std::vector<EvidenceSpec> evidence;
        std::optional<CaseDescription> case_description;
    };

    /// Creates the workspace, opens every evidence item and records its
    /// manifest. Reopening with identical settings is a no-op; different
    /// settings throw cli.WorkspaceExists.
    static Workspace create(const std::filesystem::path& dir, Settings settings, const ManifestOptions& manifest = {});
    /// Throws cli.NoWorkspace.
    static Workspace open(const std::filesystem::path& dir);
    static bool exists(const std::filesystem::path& dir);

    const std::filesystem::path& dir() const { return dir_; }
    const Settings& settings() const { return settings_; }
    const SearchProfile& profile() const { return profile_; }
    const CaseDescription& case_description() const { return case_; }
    std::filesystem::path path(const std::string& rel) const { return dir_ / rel; }

    /// Verifies each item against its manifest, runs the profile, writes the
    /// hit files and verifies again. Empty `items` means all. Relative scanner
    /// configs of a profile file resolve against the profile's directory.
    std::vector<Assessment> scan(const std::vector<std::string>& items = {}, ScanSettings settings = {});
    std::vector<Assessment> assessments() const;
    std::optional<Assessment> assessment(const std::string& item_id) const;

    std::vector<EvidenceItem> rank();

    /// Throws console.StaleHitReference for a reference to no current hit.
    std::set<std::string> set_flag(const std::string& hit_ref, bool flagged);
    std::set<std::string> flags() const;

    void set_notes(const std::string& notes);
    std::string notes() const;

    /// Automatic decision for each assessed item (or the listed ones).
    std::vector<ThresholdDecision> threshold(const std::vector<std::string>& items = {}, const Clock& clock = system_clock());
    /// Records a decision entered by the member. Throws triage.DecisionConflict
    /// or triage.ChecklistIncomplete naming the missing rows.
    ThresholdDecision decide(const std::string& item_id, Decision requested, const Clock& clock = system_clock());
    std::vector<ThresholdDecision> decisions() const;
    std::vector<ChecklistResult> checklists() const;

    ObservationReport report(const Clock& clock = system_clock());
    std::optional<ObservationReport> stored_report() const;

    std::vector<VerifyOutcome> verify();

    /// The case as the console sees it: ranked items, hits with flags,
    /// findings, checklists, decisions and the report when built.
    nlohmann::json view() const;

    AuditLog& audit() { return *audit_; }

private:
    Workspace(std::filesystem::path dir, Settings settings);
    AuditContext audit_context() const;
    EvidenceItem item(const std::string& item_id) const;
    std::vector<std::string> assessed_ids() const;
    void write(const std::string& rel, const std::string& content) const;

    std::filesystem::path dir_;
    Settings settings_;
    SearchProfile profile_;
    CaseDescription case_;
    std::shared_ptr<AuditLog> audit_;
};

nlohmann::json to_json(const Workspace::Settings& s);
Workspace::Settings workspace_settings_from_json(const nlohmann::json& j);

/// Ranking as written to rank.tsv.
std::string format_rank(const std::vector<EvidenceItem>& ranked);

} // namespace dft
