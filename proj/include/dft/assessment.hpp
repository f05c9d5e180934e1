#pragma once

#include "dft/audit.hpp"
#include "dft/cards.hpp"
#include "dft/encryption.hpp"
#include "dft/hits.hpp"
#include "dft/integrity.hpp"
#include "dft/profiles.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dft {

/// Records every operation run on a case. With no log attached it does nothing.
class AuditContext {
public:
    AuditContext() = default;
    AuditContext(AuditLog& log, std::string actor) : log_(&log), actor_(std::move(actor)) {}

    void emit(const std::string& action, std::map<std::string, std::string> parameters = {}) const
    {
        if (log_ != nullptr)
            log_->record(actor_, action, std::move(parameters));
    }
    const std::string& actor() const { return actor_; }

private:
    AuditLog* log_ = nullptr;
    std::string actor_;
};

/// One scanner execution as listed in the Observation Report.
struct SearchRun {
    std::string scanner_id;
    std::string config;
    std::string config_digest; // SHA-256 of the effective scanner configuration
    std::string status;        // "completed" or "not_applicable"
    std::size_t hit_count = 0;

    bool operator==(const SearchRun&) const = default;
};

struct Assessment {
    std::string item_id;
    std::vector<SearchRun> searches_run;
    std::vector<ArtifactHit> hits; // ordered by (scanner_id, location)
    std::vector<CardHit> cards;
    std::optional<EncryptionFindings> encryption;
};

struct ScanSettings {
    CardScanOptions cards;
    std::size_t pattern_window = 1u << 20;
    /// Relative scanner config paths resolve against this directory.
    std::filesystem::path config_dir = ".";
};

/// Runs the profile's scanners in order over one evidence item, emitting one
/// audit event per scanner operation, and applies the salience rules.
Assessment run_profile(const std::string& item_id, const EvidenceHandle& handle, const SearchProfile& profile,
                       const AuditContext& audit = {}, const ScanSettings& settings = {});

/// Stable reference "<item>#<scanner>#<path>@<offset>" (records use "@r<index>").
std::string hit_ref(const std::string& item_id, const ArtifactHit& hit);

nlohmann::json to_json(const SearchRun& r);
SearchRun search_run_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Assessment& a);
Assessment assessment_from_json(const nlohmann::json& j);

} // namespace dft
