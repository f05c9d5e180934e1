#pragma once

#include "dft/assessment.hpp"
#include "dft/clock.hpp"
#include "dft/encryption.hpp"
#include "dft/hits.hpp"
#include "dft/profiles.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dft {

enum class OwnerRelation { suspect, associate, unrelated, unknown };
enum class OwnerPrior { relevant_record, none, unknown };
enum class DeviceClass { computer, external_storage, phone, other };

std::string_view to_string(OwnerRelation v);
std::string_view to_string(OwnerPrior v);
std::string_view to_string(DeviceClass v);
OwnerRelation parse_owner_relation(std::string_view text);
OwnerPrior parse_owner_prior(std::string_view text);
DeviceClass parse_device_class(std::string_view text);

struct EvidenceItem {
    std::string item_id;
    std::string description;
    OwnerRelation owner_relation = OwnerRelation::unknown;
    OwnerPrior owner_prior = OwnerPrior::unknown;
    DeviceClass device_class = DeviceClass::other;
    std::optional<std::string> attached_to;
    double priority = 0.0;
    bool assessed = false;
    std::string reasoning; // why the investigator and member expect artefacts here

    bool operator==(const EvidenceItem&) const = default;
};

/// Linear scoring weights. Profiles override entries with keys such as
/// "owner_relation.suspect", "top_band" or "forward_cutoff".
struct TriageWeights {
    double suspect = 0.5, associate = 0.3, unknown_owner = 0.15, unrelated = 0.0;
    double relevant_record = 0.3, unknown_prior = 0.1, no_record = 0.0;
    double computer = 0.2, external_storage = 0.15, phone = 0.15, other_device = 0.05;
    double top_band = 0.7;
    double forward_cutoff = 0.8;
};

/// Defaults with the profile's overrides applied. Throws triage.InvalidWeights.
TriageWeights weights_for(const SearchProfile& profile);

double score_evidence(const EvidenceItem& item, const TriageWeights& w);
double score_evidence(const EvidenceItem& item, const SearchProfile& profile);

/// Sets priority on each item, then orders by descending score and ascending
/// item_id. Throws triage.DuplicateItemId.
std::vector<EvidenceItem> rank_evidence(std::vector<EvidenceItem> items, const SearchProfile& profile);

/// Items reachable through attached_to from an item scoring at least the top
/// band are raised to the band, then re-ranked. Scores never decrease.
/// Throws triage.CyclicAttachment or triage.UnknownAttachment.
std::vector<EvidenceItem> propagate_attachment_priority(std::vector<EvidenceItem> ranked,
                                                        const SearchProfile& profile);

enum class Answer { yes, no, not_performed };
std::string_view to_string(Answer a);
Answer parse_answer(std::string_view text);

struct ChecklistRow {
    std::string question; // encryption_signatures, encryption_programs, prioritization_reasoning
    Answer answer = Answer::not_performed;
    std::string detail;

    bool operator==(const ChecklistRow&) const = default;
};

struct ChecklistResult {
    std::string item_id;
    std::vector<ChecklistRow> rows;

    bool complete() const;
    bool operator==(const ChecklistResult&) const = default;
};

/// `findings` is empty when the encryption scanner never ran on the item.
ChecklistResult absence_checklist(const EvidenceItem& item, const std::optional<EncryptionFindings>& findings,
                                  const SearchProfile& profile);

enum class Decision { meets, does_not_meet, forward_despite_no_findings };
std::string_view to_string(Decision d);
Decision parse_decision(std::string_view text);

struct ThresholdDecision {
    std::string item_id;
    Decision decision = Decision::does_not_meet;
    std::vector<std::string> basis; // hit refs, or "checklist:<question>"
    std::string decided_by;
    std::string decided_at; // excluded from report cores

    bool operator==(const ThresholdDecision&) const = default;
};

/// Throws triage.AssessmentIncomplete when a profile scanner has not run on
/// the item and triage.ChecklistIncomplete when the checklist cannot support
/// a does_not_meet decision.
ThresholdDecision evaluate_threshold(const Assessment& assessment, const EvidenceItem& item,
                                     const SearchProfile& profile, const std::string& member_id,
                                     const Clock& clock = system_clock());

/// Checks a decision entered by the member against the same rules: meets
/// only with a target hit, never does_not_meet or forward while one exists,
/// does_not_meet only with both encryption rows performed, and forward only
/// on encryption findings or recorded reasoning. Throws
/// triage.DecisionConflict or triage.ChecklistIncomplete naming the rows.
ThresholdDecision confirm_threshold(const Assessment& assessment, const EvidenceItem& item,
                                    const SearchProfile& profile, const std::string& member_id, Decision requested,
                                    const Clock& clock = system_clock());

nlohmann::json to_json(const EvidenceItem& item);
EvidenceItem evidence_item_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ChecklistResult& c);
ChecklistResult checklist_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ThresholdDecision& d);
ThresholdDecision threshold_decision_from_json(const nlohmann::json& j);

/// Case description: "case_id = X", then one item per line:
///   item_id owner_relation owner_prior device_class attached_to|- description [reasoning]
/// tab-separated. Throws triage.MalformedCase.
struct CaseDescription {
    std::string case_id;
    std::vector<EvidenceItem> items;
};
CaseDescription parse_case(std::string_view text);
std::string format_case(const CaseDescription& c);

} // namespace dft
