#include "dft/triage.hpp"

#include "dft/error.hpp"
#include "dft/text.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace dft {

using nlohmann::json;

namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view text, const E (&values)[N], const char* what)
{
    for (auto v : values)
        if (to_string(v) == text)
            return v;
    throw Error("triage.InvalidValue", std::string("unknown ") + what + ": " + std::string(text));
}

constexpr OwnerRelation owner_relations[] = {OwnerRelation::suspect, OwnerRelation::associate,
                                             OwnerRelation::unrelated, OwnerRelation::unknown};
constexpr OwnerPrior owner_priors[] = {OwnerPrior::relevant_record, OwnerPrior::none, OwnerPrior::unknown};
constexpr DeviceClass device_classes[] = {DeviceClass::computer, DeviceClass::external_storage, DeviceClass::phone,
                                          DeviceClass::other};
constexpr Answer answers[] = {Answer::yes, Answer::no, Answer::not_performed};
constexpr Decision decisions[] = {Decision::meets, Decision::does_not_meet, Decision::forward_despite_no_findings};

bool before(const EvidenceItem& a, const EvidenceItem& b)
{
    if (a.priority != b.priority)
        return a.priority > b.priority;
    return a.item_id < b.item_id;
}

const ChecklistRow& row(const ChecklistResult& c, std::string_view question)
{
    for (const auto& r : c.rows)
        if (r.question == question)
            return r;
    throw Error("triage.InvalidValue", "checklist has no row " + std::string(question));
}

} // namespace

std::string_view to_string(OwnerRelation v)
{
    switch (v) {
    case OwnerRelation::suspect: return "suspect";
    case OwnerRelation::associate: return "associate";
    case OwnerRelation::unrelated: return "unrelated";
    case OwnerRelation::unknown: return "unknown";
    }
    return "unknown";
}

std::string_view to_string(OwnerPrior v)
{
    switch (v) {
    case OwnerPrior::relevant_record: return "relevant_record";
    case OwnerPrior::none: return "none";
    case OwnerPrior::unknown: return "unknown";
    }
    return "unknown";
}

std::string_view to_string(DeviceClass v)
{
    switch (v) {
    case DeviceClass::computer: return "computer";
    case DeviceClass::external_storage: return "external_storage";
    case DeviceClass::phone: return "phone";
    case DeviceClass::other: return "other";
    }
    return "other";
}

std::string_view to_string(Answer a)
{
    switch (a) {
    case Answer::yes: return "yes";
    case Answer::no: return "no";
    case Answer::not_performed: return "not_performed";
    }
    return "not_performed";
}

std::string_view to_string(Decision d)
{
    switch (d) {
    case Decision::meets: return "meets";
    case Decision::does_not_meet: return "does_not_meet";
    case Decision::forward_despite_no_findings: return "forward_despite_no_findings";
    }
    return "does_not_meet";
}

OwnerRelation parse_owner_relation(std::string_view t) { return parse_enum(t, owner_relations, "owner_relation"); }
OwnerPrior parse_owner_prior(std::string_view t) { return parse_enum(t, owner_priors, "owner_prior"); }
DeviceClass parse_device_class(std::string_view t) { return parse_enum(t, device_classes, "device_class"); }
Answer parse_answer(std::string_view t) { return parse_enum(t, answers, "answer"); }
Decision parse_decision(std::string_view t) { return parse_enum(t, decisions, "decision"); }

TriageWeights weights_for(const SearchProfile& profile)
{
    TriageWeights w;
    const std::map<std::string, double*> slots = {
        {"owner_relation.suspect", &w.suspect},
        {"owner_relation.associate", &w.associate},
        {"owner_relation.unknown", &w.unknown_owner},
        {"owner_relation.unrelated", &w.unrelated},
        {"owner_prior.relevant_record", &w.relevant_record},
        {"owner_prior.unknown", &w.unknown_prior},
        {"owner_prior.none", &w.no_record},
        {"device_class.computer", &w.computer},
        {"device_class.external_storage", &w.external_storage},
        {"device_class.phone", &w.phone},
        {"device_class.other", &w.other_device},
        {"top_band", &w.top_band},
        {"forward_cutoff", &w.forward_cutoff},
    };
    for (const auto& [key, value] : profile.weights) {
        const auto it = slots.find(key);
        if (it == slots.end())
            throw Error("triage.InvalidWeights", "unknown weight: " + key);
        if (value < 0.0 || value > 1.0)
            throw Error("triage.InvalidWeights", "weight out of [0,1]: " + key);
        *it->second = value;
    }
    return w;
}

double score_evidence(const EvidenceItem& item, const TriageWeights& w)
{
    double s = 0.0;
    switch (item.owner_relation) {
    case OwnerRelation::suspect: s += w.suspect; break;
    case OwnerRelation::associate: s += w.associate; break;
    case OwnerRelation::unknown: s += w.unknown_owner; break;
    case OwnerRelation::unrelated: s += w.unrelated; break;
    }
    switch (item.owner_prior) {
    case OwnerPrior::relevant_record: s += w.relevant_record; break;
    case OwnerPrior::unknown: s += w.unknown_prior; break;
    case OwnerPrior::none: s += w.no_record; break;
    }
    switch (item.device_class) {
    case DeviceClass::computer: s += w.computer; break;
    case DeviceClass::external_storage: s += w.external_storage; break;
    case DeviceClass::phone: s += w.phone; break;
    case DeviceClass::other: s += w.other_device; break;
    }
    return s;
}

double score_evidence(const EvidenceItem& item, const SearchProfile& profile)
{
    return score_evidence(item, weights_for(profile));
}

std::vector<EvidenceItem> rank_evidence(std::vector<EvidenceItem> items, const SearchProfile& profile)
{
    const auto w = weights_for(profile);
    std::set<std::string> seen;
    for (auto& item : items) {
        if (!seen.insert(item.item_id).second)
            throw Error("triage.DuplicateItemId", "duplicate item id: " + item.item_id);
        item.priority = score_evidence(item, w);
    }
    std::sort(items.begin(), items.end(), before);
    return items;
}

std::vector<EvidenceItem> propagate_attachment_priority(std::vector<EvidenceItem> ranked,
                                                        const SearchProfile& profile)
{
    const double band = weights_for(profile).top_band;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ranked.size(); ++i)
        if (!index.emplace(ranked[i].item_id, i).second)
            throw Error("triage.DuplicateItemId", "duplicate item id: " + ranked[i].item_id);

    std::vector<double> raised(ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        raised[i] = ranked[i].priority;
        std::set<std::size_t> path{i};
        const EvidenceItem* cur = &ranked[i];
        while (cur->attached_to) {
            const auto it = index.find(*cur->attached_to);
            if (it == index.end())
                throw Error("triage.UnknownAttachment",
                            cur->item_id + " is attached to unknown item " + *cur->attached_to);
            if (!path.insert(it->second).second)
                throw Error("triage.CyclicAttachment", "attachment cycle through " + ranked[i].item_id);
            cur = &ranked[it->second];
            if (cur->priority >= band)
                raised[i] = std::max(raised[i], band);
        }
    }
    for (std::size_t i = 0; i < ranked.size(); ++i)
        ranked[i].priority = raised[i];
    std::stable_sort(ranked.begin(), ranked.end(), before);
    return ranked;
}

bool ChecklistResult::complete() const
{
    return std::none_of(rows.begin(), rows.end(), [](const ChecklistRow& r) { return r.answer == Answer::not_performed; });
}

ChecklistResult absence_checklist(const EvidenceItem& item, const std::optional<EncryptionFindings>& findings,
                                  const SearchProfile&)
{
    ChecklistResult c;
    c.item_id = item.item_id;
    if (findings) {
        c.rows.push_back({"encryption_signatures", Answer::yes,
                          std::to_string(findings->fde_signatures.size()) + " volume signature(s); summary " +
                              std::string(to_string(findings->summary))});
        if (findings->program_list_checked)
            c.rows.push_back({"encryption_programs", Answer::yes,
                              std::to_string(findings->suspect_programs.size()) + " program(s) matched"});
        else
            c.rows.push_back({"encryption_programs", Answer::no, "source exposes no file paths"});
    } else {
        c.rows.push_back({"encryption_signatures", Answer::not_performed, "encryption scanner not run"});
        c.rows.push_back({"encryption_programs", Answer::not_performed, "encryption scanner not run"});
    }
    if (!item.reasoning.empty())
        c.rows.push_back({"prioritization_reasoning", Answer::yes, item.reasoning});
    else
        c.rows.push_back({"prioritization_reasoning", Answer::not_performed, "no reasoning recorded"});
    return c;
}

ThresholdDecision evaluate_threshold(const Assessment& assessment, const EvidenceItem& item,
                                     const SearchProfile& profile, const std::string& member_id, const Clock& clock)
{
    for (const auto& spec : profile.scanners) {
        const bool ran = std::any_of(assessment.searches_run.begin(), assessment.searches_run.end(),
                                     [&](const SearchRun& r) { return r.scanner_id == spec.id; });
        if (!ran)
            throw Error("triage.AssessmentIncomplete",
                        "scanner " + spec.id + " has not run on item " + assessment.item_id);
    }

    ThresholdDecision d;
    d.item_id = assessment.item_id;
    d.decided_by = member_id;
    d.decided_at = format_utc(clock());

    for (const auto& hit : assessment.hits)
        if (std::find(profile.threshold_targets.begin(), profile.threshold_targets.end(), hit.kind) !=
            profile.threshold_targets.end())
            d.basis.push_back(hit_ref(assessment.item_id, hit));
    if (!d.basis.empty()) {
        d.decision = Decision::meets;
        return d;
    }

    const auto checklist = absence_checklist(item, assessment.encryption, profile);
    const auto w = weights_for(profile);
    const double score = std::max(item.priority, score_evidence(item, w));

    if (assessment.encryption && assessment.encryption->summary != EncryptionSummary::none) {
        d.decision = Decision::forward_despite_no_findings;
        if (!assessment.encryption->fde_signatures.empty())
            d.basis.push_back("checklist:encryption_signatures");
        if (!assessment.encryption->suspect_programs.empty())
            d.basis.push_back("checklist:encryption_programs");
    }
    if (score >= w.forward_cutoff) {
        if (row(checklist, "prioritization_reasoning").answer != Answer::yes)
            throw Error("triage.ChecklistIncomplete",
                        "item " + item.item_id + " scores above the forward cutoff; record the prioritization reasoning");
        d.decision = Decision::forward_despite_no_findings;
        d.basis.push_back("checklist:prioritization_reasoning");
    }
    if (d.decision == Decision::forward_despite_no_findings)
        return d;

    for (const auto& r : checklist.rows) {
        if (r.question == "prioritization_reasoning")
            continue;
        if (r.answer == Answer::not_performed)
            throw Error("triage.ChecklistIncomplete",
                        "item " + item.item_id + ": " + r.question + " not performed; cannot decide does_not_meet");
        d.basis.push_back("checklist:" + r.question);
    }
    d.decision = Decision::does_not_meet;
    return d;
}

ThresholdDecision confirm_threshold(const Assessment& assessment, const EvidenceItem& item,
                                    const SearchProfile& profile, const std::string& member_id, Decision requested,
                                    const Clock& clock)
{
    for (const auto& spec : profile.scanners) {
        const bool ran = std::any_of(assessment.searches_run.begin(), assessment.searches_run.end(),
                                     [&](const SearchRun& r) { return r.scanner_id == spec.id; });
        if (!ran)
            throw Error("triage.AssessmentIncomplete",
                        "scanner " + spec.id + " has not run on item " + assessment.item_id);
    }
    ThresholdDecision d;
    d.item_id = assessment.item_id;
    d.decision = requested;
    d.decided_by = member_id;
    d.decided_at = format_utc(clock());

    std::vector<std::string> target_hits;
    for (const auto& hit : assessment.hits)
        if (std::find(profile.threshold_targets.begin(), profile.threshold_targets.end(), hit.kind) !=
            profile.threshold_targets.end())
            target_hits.push_back(hit_ref(assessment.item_id, hit));

    if (!target_hits.empty()) {
        if (requested != Decision::meets)
            throw Error("triage.DecisionConflict", "item " + assessment.item_id + " has " +
                                                       std::to_string(target_hits.size()) +
                                                       " threshold hit(s); the decision must be meets");
        d.basis = target_hits;
        return d;
    }
    if (requested == Decision::meets)
        throw Error("triage.DecisionConflict",
                    "item " + assessment.item_id + " has no hit of a threshold kind; meets needs one");

    const auto checklist = absence_checklist(item, assessment.encryption, profile);
    if (requested == Decision::does_not_meet) {
        std::vector<std::string> missing;
        for (const auto& r : checklist.rows) {
            if (r.question == "prioritization_reasoning")
                continue;
            if (r.answer == Answer::not_performed)
                missing.push_back(r.question);
            else
                d.basis.push_back("checklist:" + r.question);
        }
        if (!missing.empty()) {
            std::string names;
            for (const auto& m : missing)
                names += (names.empty() ? "" : ", ") + m;
            throw Error("triage.ChecklistIncomplete",
                        "item " + assessment.item_id + ": checklist rows not performed: " + names);
        }
        return d;
    }

    const auto& enc = assessment.encryption;
    if (enc && !enc->fde_signatures.empty())
        d.basis.push_back("checklist:encryption_signatures");
    if (enc && !enc->suspect_programs.empty())
        d.basis.push_back("checklist:encryption_programs");
    if (row(checklist, "prioritization_reasoning").answer == Answer::yes)
        d.basis.push_back("checklist:prioritization_reasoning");
    if (d.basis.empty())
        throw Error("triage.ChecklistIncomplete",
                    "item " + assessment.item_id +
                        ": forwarding without findings needs encryption indicators or recorded prioritization_reasoning");
    return d;
}

json to_json(const EvidenceItem& item)
{
    return {{"item_id", item.item_id},
            {"description", item.description},
            {"owner_relation", to_string(item.owner_relation)},
            {"owner_prior", to_string(item.owner_prior)},
            {"device_class", to_string(item.device_class)},
            {"attached_to", item.attached_to ? json(*item.attached_to) : json(nullptr)},
            {"priority", item.priority},
            {"assessed", item.assessed},
            {"reasoning", item.reasoning}};
}

EvidenceItem evidence_item_from_json(const json& j)
{
    EvidenceItem item;
    item.item_id = j.at("item_id").get<std::string>();
    item.description = j.at("description").get<std::string>();
    item.owner_relation = parse_owner_relation(j.at("owner_relation").get<std::string>());
    item.owner_prior = parse_owner_prior(j.at("owner_prior").get<std::string>());
    item.device_class = parse_device_class(j.at("device_class").get<std::string>());
    if (!j.at("attached_to").is_null())
        item.attached_to = j.at("attached_to").get<std::string>();
    item.priority = j.at("priority").get<double>();
    item.assessed = j.at("assessed").get<bool>();
    item.reasoning = j.at("reasoning").get<std::string>();
    return item;
}

json to_json(const ChecklistResult& c)
{
    json rows = json::array();
    for (const auto& r : c.rows)
        rows.push_back({{"question", r.question}, {"answer", to_string(r.answer)}, {"detail", r.detail}});
    return {{"item_id", c.item_id}, {"rows", std::move(rows)}};
}

ChecklistResult checklist_from_json(const json& j)
{
    ChecklistResult c;
    c.item_id = j.at("item_id").get<std::string>();
    for (const auto& r : j.at("rows"))
        c.rows.push_back({r.at("question").get<std::string>(), parse_answer(r.at("answer").get<std::string>()),
                          r.at("detail").get<std::string>()});
    return c;
}

json to_json(const ThresholdDecision& d)
{
    return {{"item_id", d.item_id},
            {"decision", to_string(d.decision)},
            {"basis", d.basis},
            {"decided_by", d.decided_by},
            {"decided_at", d.decided_at}};
}

ThresholdDecision threshold_decision_from_json(const json& j)
{
    ThresholdDecision d;
    d.item_id = j.at("item_id").get<std::string>();
    d.decision = parse_decision(j.at("decision").get<std::string>());
    d.basis = j.at("basis").get<std::vector<std::string>>();
    d.decided_by = j.at("decided_by").get<std::string>();
    d.decided_at = j.at("decided_at").get<std::string>();
    return d;
}

CaseDescription parse_case(std::string_view content)
{
    CaseDescription c;
    std::size_t lineno = 0;
    std::set<std::string> ids;
    for (auto raw : text::lines(content)) {
        ++lineno;
        const auto line = text::trim(raw);
        if (line.empty() || line.front() == '#')
            continue;
        const auto where = "line " + std::to_string(lineno) + ": ";
        if (line.rfind("case_id", 0) == 0 && line.find('=') != std::string_view::npos) {
            c.case_id = std::string(text::trim(line.substr(line.find('=') + 1)));
            continue;
        }
        const auto f = text::split(raw, '\t');
        if (f.size() < 6 || f.size() > 7)
            throw Error("triage.MalformedCase", where + "expected 6 or 7 tab-separated fields");
        EvidenceItem item;
        try {
            item.item_id = std::string(text::trim(f[0]));
            item.owner_relation = parse_owner_relation(text::trim(f[1]));
            item.owner_prior = parse_owner_prior(text::trim(f[2]));
            item.device_class = parse_device_class(text::trim(f[3]));
        } catch (const Error& e) {
            throw Error("triage.MalformedCase", where + e.what());
        }
        const auto attached = text::trim(f[4]);
        if (attached != "-" && !attached.empty())
            item.attached_to = std::string(attached);
        item.description = std::string(text::trim(f[5]));
        if (f.size() == 7 && text::trim(f[6]) != "-")
            item.reasoning = std::string(text::trim(f[6]));
        if (item.item_id.empty() || !ids.insert(item.item_id).second)
            throw Error("triage.MalformedCase", where + "empty or duplicate item id");
        c.items.push_back(std::move(item));
    }
    if (c.case_id.empty())
        throw Error("triage.MalformedCase", "missing case_id");
    for (const auto& item : c.items)
        if (item.attached_to && !ids.count(*item.attached_to))
            throw Error("triage.MalformedCase", item.item_id + " is attached to unknown item " + *item.attached_to);
    return c;
}

std::string format_case(const CaseDescription& c)
{
    std::ostringstream out;
    out << "case_id = " << c.case_id << "\n";
    for (const auto& i : c.items) {
        out << i.item_id << '\t' << to_string(i.owner_relation) << '\t' << to_string(i.owner_prior) << '\t'
            << to_string(i.device_class) << '\t' << (i.attached_to ? *i.attached_to : "-") << '\t'
            << i.description;
        if (!i.reasoning.empty())
            out << '\t' << i.reasoning;
        out << "\n";
    }
    return out.str();
}

} // namespace dft
