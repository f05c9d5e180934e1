#include "doctest.h"

#include "dft/error.hpp"
#include "dft/triage.hpp"

#include <algorithm>
#include <random>
#include <set>

using namespace dft;

namespace {

EvidenceItem item(std::string id, OwnerRelation rel, OwnerPrior prior, DeviceClass dev,
                  std::optional<std::string> attached = std::nullopt)
{
    EvidenceItem e;
    e.item_id = std::move(id);
    e.owner_relation = rel;
    e.owner_prior = prior;
    e.device_class = dev;
    e.attached_to = std::move(attached);
    return e;
}

std::vector<std::string> ids(const std::vector<EvidenceItem>& v)
{
    std::vector<std::string> out;
    for (const auto& e : v)
        out.push_back(e.item_id);
    return out;
}

std::string code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

Assessment assessed(const std::string& id, const SearchProfile& p)
{
    Assessment a;
    a.item_id = id;
    for (const auto& s : p.scanners)
        a.searches_run.push_back({s.id, s.config, "", "completed", 0});
    return a;
}

Clock fixed_clock()
{
    return [] { return TimePoint{}; };
}

const SearchProfile generic = load_profile("generic");

} // namespace

TEST_CASE("score_evidence")
{
    const auto suspect = item("a", OwnerRelation::suspect, OwnerPrior::none, DeviceClass::computer);
    const auto roommate = item("b", OwnerRelation::unrelated, OwnerPrior::none, DeviceClass::computer);
    CHECK(score_evidence(suspect, generic) > score_evidence(roommate, generic));
    CHECK(score_evidence(suspect, generic) == score_evidence(suspect, generic));
    CHECK(score_evidence(item("c", OwnerRelation::suspect, OwnerPrior::relevant_record, DeviceClass::computer),
                         generic) == doctest::Approx(1.0));

    SUBCASE("profile overrides")
    {
        auto p = generic;
        p.weights["owner_relation.unrelated"] = 0.9;
        CHECK(score_evidence(roommate, p) > score_evidence(suspect, p));
        p.weights["nonsense"] = 0.1;
        CHECK(code_of([&] { weights_for(p); }) == "triage.InvalidWeights");
    }
}

TEST_CASE("rank_evidence")
{
    const auto ranked = rank_evidence({item("room", OwnerRelation::unrelated, OwnerPrior::none, DeviceClass::computer),
                                       item("sus", OwnerRelation::suspect, OwnerPrior::relevant_record,
                                            DeviceClass::computer)},
                                      generic);
    CHECK(ids(ranked) == std::vector<std::string>{"sus", "room"});
    CHECK(rank_evidence({}, generic).empty());

    std::vector<EvidenceItem> same;
    for (auto id : {"d", "b", "c", "a"})
        same.push_back(item(id, OwnerRelation::unknown, OwnerPrior::unknown, DeviceClass::phone));
    CHECK(ids(rank_evidence(same, generic)) == std::vector<std::string>{"a", "b", "c", "d"});

    same.push_back(same[0]);
    CHECK(code_of([&] { rank_evidence(same, generic); }) == "triage.DuplicateItemId");
}

TEST_CASE("argmax direction holds for every combination of other fields")
{
    for (auto prior : {OwnerPrior::relevant_record, OwnerPrior::none, OwnerPrior::unknown})
        for (auto dev : {DeviceClass::computer, DeviceClass::external_storage, DeviceClass::phone, DeviceClass::other}) {
            // "z" sorts after "a", so a tie would put the unrelated item first.
            const auto r = rank_evidence(
                {item("a", OwnerRelation::unrelated, prior, dev), item("z", OwnerRelation::suspect, prior, dev)},
                generic);
            CHECK(r[0].item_id == "z");
        }
}

TEST_CASE("propagate_attachment_priority")
{
    const auto pc = item("pc", OwnerRelation::suspect, OwnerPrior::relevant_record, DeviceClass::computer);
    const auto usb1 = item("usb1", OwnerRelation::unrelated, OwnerPrior::none, DeviceClass::external_storage, "pc");
    const auto usb2 = item("usb0", OwnerRelation::unrelated, OwnerPrior::none, DeviceClass::external_storage);

    SUBCASE("attached usb overtakes an unlinked equal one")
    {
        const auto ranked = rank_evidence({pc, usb1, usb2}, generic);
        CHECK(ids(ranked) == std::vector<std::string>{"pc", "usb0", "usb1"});
        const auto out = propagate_attachment_priority(ranked, generic);
        CHECK(ids(out) == std::vector<std::string>{"pc", "usb1", "usb0"});
        CHECK(out[1].priority == doctest::Approx(0.7));
    }
    SUBCASE("no links leaves the ranking untouched")
    {
        auto lone = usb1;
        lone.attached_to.reset();
        const auto ranked = rank_evidence({pc, lone, usb2}, generic);
        CHECK(propagate_attachment_priority(ranked, generic) == ranked);
    }
    SUBCASE("cycles and dangling links are rejected")
    {
        auto a = item("a", OwnerRelation::suspect, OwnerPrior::none, DeviceClass::phone, "b");
        auto b = item("b", OwnerRelation::suspect, OwnerPrior::none, DeviceClass::phone, "a");
        CHECK(code_of([&] { propagate_attachment_priority({a, b}, generic); }) == "triage.CyclicAttachment");
        b.attached_to = "ghost";
        CHECK(code_of([&] { propagate_attachment_priority({a, b}, generic); }) == "triage.UnknownAttachment");
    }
}

TEST_CASE("propagation matches a transitive-closure oracle on random five-node forests")
{
    const OwnerRelation rels[] = {OwnerRelation::suspect, OwnerRelation::associate, OwnerRelation::unrelated,
                                  OwnerRelation::unknown};
    const OwnerPrior priors[] = {OwnerPrior::relevant_record, OwnerPrior::none, OwnerPrior::unknown};
    const DeviceClass devs[] = {DeviceClass::computer, DeviceClass::external_storage, DeviceClass::phone,
                                DeviceClass::other};
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<EvidenceItem> items;
        for (int i = 0; i < 5; ++i) {
            // Link only to lower indices so the graph is acyclic.
            std::optional<std::string> link;
            if (i > 0 && rng() % 2)
                link = "n" + std::to_string(rng() % i);
            items.push_back(item("n" + std::to_string(i), rels[rng() % 4], priors[rng() % 3], devs[rng() % 4], link));
        }
        const auto ranked = rank_evidence(items, generic);
        const auto out = propagate_attachment_priority(ranked, generic);

        // Closure by repeated relaxation over an adjacency matrix.
        bool reach[5][5] = {};
        for (int i = 0; i < 5; ++i)
            if (items[i].attached_to)
                reach[i][std::stoi(items[i].attached_to->substr(1))] = true;
        for (int k = 0; k < 5; ++k)
            for (int i = 0; i < 5; ++i)
                for (int j = 0; j < 5; ++j)
                    reach[i][j] = reach[i][j] || (reach[i][k] && reach[k][j]);

        for (const auto& e : out) {
            const int i = std::stoi(e.item_id.substr(1));
            const double base = score_evidence(items[i], generic);
            double want = base;
            for (int j = 0; j < 5; ++j)
                if (reach[i][j] && score_evidence(items[j], generic) >= 0.7)
                    want = std::max(want, 0.7);
            CHECK(e.priority == doctest::Approx(want));
            CHECK(e.priority >= base);
        }
        CHECK(std::is_sorted(out.begin(), out.end(), [](const EvidenceItem& a, const EvidenceItem& b) {
            return a.priority != b.priority ? a.priority > b.priority : a.item_id < b.item_id;
        }));
    }
}

TEST_CASE("absence_checklist")
{
    auto e = item("E1", OwnerRelation::unknown, OwnerPrior::unknown, DeviceClass::other);
    SUBCASE("nothing done")
    {
        const auto c = absence_checklist(e, std::nullopt, generic);
        REQUIRE(c.rows.size() == 3);
        for (const auto& r : c.rows)
            CHECK(r.answer == Answer::not_performed);
        CHECK_FALSE(c.complete());
    }
    SUBCASE("findings on a tree plus reasoning")
    {
        EncryptionFindings f;
        f.program_list_checked = true;
        e.reasoning = "suspect used this laptop daily";
        const auto c = absence_checklist(e, f, generic);
        CHECK(c.complete());
        for (const auto& r : c.rows)
            CHECK(r.answer == Answer::yes);
        CHECK(checklist_from_json(to_json(c)) == c);
    }
}

TEST_CASE("evaluate_threshold")
{
    const auto ce = load_profile("child_exploitation");
    auto low = item("E1", OwnerRelation::unrelated, OwnerPrior::none, DeviceClass::other);

    SUBCASE("media hit meets")
    {
        auto a = assessed("E1", ce);
        ArtifactHit h;
        h.kind = ArtifactKind::media_file;
        h.scanner_id = "media";
        h.location = {"pic.jpg", 0, Location::Unit::byte};
        a.hits.push_back(h);
        const auto d = evaluate_threshold(a, low, ce, "m1", fixed_clock());
        CHECK(d.decision == Decision::meets);
        CHECK(d.basis == std::vector<std::string>{"E1#media#pic.jpg@0"});
        CHECK(d.decided_at == "1970-01-01T00:00:00Z");
        CHECK(threshold_decision_from_json(to_json(d)) == d);
    }
    SUBCASE("strong encryption forwards")
    {
        auto a = assessed("E1", ce);
        EncryptionFindings f;
        f.fde_signatures.push_back({"LUKS", {"", 0, Location::Unit::byte}});
        f.summary = EncryptionSummary::strong;
        a.encryption = f;
        const auto d = evaluate_threshold(a, low, ce, "m1", fixed_clock());
        CHECK(d.decision == Decision::forward_despite_no_findings);
        CHECK(d.basis == std::vector<std::string>{"checklist:encryption_signatures"});
    }
    SUBCASE("nothing found on a low item")
    {
        auto a = assessed("E1", ce);
        a.encryption = EncryptionFindings{};
        CHECK(evaluate_threshold(a, low, ce, "m1", fixed_clock()).decision == Decision::does_not_meet);
    }
    SUBCASE("high score forwards only with recorded reasoning")
    {
        auto a = assessed("E1", ce);
        a.encryption = EncryptionFindings{};
        auto high = item("E1", OwnerRelation::suspect, OwnerPrior::relevant_record, DeviceClass::computer);
        CHECK(code_of([&] { evaluate_threshold(a, high, ce, "m1"); }) == "triage.ChecklistIncomplete");
        high.reasoning = "investigator expects images here";
        const auto d = evaluate_threshold(a, high, ce, "m1");
        CHECK(d.decision == Decision::forward_despite_no_findings);
        CHECK(d.basis == std::vector<std::string>{"checklist:prioritization_reasoning"});
    }
    SUBCASE("missing encryption check blocks does_not_meet")
    {
        auto p = ce;
        p.scanners.erase(std::remove_if(p.scanners.begin(), p.scanners.end(),
                                        [](const ScannerSpec& s) { return s.id == "encryption"; }),
                         p.scanners.end());
        const auto a = assessed("E1", p);
        CHECK(code_of([&] { evaluate_threshold(a, low, p, "m1"); }) == "triage.ChecklistIncomplete");
    }
    SUBCASE("incomplete assessment")
    {
        auto a = assessed("E1", ce);
        a.searches_run.pop_back();
        CHECK(code_of([&] { evaluate_threshold(a, low, ce, "m1"); }) == "triage.AssessmentIncomplete");
    }
}

TEST_CASE("threshold soundness over every subset of hit kinds and targets")
{
    const auto& kinds = all_artifact_kinds();
    const auto n = kinds.size();
    for (unsigned targets = 0; targets < (1u << n); ++targets)
        for (unsigned present = 0; present < (1u << n); ++present) {
            auto p = generic;
            p.threshold_targets.clear();
            for (std::size_t k = 0; k < n; ++k)
                if (targets & (1u << k))
                    p.threshold_targets.push_back(kinds[k]);
            auto a = assessed("E1", p);
            a.encryption = EncryptionFindings{};
            for (std::size_t k = 0; k < n; ++k)
                if (present & (1u << k)) {
                    ArtifactHit h;
                    h.kind = kinds[k];
                    h.scanner_id = "s";
                    a.hits.push_back(h);
                }
            const auto d = evaluate_threshold(a, item("E1", OwnerRelation::unrelated, OwnerPrior::none,
                                                       DeviceClass::other),
                                              p, "m1", fixed_clock());
            CHECK((d.decision == Decision::meets) == ((targets & present) != 0));
        }
}

TEST_CASE("case description round-trips")
{
    const std::string text = "case_id = C-17\n"
                             "pc\tsuspect\trelevant_record\tcomputer\t-\tDell laptop, bedroom\n"
                             "usb\tunknown\tunknown\texternal_storage\tpc\tSanDisk stick\tfound in laptop port\n";
    const auto c = parse_case(text);
    CHECK(c.case_id == "C-17");
    REQUIRE(c.items.size() == 2);
    CHECK(c.items[1].attached_to == std::optional<std::string>("pc"));
    CHECK(c.items[1].reasoning == "found in laptop port");
    CHECK(format_case(c) == text);
    CHECK(code_of([] { parse_case("case_id = X\na\tsuspect\tnone\tcomputer\tghost\tx\n"); }) ==
          "triage.MalformedCase");
    CHECK(code_of([] { parse_case("a\tsuspect\tnone\tcomputer\t-\tx\n"); }) == "triage.MalformedCase");
}

TEST_CASE("confirm_threshold")
{
    const auto ce = load_profile("child_exploitation");
    auto low = item("E1", OwnerRelation::unrelated, OwnerPrior::none, DeviceClass::other);
    auto clean = assessed("E1", ce);
    clean.encryption = EncryptionFindings{};

    CHECK(confirm_threshold(clean, low, ce, "m1", Decision::does_not_meet, fixed_clock()).decision ==
          Decision::does_not_meet);
    CHECK(code_of([&] { confirm_threshold(clean, low, ce, "m1", Decision::meets); }) == "triage.DecisionConflict");
    CHECK(code_of([&] { confirm_threshold(clean, low, ce, "m1", Decision::forward_despite_no_findings); }) ==
          "triage.ChecklistIncomplete");
    low.reasoning = "owner admitted deleting files";
    const auto fwd = confirm_threshold(clean, low, ce, "m1", Decision::forward_despite_no_findings);
    CHECK(fwd.basis == std::vector<std::string>{"checklist:prioritization_reasoning"});

    auto hit = clean;
    ArtifactHit h;
    h.kind = ArtifactKind::media_file;
    h.scanner_id = "media";
    h.location = {"a.png", 0, Location::Unit::byte};
    hit.hits.push_back(h);
    CHECK(code_of([&] { confirm_threshold(hit, low, ce, "m1", Decision::does_not_meet); }) ==
          "triage.DecisionConflict");
    CHECK(confirm_threshold(hit, low, ce, "m1", Decision::meets).basis == std::vector<std::string>{"E1#media#a.png@0"});

    auto unchecked = assessed("E1", ce);
    try {
        confirm_threshold(unchecked, low, ce, "m1", Decision::does_not_meet);
        FAIL("expected ChecklistIncomplete");
    } catch (const Error& e) {
        CHECK(e.code() == "triage.ChecklistIncomplete");
        CHECK(std::string(e.what()).find("encryption_signatures") != std::string::npos);
    }
    unchecked.searches_run.pop_back();
    CHECK(code_of([&] { confirm_threshold(unchecked, low, ce, "m1", Decision::does_not_meet); }) ==
          "triage.AssessmentIncomplete");
}
