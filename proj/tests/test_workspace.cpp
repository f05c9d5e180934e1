#include "doctest.h"

#include "dft/error.hpp"
#include "dft/workspace.hpp"
#include "support.hpp"

#include <algorithm>

using namespace dft;
using dft::test::TempDir;

namespace {

std::string code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

Clock fixed_clock()
{
    return [] { return TimePoint{}; };
}

Workspace::Settings fraud_case(const TempDir& t)
{
    test::write_file(t / "disk.img", std::string(100, '\0') + "card 4111 1111 1111 1111 mail bob@example.com" +
                                         std::string(100, '\0'));
    Workspace::Settings s;
    s.case_id = "C-1";
    s.dft_file_number = "DFT-2026-000001";
    s.member_id = "m1";
    s.profile = "fraud";
    s.evidence.push_back(parse_evidence_spec("IMG=" + (t / "disk.img").string(), 0));
    return s;
}

} // namespace

TEST_CASE("parse_evidence_spec")
{
    TempDir t;
    test::write_file(t / "x.tsv", "");
    CHECK(parse_evidence_spec((t / "x.tsv").string(), 2).item_id == "E3");
    CHECK(parse_evidence_spec((t / "x.tsv").string(), 0).kind == SourceKind::artifact_records);
    CHECK(parse_evidence_spec("T=" + t.path().string(), 0).kind == SourceKind::directory_tree);
    CHECK(parse_evidence_spec("R=" + (t / "x.tsv").string() + "#raw_image", 0).kind == SourceKind::raw_image);
    CHECK(code_of([] { parse_evidence_spec("../x=/tmp", 0); }) == "cli.InvalidArgument");
}

TEST_CASE("workspace lifecycle")
{
    TempDir t;
    const auto dir = t / "ws";
    auto ws = Workspace::create(dir, fraud_case(t));
    CHECK(std::filesystem::exists(dir / "manifests/IMG.manifest"));
    CHECK(code_of([&] { Workspace::open(t / "none"); }) == "cli.NoWorkspace");

    SUBCASE("reopening")
    {
        CHECK_NOTHROW(Workspace::create(dir, fraud_case(t)));
        auto other = fraud_case(t);
        other.profile = "generic";
        CHECK(code_of([&] { Workspace::create(dir, other); }) == "cli.WorkspaceExists");
    }

    SUBCASE("scan, flag, decide, report")
    {
        const auto as = ws.scan();
        REQUIRE(as.size() == 1);
        CHECK(std::any_of(as[0].hits.begin(), as[0].hits.end(),
                          [](const ArtifactHit& h) { return h.kind == ArtifactKind::card_number; }));
        CHECK(test::read_file(dir / "hits/IMG.cards.tsv").find("4111111111111111") != std::string::npos);
        CHECK(Workspace::open(dir).assessments().size() == 1);

        const auto card = std::find_if(as[0].hits.begin(), as[0].hits.end(),
                                       [](const ArtifactHit& h) { return h.kind == ArtifactKind::card_number; });
        const auto ref = hit_ref("IMG", *card);
        CHECK(ws.set_flag(ref, true).count(ref) == 1);
        CHECK(code_of([&] { ws.set_flag("IMG#cards#nowhere@0", true); }) == "console.StaleHitReference");

        const auto auto_d = ws.threshold({}, fixed_clock());
        REQUIRE(auto_d.size() == 1);
        CHECK(auto_d[0].decision == Decision::meets);
        CHECK(code_of([&] { ws.decide("IMG", Decision::does_not_meet); }) == "triage.DecisionConflict");

        ws.set_notes("two cards found\n");
        const auto r = ws.report(fixed_clock());
        CHECK(r.items.size() == 1);
        CHECK(validate_report(r).empty());
        CHECK(parse_report(test::read_file(dir / "report.md")) == r);
        CHECK(ws.stored_report() == r);
        CHECK(ws.view()["items"][0]["hits"].size() == as[0].hits.size());

        const auto log = test::read_file(dir / "audit.log");
        for (const char* op : {"open_evidence", "compute_manifest", "extract_card_numbers", "sort_by_bank_code",
                               "evaluate_threshold", "build_report"})
            CHECK(log.find(op) != std::string::npos);
    }

    SUBCASE("tampering is caught before scanning")
    {
        test::flip_byte(t / "disk.img", 5);
        CHECK(code_of([&] { ws.scan(); }) == "integrity.IntegrityViolation");
        CHECK_FALSE(ws.verify()[0].result.ok());
        CHECK_FALSE(std::filesystem::exists(dir / "hits/IMG.json"));
    }

    SUBCASE("a held lock blocks mutation")
    {
        WorkspaceLock held(dir);
        CHECK(code_of([&] { ws.scan(); }) == "cli.WorkspaceLocked");
    }

    SUBCASE("report needs a file number")
    {
        TempDir u;
        auto s = fraud_case(u);
        s.dft_file_number.clear();
        auto w = Workspace::create(u / "ws", s);
        w.scan();
        CHECK(code_of([&] { w.report(); }) == "report.MissingFileNumber");
    }
}

TEST_CASE("rank follows the case description")
{
    TempDir t;
    auto s = fraud_case(t);
    test::write_file(t / "phone.img", "nothing here");
    s.evidence.push_back(parse_evidence_spec("PHONE=" + (t / "phone.img").string(), 1));
    s.case_description = parse_case("case_id = C-1\n"
                                    "IMG\tunrelated\tnone\tother\t-\tshared disk\n"
                                    "PHONE\tsuspect\trelevant_record\tphone\t-\tsuspect phone\n");
    auto ws = Workspace::create(t / "ws", s);
    const auto ranked = ws.rank();
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].item_id == "PHONE");
    CHECK(test::read_file(t / "ws/rank.tsv").find("1\tPHONE\t") != std::string::npos);

    auto bad = s;
    bad.evidence.push_back(parse_evidence_spec("USB=" + (t / "phone.img").string(), 2));
    CHECK(code_of([&] { Workspace::create(t / "ws2", bad); }) == "cli.InvalidArgument");
}
