#include "doctest.h"

#include "dft/error.hpp"
#include "dft/report.hpp"

#include <algorithm>

using namespace dft;

namespace {

ArtifactHit hit(ArtifactKind kind, const std::string& scanner, const std::string& path, std::uint64_t off,
                const std::string& value)
{
    ArtifactHit h;
    h.kind = kind;
    h.scanner_id = scanner;
    h.location = {path, off, Location::Unit::byte};
    h.value = value;
    return h;
}

ReportInputs sample()
{
    ReportInputs in;
    in.dft_file_number = "DFT-2015-000001";
    in.member_id = "m1";
    in.profile = load_profile("child_exploitation");
    in.case_description = parse_case("case_id = C-1\n"
                                     "E1\tsuspect\tnone\tcomputer\t-\tlaptop\n"
                                     "E2\tunknown\tunknown\texternal_storage\tE1\tusb stick\n");
    for (const std::string id : {"E2", "E1"}) {
        Assessment a;
        a.item_id = id;
        for (const auto& s : in.profile.scanners)
            a.searches_run.push_back({s.id, s.config, "d", "completed", 0});
        a.encryption = EncryptionFindings{};
        in.assessments.push_back(a);
        in.manifests[id] = {"manifests/" + id + ".manifest", std::string(64, 'a')};
    }
    auto& e1 = in.assessments[1];
    e1.hits.push_back(hit(ArtifactKind::media_file, "media", "b.png", 0, "b.png"));
    e1.hits.push_back(hit(ArtifactKind::media_file, "media", "a.jpg", 0, "a.jpg"));
    in.flags = {"E1#media#a.jpg@0"};
    in.notes = "Owner present during triage.";
    in.threshold_decisions.push_back({"E1", Decision::meets, {"E1#media#a.jpg@0"}, "m1", "2015-06-01T00:00:00Z"});
    return in;
}

Clock at(int seconds)
{
    return [seconds] { return TimePoint{} + std::chrono::seconds(seconds); };
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

} // namespace

TEST_CASE("build_report")
{
    const auto r = build_report(sample(), at(0));
    CHECK(validate_report(r).empty());
    REQUIRE(r.items.size() == 2);
    CHECK(r.items[0].item_id == "E1");
    REQUIRE(r.items[0].hits.size() == 2);
    CHECK(r.items[0].hits[0].value == "a.jpg");
    CHECK(r.items[0].hits[0].flagged);
    CHECK_FALSE(r.items[0].hits[1].flagged);
    CHECK(r.items[1].hits.empty());

    SUBCASE("core is deterministic apart from timestamps")
    {
        auto in = sample();
        in.threshold_decisions[0].decided_at = "2016-01-01T00:00:00Z";
        const auto again = build_report(in, at(999));
        CHECK(report_core(again) == report_core(r));
        CHECK(to_json(again).dump() != to_json(r).dump());
    }
    SUBCASE("errors")
    {
        auto in = sample();
        in.manifests.erase("E2");
        CHECK(code_of([&] { build_report(in); }) == "report.MissingManifest");
        in = sample();
        in.flags.insert("E1#media#ghost.jpg@0");
        CHECK(code_of([&] { build_report(in); }) == "report.UnknownFlagReference");
    }
    SUBCASE("no hits anywhere")
    {
        auto in = sample();
        in.assessments[1].hits.clear();
        in.flags.clear();
        in.threshold_decisions.clear();
        const auto empty = build_report(in);
        CHECK(validate_report(empty).empty());
        for (const auto& s : empty.items)
            CHECK(s.checklist.rows.size() == 3);
    }
}

TEST_CASE("validate_report")
{
    auto r = build_report(sample(), at(0));
    SUBCASE("missing searches_run names the item")
    {
        r.items[1].searches_run.clear();
        const auto e = validate_report(r);
        REQUIRE(e.size() == 1);
        CHECK(e[0].find("E2") != std::string::npos);
        CHECK(e[0].find("searches_run") != std::string::npos);
        CHECK(code_of([&] { render_report(r, ReportFormat::structured); }) == "report.InvalidReport");
    }
    SUBCASE("hit referencing a nonexistent item")
    {
        r.threshold_decisions[0].basis = {"E9#media#a.jpg@0"};
        CHECK_FALSE(validate_report(r).empty());
    }
    SUBCASE("flagged hit appearing twice")
    {
        r.items[0].hits.push_back(r.items[0].hits[0]);
        CHECK_FALSE(validate_report(r).empty());
    }
}

TEST_CASE("render_report")
{
    const auto r = build_report(sample(), at(0));
    const auto structured = render_report(r, ReportFormat::structured);
    CHECK(structured == render_report(r, ReportFormat::structured));
    CHECK(parse_report(structured) == r);

    const auto readable = render_report(r, ReportFormat::readable);
    CHECK(parse_report(readable) == r);
    std::size_t sections = 0;
    for (std::size_t p = readable.find("\n## Item "); p != std::string::npos; p = readable.find("\n## Item ", p + 1))
        ++sections;
    CHECK(sections == 2);
    CHECK(readable.find("FLAGGED") != std::string::npos);

    SUBCASE("schema has no room for conclusions")
    {
        auto j = to_json(r);
        j["conclusion"] = "the suspect did it";
        CHECK(code_of([&] { parse_report(j.dump()); }) == "report.InvalidReport");
        for (const auto* word : {"conclusion", "attribution", "opinion", "analysis_"})
            CHECK(structured.find(word) == std::string::npos);
    }
    SUBCASE("keys are sorted")
    {
        const auto a = structured.find("\"case_id\"");
        const auto b = structured.find("\"created_at\"");
        const auto c = structured.find("\"schema_version\"");
        CHECK(a < b);
        CHECK(b < c);
    }
}
