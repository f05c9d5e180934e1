#include "doctest.h"

#include "dft/coordinator.hpp"
#include "dft/error.hpp"
#include "dft/text.hpp"

#include "support.hpp"

#include <thread>

using namespace dft;
using dft::test::TempDir;

namespace {

std::string fixture(const char* name)
{
    return text::read_file(std::string(DFT_SOURCE_DIR) + "/data/" + name);
}

MemberRecord certified(const std::string& id, std::set<std::string> lines = {"DCFT"})
{
    MemberRecord m;
    m.member_id = id;
    m.name = "Member " + id;
    m.station = "Station 1";
    m.district = District::D1;
    m.business_lines = std::move(lines);
    m.certified_on = "2009-05-01";
    return m;
}

Clock at_year(int year)
{
    return [year] {
        std::tm tm{};
        tm.tm_year = year - 1900;
        tm.tm_mon = 5;
        tm.tm_mday = 15;
        return std::chrono::system_clock::from_time_t(timegm(&tm));
    };
}

ObservationReport report_for(const std::string& number, const std::string& item, Decision d)
{
    ObservationReport r;
    r.dft_file_number = number;
    r.case_id = "C";
    r.member_id = "A";
    ItemSection s;
    s.item_id = item;
    s.manifest_digest = "x";
    s.searches_run.push_back({"cards", "", "d", "completed", 0});
    s.checklist.item_id = item;
    r.items.push_back(s);
    r.threshold_decisions.push_back({item, d, {"checklist:encryption_signatures"}, "A", ""});
    return r;
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

TEST_CASE("issue_file_number")
{
    Coordinator c({}, std::nullopt, at_year(2015));
    c.register_member(certified("A"));
    c.register_member(certified("B"));

    const auto a1 = c.issue_file_number("A", "INV-1");
    CHECK(a1.value == "DFT-2015-000001");
    CHECK(c.issue_file_number("A", "INV-1") == a1);
    const auto b1 = c.issue_file_number("B", "INV-1");
    CHECK(b1.value != a1.value);
    CHECK(c.issue_file_number("A", "INV-2").value == "DFT-2015-000003");

    CHECK(code_of([&] { c.issue_file_number("Z", "INV-1"); }) == "coordinator.UnknownMember");
    auto trainee = certified("T");
    trainee.certified_on.clear();
    c.register_member(trainee);
    CHECK(code_of([&] { c.issue_file_number("T", "INV-1"); }) == "coordinator.NotCertified");
    auto future = certified("F");
    future.certified_on = "2016-01-01";
    c.register_member(future);
    CHECK(code_of([&] { c.issue_file_number("F", "INV-1"); }) == "coordinator.NotCertified");

    auto clash = certified("A");
    clash.station = "elsewhere";
    CHECK(code_of([&] { c.register_member(clash); }) == "coordinator.DuplicateMember");
    CHECK_NOTHROW(c.register_member(certified("A")));
}

TEST_CASE("sequence restarts each year without reusing values")
{
    int year = 2014;
    Coordinator c({}, std::nullopt, [&] { return at_year(year)(); });
    c.register_member(certified("A"));
    CHECK(c.issue_file_number("A", "1").value == "DFT-2014-000001");
    CHECK(c.issue_file_number("A", "2").value == "DFT-2014-000002");
    year = 2015;
    CHECK(c.issue_file_number("A", "3").value == "DFT-2015-000001");
    CHECK(c.issue_file_number("A", "1").value == "DFT-2014-000001");
}

TEST_CASE("concurrent issuance yields unique numbers and survives replay")
{
    TempDir dir;
    const auto journal = dir / "coordinator.journal";
    std::set<std::string> values;
    {
        Coordinator c({}, journal, at_year(2015));
        for (int m = 0; m < 10; ++m)
            c.register_member(certified("M" + std::to_string(m)));
        std::vector<std::thread> threads;
        std::vector<std::vector<std::string>> got(10);
        for (int m = 0; m < 10; ++m)
            threads.emplace_back([&, m] {
                for (int i = 0; i < 100; ++i)
                    got[m].push_back(c.issue_file_number("M" + std::to_string(m), "INV-" + std::to_string(i)).value);
            });
        for (auto& t : threads)
            t.join();
        for (const auto& g : got)
            values.insert(g.begin(), g.end());
    }
    CHECK(values.size() == 1000);

    Coordinator replayed({}, journal, at_year(2015));
    for (const auto& v : values)
        CHECK(replayed.file_number(v).has_value());
    CHECK(values.count(replayed.issue_file_number("M3", "INV-7").value) == 1);
    CHECK(replayed.issue_file_number("M0", "NEW").value == "DFT-2015-001001");
}

TEST_CASE("record_assessment and qualification")
{
    TempDir dir;
    const auto journal = dir / "j";
    {
        Coordinator c({}, journal, at_year(2015));
        c.register_member(certified("A"));
        const auto n = c.issue_file_number("A", "INV-1").value;
        CHECK(c.record_assessment(n, report_for(n, "E1", Decision::forward_despite_no_findings)).assessments_by_year.at(2015) == 1);
        // A second exhibit under the same number does not count again.
        CHECK(c.record_assessment(n, report_for(n, "E2", Decision::does_not_meet)).assessments_by_year.at(2015) == 1);
        CHECK(code_of([&] { c.record_assessment(n, report_for(n, "E1", Decision::forward_despite_no_findings)); }) ==
              "coordinator.DuplicateReportForFileNumber");
        CHECK(code_of([&] { c.record_assessment("DFT-2015-999999", report_for("DFT-2015-999999", "E1",
                                                                               Decision::forward_despite_no_findings)); }) ==
              "coordinator.UnknownFileNumber");
        auto bad = report_for(n, "E3", Decision::forward_despite_no_findings);
        bad.items[0].searches_run.clear();
        CHECK(code_of([&] { c.record_assessment(n, bad); }) == "report.InvalidReport");
    }
    Coordinator c({}, journal, at_year(2015));
    CHECK(c.member("A").assessments_by_year.at(2015) == 1);
    for (int i = 2; i <= 5; ++i) {
        const auto n = c.issue_file_number("A", "INV-" + std::to_string(i)).value;
        c.record_assessment(n, report_for(n, "E1", Decision::forward_despite_no_findings));
    }
    CHECK(c.qualification_status("A", 2015) == Qualification::current);
    CHECK(c.qualification_status("A", 2015, 6) == Qualification::lapsed);
    CHECK(c.qualification_status("A", 2014) == Qualification::lapsed);
    CHECK(c.qualification_status("A", 2014, 0) == Qualification::current);
    CHECK(code_of([&] { c.qualification_status("Z", 2015); }) == "coordinator.UnknownMember");

    const auto m = c.program_metrics();
    REQUIRE(m.live_rows.size() == 1);
    CHECK(m.live_rows[0].dft_files == 5);
    CHECK(m.live_rows[0].dcft_members == 1);
    REQUIRE(m.live_exhibit_reduction);
    CHECK(*m.live_exhibit_reduction == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("historical tables")
{
    const auto config = parse_coordinator_config(fixture("program.conf"));
    Coordinator c(config);
    CHECK(code_of([&] { c.program_metrics(); }) == "coordinator.NoData");

    const auto table2 = fixture("table2_files.tsv");
    const auto summary = c.ingest_historical(table2);
    CHECK(c.export_historical() == table2);
    REQUIRE(summary.rows.size() == 10);
    CHECK(summary.rows[8] == YearRow{"2014", 2014, 409, 118, 84, 329});
    CHECK(summary.rows[5] == YearRow{"2011", 2011, 376, 53, 0, 468});
    CHECK(summary.rows[9].label == "2015 (June)");
    CHECK(summary.rows[9].year == 2015);
    CHECK(summary.backlog.dft_share() == doctest::Approx(30.0 / 58.0).epsilon(1e-9));
    CHECK(summary.exhibit_reduction_ratio == 0.75);

    const auto table1 = fixture("table1_locations.tsv");
    const auto rows = c.ingest_locations(table1);
    CHECK(c.export_locations() == table1);
    REQUIRE(rows.size() == 4);
    CHECK(rows[1].business_line == "DCFT");
    CHECK(rows[3].business_line == "DMFT");
    CHECK(rows[2].total == 96);

    const auto period = c.program_metrics({2013, 2014});
    CHECK(period.rows.size() == 2);

    CHECK(code_of([&] { c.ingest_historical("Year\tFiles\tDFCT members\tDMFT members\tTCU files\n2016\tx\t0\t0\t0\n"); }) ==
          "coordinator.MalformedRow");
    try {
        parse_year_rows("Year\tFiles\tDFCT members\tDMFT members\tTCU files\n2016\t1\t0\t0\n");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("MalformedRow(2)") != std::string::npos);
    }
}
