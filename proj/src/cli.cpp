#include "dft/cli.hpp"

#include "dft/backlog.hpp"
#include "dft/error.hpp"
#include "dft/service.hpp"
#include "dft/text.hpp"
#include "dft/workspace.hpp"

#include "CLI11.hpp"

#include <csignal>
#include <cstdlib>
#include <iomanip>
#include <pthread.h>
#include <thread>

namespace dft {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string workspace;
    std::string profile = "generic";
    std::vector<std::string> evidence;
    std::string case_arg;
    std::string member;
    std::string coordinator;
    std::string coordinator_config;
    std::string file_number;
    std::string format = "readable";
    std::vector<std::string> items;
    std::string decide;
    std::optional<std::uint64_t> seed;
    std::string sim_config;
    bool compare = false;
    std::optional<bool> dft;
    std::string discipline;
    std::string out;
    int port = 8537;
    std::vector<std::string> serve_cases;
    int from_year = 0;
    int to_year = 9999;
    std::string ingest_files;
    std::string ingest_locations;
    std::string name, station, district = "HQ", lines = "DCFT", certified_on;
};

CoordinatorConfig coordinator_config(const Options& o)
{
    return o.coordinator_config.empty() ? CoordinatorConfig{}
                                        : parse_coordinator_config(text::read_file(o.coordinator_config));
}

std::unique_ptr<CoordinatorClient> coordinator(const Options& o)
{
    return connect_coordinator(o.coordinator, coordinator_config(o));
}

fs::path workspace_dir(const Options& o) { return o.workspace.empty() ? fs::path(".") : fs::path(o.workspace); }

/// `--case` names either a case description file or just a case id.
void apply_case(const Options& o, Workspace::Settings& s)
{
    if (o.case_arg.empty())
        return;
    if (fs::is_regular_file(o.case_arg))
        s.case_description = parse_case(text::read_file(o.case_arg));
    else
        s.case_id = o.case_arg;
}

Workspace open_case(const Options& o, std::ostream& out)
{
    Workspace::Settings s;
    s.member_id = o.member;
    s.profile = o.profile;
    apply_case(o, s);
    for (std::size_t i = 0; i < o.evidence.size(); ++i)
        s.evidence.push_back(parse_evidence_spec(o.evidence[i], i));
    const auto case_id = s.case_description ? s.case_description->case_id : (s.case_id.empty() ? "case" : s.case_id);

    s.dft_file_number = o.file_number;
    if (s.dft_file_number.empty() && !o.member.empty() && !o.coordinator.empty())
        s.dft_file_number = coordinator(o)->issue_file_number(o.member, case_id).value;

    const auto dir = !o.workspace.empty()          ? fs::path(o.workspace)
                     : !s.dft_file_number.empty() ? fs::path(s.dft_file_number)
                                                  : fs::path("dft-" + case_id);
    auto ws = Workspace::create(dir, s);
    out << "workspace\t" << ws.dir().string() << "\n"
        << "case_id\t" << ws.settings().case_id << "\n"
        << "dft_file_number\t" << (ws.settings().dft_file_number.empty() ? "-" : ws.settings().dft_file_number) << "\n";
    for (const auto& e : ws.settings().evidence)
        out << "manifest\t" << e.item_id << "\t" << ws.path("manifests/" + e.item_id + ".manifest").string() << "\n";
    return ws;
}

Workspace workspace_for(const Options& o, std::ostream& out)
{
    if (!o.evidence.empty())
        return open_case(o, out);
    return Workspace::open(workspace_dir(o));
}

void cmd_scan(const Options& o, std::ostream& out)
{
    auto ws = workspace_for(o, out);
    for (const auto& a : ws.scan(o.items)) {
        std::map<std::string, std::size_t> by_kind;
        for (const auto& h : a.hits)
            ++by_kind[std::string(to_string(h.kind))];
        out << "scanned\t" << a.item_id << "\t" << a.hits.size() << " hits";
        for (const auto& [k, n] : by_kind)
            out << "\t" << k << "=" << n;
        out << "\n";
        out << "hits\t" << ws.path("hits/" + a.item_id + ".tsv").string() << "\n";
        if (fs::exists(ws.path("hits/" + a.item_id + ".cards.tsv")))
            out << "cards\t" << ws.path("hits/" + a.item_id + ".cards.tsv").string() << "\n";
    }
}

void print_decision(const ThresholdDecision& d, const ChecklistResult& c, std::ostream& out)
{
    out << d.item_id << "\t" << to_string(d.decision);
    for (const auto& b : d.basis)
        out << "\t" << b;
    out << "\n";
    for (const auto& r : c.rows) {
        out << "  " << r.question << "\t" << to_string(r.answer);
        if (!r.detail.empty())
            out << "\t" << r.detail;
        out << "\n";
    }
}

void cmd_threshold(const Options& o, std::ostream& out)
{
    auto ws = Workspace::open(workspace_dir(o));
    std::vector<ThresholdDecision> ds;
    if (!o.decide.empty()) {
        if (o.items.size() != 1)
            throw Error("cli.InvalidArgument", "--decide needs exactly one --item");
        ds.push_back(ws.decide(o.items.front(), parse_decision(o.decide)));
    } else {
        ds = ws.threshold(o.items);
    }
    const auto lists = ws.checklists();
    for (const auto& d : ds)
        for (const auto& c : lists)
            if (c.item_id == d.item_id)
                print_decision(d, c, out);
}

void cmd_report(const Options& o, std::ostream& out, std::ostream& err)
{
    const auto format = parse_report_format(o.format);
    auto ws = Workspace::open(workspace_dir(o));
    const auto r = ws.report();
    out << render_report(r, format);
    if (!o.coordinator.empty()) {
        try {
            const auto m = coordinator(o)->record_assessment(r.dft_file_number, r);
            err << "recorded\t" << r.dft_file_number << "\t" << m.member_id << "\n";
        } catch (const Error& e) {
            if (e.code() != "coordinator.DuplicateReportForFileNumber")
                throw;
            err << "recorded\t" << r.dft_file_number << "\talready\n";
        }
    }
}

void cmd_verify(const Options& o, std::ostream& out)
{
    auto ws = Workspace::open(workspace_dir(o));
    std::size_t bad = 0;
    for (const auto& v : ws.verify()) {
        out << v.item_id << "\t" << (v.result.ok() ? "ok" : "MISMATCH") << "\n";
        for (const auto& m : v.result.mismatches)
            out << "  " << m.label << "\texpected=" << (m.expected.empty() ? "-" : m.expected)
                << "\tactual=" << (m.actual.empty() ? "-" : m.actual) << "\n";
        bad += v.result.mismatches.size();
    }
    if (bad)
        throw Error("integrity.IntegrityViolation", std::to_string(bad) + " manifest entries differ");
    out << "integrity: ok\n";
}

void cmd_serve(const Options& o, std::ostream& out)
{
    if (o.coordinator.empty() || o.coordinator.rfind("http://", 0) == 0)
        throw Error("cli.InvalidArgument", "serve needs --coordinator <journal file>");
    std::map<std::string, fs::path> cases;
    for (const auto& dir : o.serve_cases)
        cases[Workspace::open(dir).settings().case_id] = fs::absolute(dir);

    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    Coordinator c(coordinator_config(o), fs::path(o.coordinator));
    Service service(c, cases);
    const int port = service.bind(o.port);
    out << "listening\thttp://127.0.0.1:" << port << std::endl;
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        service.stop();
    });
    service.run();
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
}

void cmd_simulate(const Options& o, std::ostream& out)
{
    auto c = o.sim_config.empty() ? SimConfig{} : parse_sim_config(text::read_file(o.sim_config));
    if (o.seed)
        c.seed = *o.seed;
    if (o.dft)
        c.dft_enabled = *o.dft;
    if (!o.discipline.empty())
        c.discipline = parse_discipline(o.discipline);
    std::string result;
    if (o.compare) {
        const auto cmp = compare_disciplines(c);
        result = "# discipline fifo\n" + format_trace(cmp.fifo) + "# discipline severity\n" + format_trace(cmp.severity);
    } else {
        result = format_trace(simulate(c));
    }
    if (o.out.empty()) {
        out << result;
    } else {
        text::write_file_atomic(o.out, result);
        out << "trace\t" << o.out << "\n";
    }
}

void cmd_metrics(const Options& o, std::ostream& out)
{
    auto c = coordinator(o);
    if (!o.ingest_files.empty())
        c->ingest("files", text::read_file(o.ingest_files));
    if (!o.ingest_locations.empty())
        c->ingest("locations", text::read_file(o.ingest_locations));
    const auto m = c->metrics({o.from_year, o.to_year});
    out << m.dump(2) << "\n";
    const auto& b = m.at("backlog");
    if (b.at("total").get<long>() > 0)
        out << "backlog_dft_share\t" << std::fixed << std::setprecision(4) << b.at("dft_share").get<double>() << "\n";
}

void cmd_register(const Options& o, std::ostream& out)
{
    if (o.member.empty())
        throw Error("cli.InvalidArgument", "register needs --member");
    MemberRecord m;
    m.member_id = o.member;
    m.name = o.name.empty() ? o.member : o.name;
    m.station = o.station;
    m.district = parse_district(o.district);
    for (const auto& l : text::split(o.lines, ','))
        if (!l.empty())
            m.business_lines.insert(std::string(l));
    m.certified_on = o.certified_on;
    out << to_json(coordinator(o)->register_member(m)).dump(2) << "\n";
}

} // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Digital field triage toolkit", "dft"};
    app.require_subcommand(1);
    Options o;

    if (const char* env = std::getenv("DFT_COORDINATOR"))
        o.coordinator = env;

    app.add_option("--workspace,-w", o.workspace, "Workspace directory");
    app.add_option("--coordinator", o.coordinator, "Coordinator URL (http://host:port) or journal file; default $DFT_COORDINATOR");
    app.add_option("--member", o.member, "DFT member id");
    app.fallthrough();

    auto* open = app.add_subcommand("open", "Open a case workspace and record evidence manifests");
    auto* scan = app.add_subcommand("scan", "Run the profile's scanners over the evidence");
    for (auto* sc : {open, scan}) {
        sc->add_option("--profile", o.profile, "Built-in profile name or profile file");
        sc->add_option("--evidence", o.evidence, "[ITEM=]PATH[#raw_image|directory_tree|artifact_records]");
        sc->add_option("--case", o.case_arg, "Case id or case description file");
        sc->add_option("--file-number", o.file_number, "DFT file number already issued");
    }
    open->get_option("--evidence")->required();
    scan->add_option("--item", o.items, "Only these items");

    auto* rank = app.add_subcommand("rank", "Prioritize the case's evidence items");
    auto* threshold = app.add_subcommand("threshold", "Evaluate or record threshold decisions");
    threshold->add_option("--item", o.items, "Only these items");
    threshold->add_option("--decide", o.decide, "meets, does_not_meet or forward_despite_no_findings");

    auto* report = app.add_subcommand("report", "Build the Observation Report");
    report->add_option("--format", o.format, "structured or readable");

    auto* verify = app.add_subcommand("verify", "Check the evidence against its manifests");

    auto* serve = app.add_subcommand("serve", "Run the coordinator and console service on loopback");
    serve->add_option("--port", o.port, "Port (0 picks a free one)");
    serve->add_option("--case-workspace", o.serve_cases, "Workspace to expose to the console");
    serve->add_option("--config", o.coordinator_config, "Program config file");

    auto* simulate = app.add_subcommand("simulate", "Simulate the lab backlog");
    simulate->add_option("--config", o.sim_config, "Simulation config file");
    simulate->add_option("--seed", o.seed, "Random seed");
    simulate->add_option("--discipline", o.discipline, "fifo or severity");
    simulate->add_flag("--dft,!--no-dft", o.dft, "Enable field triage diversion");
    simulate->add_flag("--compare", o.compare, "Run both disciplines");
    simulate->add_option("--out", o.out, "Write the trace to this file");

    auto* metrics = app.add_subcommand("metrics", "Program metrics from the coordinator");
    metrics->add_option("--config", o.coordinator_config, "Program config file (journal mode)");
    metrics->add_option("--from", o.from_year, "First year");
    metrics->add_option("--to", o.to_year, "Last year");
    metrics->add_option("--ingest-files", o.ingest_files, "Files-per-year table to ingest first");
    metrics->add_option("--ingest-locations", o.ingest_locations, "Member locations table to ingest first");

    auto* reg = app.add_subcommand("register", "Register a DFT member with the coordinator");
    reg->add_option("--name", o.name);
    reg->add_option("--station", o.station);
    reg->add_option("--district", o.district, "HQ, D1, D2, D3 or D4");
    reg->add_option("--lines", o.lines, "Comma-separated business lines (DCFT, DMFT)");
    reg->add_option("--certified-on", o.certified_on, "YYYY-MM-DD");
    reg->add_option("--config", o.coordinator_config, "Program config file (journal mode)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        const bool unknown = !args.empty() && args.front().rfind('-', 0) != 0 && app.get_subcommands().empty();
        if (unknown)
            err << "error: cli.UnknownCommand: UnknownCommand(" << args.front() << ")\n";
        else
            err << "error: cli.UsageError: " << e.what() << "\n";
        return 2;
    }

    try {
        auto* sc = app.get_subcommands().front();
        if (sc == open)
            open_case(o, out);
        else if (sc == scan)
            cmd_scan(o, out);
        else if (sc == rank)
            out << format_rank(Workspace::open(workspace_dir(o)).rank());
        else if (sc == threshold)
            cmd_threshold(o, out);
        else if (sc == report)
            cmd_report(o, out, err);
        else if (sc == verify)
            cmd_verify(o, out);
        else if (sc == serve)
            cmd_serve(o, out);
        else if (sc == simulate)
            cmd_simulate(o, out);
        else if (sc == metrics)
            cmd_metrics(o, out);
        else if (sc == reg)
            cmd_register(o, out);
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.code() << ": " << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "error: cli.Internal: " << e.what() << "\n";
    }
    return 1;
}

} // namespace dft
