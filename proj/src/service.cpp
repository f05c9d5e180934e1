#include "dft/service.hpp"

#include "dft/error.hpp"
#include "dft/workspace.hpp"

#include "httplib.h"

#include <array>

namespace dft {

using nlohmann::json;

namespace {

bool ends_with(const std::string& s, std::string_view tail)
{
    return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
}

void reply(httplib::Response& res, const json& body, int status = 200)
{
    res.status = status;
    res.set_content(body.dump(2) + "\n", "application/json");
}

void fail(httplib::Response& res, const std::string& code, const std::string& message)
{
    reply(res, {{"error", {{"code", code}, {"message", message}}}}, http_status_for(code));
}

json body_of(const httplib::Request& req)
{
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw Error("service.InvalidRequest", std::string("request body is not JSON: ") + e.what());
    }
}

template <class T>
T field(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key))
        throw Error("service.InvalidRequest", std::string("missing field ") + key);
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error("service.InvalidRequest", std::string("field ") + key + " has the wrong type");
    }
}

int int_param(const httplib::Request& req, const char* key, int fallback)
{
    if (!req.has_param(key))
        return fallback;
    const auto v = req.get_param_value(key);
    try {
        std::size_t used = 0;
        const int n = std::stoi(v, &used);
        if (used == v.size())
            return n;
    } catch (const std::exception&) {
    }
    throw Error("service.InvalidRequest", std::string("parameter ") + key + " is not an integer: " + v);
}

std::string table_param(const httplib::Request& req)
{
    const auto t = req.has_param("table") ? req.get_param_value("table") : std::string("files");
    if (t != "files" && t != "locations")
        throw Error("service.InvalidRequest", "table is files or locations, not " + t);
    return t;
}

/// Wraps a handler so module errors become JSON error replies.
httplib::Server::Handler guarded(std::function<void(const httplib::Request&, httplib::Response&)> fn)
{
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            fail(res, e.code(), e.what());
        } catch (const json::exception& e) {
            fail(res, "service.InvalidRequest", e.what());
        } catch (const std::exception& e) {
            fail(res, "service.Internal", e.what());
        }
    };
}

json qualification_json(const std::string& member, int year, int minimum, Qualification q)
{
    return {{"member_id", member}, {"year", year}, {"minimum", minimum}, {"status", std::string(to_string(q))}};
}

} // namespace

int http_status_for(const std::string& code)
{
    static const std::array<std::pair<std::string_view, int>, 14> table{{
        {"UnknownMember", 404},
        {"UnknownFileNumber", 404},
        {"UnknownCase", 404},
        {"NoData", 404},
        {"NoWorkspace", 404},
        {"WorkspaceLocked", 423},
        {"NotCertified", 409},
        {"DuplicateMember", 409},
        {"DuplicateReportForFileNumber", 409},
        {"StaleHitReference", 409},
        {"DecisionConflict", 409},
        {"ChecklistIncomplete", 409},
        {"AssessmentIncomplete", 409},
        {"IntegrityViolation", 409},
    }};
    for (const auto& [name, status] : table)
        if (ends_with(code, std::string(".") + std::string(name)))
            return status;
    return ends_with(code, ".Internal") ? 500 : 400;
}

Service::Service(Coordinator& coordinator, std::map<std::string, std::filesystem::path> cases, Clock clock)
    : coordinator_(coordinator), cases_(std::move(cases)), clock_(std::move(clock)),
      server_(std::make_unique<httplib::Server>())
{
    routes();
}

Service::~Service() { stop(); }

int Service::bind(int port)
{
    const int bound = port == 0 ? server_->bind_to_any_port("127.0.0.1") : (server_->bind_to_port("127.0.0.1", port) ? port : -1);
    if (bound < 0)
        throw Error("service.BindFailed", "cannot listen on 127.0.0.1:" + std::to_string(port));
    return bound;
}

void Service::run() { server_->listen_after_bind(); }

void Service::stop()
{
    if (server_)
        server_->stop();
}

void Service::routes()
{
    auto& s = *server_;
    auto& c = coordinator_;

    s.Post("/members", guarded([&c](const auto& req, auto& res) {
        reply(res, to_json(c.register_member(member_from_json(body_of(req)))), 201);
    }));
    s.Get(R"(/members/([^/]+))", guarded([&c](const auto& req, auto& res) {
        reply(res, to_json(c.member(req.matches[1])));
    }));
    s.Get(R"(/members/([^/]+)/status)", guarded([this, &c](const auto& req, auto& res) {
        const std::string id = req.matches[1];
        if (!req.has_param("year"))
            throw Error("service.InvalidRequest", "missing parameter year");
        const int year = int_param(req, "year", 0);
        const int minimum = int_param(req, "minimum", c.config().qualification_minimum);
        reply(res, qualification_json(id, year, minimum, c.qualification_status(id, year, minimum)));
    }));
    s.Post("/file-numbers", guarded([&c](const auto& req, auto& res) {
        const auto j = body_of(req);
        reply(res, to_json(c.issue_file_number(field<std::string>(j, "member_id"), field<std::string>(j, "investigation_id"))));
    }));
    s.Post("/assessments", guarded([&c](const auto& req, auto& res) {
        const auto j = body_of(req);
        const auto report = report_from_json(field<json>(j, "report"));
        reply(res, to_json(c.record_assessment(field<std::string>(j, "file_number"), report)));
    }));
    s.Get("/metrics", guarded([&c](const auto& req, auto& res) {
        reply(res, to_json(c.program_metrics({int_param(req, "from", 0), int_param(req, "to", 9999)})));
    }));
    s.Post("/historical", guarded([&c](const auto& req, auto& res) {
        if (table_param(req) == "files") {
            reply(res, {{"rows", c.ingest_historical(req.body).rows.size()}});
        } else {
            reply(res, {{"rows", c.ingest_locations(req.body).size()}});
        }
    }));
    s.Get("/historical", guarded([&c](const auto& req, auto& res) {
        res.set_content(table_param(req) == "files" ? c.export_historical() : c.export_locations(),
                        "text/tab-separated-values");
    }));

    const auto workspace = [this](const std::string& id) {
        const auto it = cases_.find(id);
        if (it == cases_.end())
            throw Error("console.UnknownCase", "UnknownCase(" + id + ")");
        return Workspace::open(it->second);
    };

    s.Get("/cases", guarded([this](const auto&, auto& res) {
        json out = json::array();
        for (const auto& [id, dir] : cases_)
            out.push_back({{"case_id", id}, {"workspace", dir.string()}});
        reply(res, out);
    }));
    s.Get(R"(/cases/([^/]+))", guarded([this, workspace](const auto& req, auto& res) {
        std::lock_guard lock(case_mutex_);
        reply(res, workspace(req.matches[1]).view());
    }));
    s.Post(R"(/cases/([^/]+)/flags)", guarded([this, workspace](const auto& req, auto& res) {
        const auto j = body_of(req);
        std::lock_guard lock(case_mutex_);
        auto ws = workspace(req.matches[1]);
        const auto flags = ws.set_flag(field<std::string>(j, "ref"), j.value("flagged", true));
        reply(res, {{"flags", flags}});
    }));
    s.Post(R"(/cases/([^/]+)/finalize)", guarded([this, workspace](const auto& req, auto& res) {
        const auto j = body_of(req);
        std::lock_guard lock(case_mutex_);
        auto ws = workspace(req.matches[1]);
        if (j.contains("decisions"))
            for (const auto& d : j.at("decisions"))
                ws.decide(field<std::string>(d, "item_id"), parse_decision(field<std::string>(d, "decision")), clock_);
        if (j.contains("notes"))
            ws.set_notes(field<std::string>(j, "notes"));
        const auto report = ws.report(clock_);

        json recorded = nullptr;
        if (coordinator_.file_number(report.dft_file_number)) {
            try {
                recorded = to_json(coordinator_.record_assessment(report.dft_file_number, report));
            } catch (const Error& e) {
                if (e.code() != "coordinator.DuplicateReportForFileNumber")
                    throw;
            }
        }
        reply(res, {{"report", to_json(report)},
                    {"readable", render_report(report, ReportFormat::readable)},
                    {"member", recorded}});
    }));
}

namespace {

class LocalClient final : public CoordinatorClient {
public:
    LocalClient(const std::string& journal, CoordinatorConfig config) : c_(config, journal) {}

    MemberRecord register_member(const MemberRecord& m) override { return c_.register_member(m); }
    DftFileNumber issue_file_number(const std::string& member, const std::string& inv) override
    {
        return c_.issue_file_number(member, inv);
    }
    MemberRecord record_assessment(const std::string& number, const ObservationReport& r) override
    {
        return c_.record_assessment(number, r);
    }
    Qualification qualification_status(const std::string& member, int year, std::optional<int> minimum) override
    {
        return c_.qualification_status(member, year, minimum);
    }
    json metrics(Period p) override { return to_json(c_.program_metrics(p)); }
    json ingest(const std::string& table, const std::string& text) override
    {
        if (table == "files")
            return {{"rows", c_.ingest_historical(text).rows.size()}};
        if (table == "locations")
            return {{"rows", c_.ingest_locations(text).size()}};
        throw Error("cli.InvalidArgument", "table is files or locations, not " + table);
    }

private:
    Coordinator c_;
};

class HttpClient final : public CoordinatorClient {
public:
    explicit HttpClient(const std::string& url) : url_(url), client_(url)
    {
        client_.set_connection_timeout(5);
        client_.set_read_timeout(30);
    }

    MemberRecord register_member(const MemberRecord& m) override
    {
        return member_from_json(post("/members", to_json(m).dump()));
    }
    DftFileNumber issue_file_number(const std::string& member, const std::string& inv) override
    {
        return file_number_from_json(post("/file-numbers", json{{"member_id", member}, {"investigation_id", inv}}.dump()));
    }
    MemberRecord record_assessment(const std::string& number, const ObservationReport& r) override
    {
        return member_from_json(post("/assessments", json{{"file_number", number}, {"report", to_json(r)}}.dump()));
    }
    Qualification qualification_status(const std::string& member, int year, std::optional<int> minimum) override
    {
        auto path = "/members/" + member + "/status?year=" + std::to_string(year);
        if (minimum)
            path += "&minimum=" + std::to_string(*minimum);
        return get(path).at("status") == "current" ? Qualification::current : Qualification::lapsed;
    }
    json metrics(Period p) override
    {
        return get("/metrics?from=" + std::to_string(p.from_year) + "&to=" + std::to_string(p.to_year));
    }
    json ingest(const std::string& table, const std::string& text) override
    {
        return check(client_.Post("/historical?table=" + table, text, "text/tab-separated-values"));
    }

private:
    json post(const std::string& path, const std::string& body)
    {
        return check(client_.Post(path, body, "application/json"));
    }
    json get(const std::string& path) { return check(client_.Get(path)); }

    json check(const httplib::Result& r)
    {
        if (!r)
            throw Error("service.Unreachable", "no coordinator at " + url_ + " (" + httplib::to_string(r.error()) + ")");
        json j;
        try {
            j = json::parse(r->body);
        } catch (const json::exception&) {
            throw Error("service.InvalidResponse", "coordinator answered " + std::to_string(r->status) + " without JSON");
        }
        if (r->status >= 400) {
            const auto& e = j.at("error");
            throw Error(e.at("code").get<std::string>(), e.at("message").get<std::string>());
        }
        return j;
    }

    std::string url_;
    httplib::Client client_;
};

} // namespace

std::unique_ptr<CoordinatorClient> connect_coordinator(const std::string& address, CoordinatorConfig config)
{
    if (address.empty())
        throw Error("cli.InvalidArgument", "no coordinator given; pass --coordinator or set DFT_COORDINATOR");
    if (address.rfind("http://", 0) == 0)
        return std::make_unique<HttpClient>(address);
    return std::make_unique<LocalClient>(address, config);
}

} // namespace dft
