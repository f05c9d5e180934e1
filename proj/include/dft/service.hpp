#pragma once

#include "dft/coordinator.hpp"
#include "dft/report.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace httplib {
class Server;
}

namespace dft {

/// Loopback HTTP front end for the coordinator and for the case workspaces
/// the console works on. Bodies are JSON; failures answer
/// {"error": {"code", "message"}} with a status derived from the code.
///
///   POST /members                      MemberRecord
///   GET  /members/{id}
///   POST /file-numbers                 {member_id, investigation_id}
///   POST /assessments                  {file_number, report}
///   GET  /members/{id}/status?year=&minimum=
///   GET  /metrics?from=&to=
///   POST /historical?table=files|locations   tab-separated table text
///   GET  /historical?table=files|locations
///   GET  /cases
///   GET  /cases/{id}
///   POST /cases/{id}/flags             {ref, flagged}
///   POST /cases/{id}/finalize          {decisions: [{item_id, decision}], notes}
class Service {
public:
    /// `cases` maps case ids to workspace directories.
    Service(Coordinator& coordinator, std::map<std::string, std::filesystem::path> cases = {},
            Clock clock = system_clock());
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds to 127.0.0.1; port 0 picks a free one. Returns the bound port.
    int bind(int port = 0);
    /// Blocks until stop().
    void run();
    void stop();

private:
    void routes();

    Coordinator& coordinator_;
    std::map<std::string, std::filesystem::path> cases_;
    Clock clock_;
    std::mutex case_mutex_;
    std::unique_ptr<httplib::Server> server_;
};

int http_status_for(const std::string& code);

/// The coordinator operations the CLI needs, either in process against a
/// journal file or over HTTP against a running service.
class CoordinatorClient {
public:
    virtual ~CoordinatorClient() = default;
    virtual MemberRecord register_member(const MemberRecord& m) = 0;
    virtual DftFileNumber issue_file_number(const std::string& member_id, const std::string& investigation_id) = 0;
    virtual MemberRecord record_assessment(const std::string& file_number, const ObservationReport& report) = 0;
    virtual Qualification qualification_status(const std::string& member_id, int year, std::optional<int> minimum) = 0;
    virtual nlohmann::json metrics(Period period) = 0;
    virtual nlohmann::json ingest(const std::string& table, const std::string& text) = 0;
};

/// "http://host:port" talks to a service; anything else is a journal path
/// opened in process with the given config.
std::unique_ptr<CoordinatorClient> connect_coordinator(const std::string& address, CoordinatorConfig config = {});

} // namespace dft
