#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dft {

/// Priority order under the severity discipline: person_crime first, fraud last.
enum class Severity { person_crime, property, fraud };
inline constexpr std::size_t severity_count = 3;
std::string_view to_string(Severity s);

enum class Discipline { fifo, severity };
std::string_view to_string(Discipline d);
Discipline parse_discipline(std::string_view text);

struct SimConfig {
    double horizon = 365.0;     // days
    double arrival_rate = 1.0;  // cases per day
    std::array<double, severity_count> severity_mix{0.4, 0.3, 0.3}; // person_crime, property, fraud
    int analysts = 2;
    double service_days = 1.0;      // mean per exhibit, exponential
    double exhibits_per_case = 3.0; // mean; count is 1 + Poisson(mean - 1)
    Discipline discipline = Discipline::fifo;
    bool dft_enabled = false;
    double dft_threshold_pass = 0.5; // share of cases forwarded to the lab
    double exhibit_reduction = 0.75;
    int initial_backlog = 0; // cases already waiting at day 0
    std::uint64_t seed = 1;
};

/// "key = value" text; throws backlog.InvalidConfig(field).
SimConfig parse_sim_config(std::string_view text);
std::string format_sim_config(const SimConfig& c);
void validate_sim_config(const SimConfig& c);

/// A case as it reaches the lab queue.
struct SimCase {
    std::size_t id = 0;
    double arrival = 0.0;
    Severity severity = Severity::person_crime;
    double service = 0.0; // total analyst days
};

struct BacklogTrace {
    std::vector<std::size_t> queue_length; // cases in the lab (waiting or in service) at each whole day
    std::array<double, severity_count> mean_wait{}; // includes waits still open at the horizon
    std::array<std::size_t, severity_count> cases{};
    std::size_t arrivals = 0;  // cases that entered the lab queue
    std::size_t diverted = 0;  // cases resolved by field triage and never forwarded
    std::size_t completed = 0;
    std::size_t final_backlog = 0;
    double utilization = 0.0; // offered load / analyst capacity

    bool operator==(const BacklogTrace&) const = default;
};

/// Draws the cases that reach the lab. Every case consumes the same random
/// numbers whatever the DFT settings, so runs differing only in those
/// settings see the same underlying workload.
std::vector<SimCase> generate_cases(const SimConfig& c, std::size_t* diverted = nullptr);

/// Non-preemptive multi-analyst queue over explicit cases.
BacklogTrace run_queue(const std::vector<SimCase>& cases, int analysts, Discipline discipline, double horizon);

BacklogTrace simulate(const SimConfig& c);

struct DisciplineComparison {
    BacklogTrace fifo;
    BacklogTrace severity;
};
DisciplineComparison compare_disciplines(const SimConfig& c);

/// Tab-separated "day\tqueue_length" series preceded by '#' summary lines.
std::string format_trace(const BacklogTrace& t);

} // namespace dft
