#include "dft/backlog.hpp"

#include "dft/error.hpp"
#include "dft/text.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <queue>
#include <random>
#include <sstream>

namespace dft {

namespace {

Error invalid(const std::string& field, const std::string& why)
{
    return Error("backlog.InvalidConfig", "InvalidConfig(" + field + "): " + why);
}

// Explicit transforms rather than std distributions so a seed gives the same
// cases with any standard library.
class Draws {
public:
    explicit Draws(std::uint64_t seed) : rng_(seed) {}

    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    double exponential(double mean) { return -std::log1p(-uniform()) * mean; }
    int poisson(double mean)
    {
        const double limit = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

private:
    std::mt19937_64 rng_;
};

Severity pick_severity(double u, const std::array<double, severity_count>& mix)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < severity_count; ++i) {
        acc += mix[i];
        if (u < acc)
            return static_cast<Severity>(i);
    }
    // Rounding can leave u just above the cumulative sum; use the last class with weight.
    for (std::size_t i = severity_count; i-- > 0;)
        if (mix[i] > 0.0)
            return static_cast<Severity>(i);
    return Severity::person_crime;
}

bool parse_bool(std::string_view v, const std::string& field)
{
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw invalid(field, "expected true or false");
}

} // namespace

std::string_view to_string(Severity s)
{
    switch (s) {
    case Severity::person_crime: return "person_crime";
    case Severity::property: return "property";
    case Severity::fraud: return "fraud";
    }
    return "person_crime";
}

std::string_view to_string(Discipline d)
{
    return d == Discipline::fifo ? "fifo" : "severity";
}

Discipline parse_discipline(std::string_view text)
{
    if (text == "fifo")
        return Discipline::fifo;
    if (text == "severity")
        return Discipline::severity;
    throw invalid("discipline", "expected fifo or severity, got " + std::string(text));
}

void validate_sim_config(const SimConfig& c)
{
    if (!(c.horizon > 0.0))
        throw invalid("horizon", "must be positive");
    if (!(c.arrival_rate >= 0.0))
        throw invalid("arrival_rate", "must not be negative");
    if (c.analysts < 1)
        throw invalid("analysts", "need at least one analyst");
    if (!(c.service_days > 0.0))
        throw invalid("service_days", "must be positive");
    if (!(c.exhibits_per_case >= 1.0 && c.exhibits_per_case <= 100.0))
        throw invalid("exhibits_per_case", "must be in [1,100]");
    double sum = 0.0;
    for (double m : c.severity_mix) {
        if (!(m >= 0.0))
            throw invalid("severity_mix", "weights must not be negative");
        sum += m;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw invalid("severity_mix", "weights must sum to 1");
    if (!(c.dft_threshold_pass >= 0.0 && c.dft_threshold_pass <= 1.0))
        throw invalid("dft_threshold_pass", "must be in [0,1]");
    if (!(c.exhibit_reduction >= 0.0 && c.exhibit_reduction <= 1.0))
        throw invalid("exhibit_reduction", "must be in [0,1]");
    if (c.initial_backlog < 0)
        throw invalid("initial_backlog", "must not be negative");
}

SimConfig parse_sim_config(std::string_view content)
{
    SimConfig c;
    for (auto raw : text::lines(content)) {
        const auto line = text::trim(raw);
        if (line.empty() || line.front() == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw invalid(std::string(line), "expected key = value");
        const std::string key(text::trim(line.substr(0, eq)));
        const auto value = text::trim(line.substr(eq + 1));
        const auto number = [&] {
            const auto v = text::parse_double(value);
            if (!v)
                throw invalid(key, "not a number: " + std::string(value));
            return *v;
        };
        if (key == "horizon")
            c.horizon = number();
        else if (key == "arrival_rate")
            c.arrival_rate = number();
        else if (key == "analysts")
            c.analysts = static_cast<int>(number());
        else if (key == "service_days")
            c.service_days = number();
        else if (key == "exhibits_per_case")
            c.exhibits_per_case = number();
        else if (key == "discipline")
            c.discipline = parse_discipline(value);
        else if (key == "dft_enabled")
            c.dft_enabled = parse_bool(value, key);
        else if (key == "dft_threshold_pass")
            c.dft_threshold_pass = number();
        else if (key == "exhibit_reduction")
            c.exhibit_reduction = number();
        else if (key == "initial_backlog")
            c.initial_backlog = static_cast<int>(number());
        else if (key == "seed") {
            const auto s = text::parse_u64(value);
            if (!s)
                throw invalid(key, "not an unsigned integer");
            c.seed = *s;
        } else if (key == "severity_mix") {
            std::istringstream in{std::string(value)};
            std::array<double, severity_count> mix{};
            for (auto& m : mix)
                if (!(in >> m))
                    throw invalid(key, "expected three weights: person_crime property fraud");
            c.severity_mix = mix;
        } else {
            throw invalid(key, "unknown key");
        }
    }
    validate_sim_config(c);
    return c;
}

std::string format_sim_config(const SimConfig& c)
{
    std::ostringstream o;
    o << std::setprecision(17);
    o << "horizon = " << c.horizon << "\n"
      << "arrival_rate = " << c.arrival_rate << "\n"
      << "severity_mix = " << c.severity_mix[0] << ' ' << c.severity_mix[1] << ' ' << c.severity_mix[2] << "\n"
      << "analysts = " << c.analysts << "\n"
      << "service_days = " << c.service_days << "\n"
      << "exhibits_per_case = " << c.exhibits_per_case << "\n"
      << "discipline = " << to_string(c.discipline) << "\n"
      << "dft_enabled = " << (c.dft_enabled ? "true" : "false") << "\n"
      << "dft_threshold_pass = " << c.dft_threshold_pass << "\n"
      << "exhibit_reduction = " << c.exhibit_reduction << "\n"
      << "initial_backlog = " << c.initial_backlog << "\n"
      << "seed = " << c.seed << "\n";
    return o.str();
}

std::vector<SimCase> generate_cases(const SimConfig& c, std::size_t* diverted)
{
    validate_sim_config(c);
    Draws draw(c.seed);
    std::vector<SimCase> out;
    std::size_t dropped = 0;
    std::size_t id = 0;

    // Fixed draw order per case: severity, exhibit count, forwarding, then one
    // service time per exhibit.
    const auto next_case = [&](double arrival, bool field_triaged) {
        SimCase sc;
        sc.id = id++;
        sc.arrival = arrival;
        sc.severity = pick_severity(draw.uniform(), c.severity_mix);
        const int exhibits = 1 + draw.poisson(c.exhibits_per_case - 1.0);
        const double forward = draw.uniform();
        std::vector<double> per_exhibit(static_cast<std::size_t>(exhibits));
        for (auto& s : per_exhibit)
            s = draw.exponential(c.service_days);
        std::size_t kept = per_exhibit.size();
        if (field_triaged && c.dft_enabled) {
            if (forward >= c.dft_threshold_pass) {
                ++dropped;
                return;
            }
            kept = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(static_cast<double>(exhibits) * (1.0 - c.exhibit_reduction))));
        }
        for (std::size_t i = 0; i < kept; ++i)
            sc.service += per_exhibit[i];
        out.push_back(sc);
    };

    for (int i = 0; i < c.initial_backlog; ++i)
        next_case(0.0, false);
    if (c.arrival_rate > 0.0) {
        double t = 0.0;
        for (;;) {
            t += draw.exponential(1.0 / c.arrival_rate);
            if (t >= c.horizon)
                break;
            next_case(t, true);
        }
    }
    if (diverted)
        *diverted = dropped;
    return out;
}

BacklogTrace run_queue(const std::vector<SimCase>& input, int analysts, Discipline discipline, double horizon)
{
    if (analysts < 1)
        throw invalid("analysts", "need at least one analyst");
    std::vector<SimCase> cases = input;
    std::stable_sort(cases.begin(), cases.end(), [](const SimCase& a, const SimCase& b) { return a.arrival < b.arrival; });

    const auto waits_longer = [discipline](const SimCase* a, const SimCase* b) {
        // priority_queue pops the greatest, so "less" means served later.
        if (discipline == Discipline::severity && a->severity != b->severity)
            return a->severity > b->severity;
        if (a->arrival != b->arrival)
            return a->arrival > b->arrival;
        return a->id > b->id;
    };
    std::priority_queue<const SimCase*, std::vector<const SimCase*>, decltype(waits_longer)> waiting(waits_longer);
    std::priority_queue<double, std::vector<double>, std::greater<>> busy;

    BacklogTrace t;
    std::array<double, severity_count> wait_sum{};
    std::vector<double> arrivals, completions;
    std::size_t next = 0;
    double work = 0.0;

    const auto dispatch = [&](double now) {
        while (static_cast<int>(busy.size()) < analysts && !waiting.empty()) {
            const SimCase* c = waiting.top();
            waiting.pop();
            wait_sum[static_cast<std::size_t>(c->severity)] += now - c->arrival;
            busy.push(now + c->service);
        }
    };

    for (;;) {
        const double next_arrival = next < cases.size() ? cases[next].arrival : INFINITY;
        const double next_done = busy.empty() ? INFINITY : busy.top();
        const double now = std::min(next_arrival, next_done);
        if (!(now <= horizon))
            break;
        if (next_done <= next_arrival) {
            busy.pop();
            completions.push_back(now);
        } else {
            const auto& c = cases[next++];
            arrivals.push_back(c.arrival);
            ++t.cases[static_cast<std::size_t>(c.severity)];
            work += c.service;
            waiting.push(&c);
        }
        // Settle every event at this instant before choosing whom to serve.
        const double following_arrival = next < cases.size() ? cases[next].arrival : INFINITY;
        const double following_done = busy.empty() ? INFINITY : busy.top();
        if (std::min(following_arrival, following_done) > now)
            dispatch(now);
    }
    // Cases never started have waited until the horizon so far.
    while (!waiting.empty()) {
        wait_sum[static_cast<std::size_t>(waiting.top()->severity)] += horizon - waiting.top()->arrival;
        waiting.pop();
    }

    t.arrivals = arrivals.size();
    t.completed = completions.size();
    t.final_backlog = t.arrivals - t.completed;
    for (std::size_t s = 0; s < severity_count; ++s)
        t.mean_wait[s] = t.cases[s] ? wait_sum[s] / static_cast<double>(t.cases[s]) : 0.0;
    t.utilization = work / (static_cast<double>(analysts) * horizon);

    std::size_t a = 0, d = 0;
    for (long day = 0; day <= static_cast<long>(std::floor(horizon)); ++day) {
        while (a < arrivals.size() && arrivals[a] <= static_cast<double>(day))
            ++a;
        while (d < completions.size() && completions[d] <= static_cast<double>(day))
            ++d;
        t.queue_length.push_back(a - d);
    }
    return t;
}

BacklogTrace simulate(const SimConfig& c)
{
    std::size_t diverted = 0;
    const auto cases = generate_cases(c, &diverted);
    auto t = run_queue(cases, c.analysts, c.discipline, c.horizon);
    t.diverted = diverted;
    return t;
}

DisciplineComparison compare_disciplines(const SimConfig& c)
{
    auto fifo = c;
    fifo.discipline = Discipline::fifo;
    auto sev = c;
    sev.discipline = Discipline::severity;
    return {simulate(fifo), simulate(sev)};
}

std::string format_trace(const BacklogTrace& t)
{
    std::ostringstream o;
    o << std::setprecision(6);
    o << "# arrivals=" << t.arrivals << " diverted=" << t.diverted << " completed=" << t.completed
      << " final_backlog=" << t.final_backlog << " utilization=" << t.utilization << "\n";
    for (std::size_t s = 0; s < severity_count; ++s)
        o << "# mean_wait." << to_string(static_cast<Severity>(s)) << "=" << t.mean_wait[s] << " cases=" << t.cases[s]
          << "\n";
    o << "day\tqueue_length\n";
    for (std::size_t day = 0; day < t.queue_length.size(); ++day)
        o << day << '\t' << t.queue_length[day] << '\n';
    return o.str();
}

} // namespace dft
