#include "dft/clock.hpp"

#include <ctime>

namespace dft {

Clock system_clock()
{
    return [] { return std::chrono::system_clock::now(); };
}

std::string format_utc(TimePoint t)
{
    const std::time_t secs = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string utc_now()
{
    return format_utc(std::chrono::system_clock::now());
}

int utc_year(TimePoint t)
{
    const std::time_t secs = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    return tm.tm_year + 1900;
}

} // namespace dft
