#pragma once

#include <chrono>
#include <functional>
#include <string>

namespace dft {

using TimePoint = std::chrono::system_clock::time_point;
using Clock = std::function<TimePoint()>;

Clock system_clock();

/// ISO-8601 UTC with second precision, e.g. "2015-06-30T12:00:00Z".
std::string format_utc(TimePoint t);
std::string utc_now();

int utc_year(TimePoint t);

} // namespace dft
