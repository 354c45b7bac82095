#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

namespace still {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

// Injected everywhere a wall clock is needed so tests and the simulator can
// drive time explicitly.
using Clock = std::function<Timestamp()>;

Timestamp system_now();
Clock system_clock();

// Manually advanced clock; copies share the same underlying time.
class ManualClock {
public:
    explicit ManualClock(Timestamp start = 1'700'000'000);

    Timestamp now() const;
    void set(Timestamp t);
    void advance(std::int64_t seconds);
    Clock clock() const;

private:
    std::shared_ptr<std::int64_t> time_;
};

// "2024-01-31T12:00:00Z"
std::string format_utc(Timestamp t);
// Accepts "YYYY-MM-DDTHH:MM:SSZ", "YYYY-MM-DD" or an integer epoch value.
// Throws Errc::parse_error.
Timestamp parse_utc(std::string_view text);

constexpr std::int64_t kSecondsPerDay = 86'400;

} // namespace still
