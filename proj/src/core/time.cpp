#include "still/core/time.hpp"

#include "still/core/error.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>

namespace still {

Timestamp system_now()
{
    using namespace std::chrono;
    return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

Clock system_clock()
{
    return [] { return system_now(); };
}

ManualClock::ManualClock(Timestamp start) : time_(std::make_shared<std::int64_t>(start)) {}

Timestamp ManualClock::now() const
{
    return std::atomic_ref<std::int64_t>(*time_).load();
}

void ManualClock::set(Timestamp t)
{
    std::atomic_ref<std::int64_t>(*time_).store(t);
}

void ManualClock::advance(std::int64_t seconds)
{
    std::atomic_ref<std::int64_t>(*time_).fetch_add(seconds);
}

Clock ManualClock::clock() const
{
    auto t = time_;
    return [t] { return std::atomic_ref<std::int64_t>(*t).load(); };
}

std::string format_utc(Timestamp t)
{
    std::time_t tt = static_cast<std::time_t>(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Timestamp parse_utc(std::string_view text)
{
    bool numeric = !text.empty();
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (!(c >= '0' && c <= '9') && !(i == 0 && c == '-')) numeric = false;
    }
    if (numeric) {
        Timestamp v = 0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || p != text.data() + text.size())
            throw Error(Errc::parse_error, "invalid timestamp");
        return v;
    }
    std::tm tm{};
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    std::string str(text);
    int n = std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2dZ", &y, &mo, &d, &h, &mi, &s);
    bool ok = (n == 6 && str.size() == 20) || (n == 3 && str.size() == 10);
    if (!ok || mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60)
        throw Error(Errc::parse_error, "invalid timestamp");
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = s;
    return static_cast<Timestamp>(timegm(&tm));
}

} // namespace still
