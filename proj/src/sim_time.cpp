#include "gsched/sim_time.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace gsched {

SimTime SimTime::from_seconds(double seconds) {
    if (!std::isfinite(seconds)) {
        throw std::invalid_argument("non-finite duration");
    }
    return SimTime{std::llround(seconds * 1e6)};
}

std::string SimTime::to_string() const {
    const std::int64_t mag = us_ < 0 ? -us_ : us_;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%lld.%06lld", us_ < 0 ? "-" : "",
                  static_cast<long long>(mag / 1'000'000), static_cast<long long>(mag % 1'000'000));
    return buf;
}

SimTime SimTime::parse(std::string_view text) {
    const auto bad = [&] { return std::invalid_argument("bad time value '" + std::string(text) + "'"); };
    bool negative = false;
    if (!text.empty() && text.front() == '-') {
        negative = true;
        text.remove_prefix(1);
    }
    const auto dot = text.find('.');
    const std::string_view whole = text.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if (whole.empty() || frac.size() > 6) {
        throw bad();
    }
    std::int64_t secs = 0;
    auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), secs);
    if (ec != std::errc{} || p != whole.data() + whole.size()) {
        throw bad();
    }
    std::int64_t micros = 0;
    for (std::size_t i = 0; i < 6; ++i) {
        int digit = 0;
        if (i < frac.size()) {
            if (frac[i] < '0' || frac[i] > '9') {
                throw bad();
            }
            digit = frac[i] - '0';
        }
        micros = micros * 10 + digit;
    }
    const std::int64_t total = secs * 1'000'000 + micros;
    return SimTime{negative ? -total : total};
}

} // namespace gsched
