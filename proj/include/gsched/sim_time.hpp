#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace gsched {

// Virtual time in whole microseconds. Durations are rounded once, when they
// enter the simulator, so accumulation is exact integer arithmetic and the
// 6-digit trace format round-trips without loss.
class SimTime {
public:
    constexpr SimTime() = default;

    static constexpr SimTime from_micros(std::int64_t us) { return SimTime{us}; }
    static SimTime from_seconds(double seconds);

    constexpr std::int64_t micros() const { return us_; }
    constexpr double seconds() const { return static_cast<double>(us_) * 1e-6; }

    constexpr SimTime& operator+=(SimTime other) {
        us_ += other.us_;
        return *this;
    }
    friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime{a.us_ + b.us_}; }
    friend constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime{a.us_ - b.us_}; }
    friend constexpr auto operator<=>(SimTime, SimTime) = default;

    // "12.500000"
    std::string to_string() const;
    // Inverse of to_string; accepts up to 6 fractional digits. Throws
    // std::invalid_argument on anything else.
    static SimTime parse(std::string_view text);

private:
    constexpr explicit SimTime(std::int64_t us) : us_(us) {}
    std::int64_t us_ = 0;
};

} // namespace gsched
