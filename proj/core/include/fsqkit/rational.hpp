#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace fsqkit {

// Exact non-negative-denominator rational, always kept in lowest terms.
// Frame rates such as 12.5 Hz are carried as 25/2 so bitrates stay exact.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1);

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }
    double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

    // Accepts "25", "12.5", "25/2".
    static Rational parse(std::string_view text);

    // Decimal when the value terminates in base 10, "num/den" otherwise.
    std::string to_string() const;

    friend Rational operator+(const Rational &a, const Rational &b);
    friend Rational operator*(const Rational &a, const Rational &b);
    friend bool operator==(const Rational &a, const Rational &b) = default;
    friend std::strong_ordering operator<=>(const Rational &a, const Rational &b);

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

}  // namespace fsqkit
