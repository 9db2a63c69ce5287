#include "fsqkit/error.hpp"
#include "fsqkit/rational.hpp"

#include <charconv>
#include <limits>
#include <numeric>

namespace fsqkit {

__extension__ typedef __int128 wide_int;

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_level_count: return "invalid-level-count";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::invalid_noise: return "invalid-noise";
    case ErrorKind::invalid_config: return "invalid-config";
    case ErrorKind::shape_error: return "shape-error";
    case ErrorKind::off_lattice: return "off-lattice-error";
    case ErrorKind::out_of_range: return "out-of-range";
    case ErrorKind::residual_unsupported: return "residual-unsupported";
    case ErrorKind::decode_error: return "decode-error";
    case ErrorKind::capacity_error: return "capacity-error";
    case ErrorKind::invalid_codebook: return "invalid-codebook";
    case ErrorKind::no_data: return "no-data";
    case ErrorKind::coverage_error: return "coverage-error";
    case ErrorKind::parse_error: return "parse-error";
    case ErrorKind::non_invertible_config: return "non-invertible-config";
    case ErrorKind::undefined_reference: return "undefined-reference";
    case ErrorKind::saturated_measurement: return "saturated-measurement";
    case ErrorKind::unsupported_format: return "unsupported-format";
    case ErrorKind::resample_required: return "resample-required";
    case ErrorKind::io_error: return "io-error";
    }
    return "unknown";
}

namespace {

std::string compose(ErrorKind kind, const std::string &message, std::optional<std::size_t> offset) {
    std::string out(to_string(kind));
    out += ": ";
    out += message;
    if (offset) {
        out += " (at byte offset " + std::to_string(*offset) + ")";
    }
    return out;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) {
        throw Error(ErrorKind::capacity_error, "rational arithmetic overflow");
    }
    return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) {
        throw Error(ErrorKind::capacity_error, "rational arithmetic overflow");
    }
    return r;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string &message, std::optional<std::size_t> offset)
    : std::runtime_error(compose(kind, message, offset)), kind_(kind), offset_(offset) {}

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) {
        throw Error(ErrorKind::invalid_input, "rational with zero denominator");
    }
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num, den);
    num_ = num / g;
    den_ = den / g;
}

Rational Rational::parse(std::string_view text) {
    auto parse_int = [&](std::string_view s) {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
            throw Error(ErrorKind::invalid_input, "not a rational number: '" + std::string(text) + "'");
        }
        return v;
    };

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
    }
    if (auto dot = text.find('.'); dot != std::string_view::npos) {
        std::string_view whole = text.substr(0, dot);
        std::string_view frac = text.substr(dot + 1);
        if (frac.size() > 15) {
            throw Error(ErrorKind::invalid_input, "too many decimals: '" + std::string(text) + "'");
        }
        std::int64_t den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
        const bool negative = !whole.empty() && whole.front() == '-';
        const std::int64_t w = (whole.empty() || whole == "-") ? 0 : parse_int(whole);
        const std::int64_t f = frac.empty() ? 0 : parse_int(frac);
        const std::int64_t mag = checked_add(checked_mul(w < 0 ? -w : w, den), f);
        return Rational(negative ? -mag : mag, den);
    }
    return Rational(parse_int(text), 1);
}

std::string Rational::to_string() const {
    std::int64_t d = den_;
    int twos = 0;
    int fives = 0;
    while (d % 2 == 0) { d /= 2; ++twos; }
    while (d % 5 == 0) { d /= 5; ++fives; }
    if (d != 1) {
        return std::to_string(num_) + "/" + std::to_string(den_);
    }
    const int digits = std::max(twos, fives);
    if (digits == 0) {
        return std::to_string(num_);
    }
    // Scale to a power-of-ten denominator.
    std::int64_t scale = 1;
    for (int i = 0; i < digits; ++i) scale *= 10;
    const std::int64_t scaled = checked_mul(num_, scale / den_);
    const bool negative = scaled < 0;
    const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-scaled) : static_cast<std::uint64_t>(scaled);
    std::string whole = std::to_string(mag / static_cast<std::uint64_t>(scale));
    std::string frac = std::to_string(mag % static_cast<std::uint64_t>(scale));
    frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
    while (!frac.empty() && frac.back() == '0') frac.pop_back();
    return (negative ? "-" : "") + whole + (frac.empty() ? "" : "." + frac);
}

Rational operator+(const Rational &a, const Rational &b) {
    const std::int64_t g = std::gcd(a.den_, b.den_);
    const std::int64_t den = checked_mul(a.den_ / g, b.den_);
    return Rational(checked_add(checked_mul(a.num_, b.den_ / g), checked_mul(b.num_, a.den_ / g)), den);
}

Rational operator*(const Rational &a, const Rational &b) {
    const std::int64_t g1 = std::gcd(a.num_, b.den_);
    const std::int64_t g2 = std::gcd(b.num_, a.den_);
    const std::int64_t n1 = g1 ? a.num_ / g1 : 0;
    const std::int64_t d2 = g1 ? b.den_ / g1 : b.den_;
    const std::int64_t n2 = g2 ? b.num_ / g2 : 0;
    const std::int64_t d1 = g2 ? a.den_ / g2 : a.den_;
    return Rational(checked_mul(n1, n2), checked_mul(d1, d2));
}

std::strong_ordering operator<=>(const Rational &a, const Rational &b) {
    const wide_int lhs = static_cast<wide_int>(a.num_) * b.den_;
    const wide_int rhs = static_cast<wide_int>(b.num_) * a.den_;
    return lhs <=> rhs;
}

}  // namespace fsqkit
