#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace askbench {

// Exact base-10 number: mantissa * 10^-scale with the fractional part
// normalized (no trailing zeros), so "1,250", "1250.0" and "1250" all
// compare and serialize identically. Grading must be bit-stable, which
// rules out binary floats.
class Decimal {
public:
    using Int = boost::multiprecision::cpp_int;

    Decimal() = default;

    static Decimal from_int(long long value);

    // Strict grammar: [+-]? ( digits ("." digits*)? | "." digits+ ).
    // No exponents, no grouping characters.
    static std::optional<Decimal> parse(std::string_view text);

    // Lenient form for model-produced answers: trims whitespace, strips
    // '$'/'€'/'£' and ',' anywhere, one trailing '%', and optionally takes
    // the right-hand side of an "x = N" equation before strict parsing.
    static std::optional<Decimal> parse_loose(std::string_view text,
                                              bool take_rhs_of_equals = false);

    // Canonical form: minimal digits, '-' sign, '.' only when fractional.
    std::string to_string() const;

    bool is_zero() const { return mantissa_ == 0; }
    bool is_negative() const { return mantissa_ < 0; }
    Decimal abs() const;
    Decimal operator-(const Decimal& rhs) const;

    bool operator==(const Decimal& rhs) const;
    std::strong_ordering operator<=>(const Decimal& rhs) const;

    // |extracted - gold| <= 1e-4 * max(1, |gold|), evaluated exactly in
    // decimal arithmetic. Integers therefore require an exact match.
    static bool within_grading_tolerance(const Decimal& extracted, const Decimal& gold);

    const Int& mantissa() const { return mantissa_; }
    int scale() const { return scale_; }

private:
    Int mantissa_{0};
    int scale_{0};

    void normalize();
    static Int pow10(int n);
};

}  // namespace askbench
