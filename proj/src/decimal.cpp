#include "askbench/decimal.hpp"

#include <algorithm>
#include <cctype>

namespace askbench {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

Decimal Decimal::from_int(long long value) {
    Decimal d;
    d.mantissa_ = value;
    d.scale_ = 0;
    return d;
}

Decimal::Int Decimal::pow10(int n) {
    Int p = 1;
    for (int i = 0; i < n; ++i) p *= 10;
    return p;
}

void Decimal::normalize() {
    while (scale_ > 0 && mantissa_ % 10 == 0) {
        mantissa_ /= 10;
        --scale_;
    }
    if (mantissa_ == 0) scale_ = 0;
}

std::optional<Decimal> Decimal::parse(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;

    size_t i = 0;
    bool negative = false;
    if (text[i] == '+' || text[i] == '-') {
        negative = text[i] == '-';
        ++i;
    }

    std::string digits;
    size_t int_digits = 0;
    while (i < text.size() && is_digit(text[i])) {
        digits.push_back(text[i]);
        ++i;
        ++int_digits;
    }

    int scale = 0;
    if (i < text.size() && text[i] == '.') {
        ++i;
        while (i < text.size() && is_digit(text[i])) {
            digits.push_back(text[i]);
            ++i;
            ++scale;
        }
        if (int_digits == 0 && scale == 0) return std::nullopt;  // lone "."
    }
    if (i != text.size() || digits.empty()) return std::nullopt;

    // cpp_int's string constructor reads a leading '0' as an octal prefix
    size_t first_nonzero = digits.find_first_not_of('0');
    digits = first_nonzero == std::string::npos ? "0" : digits.substr(first_nonzero);

    Decimal d;
    d.mantissa_ = Int(digits);
    if (negative) d.mantissa_ = -d.mantissa_;
    d.scale_ = scale;
    d.normalize();
    return d;
}

std::optional<Decimal> Decimal::parse_loose(std::string_view text, bool take_rhs_of_equals) {
    std::string s(trim(text));
    if (take_rhs_of_equals) {
        if (auto pos = s.rfind('='); pos != std::string::npos) s = s.substr(pos + 1);
    }

    std::string cleaned;
    cleaned.reserve(s.size());
    for (size_t i = 0; i < s.size();) {
        if (s[i] == ',' || s[i] == '$') {
            ++i;
        } else if (s.compare(i, 3, "\xe2\x82\xac") == 0 || s.compare(i, 2, "\xc2\xa3") == 0) {
            i += s[i] == '\xc2' ? 2 : 3;  // euro / pound signs
        } else {
            cleaned.push_back(s[i]);
            ++i;
        }
    }

    std::string_view v = trim(cleaned);
    if (!v.empty() && v.back() == '%') v = trim(v.substr(0, v.size() - 1));
    return parse(v);
}

std::string Decimal::to_string() const {
    Int m = mantissa_ < 0 ? Int(-mantissa_) : mantissa_;
    std::string digits = m.str();
    std::string out;
    if (mantissa_ < 0) out.push_back('-');

    if (scale_ == 0) {
        out += digits;
        return out;
    }
    if (digits.size() <= static_cast<size_t>(scale_)) {
        out += "0.";
        out.append(static_cast<size_t>(scale_) - digits.size(), '0');
        out += digits;
    } else {
        size_t split = digits.size() - static_cast<size_t>(scale_);
        out += digits.substr(0, split);
        out.push_back('.');
        out += digits.substr(split);
    }
    return out;
}

Decimal Decimal::abs() const {
    Decimal d = *this;
    if (d.mantissa_ < 0) d.mantissa_ = -d.mantissa_;
    return d;
}

Decimal Decimal::operator-(const Decimal& rhs) const {
    Decimal d;
    int s = std::max(scale_, rhs.scale_);
    d.mantissa_ = mantissa_ * pow10(s - scale_) - rhs.mantissa_ * pow10(s - rhs.scale_);
    d.scale_ = s;
    d.normalize();
    return d;
}

bool Decimal::operator==(const Decimal& rhs) const {
    return (*this <=> rhs) == std::strong_ordering::equal;
}

std::strong_ordering Decimal::operator<=>(const Decimal& rhs) const {
    int s = std::max(scale_, rhs.scale_);
    Int a = mantissa_ * pow10(s - scale_);
    Int b = rhs.mantissa_ * pow10(s - rhs.scale_);
    if (a < b) return std::strong_ordering::less;
    if (a > b) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

bool Decimal::within_grading_tolerance(const Decimal& extracted, const Decimal& gold) {
    Decimal diff = (extracted - gold).abs();
    Decimal gold_abs = gold.abs();

    // floor = max(1, |gold|); threshold = floor / 10^4
    Decimal threshold;
    if (gold_abs.mantissa_ >= pow10(gold_abs.scale_)) {
        threshold.mantissa_ = gold_abs.mantissa_;
        threshold.scale_ = gold_abs.scale_ + 4;
    } else {
        threshold.mantissa_ = 1;
        threshold.scale_ = 4;
    }
    threshold.normalize();
    return diff <=> threshold != std::strong_ordering::greater;
}

}  // namespace askbench
