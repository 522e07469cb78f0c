#pragma once

#include <gmpxx.h>

#include <cmath>
#include <compare>
#include <concepts>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace amerdual {

/// Arbitrary-precision fraction, always kept in lowest terms with a positive
/// denominator. Thin value wrapper over GMP's mpq so that generic code never
/// sees gmpxx expression templates.
class Rational {
public:
    Rational() = default;
    Rational(long n) : v_(n) {}  // NOLINT(google-explicit-constructor)
    Rational(int n) : v_(static_cast<long>(n)) {}  // NOLINT(google-explicit-constructor)
    Rational(long n, long d) {
        if (d == 0) throw std::domain_error("Rational: zero denominator");
        v_ = mpq_class(n, d);
        v_.canonicalize();
    }
    explicit Rational(mpq_class v) : v_(std::move(v)) { v_.canonicalize(); }

    /// Parses "p", "p/q", "-p/q" or a finite decimal such as "0.25" / "-1.5e-3".
    static Rational parse(std::string_view text) {
        std::string s(text);
        auto trim = [](std::string& t) {
            auto b = t.find_first_not_of(" \t");
            auto e = t.find_last_not_of(" \t");
            t = (b == std::string::npos) ? std::string{} : t.substr(b, e - b + 1);
        };
        trim(s);
        if (s.empty()) throw std::invalid_argument("empty rational literal");
        if (s.find_first_of(".eE") != std::string::npos && s.find('/') == std::string::npos) {
            return parse_decimal(s);
        }
        mpq_class q;
        if (q.set_str(s, 10) != 0) throw std::invalid_argument("bad rational literal '" + s + "'");
        if (q.get_den() == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
        q.canonicalize();
        return Rational(std::move(q));
    }

    /// Exact value of a binary double.
    static Rational from_double(double x) {
        if (!std::isfinite(x)) throw std::domain_error("Rational::from_double: non-finite");
        return Rational(mpq_class(x));
    }

    [[nodiscard]] const mpq_class& raw() const noexcept { return v_; }
    [[nodiscard]] int sign() const noexcept { return sgn(v_); }
    [[nodiscard]] bool is_zero() const noexcept { return sgn(v_) == 0; }
    [[nodiscard]] bool is_integer() const { return v_.get_den() == 1; }
    [[nodiscard]] double to_double() const { return v_.get_d(); }

    [[nodiscard]] std::string to_string() const {
        if (v_.get_den() == 1) return v_.get_num().get_str();
        return v_.get_num().get_str() + "/" + v_.get_den().get_str();
    }

    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }
    Rational& operator/=(const Rational& o) {
        if (o.is_zero()) throw std::domain_error("Rational: division by zero");
        v_ /= o.v_;
        return *this;
    }

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
    friend Rational operator-(const Rational& a) { return Rational(mpq_class(-a.v_)); }

    friend bool operator==(const Rational& a, const Rational& b) { return cmp(a.v_, b.v_) == 0; }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        int c = cmp(a.v_, b.v_);
        return c < 0 ? std::strong_ordering::less
                     : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
    }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.to_string(); }

private:
    static Rational parse_decimal(const std::string& s) {
        std::string mant = s;
        long exp10 = 0;
        if (auto e = s.find_first_of("eE"); e != std::string::npos) {
            mant = s.substr(0, e);
            exp10 = std::stol(s.substr(e + 1));
        }
        bool neg = !mant.empty() && (mant[0] == '-' || mant[0] == '+');
        bool minus = !mant.empty() && mant[0] == '-';
        if (neg) mant.erase(0, 1);
        std::string digits;
        long frac = 0;
        bool seen_dot = false;
        for (char c : mant) {
            if (c == '.') {
                if (seen_dot) throw std::invalid_argument("bad decimal literal '" + s + "'");
                seen_dot = true;
            } else if (c >= '0' && c <= '9') {
                digits.push_back(c);
                if (seen_dot) ++frac;
            } else {
                throw std::invalid_argument("bad decimal literal '" + s + "'");
            }
        }
        if (digits.empty()) throw std::invalid_argument("bad decimal literal '" + s + "'");
        mpz_class num(digits, 10);
        long shift = exp10 - frac;
        mpz_class ten_pow;
        mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
        mpq_class q = shift >= 0 ? mpq_class(num * ten_pow) : mpq_class(num, ten_pow);
        q.canonicalize();
        if (minus) q = -q;
        return Rational(std::move(q));
    }

    mpq_class v_{0};
};

/// Arithmetic policy for the two supported scalar fields.
template <class F>
struct field_traits;

template <>
struct field_traits<Rational> {
    static constexpr bool exact = true;
    static constexpr const char* name = "rational";
    static bool is_zero(const Rational& x) { return x.is_zero(); }
    static bool positive(const Rational& x) { return x.sign() > 0; }
    static bool negative(const Rational& x) { return x.sign() < 0; }
    static bool eq(const Rational& a, const Rational& b) { return a == b; }
    static bool less(const Rational& a, const Rational& b) { return a < b; }
    static Rational from_rational(const Rational& r) { return r; }
    static Rational to_rational(const Rational& r) { return r; }
    static double to_double(const Rational& r) { return r.to_double(); }
    static void clean(Rational&) {}
    static std::string render(const Rational& r) { return r.to_string(); }
};

template <>
struct field_traits<double> {
    static constexpr bool exact = false;
    static constexpr const char* name = "float";
    static constexpr double eps = 1e-9;
    static bool is_zero(double x) { return std::fabs(x) < eps; }
    static bool positive(double x) { return x >= eps; }
    static bool negative(double x) { return x <= -eps; }
    static bool eq(double a, double b) { return std::fabs(a - b) < eps; }
    static bool less(double a, double b) { return a < b - eps; }
    static double from_rational(const Rational& r) { return r.to_double(); }
    static Rational to_rational(double x) { return Rational::from_double(x); }
    static double to_double(double x) { return x; }
    static void clean(double& x) {
        if (std::fabs(x) < eps) x = 0.0;
    }
    static std::string render(double x) {
        std::ostringstream os;
        os.precision(17);
        os << x;
        return os.str();
    }
};

template <class F>
concept Field = requires(const F& a, const F& b, const Rational& r) {
    { field_traits<F>::is_zero(a) } -> std::convertible_to<bool>;
    { field_traits<F>::eq(a, b) } -> std::convertible_to<bool>;
    { field_traits<F>::less(a, b) } -> std::convertible_to<bool>;
    { field_traits<F>::from_rational(r) } -> std::convertible_to<F>;
    { a + b } -> std::convertible_to<F>;
    { a * b } -> std::convertible_to<F>;
    { a / b } -> std::convertible_to<F>;
};

/// A value in R ∪ {-inf}; std::nullopt encodes -inf.
template <Field F>
using ExtReal = std::optional<F>;

template <Field F>
inline F lit(long n, long d = 1) {
    return field_traits<F>::from_rational(Rational(n, d));
}

template <Field F>
inline bool ext_eq(const ExtReal<F>& a, const ExtReal<F>& b) {
    if (!a || !b) return !a && !b;
    return field_traits<F>::eq(*a, *b);
}

/// a < b with -inf below every real.
template <Field F>
inline bool ext_less(const ExtReal<F>& a, const ExtReal<F>& b) {
    if (!b) return false;
    if (!a) return true;
    return field_traits<F>::less(*a, *b);
}

template <Field F>
inline ExtReal<F> ext_max(const ExtReal<F>& a, const ExtReal<F>& b) {
    return ext_less<F>(a, b) ? b : a;
}

template <Field F>
inline std::string render_ext(const ExtReal<F>& v) {
    return v ? field_traits<F>::render(*v) : std::string("-inf");
}

}  // namespace amerdual
