// Exact rational arithmetic on int64 with __int128 intermediates.
// All interval/tile ordering predicates in this project go through this
// type; a silent overflow would make tree selection nondeterministic,
// so narrowing is checked and throws.
#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tfa {

struct rational_overflow : std::overflow_error {
    rational_overflow() : std::overflow_error("rational: value exceeds 64-bit range") {}
};

class Rational {
public:
    constexpr Rational() : num_(0), den_(1) {}
    Rational(std::int64_t n) : num_(n), den_(1) {}
    Rational(std::int64_t n, std::int64_t d) {
        if (d == 0) throw std::domain_error("rational: zero denominator");
        __int128 nn = n, dd = d;
        if (dd < 0) { nn = -nn; dd = -dd; }
        assign(nn, dd);
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    /// 2^j as an exact rational; j may be negative.
    static Rational pow2(int j) {
        if (j >= 0) {
            if (j > 62) throw rational_overflow();
            return Rational(std::int64_t(1) << j);
        }
        if (j < -62) throw rational_overflow();
        return Rational(1, std::int64_t(1) << (-j));
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ + i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ - i128(b.num_) * a.den_, i128(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::domain_error("rational: division by zero");
        i128 n = i128(a.num_) * b.den_;
        i128 d = i128(a.den_) * b.num_;
        if (d < 0) { n = -n; d = -d; }
        return make(n, d);
    }
    Rational operator-() const {
        Rational r;
        r.num_ = -num_;
        r.den_ = den_;
        return r;
    }
    Rational& operator+=(const Rational& b) { return *this = *this + b; }
    Rational& operator-=(const Rational& b) { return *this = *this - b; }
    Rational& operator*=(const Rational& b) { return *this = *this * b; }
    Rational& operator/=(const Rational& b) { return *this = *this / b; }

    // Comparisons cross-multiply in 128 bits; denominators are positive.
    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    int sign() const { return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0); }
    Rational abs() const { return num_ < 0 ? -*this : *this; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    /// Nearest rational with denominator 2^bits. Exact for dyadics that
    /// already fit; used to snap double inputs onto the exact lattice.
    static Rational from_double(double x, int bits = 24) {
        double scaled = x * static_cast<double>(std::int64_t(1) << bits);
        if (!(scaled > -9.0e18 && scaled < 9.0e18)) throw rational_overflow();
        return Rational(static_cast<std::int64_t>(std::llround(scaled)), std::int64_t(1) << bits);
    }

    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

    Rational floor_int() const {  // largest integer <= value
        std::int64_t q = num_ / den_;
        if (num_ % den_ != 0 && num_ < 0) --q;
        return Rational(q);
    }

private:
    using i128 = __int128;

    static Rational make(i128 n, i128 d) {
        Rational r;
        r.assign(n, d);
        return r;
    }

    void assign(i128 n, i128 d) {
        i128 g = gcd128(n < 0 ? -n : n, d);
        if (g > 1) { n /= g; d /= g; }
        if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX) throw rational_overflow();
        num_ = static_cast<std::int64_t>(n);
        den_ = static_cast<std::int64_t>(d);
    }

    static i128 gcd128(i128 a, i128 b) {
        while (b != 0) {
            i128 t = a % b;
            a = b;
            b = t;
        }
        return a == 0 ? 1 : a;
    }

    std::int64_t num_;
    std::int64_t den_;  // > 0, gcd(num,den) = 1
};

/// Closed rational interval [lo, hi].
struct RatInterval {
    Rational lo, hi;

    Rational length() const { return hi - lo; }
    Rational center() const { return (lo + hi) / Rational(2); }

    bool contains(const Rational& x) const { return lo <= x && x <= hi; }
    bool contains_half_open(const Rational& x) const { return lo <= x && x < hi; }

    /// Closure containment: [lo,hi] subset of [o.lo, o.hi].
    bool subset_of(const RatInterval& o) const { return o.lo <= lo && hi <= o.hi; }

    bool intersects_open(const RatInterval& o) const {
        Rational l = lo < o.lo ? o.lo : lo;
        Rational h = hi < o.hi ? hi : o.hi;
        return l < h;
    }

    /// Same center, length scaled by `factor`.
    RatInterval dilate(const Rational& factor) const {
        Rational c = center();
        Rational half = length() * factor / Rational(2);
        return {c - half, c + half};
    }

    friend bool operator==(const RatInterval& a, const RatInterval& b) {
        return a.lo == b.lo && a.hi == b.hi;
    }
};

}  // namespace tfa
