// Shifted dyadic intervals 2^j (k + (0,1) + (-1)^j a), a in {0, 1/3, 2/3}.
// Endpoints are exact rationals; the alternating shift makes every mesh
// nest across scales (the scale-(j+1) endpoint lattice is a subset of
// the scale-j one because 3a is an integer).
#pragma once

#include <cstdint>
#include <string>

#include "tfa/rational.hpp"

namespace tfa {

enum class Shift : int { none = 0, third = 1, two_thirds = 2 };

inline Rational shift_value(Shift s) { return Rational(static_cast<int>(s), 3); }

struct DyadicInterval {
    int j = 0;             // scale: length 2^j
    std::int64_t k = 0;    // offset
    Shift shift = Shift::none;

    Rational length() const { return Rational::pow2(j); }

    Rational left() const {
        Rational a = shift_value(shift);
        if (j % 2 != 0) a = -a;  // (-1)^j
        return Rational::pow2(j) * (Rational(k) + a);
    }
    Rational right() const { return left() + length(); }
    Rational center() const { return left() + length() / Rational(2); }

    RatInterval interval() const { return {left(), right()}; }

    bool contains(const Rational& x) const {  // half-open [left, right)
        return left() <= x && x < right();
    }

    /// Closure containment in another dyadic interval.
    bool subset_of(const DyadicInterval& o) const {
        return interval().subset_of(o.interval());
    }

    friend bool operator==(const DyadicInterval& a, const DyadicInterval& b) {
        return a.j == b.j && a.k == b.k && a.shift == b.shift;
    }
    friend bool operator!=(const DyadicInterval& a, const DyadicInterval& b) {
        return !(a == b);
    }

    /// Deterministic total order for sorted output: (j, shift, k).
    friend bool operator<(const DyadicInterval& a, const DyadicInterval& b) {
        if (a.j != b.j) return a.j < b.j;
        if (a.shift != b.shift) return static_cast<int>(a.shift) < static_cast<int>(b.shift);
        return a.k < b.k;
    }

    std::string str() const {
        return "[" + left().str() + "," + right().str() + ")@2^" + std::to_string(j);
    }
};

/// The unique interval of mesh (shift, scale j) containing x (half-open).
inline DyadicInterval dyadic_containing(const Rational& x, int j, Shift s) {
    Rational a = shift_value(s);
    if (j % 2 != 0) a = -a;
    Rational t = x / Rational::pow2(j) - a;  // want k <= t < k+1
    Rational fk = t.floor_int();
    return DyadicInterval{j, fk.num(), s};
}

}  // namespace tfa
