// Exact rational arithmetic and shifted dyadic interval predicates.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "tfa/common.hpp"
#include "tfa/dyadic.hpp"
#include "tfa/rational.hpp"

using namespace tfa;

TEST_CASE("rational arithmetic is exact and normalized") {
    Rational a(1, 3), b(1, 6);
    CHECK(a + b == Rational(1, 2));
    CHECK(a - b == Rational(1, 6));
    CHECK(a * b == Rational(1, 18));
    CHECK(a / b == Rational(2));
    CHECK(Rational(-2, -4) == Rational(1, 2));
    CHECK(Rational(2, -4) == Rational(-1, 2));
    CHECK(Rational(0, 7) == Rational(0));
    CHECK(Rational(7, 1).str() == "7");
    CHECK(Rational(-1, 3).str() == "-1/3");
}

TEST_CASE("comparisons cross-multiply without overflow") {
    // Values near the top of the int64 range still compare correctly.
    Rational big(INT64_MAX / 4, 3);
    Rational big2(INT64_MAX / 4 - 1, 3);
    CHECK(big2 < big);
    CHECK(big <= big);
    CHECK(!(big < big2));
    CHECK(Rational(1, 3000000000LL) < Rational(1, 2999999999LL));
}

TEST_CASE("overflow throws instead of wrapping") {
    Rational huge(INT64_MAX / 2, 1);
    CHECK_THROWS_AS(huge * Rational(4), rational_overflow);
    CHECK_THROWS_AS(Rational(1, 0), std::domain_error);
}

TEST_CASE("floor and pow2") {
    CHECK(Rational(7, 2).floor_int() == Rational(3));
    CHECK(Rational(-7, 2).floor_int() == Rational(-4));
    CHECK(Rational(6, 2).floor_int() == Rational(3));
    CHECK(Rational::pow2(3) == Rational(8));
    CHECK(Rational::pow2(-2) == Rational(1, 4));
}

TEST_CASE("from_double snaps dyadics exactly") {
    CHECK(Rational::from_double(0.375) == Rational(3, 8));
    CHECK(Rational::from_double(-2.0) == Rational(-2));
    CHECK(Rational::from_double(32.0, 24) == Rational(32));
}

TEST_CASE("random field identities") {
    std::mt19937_64 rng(42);
    for (int t = 0; t < 2000; ++t) {
        auto draw = [&] {
            std::int64_t num = static_cast<std::int64_t>(rng() % 2001) - 1000;
            std::int64_t den = 1 + static_cast<std::int64_t>(rng() % 999);
            return Rational(num, den);
        };
        Rational a = draw(), b = draw(), c = draw();
        CHECK(a + b == b + a);
        CHECK((a + b) + c == a + (b + c));
        CHECK(a * (b + c) == a * b + a * c);
        if (c != Rational(0)) CHECK((a / c) * c == a);
        CHECK((a - b).sign() == (b < a ? 1 : (a < b ? -1 : 0)));
    }
}

TEST_CASE("dyadic interval endpoints follow the alternating shift") {
    // 2^j (k + (0,1) + (-1)^j a)
    DyadicInterval plain{0, 3, Shift::none};
    CHECK(plain.left() == Rational(3));
    CHECK(plain.right() == Rational(4));

    DyadicInterval shifted{0, 0, Shift::third};
    CHECK(shifted.left() == Rational(1, 3));

    DyadicInterval odd{1, 0, Shift::third};  // (-1)^1 = -1
    CHECK(odd.left() == Rational(-2, 3));
    CHECK(odd.right() == Rational(2, 3) + Rational(2, 3));

    DyadicInterval neg{-2, 5, Shift::two_thirds};
    CHECK(neg.left() == Rational(5, 4) + Rational(2, 12));
    CHECK(neg.length() == Rational(1, 4));
}

TEST_CASE("each shifted mesh nests across scales") {
    // The scale-(j+1) endpoint lattice is a sublattice of scale j, so any
    // interval is contained in exactly one parent.
    std::mt19937_64 rng(7);
    for (int t = 0; t < 2000; ++t) {
        int j = static_cast<int>(rng() % 7) - 3;
        std::int64_t k = static_cast<std::int64_t>(rng() % 41) - 20;
        auto s = static_cast<Shift>(rng() % 3);
        DyadicInterval child{j, k, s};
        DyadicInterval parent = dyadic_containing(child.center(), j + 1, s);
        CHECK(child.subset_of(parent));
    }
}

TEST_CASE("dyadic_containing brackets its input") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 2000; ++t) {
        Rational x(static_cast<std::int64_t>(rng() % 4001) - 2000, 1 + static_cast<std::int64_t>(rng() % 64));
        int j = static_cast<int>(rng() % 9) - 4;
        auto s = static_cast<Shift>(rng() % 3);
        DyadicInterval iv = dyadic_containing(x, j, s);
        CHECK(iv.contains(x));
        CHECK(iv.length() == Rational::pow2(j));
    }
}

TEST_CASE("interval dilation keeps the center") {
    RatInterval iv{Rational(1, 3), Rational(2, 3)};
    RatInterval d = iv.dilate(Rational(3));
    CHECK(d.center() == iv.center());
    CHECK(d.length() == Rational(1));
    CHECK(iv.subset_of(d));
}
