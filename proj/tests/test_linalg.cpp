#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "superjet/linalg.hpp"

using namespace superjet;

namespace {
PRat Q(long n, long d = 1) { return PRat(Rat(n) / d); }
}

TEST_CASE("solve square system") {
    PMatrix a = {{Q(2), Q(1)}, {Q(1), Q(3)}};
    std::vector<PRat> b = {Q(5), Q(10)};
    auto s = solve_linear(a, b);
    REQUIRE(s.consistent);
    CHECK(s.kernel.empty());
    CHECK(s.particular[0] == Q(1));
    CHECK(s.particular[1] == Q(3));
}

TEST_CASE("underdetermined system reports kernel") {
    PMatrix a = {{Q(1), Q(1), Q(0)}};
    std::vector<PRat> b = {Q(2)};
    auto s = solve_linear(a, b);
    REQUIRE(s.consistent);
    CHECK(s.kernel.size() == 2);
    // residual of particular is zero
    PRat r = a[0][0] * s.particular[0] + a[0][1] * s.particular[1] + a[0][2] * s.particular[2];
    CHECK(r == Q(2));
    for (const auto& v : s.kernel) {
        PRat kr = a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2];
        CHECK(kr.is_zero());
    }
}

TEST_CASE("inconsistent system") {
    PMatrix a = {{Q(1), Q(1)}, {Q(2), Q(2)}};
    std::vector<PRat> b = {Q(1), Q(3)};
    auto s = solve_linear(a, b);
    CHECK_FALSE(s.consistent);
}

TEST_CASE("parametric entries") {
    PRat c = PRat::variable(0);
    PMatrix a = {{c, Q(1)}, {Q(1), c}};
    std::vector<PRat> b = {Q(0), Q(0)};
    auto s = solve_linear(a, b);
    REQUIRE(s.consistent);
    CHECK(s.kernel.empty());  // det = c^2 - 1 not identically zero
    CHECK(determinant(a) == c * c - Q(1));
    auto inv = invert_matrix(a);
    REQUIRE(inv.has_value());
    // A * Ainv = I
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            PRat e = a[i][0] * (*inv)[0][j] + a[i][1] * (*inv)[1][j];
            CHECK(e == (i == j ? PRat::one() : PRat()));
        }
}

TEST_CASE("random solve round-trip") {
    std::mt19937 rng(99);
    for (int it = 0; it < 30; ++it) {
        size_t n = 2 + rng() % 3, m = 2 + rng() % 3;
        PMatrix a(n, std::vector<PRat>(m));
        std::vector<PRat> x(m);
        for (auto& row : a)
            for (auto& e : row) e = Q(long(rng() % 7) - 3);
        for (auto& e : x) e = Q(long(rng() % 7) - 3);
        std::vector<PRat> b(n, PRat());
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < m; ++j) b[i] += a[i][j] * x[j];
        auto s = solve_linear(a, b);
        REQUIRE(s.consistent);
        for (size_t i = 0; i < n; ++i) {
            PRat r;
            for (size_t j = 0; j < m; ++j) r += a[i][j] * s.particular[j];
            CHECK(r == b[i]);
        }
    }
}
