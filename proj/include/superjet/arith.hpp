#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace superjet {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

// Exponent vector over the declared parameter list; trailing zeros trimmed
// so that equal monomials compare equal regardless of construction path.
struct ParamMono {
    std::vector<uint32_t> exp;

    void trim();
    bool is_one() const { return exp.empty(); }
    uint32_t deg(size_t i) const { return i < exp.size() ? exp[i] : 0; }
    static ParamMono one() { return {}; }
    static ParamMono var(size_t i, uint32_t e = 1);

    friend ParamMono operator*(const ParamMono& a, const ParamMono& b);
    // Exact division; nullopt if any exponent would go negative.
    std::optional<ParamMono> divide(const ParamMono& b) const;
    auto operator<=>(const ParamMono&) const = default;
};

// Sparse polynomial in the parameters with rational coefficients.
// Invariant: no zero coefficients stored.
class ParamPoly {
  public:
    std::map<ParamMono, Rat> terms;

    ParamPoly() = default;
    explicit ParamPoly(const Rat& c);
    static ParamPoly variable(size_t i);

    bool is_zero() const { return terms.empty(); }
    bool is_constant() const;
    // Constant value; throws if not constant.
    Rat constant_value() const;

    ParamPoly& operator+=(const ParamPoly& o);
    ParamPoly& operator-=(const ParamPoly& o);
    friend ParamPoly operator+(ParamPoly a, const ParamPoly& b) { return a += b; }
    friend ParamPoly operator-(ParamPoly a, const ParamPoly& b) { return a -= b; }
    friend ParamPoly operator*(const ParamPoly& a, const ParamPoly& b);
    friend ParamPoly operator*(const ParamPoly& a, const Rat& c);
    friend ParamPoly operator-(const ParamPoly& a);
    bool operator==(const ParamPoly& o) const { return terms == o.terms; }

    // Leading term under the map order (last element: largest monomial).
    const std::pair<const ParamMono, Rat>& leading() const;
    size_t max_var_index_plus1() const;
    uint32_t degree_in(size_t var) const;

    // Exact division; nullopt if b does not divide a.
    std::optional<ParamPoly> divide_exact(const ParamPoly& b) const;

    // Weighted degree with one weight per parameter; nullopt if the polynomial
    // is not homogeneous under those weights (zero polynomial: degree 0).
    std::optional<int64_t> weighted_degree(const std::vector<int>& w) const;

    // Substitute parameter `var` by rational value `v`.
    ParamPoly eval_at(size_t var, const Rat& v) const;
};

// gcd up to a rational unit; result is primitive with positive leading coeff.
ParamPoly poly_gcd(const ParamPoly& a, const ParamPoly& b);

// Element of Q(params): num/den, gcd-reduced, den monic under the map order.
class PRat {
  public:
    ParamPoly num;
    ParamPoly den;  // never zero

    PRat() : num(), den(Rat(1)) {}
    explicit PRat(const Rat& c) : num(c), den(Rat(1)) {}
    PRat(ParamPoly n, ParamPoly d);
    static PRat variable(size_t i) { return PRat(ParamPoly::variable(i), ParamPoly(Rat(1))); }
    static PRat zero() { return PRat(); }
    static PRat one() { return PRat(Rat(1)); }

    bool is_zero() const { return num.is_zero(); }
    bool is_one() const;
    bool is_rational() const { return num.is_constant() && den.is_constant(); }
    Rat rational_value() const;

    PRat& operator+=(const PRat& o);
    PRat& operator-=(const PRat& o);
    PRat& operator*=(const PRat& o);
    friend PRat operator+(PRat a, const PRat& b) { return a += b; }
    friend PRat operator-(PRat a, const PRat& b) { return a -= b; }
    friend PRat operator*(PRat a, const PRat& b) { return a *= b; }
    friend PRat operator-(const PRat& a);
    PRat inverse() const;
    friend PRat operator/(const PRat& a, const PRat& b) { return a * b.inverse(); }
    bool operator==(const PRat& o) const { return num == o.num && den == o.den; }
    bool operator!=(const PRat& o) const { return !(*this == o); }

    // weighted degree num minus den; nullopt unless both parts homogeneous.
    std::optional<int64_t> weighted_degree(const std::vector<int>& w) const;
    PRat eval_at(size_t var, const Rat& v) const;

  private:
    void reduce();
    void normalize_monic();
};

std::string rat_to_string(const Rat& r);
Rat rat_from_string(const std::string& s);

}  // namespace superjet
