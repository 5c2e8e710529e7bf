#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "superjet/arith.hpp"
#include "superjet/errors.hpp"

namespace superjet {

// Generator kinds. EvenJet/OddJet span the differential-polynomial ring;
// TauF/TimeT/TauOdd are the formal tau-cover generators (f_{alpha,p},
// t^{alpha,p}, tau_p). TimeT and TauOdd are dx-constants; TauF has a
// declared dx-image installed by the cover context.
enum class GenKind : uint8_t { EvenJet = 0, OddJet = 1, TauF = 2, TimeT = 3, TauOdd = 4 };

struct Gen {
    // Member order matters: the defaulted comparison sorts odd jet factors by
    // (level, field, order) = (m, alpha, s) lexicographic, the canonical
    // factor order inside monomials.
    GenKind kind = GenKind::EvenJet;
    int32_t level = 0;   // OddJet: m >= 0; TauF/TimeT/TauOdd: p
    uint16_t field = 0;  // 0-based field index alpha
    int32_t order = 0;   // jet order s (EvenJet/OddJet only)

    static Gen even(uint16_t field, int32_t order) { return {GenKind::EvenJet, 0, field, order}; }
    static Gen odd(uint16_t field, int32_t level, int32_t order) {
        return {GenKind::OddJet, level, field, order};
    }
    static Gen tau_f(uint16_t field, int32_t p) { return {GenKind::TauF, p, field, 0}; }
    static Gen time_t_(uint16_t field, int32_t p) { return {GenKind::TimeT, p, field, 0}; }
    static Gen tau_odd(int32_t p) { return {GenKind::TauOdd, p, 0, 0}; }

    bool is_odd() const { return kind == GenKind::OddJet || kind == GenKind::TauOdd; }
    bool is_jet() const { return kind == GenKind::EvenJet || kind == GenKind::OddJet; }

    auto operator<=>(const Gen&) const = default;
};

struct ParamDecl {
    std::string name;
    int eps_weight = 0;  // contribution to the differential degree per power
    bool operator==(const ParamDecl&) const = default;
};

class JetContext {
  public:
    std::vector<std::string> field_names;
    std::vector<ParamDecl> params;
    int max_odd_level = 0;  // hard bound: OddJet levels in 0..max_odd_level

    JetContext() = default;
    JetContext(std::vector<std::string> fields, std::vector<ParamDecl> ps, int max_level);

    size_t n_fields() const { return field_names.size(); }
    std::optional<size_t> param_index(const std::string& name) const;
    std::vector<int> eps_weights() const;

    bool operator==(const JetContext&) const = default;
};

using CtxPtr = std::shared_ptr<const JetContext>;

CtxPtr make_context(std::vector<std::string> fields, std::vector<ParamDecl> params,
                    int max_odd_level);

// Commutative-factor part and odd-factor part of a monomial.
// evens: sorted by Gen, exponents >= 1. odds: strictly increasing.
struct MonoKey {
    std::vector<std::pair<Gen, int>> evens;
    std::vector<Gen> odds;
    auto operator<=>(const MonoKey&) const = default;
};

class DiffPoly {
  public:
    using Terms = std::map<MonoKey, PRat>;

    DiffPoly() = default;
    explicit DiffPoly(CtxPtr ctx) : ctx_(std::move(ctx)) {}

    static DiffPoly constant(CtxPtr ctx, const PRat& c);
    static DiffPoly constant(CtxPtr ctx, const Rat& c) { return constant(ctx, PRat(c)); }
    static DiffPoly generator(CtxPtr ctx, Gen g);
    static DiffPoly parameter(CtxPtr ctx, const std::string& name);

    const CtxPtr& context() const { return ctx_; }
    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    size_t n_terms() const { return terms_.size(); }

    // Term insertion; drops zero coefficients and repeated odd factors.
    void add_term(const MonoKey& key, const PRat& coeff);

    DiffPoly& operator+=(const DiffPoly& o);
    DiffPoly& operator-=(const DiffPoly& o);
    friend DiffPoly operator+(DiffPoly a, const DiffPoly& b) { return a += b; }
    friend DiffPoly operator-(DiffPoly a, const DiffPoly& b) { return a -= b; }
    friend DiffPoly operator*(const DiffPoly& a, const DiffPoly& b);
    friend DiffPoly operator-(const DiffPoly& a);
    DiffPoly& operator*=(const DiffPoly& o) { *this = *this * o; return *this; }
    DiffPoly scaled(const PRat& c) const;
    DiffPoly pow(int e) const;
    bool operator==(const DiffPoly& o) const;
    bool operator!=(const DiffPoly& o) const { return !(*this == o); }

    // Graded left partial derivative with respect to a generator.
    DiffPoly partial(Gen g) const;

    // Total x-derivative. Jets raise their order; TimeT/TauOdd are constants;
    // TauF images must come from the table (error if absent but needed).
    // A table entry overrides the default rule for any generator, which lets
    // quotient rings redirect constrained generators to their images.
    DiffPoly dx() const;
    using DxTable = std::map<Gen, DiffPoly>;
    DiffPoly dx_with(const DxTable& table) const;

    // Number of odd factors; NotHomogeneous unless all monomials agree.
    int super_degree() const;
    // eps-weighted differential degree; NotHomogeneous unless every
    // coefficient is eps-homogeneous and all monomials agree.
    int64_t diff_degree() const;
    bool is_homogeneous_super() const;
    bool is_homogeneous_diff() const;

    // Ring homomorphism determined by generator images (graded: odd images
    // must be odd, multiplied in canonical factor order).
    DiffPoly substitute(const CtxPtr& target,
                        const std::function<DiffPoly(Gen)>& image) const;

    // Derivation determined by generator images: D(f) = sum_g image(g) * df/dg.
    DiffPoly apply_derivation(const std::function<const DiffPoly*(Gen)>& image) const;

    // Substitute a parameter by a rational value.
    DiffPoly eval_param(const std::string& name, const Rat& value) const;

    // All distinct generators appearing.
    std::vector<Gen> generators() const;
    PRat coefficient(const MonoKey& key) const;

    std::string to_string() const;

  private:
    CtxPtr ctx_;
    Terms terms_;
    void check_ctx(const DiffPoly& o) const;
};

// Unweighted jet degree (sum of s over jet factors) of one monomial.
int64_t mono_jet_degree(const MonoKey& k);
// Per-monomial eps-weighted differential degree (coefficient must be
// eps-homogeneous).
int64_t mono_diff_degree(const MonoKey& k, const PRat& coeff, const JetContext& ctx);

std::string gen_to_string(const Gen& g);
std::string prat_to_string(const PRat& c, const JetContext& ctx);

}  // namespace superjet
