#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "superjet/diffpoly.hpp"
#include "superjet/linalg.hpp"

namespace superjet {

// Canonical representative of f modulo the image of dx (integration by parts).
// Monomials are grouped into finite slices that dx preserves (generator
// content, unweighted jet degree) and each group is reduced against an
// echelon basis of the dx-image of the previous slice.
DiffPoly ibp_canonical(const DiffPoly& f);

// Antiderivative under dx: h with dx(h) = f, unique up to a constant (fixed
// here by having no constant term). nullopt if f is not a total x-derivative.
std::optional<DiffPoly> invert_dx(const DiffPoly& f);

// Whether f lies in the image of dx.
bool is_dx_exact(const DiffPoly& f);

// Element of the quotient by dx-images, held in canonical form.
class LocalFunctional {
  public:
    LocalFunctional() = default;
    explicit LocalFunctional(const DiffPoly& density) : rep_(ibp_canonical(density)) {}

    const DiffPoly& rep() const { return rep_; }
    const CtxPtr& context() const { return rep_.context(); }
    bool is_zero() const { return rep_.is_zero(); }
    int super_degree() const { return rep_.super_degree(); }

    LocalFunctional& operator+=(const LocalFunctional& o);
    LocalFunctional& operator-=(const LocalFunctional& o);
    friend LocalFunctional operator+(LocalFunctional a, const LocalFunctional& b) { return a += b; }
    friend LocalFunctional operator-(LocalFunctional a, const LocalFunctional& b) { return a -= b; }
    friend LocalFunctional operator-(const LocalFunctional& a);
    LocalFunctional scaled(const PRat& c) const;
    bool operator==(const LocalFunctional& o) const { return rep_ == o.rep_; }
    bool operator!=(const LocalFunctional& o) const { return !(*this == o); }

  private:
    DiffPoly rep_;
};

LocalFunctional functional(const DiffPoly& f);

// Euler operator: sum over s of (-dx)^s applied to the partial with respect
// to the order-s lift of `level0` (a generator with order 0).
DiffPoly var_derivative(const DiffPoly& f, Gen level0);
DiffPoly var_derivative(const LocalFunctional& f, Gen level0);

// Bracket of local functionals via variational derivatives in the level-0
// odd variables and the even fields.
LocalFunctional schouten(const LocalFunctional& p, const LocalFunctional& q);

// Evolutionary derivation: determined by images of order-0 generators and
// extended to jets by powers of the x-derivative (so it commutes with it by
// construction). On a quotient ring the x-derivative itself is redirected
// through dx_table; derivations on the plain jet ring leave it empty.
struct EvolDerivation {
    CtxPtr ctx;
    int parity = 0;                  // 0 even, 1 odd
    std::map<Gen, DiffPoly> images;  // keys have order 0; absent keys act as 0
    DiffPoly::DxTable dx_table;      // prolongation rule overrides

    DiffPoly apply(const DiffPoly& f) const;
    // s-fold x-derivative of the stored order-0 image (zero if absent).
    DiffPoly image_of(Gen g) const;
};

EvolDerivation dp_derivation(const LocalFunctional& p);

// Graded commutator [D1, D2] = D1 D2 - (-1)^{kl} D2 D1 restricted to the
// order-0 generators both derivations touch.
EvolDerivation commutator(const EvolDerivation& d1, const EvolDerivation& d2);

// Matrix differential operator of a super-degree-2 functional in level-0 odd
// variables: entry (alpha, beta) is a list of (s, coefficient) with
// var_derivative(P, theta_alpha) = sum coefficient * theta_beta^s.
struct HamOperator {
    CtxPtr ctx;
    std::vector<std::vector<std::vector<std::pair<int, DiffPoly>>>> entries;

    // Reassemble row alpha as a polynomial (the round-trip check).
    DiffPoly row_applied_to_odds(size_t alpha) const;
};

HamOperator ham_operator(const LocalFunctional& p);

// First-order structure read off a hydrodynamic operator
// g^{ab} dx + Gamma^{ab}_c u^{c,1}.
struct HydroData {
    std::vector<std::vector<DiffPoly>> g;
    std::vector<std::vector<std::vector<DiffPoly>>> gamma;  // [a][b][c]
};

HydroData hydro_metric(const LocalFunctional& p);

// Drop every term whose coefficient carries a power of `param` above cutoff.
// The coefficient's denominator must be free of that parameter.
DiffPoly truncate_param(const DiffPoly& f, const std::string& param, int cutoff);

// Change of jet coordinates determined by images map_images[beta] = new
// even coordinate as a polynomial in the old ones. The old even fields are
// recovered by a fixed-point inversion modulo param^{cutoff+1} (the order-0
// part of the map must be affine with an invertible constant matrix), and
// old odd variables transform by the adjoint rule
//   sigma_{a,m} -> sum_t (-dx)^t (d(map)^b/d u^{a,t} sigma~_{b,m}).
// expr is written in the old coordinates; the result uses the same context
// with the new coordinates in the same positions.
DiffPoly miura(const DiffPoly& expr, const std::vector<DiffPoly>& map_images,
               const std::string& param, int cutoff);

}  // namespace superjet
