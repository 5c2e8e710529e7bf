#pragma once

#include "superjet/linalg.hpp"
#include "superjet/variational.hpp"

namespace superjet {

// An element of the extended ring: odd generators carry levels up to the
// context bound, and the level-raising relations eta^{ab} s_{b,m+1}^1 =
// (operator of P1 applied to s_{.,m}) cut the ring down to a quotient.
// Normal form picks the representative with no odd generator of level >= 1
// and order >= 1; all such generators are rewritten to strictly lower
// levels, so the rewrite terminates and the representative is unique.
using ExtendedPoly = DiffPoly;

// A compatible pair of local super bivectors, the first in flat form
// ½ ∫ eta^{ab} s_a s_b^1 with a constant invertible matrix eta. The
// constructor verifies [P0,P0] = [P0,P1] = [P1,P1] = 0, extracts eta and the
// matrix differential operator of P1, and precomputes the rewrite images of
// the constrained generators level by level.
class BihamPair {
  public:
    BihamPair(LocalFunctional p0, LocalFunctional p1);

    const LocalFunctional& p0() const;
    const LocalFunctional& p1() const;
    const HamOperator& op1() const;
    const CtxPtr& context() const;
    const PMatrix& eta() const;
    const PMatrix& eta_inv() const;

    // Normal form of one constrained generator s_{a,m}^s (m >= 1, s >= 1);
    // entries are cached write-once behind a lock.
    const DiffPoly& normal_image(Gen g) const;

    // x-derivative overrides: s_{a,m} (m >= 1) maps to normal_image of
    // s_{a,m}^1, so dx_with(dx_table()) is the quotient-ring x-derivative
    // on normal forms.
    const DiffPoly::DxTable& dx_table() const;

  private:
    struct Impl;
    std::shared_ptr<Impl> impl_;  // copies share the rewrite cache
};

// Rewrite every odd generator of level >= 1 and order >= 1 down to the
// normal form. Idempotent.
ExtendedPoly reduce_recursion(const ExtendedPoly& x, const BihamPair& pair);

// x-derivative followed by the rewrite; input must be in normal form.
ExtendedPoly dx_reduced(const ExtendedPoly& x, const BihamPair& pair);

// True iff the normal form contains no odd generator of level >= 1, i.e.
// the element lives in the plain jet ring (level-0 variables only).
bool is_local(const ExtendedPoly& x);

// Level shift on super-degree-1 elements over level-0 odd variables:
// f s_{a,0}^s -> f s_{a,k}^s, normal-formed. shift_T(0, .) is the identity.
ExtendedPoly shift_T(int k, const ExtendedPoly& x, const BihamPair& pair);

// Two-index shift on super-degree-2 elements over level-0 odd variables:
// for k <= l, f s_{a,0}^t s_{b,0}^s -> f sum_{i=0}^{l-k-1} s_{a,k+i}^t
// s_{b,l-i-1}^s; antisymmetric in (k,l), so the diagonal vanishes.
ExtendedPoly shift_Tkl(int k, int l, const ExtendedPoly& x, const BihamPair& pair);

// The m-th odd derivation of the pair: v^a -> shift_T(m) of dP0/ds_a,
// s_{a,k} -> shift_Tkl(k,m) of dP1/dv^a, extended to jets through the
// quotient x-derivative.
EvolDerivation odd_flow(int m, const BihamPair& pair);

// The extension of the evolutionary flow of a vector field x (super degree
// 1, both brackets with the pair zero) to the extended ring:
// s_{a,m} -> shift_T(m) of the level-0 image.
EvolDerivation super_flow(const LocalFunctional& x, const BihamPair& pair);

// Solve dx_reduced(g) = f for g in normal form by a linear solve over the
// monomial basis one differential degree below f; f must be homogeneous in
// super degree and the parameter-weighted differential degree. NotExact
// when there is no solution.
ExtendedPoly invert_dx(const ExtendedPoly& f, const BihamPair& pair);

// Commutator images on the order-0 generators, normal-formed; an empty map
// certifies that the two derivations commute.
std::map<Gen, DiffPoly> verify_commute(const EvolDerivation& d1, const EvolDerivation& d2);

}  // namespace superjet
