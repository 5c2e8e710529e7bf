#pragma once

#include <array>
#include <map>
#include <utility>
#include <vector>

#include "superjet/superext.hpp"

namespace superjet {

// Flat-potential data: a polynomial potential in the order-0 even fields,
// the constant pairing read off its third derivatives, the diagonal grading
// spectrum mu, the shift vector r, the grading matrices R_1..R_m and the
// conformal charge d. Field 0 is the unity direction.
struct FrobeniusData {
    CtxPtr ctx;
    DiffPoly F;
    size_t n = 0;
    PMatrix eta;      // eta_{ab} = d_0 d_a d_b F, constant
    PMatrix eta_inv;  // eta^{ab}
    std::vector<PRat> mu;
    std::vector<PRat> r;
    std::vector<PMatrix> R;  // R[k-1][a][b] = (R_k)^a_b
    PRat d;

    // Third derivatives of the potential and their eta-raisings.
    DiffPoly c_lower(size_t a, size_t b, size_t g) const;   // c_{abg}
    DiffPoly c_mixed(size_t g, size_t a, size_t b) const;   // c^g_{ab}
    DiffPoly c_upper2(size_t a, size_t b, size_t g) const;  // c^{ab}_g

    // Grading field component E^a = (1 - d/2 - mu_a) v^a + r_a and its action
    // on functions of the order-0 fields.
    DiffPoly euler_coeff(size_t a) const;
    DiffPoly euler_apply(const DiffPoly& f) const;

    bool has_R() const;
};

// Validates everything: constancy and invertibility of the pairing, the
// associativity of the induced product, mu/r normalization (mu_0 = -d/2,
// r_0 = 0), (mu_a + mu_b) eta_{ab} = 0, [mu, R_k] = k R_k with the pairing
// parity condition, and quasi-homogeneity of F up to quadratic terms.
FrobeniusData make_frobenius(CtxPtr ctx, DiffPoly F, std::vector<PRat> mu, std::vector<PRat> r,
                             std::vector<PMatrix> R, PRat d);

// Same, with mu derived from the grading field: given the linear coefficients
// q_a of E = sum (q_a v^a + r_a) d/dv^a, sets mu_a = 1 - d/2 - q_a.
FrobeniusData make_frobenius_euler(CtxPtr ctx, DiffPoly F, std::vector<PRat> euler_q,
                                   std::vector<PRat> r, std::vector<PMatrix> R, PRat d);

struct WdvvReport {
    bool ok = true;
    std::array<size_t, 4> first_fail{};  // indices of the first failing instance
};

// Associativity of the product read off the third derivatives of F, checked
// exactly over every index combination.
WdvvReport wdvv_check(const CtxPtr& ctx, const DiffPoly& F);

// Densities h[a][p] (functions of the order-0 fields), pinned by the Hessian
// recursion, the grading condition, the z-pairing normalization, and zero
// constant term. Underdetermined integration constants raise
// ResonantCalibration instead of being chosen silently.
struct Calibration {
    std::vector<std::vector<DiffPoly>> h;  // h[a][p], p = 0..depth
    int depth = -1;

    const DiffPoly& at(size_t a, int p) const;
};

Calibration calibrate(const FrobeniusData& data, int depth);

// Degree-1 functional X_{a,p} = int eta^{lg} dx(d_g h_{a,p+1}) s_{l,0}.
LocalFunctional principal_x(const FrobeniusData& data, const Calibration& cal, size_t a, int p);

// Hydrodynamic pair built from the data: P0 = 1/2 int eta^{ab} s_a s_b^1 and
// P1 = 1/2 int (g^{ab} s_a s_b^1 + Gamma^{ab}_g v^{g,1} s_a s_b) with
// g^{ab} = E^e c^{ab}_e and Gamma^{ab}_g = (1/2 - mu_b) c^{ab}_g. Verifies
// [int s_0, P1] = P0 (ExactnessFailed otherwise).
BihamPair biham_from_frobenius(const FrobeniusData& data);

// Two-point function Omega_{a,p;b,q}: coefficient extraction from
// (<grad h_a(z1), grad h_b(z2)> - eta_{ab}) / (z1 + z2). Needs calibration
// depth at least p + q + 1.
DiffPoly omega(const FrobeniusData& data, const Calibration& cal, size_t a, int p, size_t b,
               int q);

// Flow of the time t^{b,p} on the extended ring: v^a maps to
// eta^{ag} dx(d_g h_{b,p+1}) and s_{a,k} maps to the normal form of
// eta^{ge} (d_a d_e h_{b,p+1}) s_{g,k}^1 for every level k.
EvolDerivation principal_t_flow(const FrobeniusData& data, const Calibration& cal,
                                const BihamPair& pair, size_t b, int p);

// The m-th odd flow in closed form: v^a maps to eta^{ab} s_{b,m}^1 and
// s_{a,k} maps to Gamma^{gb}_a sum_{i=0}^{m-k-1} s_{b,k+i} s_{g,m-i-1}^1
// (minus the transposed expression for k > m), all normal-formed.
EvolDerivation principal_tau_flow(const FrobeniusData& data, const BihamPair& pair, int m);

// Odd two-point function Phi^m_{a,p}, a linear combination of the s_{e,k}
// with function coefficients, from the level recursion with initial value
// Phi^m_{a,0} = s_{a,m}. Raises ResonantSpectrum when a required division
// by (p - 1/2 + mu_a) degenerates.
DiffPoly phi_undeformed(const FrobeniusData& data, const Calibration& cal, size_t a, int p,
                        int m);

struct TimeIdx {
    uint16_t field = 0;
    int p = 0;
    auto operator<=>(const TimeIdx&) const = default;
};

using TimePair = std::pair<TimeIdx, TimeIdx>;

// Quadratic operator in the time variables t^{a,p}:
//   sum a[{I,J}] d2/dt_I dt_J  +  sum b[(I,J)] t_I d/dt_J
//   + sum c[{I,J}] t_I t_J     +  scalar.
// a and c are keyed by the normalized unordered pair and store the
// displayed monomial coefficient. Tables whose values would depend on data
// the source does not determine are left empty with their flag cleared;
// callers compare only parts flagged known on both sides.
struct QuadraticTauOperator {
    std::map<TimePair, PRat> a;
    std::map<TimePair, PRat> b;  // key (source, target)
    std::map<TimePair, PRat> c;
    PRat scalar;
    bool a_known = true;
    bool b_known = true;
    bool c_known = true;
    bool scalar_known = true;

    PRat a_coef(TimeIdx i, TimeIdx j) const;
    PRat b_coef(TimeIdx src, TimeIdx dst) const;
    PRat c_coef(TimeIdx i, TimeIdx j) const;
    QuadraticTauOperator scaled(const PRat& k) const;
};

// The m = -1 and m = 2 operator tables for the data, truncated at the time
// cutoff p <= cutoff. The m = 2 quadratic c-table is not determined by the
// stored data and is marked unknown; inputs with R != 0 are rejected for
// m = 2 (UnsupportedResonance) because their first-order tables need the
// undetermined two-index R matrices.
QuadraticTauOperator virasoro_L(const FrobeniusData& data, int m, int cutoff = 8);

// Exact commutator [A, B] of two quadratic operators; each part of the
// result is computed when its inputs are known and flagged unknown
// otherwise.
QuadraticTauOperator tau_op_commutator(const QuadraticTauOperator& x,
                                       const QuadraticTauOperator& y);

}  // namespace superjet
