#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "superjet/frobenius.hpp"
#include "superjet/superext.hpp"
#include "superjet/variational.hpp"

namespace superjet {

// ---------------------------------------------------------------------------
// Deformed tau-symmetric hierarchy attached to a flat pair of super bivectors.
//
// grads[a][k] holds the components of the variational gradient of the k-th
// conserved functional in the a-th chain, indexed so that
// grads[a][0][g] = eta_{a g} and grads[a][k][g] is the gradient of the
// functional whose density is h(a, k).  Densities are recovered as the
// distinguished component h(a, p) = grads[a][p+1][unity]; the even flows,
// the two-point pairings and their odd companions are all derived from this
// one table so every consumer sees the same normalization.
// ---------------------------------------------------------------------------
struct DeformedHierarchy {
    BihamPair pair;
    std::vector<PRat> mu;    // spectrum of the grading operator, one per field
    std::vector<PMatrix> R;  // optional nilpotent shift matrices, R[k-1]
    size_t unity = 0;        // index of the distinguished coordinate

    // grads[a][k][g], k = 0 .. depth(a); ragged per chain.
    std::vector<std::vector<std::vector<DiffPoly>>> grads;

    const std::vector<DiffPoly>& gradient(size_t a, int p) const;  // grads[a][p+1]
    const DiffPoly& h(size_t a, int p) const;  // grads[a][p+1][unity]
    int depth(size_t a) const { return static_cast<int>(grads[a].size()) - 1; }
};

// Build the table down every chain to grads[a][depth]. Raises ResonantLevel
// when a required division by (k - 1/2 + mu_a) degenerates and NoSolution
// when a right-hand side fails to be a total x-derivative.
DeformedHierarchy make_deformed_hierarchy(const BihamPair& pair, std::vector<PRat> mu,
                                          std::vector<PMatrix> R, size_t unity, int depth);

// Extend chain a by one rung: requires grads[a][0..p+1] present (densities
// through level p), computes grads[a][p+2] and returns the new density
// h(a, p+1). Same error conditions as make_deformed_hierarchy.
DiffPoly deform_h_next(DeformedHierarchy& dh, size_t a, int p);

// ---------------------------------------------------------------------------
// Extended evolutionary calculus over one shared context that hosts the
// coordinate jets, the odd-variable jets, the conserved-density potentials
// f_{a,p}, the even times t_{a,p} and the odd times tau_p.  Every stored
// flow acts on all of them; absent images act as zero.
// ---------------------------------------------------------------------------
struct TauCoverContext {
    DeformedHierarchy dh;
    int t_slots = 0;    // potentials and even times carry p = 0 .. t_slots
    int tau_slots = 0;  // odd times carry m = 0 .. tau_slots

    DiffPoly::DxTable dx;  // pair rewrite table + x-images of the potentials

    std::vector<std::vector<EvolDerivation>> t_flows;  // [a][p]
    std::vector<EvolDerivation> tau_flows;             // [m]

    // Pairings: omega[{a,p,b,q}] with d/dt_{b,q} h(a,p) = dx omega.
    std::map<std::array<int, 4>, DiffPoly> omega;
    // Scaled odd potentials: phi0[a][p] with dx phi0 = (odd flow 0)(h(a,p)).
    std::vector<std::vector<DiffPoly>> phi0;

    // Level-shifted odd potential feeding the m-th odd flow.
    DiffPoly phi(int m, size_t a, int p) const;
    const DiffPoly& omega_at(size_t a, int p, size_t b, int q) const;

    const CtxPtr& context() const { return dh.pair.context(); }
};

// Assemble the cover: potentials' x-images, even and odd flows extended to
// the potentials and times, the pairing table, and the odd potentials.
// Verifies the defining exactness relations along the way (NotExact /
// ExactnessFailed on failure).
TauCoverContext build_tau_cover(DeformedHierarchy dh, int t_slots, int tau_slots);

// Raise the level of every odd factor by m and reduce to normal form.
DiffPoly shift_levels(int m, const DiffPoly& x, const BihamPair& pair);

// Graded commutator of two derivations read on selected order-0 generators.
// Stored images must already be in recursion normal form.
std::map<Gen, DiffPoly> bracket_on(const EvolDerivation& a, const EvolDerivation& b,
                                   const std::vector<Gen>& gens);

// Sum of two derivations of equal parity (images merge additively).
EvolDerivation derivation_sum(const EvolDerivation& a, const EvolDerivation& b);

// ---------------------------------------------------------------------------
// Degree-two symmetry assembly.
// ---------------------------------------------------------------------------

// Concrete part of the degree-two symmetry: the potential source terms built
// from the quadratic-operator tables, the linear odd-variable terms with the
// free constant c0, and the window-truncated linear action on times, read on
// the coordinate and level-zero odd generators.
EvolDerivation assemble_s2_skeleton(const TauCoverContext& tcc, const QuadraticTauOperator& op,
                                    const PRat& c0);

// Source term of the homological equation at the m-th odd time: minus the
// bracket of the m-th odd flow with the concrete part, read on coordinates.
// The result must be free of times and potentials, local, and polynomial in
// the deformation parameter; NonLocalObstruction otherwise.
EvolDerivation derive_I(const TauCoverContext& tcc, const EvolDerivation& skeleton, int m);

// Compatibility of a source with a flow: the bracket vanishes on the
// coordinate generators.
bool check_closed(const TauCoverContext& tcc, const EvolDerivation& flow,
                  const EvolDerivation& target);

// One equation [flow, X] = target of the linear system; targets are images
// on the coordinate generators.
struct HomologicalEquation {
    EvolDerivation flow;
    std::map<Gen, DiffPoly> target;
};

struct HomologicalProblem {
    std::vector<HomologicalEquation> eqs;
    std::map<Gen, DiffPoly> leading;  // prescribed part of the unknown
    int eps_min = 2;                  // ansatz slice bounds (powers of eps)
    int eps_max = 4;
    int parity = 0;        // parity of the unknown derivation
    int even_degree0 = 3;  // field degree of an even-coordinate image at slice zero
};

// Solve the joint linear system for an evolutionary derivation with the
// prescribed leading part, scanning ansatz monomials slice by slice in the
// eps filtration. NoSolution when inconsistent; Underdetermined when a
// nonzero kernel survives (dimension in the message).
EvolDerivation solve_homological(const TauCoverContext& tcc, const HomologicalProblem& prob);

// Canonical particular solution of the first homological equation, assembled
// from the operator tables, the gradient table and the odd potentials, and
// verified against its source i0 before returning (VerificationFailed).
EvolDerivation particular_x0(const TauCoverContext& tcc, const QuadraticTauOperator& op,
                             const EvolDerivation& i0);

struct SymmetryReport {
    EvolDerivation s2;  // skeleton plus solved local part on coordinates
    bool ok = false;
    // Labeled commutator residuals on coordinates; empty polys elided.
    std::vector<std::pair<std::string, DiffPoly>> residuals;
};

// Add the solved local part to the skeleton and check the brackets with the
// first two odd flows and with the even flows at levels one and two.
SymmetryReport assemble_and_verify_s2(const TauCoverContext& tcc, const EvolDerivation& skeleton,
                                      const EvolDerivation& x);

// Scalar obstruction carried by the kernel correction: its coordinate image
// integrated twice in x, normalized by the square of the deformation
// parameter, measured against the level-one density block of the operator
// tables. NotATauSymmetry if the image is not an exact second derivative or
// the normalization leaves a pole in the parameter.
DiffPoly extract_O2(const TauCoverContext& tcc, const EvolDerivation& corr,
                    const QuadraticTauOperator& op);

struct LinearizabilityResult {
    std::optional<bool> linearizable;  // set when the parameters decide it
    PRat obstruction;                  // factor against the level-one density
    std::string condition;             // "<factor> = 0" when undecided
};

// One-coordinate test: the obstruction must be a multiple of the level-one
// density; linearizable exactly when the factor vanishes.
LinearizabilityResult linearizability_check_1d(const TauCoverContext& tcc, const DiffPoly& o2);

// ---------------------------------------------------------------------------
// End-to-end driver and the standard one-coordinate family.
// ---------------------------------------------------------------------------

struct VirasoroSolution {
    EvolDerivation skeleton;
    EvolDerivation i0, i1;  // homological sources
    EvolDerivation x0;      // canonical particular solution
    EvolDerivation corr;    // kernel correction
    EvolDerivation x;       // x0 + corr
    SymmetryReport report;  // full symmetry and its bracket checks
    DiffPoly o2;
    LinearizabilityResult lin;
};

// Full pipeline: skeleton, sources, particular solution, kernel correction,
// verification, obstruction extraction, linearizability test.
VirasoroSolution solve_virasoro_s2(const TauCoverContext& tcc, const QuadraticTauOperator& op,
                                   const PRat& c0);

// One-coordinate family pair with quadratic densities on parameters
// (eps, c, c0): flat part (1/2) int s s^1, curved part
// (1/2) int (v s s^1 + eps^2 c s s^3).
BihamPair kdv_family_pair(int max_level);

// The same pair with the curvature parameter fixed to a rational value.
BihamPair kdv_family_pair_at(int max_level, const Rat& c_value);

}  // namespace superjet
