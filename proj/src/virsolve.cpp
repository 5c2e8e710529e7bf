#include "superjet/virsolve.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <string>
#include <tuple>
#include <utility>

namespace superjet {

namespace {

Gen evg(size_t a) { return Gen::even(uint16_t(a), 0); }
Gen odg(size_t a, int m) { return Gen::odd(uint16_t(a), m, 0); }

size_t eps_index(const CtxPtr& ctx) {
    auto i = ctx->param_index("eps");
    if (!i) fail(Errc::InvalidGenerator, "context lacks the deformation parameter");
    return *i;
}

PRat eps_var(const CtxPtr& ctx) { return PRat::variable(eps_index(ctx)); }

PRat eps_power(const CtxPtr& ctx, int e) {
    PRat p = PRat(Rat(1));
    PRat v = eps_var(ctx);
    for (int i = 0; i < e; ++i) p = p * v;
    return p;
}

bool prat_free_of(const PRat& c, size_t var) {
    return c.num.degree_in(var) == 0 && c.den.degree_in(var) == 0;
}

bool poly_free_of(const DiffPoly& f, size_t var) {
    for (const auto& [key, c] : f.terms())
        if (!prat_free_of(c, var)) return false;
    return true;
}

// No denominator carries the given parameter (polynomial dependence only).
bool poly_polynomial_in(const DiffPoly& f, size_t var) {
    for (const auto& [key, c] : f.terms())
        if (c.den.degree_in(var) != 0) return false;
    return true;
}

// Matrix differential operator of the curved bivector applied to a vector of
// plain differential polynomials: row l is sum_g sum_(s,c) c * dx^s(G[g]).
std::vector<DiffPoly> apply_op1(const BihamPair& pair, const std::vector<DiffPoly>& G) {
    const CtxPtr& ctx = pair.context();
    size_t n = ctx->n_fields();
    const HamOperator& op = pair.op1();
    std::vector<DiffPoly> out(n, DiffPoly(ctx));
    for (size_t l = 0; l < n; ++l)
        for (size_t g = 0; g < n; ++g)
            for (const auto& [s, coef] : op.entries[l][g]) {
                DiffPoly d = G[g];
                for (int i = 0; i < s; ++i) d = d.dx();
                out[l] += coef * d;
            }
    return out;
}

// Flat bivector applied to a gradient vector: row l is sum_g eta^{lg} dx(G[g]).
std::vector<DiffPoly> apply_op0(const BihamPair& pair, const std::vector<DiffPoly>& G) {
    const CtxPtr& ctx = pair.context();
    size_t n = ctx->n_fields();
    const PMatrix& eta = pair.eta();
    std::vector<DiffPoly> out(n, DiffPoly(ctx));
    for (size_t l = 0; l < n; ++l)
        for (size_t g = 0; g < n; ++g) out[l] += G[g].dx().scaled(eta[l][g]);
    return out;
}

// One ladder rung: from grads[a][0..q] compute grads[a][q+1].
void compute_rung(DeformedHierarchy& dh, size_t a, int q) {
    const BihamPair& pair = dh.pair;
    const CtxPtr& ctx = pair.context();
    size_t n = ctx->n_fields();
    if (dh.grads[a].size() != size_t(q) + 1)
        fail(Errc::LevelOutOfRange, "ladder rung out of order for chain " + std::to_string(a));

    std::vector<DiffPoly> rhs = apply_op1(pair, dh.grads[a][q]);
    for (int k = 1; k <= q && size_t(k) <= dh.R.size(); ++k)
        for (size_t gc = 0; gc < n; ++gc) {
            const PRat& rc = dh.R[k - 1][gc][a];
            if (rc.is_zero()) continue;
            if (size_t(q - k + 1) >= dh.grads[gc].size())
                fail(Errc::LevelOutOfRange, "shift term needs a deeper companion chain");
            std::vector<DiffPoly> lower = apply_op0(pair, dh.grads[gc][q - k + 1]);
            for (size_t l = 0; l < n; ++l) rhs[l] -= lower[l].scaled(rc);
        }

    PRat divisor = PRat(Rat(2 * q + 1) / 2) + dh.mu[a];
    if (divisor.is_zero())
        fail(Errc::ResonantLevel, "resonant spectrum at chain " + std::to_string(a) + " level " +
                                      std::to_string(q));
    PRat inv = divisor.inverse();

    const PMatrix& eta_inv = pair.eta_inv();
    std::vector<DiffPoly> next(n, DiffPoly(ctx));
    for (size_t r = 0; r < n; ++r) {
        DiffPoly flux(ctx);
        for (size_t l = 0; l < n; ++l) flux += rhs[l].scaled(eta_inv[r][l] * inv);
        auto g = invert_dx(flux);
        if (!g)
            fail(Errc::NoSolution, "ladder right-hand side is not a total x-derivative at chain " +
                                       std::to_string(a) + " level " + std::to_string(q));
        next[r] = std::move(*g);
    }
    dh.grads[a].push_back(std::move(next));
}

// N[z][l] with dx N^z_l = (1/2+mu_a) eta^{az} (mu_z - mu_l - 1) d v_l / d t^{a,0}.
std::vector<std::vector<DiffPoly>> build_N(const TauCoverContext& tcc) {
    const BihamPair& pair = tcc.dh.pair;
    const CtxPtr& ctx = pair.context();
    size_t n = ctx->n_fields();
    const PMatrix& eta = pair.eta();
    const PMatrix& eta_inv = pair.eta_inv();
    std::vector<std::vector<DiffPoly>> N(n, std::vector<DiffPoly>(n, DiffPoly(ctx)));
    for (size_t z = 0; z < n; ++z)
        for (size_t l = 0; l < n; ++l) {
            DiffPoly rhs(ctx);
            for (size_t a = 0; a < n; ++a) {
                PRat coef = (PRat(Rat(1) / 2) + tcc.dh.mu[a]) * eta[a][z] *
                            (tcc.dh.mu[z] - tcc.dh.mu[l] - PRat(Rat(1)));
                if (coef.is_zero()) continue;
                // d v_l / d t^{a,0} with the lowered index: eta_{l g} d v^g.
                for (size_t g = 0; g < n; ++g)
                    rhs += tcc.t_flows[a][0].image_of(evg(g)).scaled(coef * eta_inv[l][g]);
            }
            if (rhs.is_zero()) continue;
            auto sol = invert_dx(rhs);
            if (!sol)
                fail(Errc::NotExact, "linear odd coefficient is not a total x-derivative");
            N[z][l] = std::move(*sol);
        }
    return N;
}

struct TimeKey {
    size_t field;
    int p;
};

// The two slots of a quadratic pairing key, ordered so that slot order
// matches the displayed monomial.
std::pair<TimeKey, TimeKey> pair_slots(const TimePair& tp) {
    return {TimeKey{tp.first.field, tp.first.p}, TimeKey{tp.second.field, tp.second.p}};
}

}  // namespace

const std::vector<DiffPoly>& DeformedHierarchy::gradient(size_t a, int p) const {
    if (a >= grads.size() || p + 1 < 0 || size_t(p + 1) >= grads[a].size())
        fail(Errc::LevelOutOfRange, "gradient level " + std::to_string(p));
    return grads[a][size_t(p + 1)];
}

const DiffPoly& DeformedHierarchy::h(size_t a, int p) const { return gradient(a, p)[unity]; }

DeformedHierarchy make_deformed_hierarchy(const BihamPair& pair, std::vector<PRat> mu,
                                          std::vector<PMatrix> R, size_t unity, int depth) {
    const CtxPtr& ctx = pair.context();
    size_t n = ctx->n_fields();
    if (mu.size() != n) fail(Errc::ContextMismatch, "one grading value per field required");
    for (const PMatrix& r : R)
        if (r.size() != n) fail(Errc::ContextMismatch, "shift matrix must be square");
    if (unity >= n) fail(Errc::InvalidGenerator, "distinguished coordinate out of range");
    if (depth < 0) fail(Errc::LevelOutOfRange, "negative ladder depth");

    DeformedHierarchy dh{pair, std::move(mu), std::move(R), unity, {}};
    const PMatrix& eta_inv = pair.eta_inv();
    dh.grads.assign(n, {});
    for (size_t a = 0; a < n; ++a) {
        std::vector<DiffPoly> seed(n, DiffPoly(ctx));
        for (size_t g = 0; g < n; ++g) seed[g] = DiffPoly::constant(ctx, eta_inv[a][g]);
        dh.grads[a].push_back(std::move(seed));
    }
    for (int q = 0; q < depth; ++q)
        for (size_t a = 0; a < n; ++a) compute_rung(dh, a, q);
    return dh;
}

DiffPoly deform_h_next(DeformedHierarchy& dh, size_t a, int p) {
    if (a >= dh.grads.size()) fail(Errc::InvalidGenerator, "chain index out of range");
    if (dh.grads[a].size() != size_t(p) + 2)
        fail(Errc::LevelOutOfRange, "densities through level " + std::to_string(p) +
                                        " must be present and none beyond");
    compute_rung(dh, a, p + 1);
    return dh.h(a, p + 1);
}

DiffPoly shift_levels(int m, const DiffPoly& x, const BihamPair& pair) {
    const CtxPtr& ctx = pair.context();
    if (m < 0) fail(Errc::LevelOutOfRange, "negative level shift");
    if (m == 0) return reduce_recursion(x, pair);
    for (const Gen& g : x.generators())
        if (g.kind == GenKind::OddJet && g.level + m > ctx->max_odd_level)
            fail(Errc::LevelOutOfRange, "level shift exceeds the context bound");
    DiffPoly shifted = x.substitute(ctx, [&](Gen g) {
        if (g.kind != GenKind::OddJet) return DiffPoly::generator(ctx, g);
        Gen up = g;
        up.level += m;
        return DiffPoly::generator(ctx, up);
    });
    return reduce_recursion(shifted, pair);
}

std::map<Gen, DiffPoly> bracket_on(const EvolDerivation& a, const EvolDerivation& b,
                                   const std::vector<Gen>& gens) {
    std::map<Gen, DiffPoly> out;
    int sign = (a.parity == 1 && b.parity == 1) ? 1 : -1;
    for (const Gen& g : gens) {
        DiffPoly term = a.apply(b.image_of(g));
        DiffPoly other = b.apply(a.image_of(g));
        DiffPoly res = (sign == 1) ? term + other : term - other;
        if (!res.is_zero()) out.emplace(g, std::move(res));
    }
    return out;
}

EvolDerivation derivation_sum(const EvolDerivation& a, const EvolDerivation& b) {
    if (a.parity != b.parity) fail(Errc::NotHomogeneous, "cannot add derivations of mixed parity");
    EvolDerivation out = a;
    for (const auto& [g, img] : b.images) {
        auto it = out.images.find(g);
        if (it == out.images.end()) {
            out.images.emplace(g, img);
        } else {
            it->second += img;
            if (it->second.is_zero()) out.images.erase(it);
        }
    }
    for (const auto& [g, img] : b.dx_table) {
        auto it = out.dx_table.find(g);
        if (it == out.dx_table.end())
            out.dx_table.emplace(g, img);
        else if (it->second != img)
            fail(Errc::InvalidGenerator, "derivation sum with conflicting prolongation rules");
    }
    return out;
}

DiffPoly TauCoverContext::phi(int m, size_t a, int p) const {
    if (a >= phi0.size() || p < 0 || size_t(p) >= phi0[a].size())
        fail(Errc::LevelOutOfRange, "odd potential index out of range");
    return shift_levels(m, phi0[a][size_t(p)], dh.pair);
}

const DiffPoly& TauCoverContext::omega_at(size_t a, int p, size_t b, int q) const {
    auto it = omega.find({int(a), p, int(b), q});
    if (it == omega.end()) fail(Errc::LevelOutOfRange, "pairing index out of range");
    return it->second;
}

TauCoverContext build_tau_cover(DeformedHierarchy dh, int t_slots, int tau_slots) {
    const BihamPair pair = dh.pair;
    const CtxPtr& ctx = pair.context();
    size_t n = ctx->n_fields();
    if (t_slots < 0 || tau_slots < 0) fail(Errc::LevelOutOfRange, "negative slot count");
    if (tau_slots > ctx->max_odd_level)
        fail(Errc::LevelOutOfRange, "odd slots exceed the context level bound");
    for (size_t a = 0; a < n; ++a)
        if (dh.depth(a) < t_slots + 1)
            fail(Errc::LevelOutOfRange, "hierarchy depth " + std::to_string(dh.depth(a)) +
                                            " too small for " + std::to_string(t_slots) +
                                            " time slots");

    TauCoverContext tcc{std::move(dh), t_slots, tau_slots, {}, {}, {}, {}, {}};
    const DeformedHierarchy& hier = tcc.dh;

    // Potentials' x-images: dx f_{a,p} = h(a,p); the quotient rewrite rules
    // come along from the pair.
    tcc.dx = pair.dx_table();
    for (size_t a = 0; a < n; ++a)
        for (int p = 0; p <= t_slots; ++p) tcc.dx.emplace(Gen::tau_f(uint16_t(a), p), hier.h(a, p));

    // Even flows from the gradient ladder; the constructor of each flow
    // certifies that its field commutes with both bivectors.
    const PMatrix& eta = pair.eta();
    tcc.t_flows.assign(n, {});
    for (size_t a = 0; a < n; ++a) {
        tcc.t_flows[a].reserve(size_t(t_slots) + 1);
        for (int p = 0; p <= t_slots; ++p) {
            DiffPoly density(ctx);
            const std::vector<DiffPoly>& G = hier.gradient(a, p);
            for (size_t l = 0; l < n; ++l) {
                DiffPoly comp(ctx);
                for (size_t g = 0; g < n; ++g) comp += G[g].dx().scaled(eta[l][g]);
                density += comp * DiffPoly::generator(ctx, odg(l, 0));
            }
            EvolDerivation fl = super_flow(functional(density), pair);
            fl.dx_table = tcc.dx;
            tcc.t_flows[a].push_back(std::move(fl));
        }
    }

    // Two-point pairings with their defining symmetry and normalization.
    for (size_t a = 0; a < n; ++a)
        for (int p = 0; p <= t_slots; ++p)
            for (size_t b = 0; b < n; ++b)
                for (int q = 0; q <= t_slots; ++q) {
                    DiffPoly rate = tcc.t_flows[b][q].apply(hier.h(a, p));
                    auto om = invert_dx(rate);
                    if (!om)
                        fail(Errc::NotExact, "density rate of change is not a total x-derivative");
                    tcc.omega.emplace(std::array<int, 4>{int(a), p, int(b), q}, std::move(*om));
                }
    for (size_t a = 0; a < n; ++a)
        for (int p = 0; p <= t_slots; ++p) {
            if (tcc.omega_at(a, p, hier.unity, 0) != hier.h(a, p))
                fail(Errc::ExactnessFailed, "pairing against the distinguished time must "
                                            "reproduce the density");
            for (size_t b = 0; b < n; ++b)
                for (int q = 0; q <= t_slots; ++q)
                    if (tcc.omega_at(a, p, b, q) != tcc.omega_at(b, q, a, p))
                        fail(Errc::ExactnessFailed, "pairing table is not symmetric");
        }

    // Odd potentials at level zero.
    EvolDerivation d0 = odd_flow(0, pair);
    tcc.phi0.assign(n, {});
    for (size_t a = 0; a < n; ++a) {
        tcc.phi0[a].reserve(size_t(t_slots) + 1);
        for (int p = 0; p <= t_slots; ++p)
            tcc.phi0[a].push_back(invert_dx(d0.apply(hier.h(a, p)), pair));
    }

    // Odd flows extended to the potentials and their own odd time.
    PRat einv = eps_var(ctx).inverse();
    tcc.tau_flows.reserve(size_t(tau_slots) + 1);
    for (int m = 0; m <= tau_slots; ++m) {
        EvolDerivation fl = odd_flow(m, pair);
        fl.dx_table = tcc.dx;
        for (size_t a = 0; a < n; ++a)
            for (int p = 0; p <= t_slots; ++p) {
                DiffPoly img = tcc.phi(m, a, p).scaled(einv);
                if (!img.is_zero()) fl.images.emplace(Gen::tau_f(uint16_t(a), p), std::move(img));
            }
        fl.images.emplace(Gen::tau_odd(m), DiffPoly::constant(ctx, Rat(1)));
        tcc.tau_flows.push_back(std::move(fl));
    }

    // Even flows extended to the potentials and their own time.
    for (size_t a = 0; a < n; ++a)
        for (int p = 0; p <= t_slots; ++p) {
            EvolDerivation& fl = tcc.t_flows[a][p];
            for (size_t b = 0; b < n; ++b)
                for (int q = 0; q <= t_slots; ++q) {
                    const DiffPoly& om = tcc.omega_at(b, q, a, p);
                    if (!om.is_zero()) fl.images.emplace(Gen::tau_f(uint16_t(b), q), om);
                }
            fl.images.emplace(Gen::time_t_(uint16_t(a), p), DiffPoly::constant(ctx, Rat(1)));
        }

    return tcc;
}

EvolDerivation assemble_s2_skeleton(const TauCoverContext& tcc, const QuadraticTauOperator& op,
                                    const PRat& c0) {
    const BihamPair& pair = tcc.dh.pair;
    const CtxPtr& ctx = pair.context();
    size_t n = ctx->n_fields();
    PRat eps = eps_var(ctx);

    std::vector<Gen> coords;
    for (size_t l = 0; l < n; ++l) coords.push_back(evg(l));
    for (size_t l = 0; l < n; ++l) coords.push_back(odg(l, 0));

    EvolDerivation s2;
    s2.ctx = ctx;
    s2.parity = 0;
    s2.dx_table = tcc.dx;

    std::vector<std::vector<DiffPoly>> N = build_N(tcc);

    for (const Gen& g : coords) {
        DiffPoly img(ctx);

        // Quadratic potential sources. Keys must pair levels {1,0} or {0,0}.
        for (const auto& [tp, coef] : op.a) {
            auto [I, J] = pair_slots(tp);
            bool shape10 = (I.p == 1 && J.p == 0) || (I.p == 0 && J.p == 1);
            bool shape00 = (I.p == 0 && J.p == 0);
            if (!shape10 && !shape00)
                fail(Errc::InvalidGenerator, "unsupported quadratic source levels");
            if (I.p > tcc.t_slots || J.p > tcc.t_slots)
                fail(Errc::LevelOutOfRange, "quadratic source beyond the time window");
            DiffPoly fI = DiffPoly::generator(ctx, Gen::tau_f(uint16_t(I.field), I.p));
            DiffPoly fJ = DiffPoly::generator(ctx, Gen::tau_f(uint16_t(J.field), J.p));
            DiffPoly term = fJ * tcc.t_flows[I.field][I.p].image_of(g) +
                            fI * tcc.t_flows[J.field][J.p].image_of(g);
            img += term.scaled(coef * eps);
        }

        // Window-truncated linear action on the even times.
        for (const auto& [st, coef] : op.b) {
            const TimeIdx& src = st.first;
            const TimeIdx& tgt = st.second;
            if (tgt.p > tcc.t_slots) continue;
            DiffPoly tsrc = DiffPoly::generator(ctx, Gen::time_t_(src.field, src.p));
            img += (tsrc * tcc.t_flows[tgt.field][tgt.p].image_of(g)).scaled(coef);
        }

        // Linear action on the odd times.
        for (int p = 0; p + 2 <= tcc.tau_slots; ++p) {
            DiffPoly tau = DiffPoly::generator(ctx, Gen::tau_odd(p));
            img += (tau * tcc.tau_flows[p + 2].image_of(g)).scaled(PRat(Rat(p)) + c0);
        }

        if (!img.is_zero()) s2.images.emplace(g, std::move(img));
    }

    // Linear odd-variable terms on the level-zero odd rows.
    for (size_t l = 0; l < n; ++l) {
        DiffPoly extra(ctx);
        extra += DiffPoly::generator(ctx, odg(l, 2))
                     .scaled(PRat(Rat(5) / 2) + tcc.dh.mu[l] + c0);
        for (size_t z = 0; z < n; ++z)
            if (!N[z][l].is_zero()) extra += N[z][l] * DiffPoly::generator(ctx, odg(z, 1));
        auto it = s2.images.find(odg(l, 0));
        if (it == s2.images.end())
            s2.images.emplace(odg(l, 0), std::move(extra));
        else
            it->second += extra;
    }

    return s2;
}

EvolDerivation derive_I(const TauCoverContext& tcc, const EvolDerivation& skeleton, int m) {
    const CtxPtr& ctx = tcc.dh.pair.context();
    size_t n = ctx->n_fields();
    if (m < 0 || m >= int(tcc.tau_flows.size()))
        fail(Errc::LevelOutOfRange, "odd time index out of range");

    std::vector<Gen> coords;
    for (size_t l = 0; l < n; ++l) coords.push_back(evg(l));
    for (size_t l = 0; l < n; ++l) coords.push_back(odg(l, 0));

    std::map<Gen, DiffPoly> br = bracket_on(tcc.tau_flows[m], skeleton, coords);

    size_t eidx = eps_index(ctx);
    auto c0idx = ctx->param_index("c0");
    EvolDerivation out;
    out.ctx = ctx;
    out.parity = 1;
    out.dx_table = tcc.dh.pair.dx_table();
    for (auto& [g, poly] : br) {
        DiffPoly img = -poly;
        for (const Gen& gg : img.generators()) {
            if (!gg.is_jet())
                fail(Errc::NonLocalObstruction,
                     "source retains a formal generator: " + gen_to_string(gg));
            if (gg.kind == GenKind::OddJet && gg.level >= 1)
                fail(Errc::NonLocalObstruction,
                     "source retains a raised odd variable: " + gen_to_string(gg));
        }
        if (!poly_polynomial_in(img, eidx))
            fail(Errc::NonLocalObstruction, "source has a pole in the deformation parameter");
        if (c0idx && !poly_free_of(img, *c0idx))
            fail(Errc::VerificationFailed, "source depends on the free shift constant");
        out.images.emplace(g, std::move(img));
    }
    return out;
}

bool check_closed(const TauCoverContext& tcc, const EvolDerivation& flow,
                  const EvolDerivation& target) {
    const CtxPtr& ctx = tcc.dh.pair.context();
    size_t n = ctx->n_fields();
    std::vector<Gen> coords;
    for (size_t l = 0; l < n; ++l) coords.push_back(evg(l));
    for (size_t l = 0; l < n; ++l) coords.push_back(odg(l, 0));
    return bracket_on(flow, target, coords).empty();
}

namespace {

// All normal-form monomials with the exact even-jet degree, odd factor count
// (level-zero odd jets only) and total jet order.
void enum_odd_then_even(const CtxPtr& ctx, int even_deg, int odd_count, int order,
                        std::vector<MonoKey>& out) {
    size_t n = ctx->n_fields();

    std::vector<Gen> odd_choices;
    for (size_t a = 0; a < n; ++a)
        for (int s = 0; s <= order; ++s) odd_choices.push_back(Gen::odd(uint16_t(a), 0, s));

    std::vector<Gen> odd_sel;
    std::function<void(size_t, int)> pick_odds;
    std::function<void(MonoKey&, size_t, int, int)> pick_evens;

    std::vector<Gen> even_choices;
    auto rebuild_evens = [&](int budget) {
        even_choices.clear();
        for (size_t a = 0; a < n; ++a)
            for (int s = 0; s <= budget; ++s) even_choices.push_back(Gen::even(uint16_t(a), s));
    };

    pick_evens = [&](MonoKey& key, size_t from, int remaining, int order_left) {
        if (remaining == 0) {
            if (order_left == 0) out.push_back(key);
            return;
        }
        for (size_t i = from; i < even_choices.size(); ++i) {
            const Gen& g = even_choices[i];
            if (g.order > order_left) continue;
            if (!key.evens.empty() && key.evens.back().first == g)
                key.evens.back().second += 1;
            else
                key.evens.push_back({g, 1});
            pick_evens(key, i, remaining - 1, order_left - g.order);
            if (key.evens.back().second > 1)
                key.evens.back().second -= 1;
            else
                key.evens.pop_back();
        }
    };

    pick_odds = [&](size_t from, int order_used) {
        if (int(odd_sel.size()) == odd_count) {
            MonoKey key;
            key.odds = odd_sel;
            rebuild_evens(order - order_used);
            pick_evens(key, 0, even_deg, order - order_used);
            return;
        }
        for (size_t i = from; i < odd_choices.size(); ++i) {
            if (order_used + odd_choices[i].order > order) continue;
            odd_sel.push_back(odd_choices[i]);
            pick_odds(i + 1, order_used + odd_choices[i].order);
            odd_sel.pop_back();
        }
    };

    pick_odds(0, 0);
}

}  // namespace

EvolDerivation solve_homological(const TauCoverContext& tcc, const HomologicalProblem& prob) {
    const BihamPair& pair = tcc.dh.pair;
    const CtxPtr& ctx = pair.context();
    size_t n = ctx->n_fields();
    size_t eidx = eps_index(ctx);

    std::vector<Gen> coords;
    for (size_t l = 0; l < n; ++l) coords.push_back(evg(l));
    for (size_t l = 0; l < n; ++l) coords.push_back(odg(l, 0));

    // Ansatz rows: even rows carry (even_degree0, 0) at the zeroth slice,
    // level-zero odd rows carry one fewer even factor and one odd factor.
    // Each slice of the filtration trades two parameter powers for one unit
    // of even degree or one extra odd pair, keeping the scaling weight fixed.
    struct BasisEl {
        Gen row;
        DiffPoly poly;
    };
    std::vector<BasisEl> basis;
    for (const Gen& row : coords) {
        bool odd_row = (row.kind == GenKind::OddJet);
        int base_deg = odd_row ? prob.even_degree0 - 1 : prob.even_degree0;
        int base_cnt = odd_row ? 1 : 0;
        for (int e = prob.eps_min; e <= prob.eps_max; ++e) {
            if (e % 2 != 0) continue;
            for (int extra = 0; extra <= 1; ++extra) {
                int cnt = base_cnt + 2 * extra;
                int deg = base_deg - e / 2 - extra;
                if (deg < 0) continue;
                std::vector<MonoKey> monos;
                enum_odd_then_even(ctx, deg, cnt, e, monos);
                for (const MonoKey& k : monos) {
                    DiffPoly p(ctx);
                    p.add_term(k, eps_power(ctx, e));
                    if (!p.is_zero()) basis.push_back({row, std::move(p)});
                }
            }
        }
    }

    // Column for each basis element under each equation's bracket; the
    // right-hand side absorbs the bracket with the prescribed leading part.
    EvolDerivation lead;
    lead.ctx = ctx;
    lead.parity = prob.parity;
    lead.images = prob.leading;
    lead.dx_table = pair.dx_table();

    using RowKey = std::tuple<size_t, Gen, MonoKey>;
    std::map<RowKey, size_t> row_index;
    std::vector<std::map<size_t, PRat>> cols(basis.size());
    std::vector<std::pair<RowKey, PRat>> rhs_entries;

    auto row_of = [&](const RowKey& rk) {
        return row_index.try_emplace(rk, row_index.size()).first->second;
    };

    for (size_t ei = 0; ei < prob.eqs.size(); ++ei) {
        const HomologicalEquation& eq = prob.eqs[ei];
        std::map<Gen, DiffPoly> shift =
            prob.leading.empty() ? std::map<Gen, DiffPoly>{} : bracket_on(eq.flow, lead, coords);
        for (const Gen& g : coords) {
            DiffPoly r(ctx);
            if (auto it = eq.target.find(g); it != eq.target.end()) r = it->second;
            if (auto it = shift.find(g); it != shift.end()) r -= it->second;
            for (const auto& [key, c] : r.terms()) rhs_entries.push_back({{ei, g, key}, c});
        }
        for (size_t j = 0; j < basis.size(); ++j) {
            EvolDerivation el;
            el.ctx = ctx;
            el.parity = prob.parity;
            el.images.emplace(basis[j].row, basis[j].poly);
            el.dx_table = pair.dx_table();
            std::map<Gen, DiffPoly> br = bracket_on(eq.flow, el, coords);
            for (const auto& [g, polyv] : br)
                for (const auto& [key, c] : polyv.terms()) cols[j][row_of({ei, g, key})] = c;
        }
    }
    for (const auto& [rk, c] : rhs_entries) row_of(rk);

    size_t n_rows = row_index.size();
    PMatrix A(n_rows, std::vector<PRat>(basis.size(), PRat()));
    std::vector<PRat> b(n_rows, PRat());
    for (size_t j = 0; j < basis.size(); ++j)
        for (const auto& [r, c] : cols[j]) A[r][j] = c;
    for (const auto& [rk, c] : rhs_entries) b[row_index.at(rk)] = c;

    LinearSolution sol = solve_linear(A, b);
    if (!sol.consistent)
        fail(Errc::NoSolution,
             "homological system is inconsistent: the obstruction class does not vanish");
    if (!sol.kernel.empty())
        fail(Errc::Underdetermined, "homological system has solution space of dimension " +
                                        std::to_string(sol.kernel.size()));
    for (const PRat& u : sol.particular)
        if (!prat_free_of(u, eidx))
            fail(Errc::VerificationFailed, "solved coefficients depend on the parameter filtration");

    EvolDerivation out = lead;
    for (size_t j = 0; j < basis.size(); ++j) {
        if (sol.particular[j].is_zero()) continue;
        DiffPoly contrib = basis[j].poly.scaled(sol.particular[j]);
        auto it = out.images.find(basis[j].row);
        if (it == out.images.end())
            out.images.emplace(basis[j].row, std::move(contrib));
        else
            it->second += contrib;
    }
    for (auto it = out.images.begin(); it != out.images.end();)
        it = it->second.is_zero() ? out.images.erase(it) : std::next(it);
    return out;
}

EvolDerivation particular_x0(const TauCoverContext& tcc, const QuadraticTauOperator& op,
                             const EvolDerivation& i0) {
    const BihamPair& pair = tcc.dh.pair;
    const CtxPtr& ctx = pair.context();
    size_t n = ctx->n_fields();
    size_t u = tcc.dh.unity;
    const PMatrix& eta = pair.eta();
    const DeformedHierarchy& dh = tcc.dh;

    std::vector<std::vector<DiffPoly>> N = build_N(tcc);

    // Lowered even rows, raised at the end with the flat pairing.
    std::vector<DiffPoly> low(n, DiffPoly(ctx));
    std::vector<DiffPoly> odd_rows(n, DiffPoly(ctx));

    auto grad_at = [&](size_t b, int qdens, size_t comp) -> const DiffPoly& {
        // Gradient vector paired with the density label at level qdens.
        if (qdens < 1 || size_t(qdens) >= dh.grads[b].size())
            fail(Errc::LevelOutOfRange, "gradient ladder too shallow for the particular solution");
        return dh.grads[b][size_t(qdens)][comp];
    };

    for (size_t l = 0; l < n; ++l) {
        // Quadratic sources: density values against gradient components.
        for (const auto& [tp, coef] : op.a) {
            auto [I, J] = pair_slots(tp);
            bool i1 = (I.p == 1 && J.p == 0);
            bool j1 = (I.p == 0 && J.p == 1);
            if (i1 || j1) {
                const TimeKey& hi = i1 ? I : J;  // level-one slot
                const TimeKey& lo = i1 ? J : I;  // level-zero slot
                low[l] += (dh.h(hi.field, 1) * grad_at(lo.field, 1, l)).scaled(coef);
                low[l] += (dh.h(lo.field, 0) * grad_at(hi.field, 2, l)).scaled(coef);
                odd_rows[l] += (tcc.phi0[hi.field][1] * grad_at(lo.field, 1, l)).scaled(coef);
                odd_rows[l] += (tcc.phi0[lo.field][0] * grad_at(hi.field, 2, l)).scaled(coef);
            } else if (I.p == 0 && J.p == 0) {
                low[l] += (dh.h(I.field, 0) * grad_at(J.field, 1, l)).scaled(coef);
                low[l] += (dh.h(J.field, 0) * grad_at(I.field, 1, l)).scaled(coef);
                odd_rows[l] += (tcc.phi0[I.field][0] * grad_at(J.field, 1, l)).scaled(coef);
                odd_rows[l] += (tcc.phi0[J.field][0] * grad_at(I.field, 1, l)).scaled(coef);
            } else {
                fail(Errc::InvalidGenerator, "unsupported quadratic source levels");
            }
        }

        // Linear time sources rooted at the distinguished slot and at the
        // row's own slot.
        for (const auto& [st, coef] : op.b) {
            const TimeIdx& src = st.first;
            const TimeIdx& tgt = st.second;
            if (src.p != 0) continue;
            if (src.field == u) low[l] += grad_at(tgt.field, tgt.p + 1, l).scaled(coef);
            if (src.field == l) {
                low[l] += grad_at(tgt.field, tgt.p + 1, u).scaled(coef);
                odd_rows[l] += tcc.phi0[tgt.field][size_t(tgt.p)].scaled(coef);
            }
        }

        // Linear odd-variable terms.
        odd_rows[l] -= DiffPoly::generator(ctx, odg(l, 2)).scaled(PRat(Rat(5) / 2) + dh.mu[l]);
        for (size_t z = 0; z < n; ++z)
            if (!N[z][l].is_zero()) odd_rows[l] -= N[z][l] * DiffPoly::generator(ctx, odg(z, 1));
    }

    EvolDerivation x0;
    x0.ctx = ctx;
    x0.parity = 0;
    x0.dx_table = pair.dx_table();
    for (size_t r = 0; r < n; ++r) {
        DiffPoly img(ctx);
        for (size_t l = 0; l < n; ++l) img += low[l].scaled(eta[r][l]);
        if (!img.is_zero()) x0.images.emplace(evg(r), std::move(img));
    }
    for (size_t l = 0; l < n; ++l) {
        DiffPoly img = reduce_recursion(odd_rows[l], pair);
        if (!is_local(img))
            fail(Errc::NonLocalObstruction,
                 "particular solution is not local: the hierarchy is not tau-symmetric "
                 "in this normalization");
        if (!img.is_zero()) x0.images.emplace(odg(l, 0), std::move(img));
    }

    // The defining equation of the particular solution.
    std::vector<Gen> coords;
    for (size_t l = 0; l < n; ++l) coords.push_back(evg(l));
    for (size_t l = 0; l < n; ++l) coords.push_back(odg(l, 0));
    std::map<Gen, DiffPoly> br = bracket_on(tcc.tau_flows[0], x0, coords);
    for (const Gen& g : coords) {
        DiffPoly want = i0.image_of(g);
        DiffPoly got(ctx);
        if (auto it = br.find(g); it != br.end()) got = it->second;
        if (got != want)
            fail(Errc::VerificationFailed, "particular solution does not satisfy its defining "
                                           "equation at " + gen_to_string(g));
    }
    return x0;
}

SymmetryReport assemble_and_verify_s2(const TauCoverContext& tcc, const EvolDerivation& skeleton,
                                      const EvolDerivation& x) {
    const CtxPtr& ctx = tcc.dh.pair.context();
    size_t n = ctx->n_fields();

    SymmetryReport rep;
    rep.s2 = skeleton;
    for (const auto& [g, img] : x.images) {
        auto it = rep.s2.images.find(g);
        if (it == rep.s2.images.end())
            rep.s2.images.emplace(g, img);
        else
            it->second += img;
    }

    std::vector<Gen> coords;
    for (size_t l = 0; l < n; ++l) coords.push_back(evg(l));
    for (size_t l = 0; l < n; ++l) coords.push_back(odg(l, 0));

    std::vector<std::pair<std::string, const EvolDerivation*>> checks;
    checks.push_back({"tau_0", &tcc.tau_flows[0]});
    checks.push_back({"tau_1", &tcc.tau_flows[1]});
    std::vector<std::pair<std::string, EvolDerivation>> hold;
    for (size_t a = 0; a < n; ++a)
        for (int p = 1; p <= std::min(2, tcc.t_slots); ++p)
            hold.push_back({"t_" + std::to_string(a) + "_" + std::to_string(p),
                            tcc.t_flows[a][p]});
    for (const auto& [name, fl] : hold) checks.push_back({name, &fl});

    rep.ok = true;
    for (const auto& [name, fl] : checks) {
        std::map<Gen, DiffPoly> br = bracket_on(rep.s2, *fl, coords);
        for (auto& [g, poly] : br) {
            rep.ok = false;
            rep.residuals.push_back({name + " @ " + gen_to_string(g), std::move(poly)});
        }
    }
    return rep;
}

DiffPoly extract_O2(const TauCoverContext& tcc, const EvolDerivation& corr,
                    const QuadraticTauOperator& op) {
    const BihamPair& pair = tcc.dh.pair;
    const CtxPtr& ctx = pair.context();
    size_t eidx = eps_index(ctx);
    size_t u = tcc.dh.unity;

    DiffPoly rate = corr.apply(tcc.dh.h(u, 0));
    auto q = invert_dx(rate);
    if (!q) fail(Errc::NotATauSymmetry, "correction rate is not a total x-derivative");
    auto twice = invert_dx(*q);
    if (!twice)
        fail(Errc::NotATauSymmetry, "correction rate is not an exact second x-derivative");

    PRat einv2 = eps_var(ctx).inverse();
    einv2 = einv2 * einv2;
    DiffPoly o2 = twice->scaled(einv2);
    if (!poly_polynomial_in(o2, eidx))
        fail(Errc::NotATauSymmetry, "scalar term has a pole in the deformation parameter");

    for (const auto& [tp, coef] : op.a) {
        auto [I, J] = pair_slots(tp);
        o2 -= tcc.omega_at(I.field, I.p, J.field, J.p).scaled(coef);
    }
    return o2;
}

LinearizabilityResult linearizability_check_1d(const TauCoverContext& tcc, const DiffPoly& o2) {
    const BihamPair& pair = tcc.dh.pair;
    const CtxPtr& ctx = pair.context();
    if (ctx->n_fields() != 1)
        fail(Errc::ContextMismatch, "one-coordinate test requires a single field");

    const DiffPoly& h1 = tcc.dh.h(0, 1);
    MonoKey quad;
    quad.evens.push_back({evg(0), 2});
    PRat denom = h1.coefficient(quad);
    if (denom.is_zero())
        fail(Errc::VerificationFailed, "level-one density lacks its quadratic term");
    PRat kappa = o2.coefficient(quad) * denom.inverse();

    if (o2 != h1.scaled(kappa))
        fail(Errc::VerificationFailed,
             "scalar term is not proportional to the level-one density");

    LinearizabilityResult res;
    res.obstruction = kappa;
    if (kappa.is_rational()) {
        res.linearizable = kappa.is_zero();
    } else {
        res.linearizable = std::nullopt;
        res.condition = prat_to_string(kappa, *ctx) + " = 0";
    }
    return res;
}

VirasoroSolution solve_virasoro_s2(const TauCoverContext& tcc, const QuadraticTauOperator& op,
                                   const PRat& c0) {
    const CtxPtr& ctx = tcc.dh.pair.context();

    VirasoroSolution sol;
    sol.skeleton = assemble_s2_skeleton(tcc, op, c0);
    sol.i0 = derive_I(tcc, sol.skeleton, 0);
    sol.i1 = derive_I(tcc, sol.skeleton, 1);

    if (!check_closed(tcc, tcc.tau_flows[0], sol.i0))
        fail(Errc::VerificationFailed, "first source fails its closedness condition");

    sol.x0 = particular_x0(tcc, op, sol.i0);

    size_t n = ctx->n_fields();
    std::vector<Gen> coords;
    for (size_t l = 0; l < n; ++l) coords.push_back(evg(l));
    for (size_t l = 0; l < n; ++l) coords.push_back(odg(l, 0));

    std::map<Gen, DiffPoly> target2 = bracket_on(tcc.tau_flows[1], sol.x0, coords);
    for (auto& [g, poly] : target2) poly = -poly;
    for (const auto& [g, poly] : sol.i1.images) {
        auto it = target2.find(g);
        if (it == target2.end())
            target2.emplace(g, poly);
        else {
            it->second += poly;
            if (it->second.is_zero()) target2.erase(it);
        }
    }
    EvolDerivation t2der;
    t2der.ctx = ctx;
    t2der.parity = 1;
    t2der.images = target2;
    t2der.dx_table = tcc.dh.pair.dx_table();
    if (!check_closed(tcc, tcc.tau_flows[0], t2der))
        fail(Errc::VerificationFailed, "second source fails its closedness condition");

    HomologicalProblem prob;
    prob.eqs.push_back({tcc.tau_flows[0], {}});
    prob.eqs.push_back({tcc.tau_flows[1], target2});
    prob.eps_min = 2;
    prob.eps_max = 4;
    prob.parity = 0;
    prob.even_degree0 = 3;
    sol.corr = solve_homological(tcc, prob);

    sol.x = derivation_sum(sol.x0, sol.corr);
    sol.report = assemble_and_verify_s2(tcc, sol.skeleton, sol.x);
    if (!sol.report.ok)
        fail(Errc::VerificationFailed, "assembled symmetry fails its bracket checks");

    sol.o2 = extract_O2(tcc, sol.corr, op);
    if (ctx->n_fields() == 1) sol.lin = linearizability_check_1d(tcc, sol.o2);
    return sol;
}

BihamPair kdv_family_pair(int max_level) {
    CtxPtr ctx = make_context({"v"}, {{"eps", -1}, {"c", 0}, {"c0", 0}}, max_level);
    DiffPoly s0 = DiffPoly::generator(ctx, odg(0, 0));
    DiffPoly s1 = DiffPoly::generator(ctx, Gen::odd(0, 0, 1));
    DiffPoly s3 = DiffPoly::generator(ctx, Gen::odd(0, 0, 3));
    DiffPoly v = DiffPoly::generator(ctx, evg(0));
    PRat e2c = PRat::variable(0) * PRat::variable(0) * PRat::variable(1);
    LocalFunctional p0 = functional((s0 * s1).scaled(PRat(Rat(1) / 2)));
    LocalFunctional p1 =
        functional((v * s0 * s1 + (s0 * s3).scaled(e2c)).scaled(PRat(Rat(1) / 2)));
    return BihamPair(p0, p1);
}

BihamPair kdv_family_pair_at(int max_level, const Rat& c_value) {
    CtxPtr ctx = make_context({"v"}, {{"eps", -1}, {"c", 0}, {"c0", 0}}, max_level);
    DiffPoly s0 = DiffPoly::generator(ctx, odg(0, 0));
    DiffPoly s1 = DiffPoly::generator(ctx, Gen::odd(0, 0, 1));
    DiffPoly s3 = DiffPoly::generator(ctx, Gen::odd(0, 0, 3));
    DiffPoly v = DiffPoly::generator(ctx, evg(0));
    PRat e2c = PRat::variable(0) * PRat::variable(0) * PRat(c_value);
    LocalFunctional p0 = functional((s0 * s1).scaled(PRat(Rat(1) / 2)));
    LocalFunctional p1 =
        functional((v * s0 * s1 + (s0 * s3).scaled(e2c)).scaled(PRat(Rat(1) / 2)));
    return BihamPair(p0, p1);
}

}  // namespace superjet
