#include "superjet/frobenius.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "superjet/errors.hpp"

namespace superjet {

namespace {

Gen ev(size_t a) { return Gen::even(static_cast<uint16_t>(a), 0); }

DiffPoly field_var(const CtxPtr& ctx, size_t a) { return DiffPoly::generator(ctx, ev(a)); }

// Total polynomial degree of one monomial in the fields.
int64_t field_degree(const MonoKey& k) {
    int64_t d = static_cast<int64_t>(k.odds.size());
    for (const auto& [g, e] : k.evens) {
        (void)g;
        d += e;
    }
    return d;
}

// Constant value of a polynomial with no generator dependence; nullopt when
// any generator survives.
std::optional<PRat> const_value(const DiffPoly& f) {
    if (f.is_zero()) return PRat::zero();
    if (f.n_terms() != 1) return std::nullopt;
    const auto& [key, coeff] = *f.terms().begin();
    if (!key.evens.empty() || !key.odds.empty()) return std::nullopt;
    return coeff;
}

// Third derivative tensor of the potential, indexed [a][b][g].
std::vector<std::vector<std::vector<DiffPoly>>> third_derivatives(const DiffPoly& F, size_t n) {
    std::vector<std::vector<std::vector<DiffPoly>>> t(
        n, std::vector<std::vector<DiffPoly>>(n, std::vector<DiffPoly>(n)));
    for (size_t a = 0; a < n; ++a) {
        DiffPoly fa = F.partial(ev(a));
        for (size_t b = a; b < n; ++b) {
            DiffPoly fab = fa.partial(ev(b));
            for (size_t g = b; g < n; ++g) {
                DiffPoly fabg = fab.partial(ev(g));
                // totally symmetric: fill every permutation
                size_t idx[3] = {a, b, g};
                std::sort(idx, idx + 3);
                do {
                    t[idx[0]][idx[1]][idx[2]] = fabg;
                } while (std::next_permutation(idx, idx + 3));
            }
        }
    }
    return t;
}

// eta_{ab} from the third derivatives along the unity direction; throws when
// an entry fails to be constant.
PMatrix pairing_from(const std::vector<std::vector<std::vector<DiffPoly>>>& t, size_t n) {
    PMatrix eta(n, std::vector<PRat>(n, PRat::zero()));
    for (size_t a = 0; a < n; ++a)
        for (size_t b = 0; b < n; ++b) {
            auto c = const_value(t[0][a][b]);
            if (!c)
                fail(Errc::EtaNotConstant,
                     "pairing entry (" + std::to_string(a) + "," + std::to_string(b) +
                         ") depends on the fields");
            eta[a][b] = *c;
        }
    return eta;
}

}  // namespace

DiffPoly FrobeniusData::c_lower(size_t a, size_t b, size_t g) const {
    return F.partial(ev(a)).partial(ev(b)).partial(ev(g));
}

DiffPoly FrobeniusData::c_mixed(size_t g, size_t a, size_t b) const {
    DiffPoly out(ctx);
    for (size_t l = 0; l < n; ++l) {
        if (eta_inv[g][l].is_zero()) continue;
        out += c_lower(l, a, b).scaled(eta_inv[g][l]);
    }
    return out;
}

DiffPoly FrobeniusData::c_upper2(size_t a, size_t b, size_t g) const {
    DiffPoly out(ctx);
    for (size_t l = 0; l < n; ++l) {
        if (eta_inv[a][l].is_zero()) continue;
        out += c_mixed(b, l, g).scaled(eta_inv[a][l]);
    }
    return out;
}

DiffPoly FrobeniusData::euler_coeff(size_t a) const {
    PRat q = PRat::one() - d * PRat(Rat(1) / 2) - mu[a];
    DiffPoly out = field_var(ctx, a).scaled(q);
    if (!r[a].is_zero()) out += DiffPoly::constant(ctx, r[a]);
    return out;
}

DiffPoly FrobeniusData::euler_apply(const DiffPoly& f) const {
    DiffPoly out(ctx);
    for (size_t a = 0; a < n; ++a) out += euler_coeff(a) * f.partial(ev(a));
    return out;
}

bool FrobeniusData::has_R() const {
    for (const auto& m : R)
        for (const auto& row : m)
            for (const auto& x : row)
                if (!x.is_zero()) return true;
    return false;
}

WdvvReport wdvv_check(const CtxPtr& ctx, const DiffPoly& F) {
    const size_t n = ctx->n_fields();
    auto t = third_derivatives(F, n);
    PMatrix eta = pairing_from(t, n);
    auto inv = invert_matrix(eta);
    if (!inv) fail(Errc::EtaSingular, "pairing of the potential is degenerate");
    WdvvReport rep;
    for (size_t a = 0; a < n; ++a)
        for (size_t b = 0; b < n; ++b)
            for (size_t g = 0; g < n; ++g)
                for (size_t dl = 0; dl < n; ++dl) {
                    DiffPoly lhs(ctx), rhs(ctx);
                    for (size_t l = 0; l < n; ++l)
                        for (size_t m = 0; m < n; ++m) {
                            if ((*inv)[l][m].is_zero()) continue;
                            lhs += (t[a][b][l] * t[m][g][dl]).scaled((*inv)[l][m]);
                            rhs += (t[dl][b][l] * t[m][g][a]).scaled((*inv)[l][m]);
                        }
                    if (lhs != rhs) {
                        rep.ok = false;
                        rep.first_fail = {a, b, g, dl};
                        return rep;
                    }
                }
    return rep;
}

FrobeniusData make_frobenius(CtxPtr ctx, DiffPoly F, std::vector<PRat> mu, std::vector<PRat> r,
                             std::vector<PMatrix> R, PRat d) {
    FrobeniusData data;
    data.ctx = std::move(ctx);
    data.n = data.ctx->n_fields();
    const size_t n = data.n;
    if (mu.size() != n || r.size() != n)
        fail(Errc::VerificationFailed, "spectrum and shift vectors must match the field count");
    for (const auto& m : R)
        if (m.size() != n || (n && m[0].size() != n))
            fail(Errc::VerificationFailed, "grading matrix of wrong shape");
    for (Gen g : F.generators())
        if (g.kind != GenKind::EvenJet || g.order != 0)
            fail(Errc::VerificationFailed, "potential must depend on the order-0 fields only");

    auto t = third_derivatives(F, n);
    data.eta = pairing_from(t, n);
    auto inv = invert_matrix(data.eta);
    if (!inv) fail(Errc::EtaSingular, "pairing of the potential is degenerate");
    data.eta_inv = *inv;
    data.F = std::move(F);
    data.mu = std::move(mu);
    data.r = std::move(r);
    data.R = std::move(R);
    data.d = std::move(d);

    WdvvReport rep = wdvv_check(data.ctx, data.F);
    if (!rep.ok)
        fail(Errc::WdvvFailed, "product is not associative at indices (" +
                                   std::to_string(rep.first_fail[0]) + "," +
                                   std::to_string(rep.first_fail[1]) + "," +
                                   std::to_string(rep.first_fail[2]) + "," +
                                   std::to_string(rep.first_fail[3]) + ")");

    if (!(data.mu[0] + data.d * PRat(Rat(1) / 2)).is_zero())
        fail(Errc::VerificationFailed, "mu_0 must equal -d/2");
    if (!data.r[0].is_zero()) fail(Errc::VerificationFailed, "r_0 must vanish");
    for (size_t a = 0; a < n; ++a)
        for (size_t b = 0; b < n; ++b)
            if (!((data.mu[a] + data.mu[b]) * data.eta[a][b]).is_zero())
                fail(Errc::VerificationFailed, "spectrum is not skew with respect to the pairing");
    for (size_t k = 1; k <= data.R.size(); ++k) {
        const PMatrix& Rk = data.R[k - 1];
        for (size_t a = 0; a < n; ++a)
            for (size_t b = 0; b < n; ++b) {
                // [mu, R_k] = k R_k entrywise
                if (!((data.mu[a] - data.mu[b]) * Rk[a][b] - PRat(Rat(k)) * Rk[a][b]).is_zero())
                    fail(Errc::VerificationFailed,
                         "grading matrix " + std::to_string(k) + " is not a degree-" +
                             std::to_string(k) + " raiser");
            }
        // eta_{ag} (R_k)^g_b = (-1)^{k+1} eta_{bg} (R_k)^g_a
        PRat sign = (k % 2 == 1) ? PRat::one() : PRat(Rat(-1));
        for (size_t a = 0; a < n; ++a)
            for (size_t b = 0; b < n; ++b) {
                PRat lhs = PRat::zero(), rhs = PRat::zero();
                for (size_t g = 0; g < n; ++g) {
                    lhs = lhs + data.eta[a][g] * Rk[g][b];
                    rhs = rhs + data.eta[b][g] * Rk[g][a];
                }
                if (!(lhs - sign * rhs).is_zero())
                    fail(Errc::VerificationFailed,
                         "grading matrix " + std::to_string(k) + " breaks the pairing parity");
            }
    }

    // E(F) - (3 - d) F must be at most quadratic in the fields.
    DiffPoly excess = data.euler_apply(data.F) - data.F.scaled(PRat(Rat(3)) - data.d);
    for (const auto& [key, coeff] : excess.terms()) {
        (void)coeff;
        if (field_degree(key) > 2)
            fail(Errc::VerificationFailed, "potential is not quasi-homogeneous for the grading");
    }
    return data;
}

FrobeniusData make_frobenius_euler(CtxPtr ctx, DiffPoly F, std::vector<PRat> euler_q,
                                   std::vector<PRat> r, std::vector<PMatrix> R, PRat d) {
    std::vector<PRat> mu;
    mu.reserve(euler_q.size());
    for (const auto& q : euler_q) mu.push_back(PRat::one() - d * PRat(Rat(1) / 2) - q);
    return make_frobenius(std::move(ctx), std::move(F), std::move(mu), std::move(r), std::move(R),
                          std::move(d));
}

const DiffPoly& Calibration::at(size_t a, int p) const {
    if (p < 0 || p > depth || a >= h.size())
        fail(Errc::LevelOutOfRange, "calibration entry out of range");
    return h[a][static_cast<size_t>(p)];
}

namespace {

// All exponent vectors over n fields with total degree in [1, D].
void enumerate_monos(size_t n, int D, std::vector<std::vector<int>>& out) {
    std::vector<int> e(n, 0);
    auto rec = [&](auto&& self, size_t pos, int rem) -> void {
        if (pos + 1 == n) {
            e[pos] = rem;
            out.push_back(e);
            return;
        }
        for (int k = 0; k <= rem; ++k) {
            e[pos] = k;
            self(self, pos + 1, rem - k);
        }
    };
    for (int deg = 1; deg <= D; ++deg) rec(rec, 0, deg);
}

DiffPoly mono_poly(const CtxPtr& ctx, const std::vector<int>& e) {
    DiffPoly out = DiffPoly::constant(ctx, PRat::one());
    for (size_t a = 0; a < e.size(); ++a)
        if (e[a] > 0) out *= field_var(ctx, a).pow(e[a]);
    return out;
}

}  // namespace

Calibration calibrate(const FrobeniusData& data, int depth) {
    const size_t n = data.n;
    const CtxPtr& ctx = data.ctx;
    Calibration cal;
    cal.depth = depth;
    cal.h.assign(n, {});
    for (size_t a = 0; a < n; ++a) {
        DiffPoly h0(ctx);
        for (size_t b = 0; b < n; ++b)
            if (!data.eta[a][b].is_zero()) h0 += field_var(ctx, b).scaled(data.eta[a][b]);
        cal.h[a].push_back(h0);
    }

    // c^g_{ab} cached once
    std::vector<std::vector<std::vector<DiffPoly>>> cmix(
        n, std::vector<std::vector<DiffPoly>>(n, std::vector<DiffPoly>(n)));
    for (size_t g = 0; g < n; ++g)
        for (size_t a = 0; a < n; ++a)
            for (size_t b = a; b < n; ++b) {
                cmix[g][a][b] = data.c_mixed(g, a, b);
                cmix[g][b][a] = cmix[g][a][b];
            }

    for (int lvl = 1; lvl <= depth; ++lvl) {
        // Hessian targets d_b d_g H^(a) = sum_l c^l_{bg} d_l h_{a,lvl-1}
        std::vector<std::vector<std::vector<DiffPoly>>> hes(
            n, std::vector<std::vector<DiffPoly>>(n, std::vector<DiffPoly>(n)));
        int64_t dmax = 0;
        for (size_t a = 0; a < n; ++a)
            for (size_t b = 0; b < n; ++b)
                for (size_t g = b; g < n; ++g) {
                    DiffPoly s(ctx);
                    for (size_t l = 0; l < n; ++l)
                        s += cmix[l][b][g] * cal.h[a][static_cast<size_t>(lvl - 1)].partial(ev(l));
                    hes[a][b][g] = s;
                    for (const auto& [key, coeff] : s.terms()) {
                        (void)coeff;
                        dmax = std::max(dmax, field_degree(key));
                    }
                }

        std::vector<std::vector<int>> basis;
        enumerate_monos(n, static_cast<int>(dmax) + 2, basis);
        std::vector<DiffPoly> bpoly;
        bpoly.reserve(basis.size());
        for (const auto& e : basis) bpoly.push_back(mono_poly(ctx, e));
        const size_t ncols = n * basis.size();
        auto col = [&](size_t a, size_t i) { return a * basis.size() + i; };

        struct EqRow {
            std::map<size_t, PRat> lhs;
            PRat rhs;
        };
        std::vector<EqRow> rows;
        auto add_equation = [&](const std::vector<std::pair<size_t, DiffPoly>>& contribs,
                                const DiffPoly& known) {
            std::set<MonoKey> keys;
            for (const auto& [c, poly] : contribs) {
                (void)c;
                for (const auto& [key, coeff] : poly.terms()) {
                    (void)coeff;
                    keys.insert(key);
                }
            }
            for (const auto& [key, coeff] : known.terms()) {
                (void)coeff;
                keys.insert(key);
            }
            for (const auto& key : keys) {
                EqRow row;
                for (const auto& [c, poly] : contribs) {
                    PRat v = poly.coefficient(key);
                    if (v.is_zero()) continue;
                    auto [it, fresh] = row.lhs.try_emplace(c, v);
                    if (!fresh) it->second = it->second + v;
                }
                row.rhs = PRat::zero() - known.coefficient(key);
                rows.push_back(std::move(row));
            }
        };

        for (size_t a = 0; a < n; ++a) {
            // second derivatives hit the target
            for (size_t b = 0; b < n; ++b)
                for (size_t g = b; g < n; ++g) {
                    std::vector<std::pair<size_t, DiffPoly>> contribs;
                    for (size_t i = 0; i < basis.size(); ++i) {
                        DiffPoly d2 = bpoly[i].partial(ev(b)).partial(ev(g));
                        if (!d2.is_zero()) contribs.emplace_back(col(a, i), d2);
                    }
                    add_equation(contribs, -hes[a][b][g]);
                }
            // grading: E(d_b H) - (lvl + mu_a + mu_b) d_b H = R-terms
            for (size_t b = 0; b < n; ++b) {
                PRat w = PRat(Rat(lvl)) + data.mu[a] + data.mu[b];
                std::vector<std::pair<size_t, DiffPoly>> contribs;
                for (size_t i = 0; i < basis.size(); ++i) {
                    DiffPoly db = bpoly[i].partial(ev(b));
                    if (db.is_zero()) continue;
                    DiffPoly c = data.euler_apply(db) - db.scaled(w);
                    if (!c.is_zero()) contribs.emplace_back(col(a, i), c);
                }
                DiffPoly known(ctx);
                for (size_t k = 1; k <= data.R.size() && static_cast<int>(k) <= lvl; ++k)
                    for (size_t g = 0; g < n; ++g) {
                        if (data.R[k - 1][g][a].is_zero()) continue;
                        known -= cal.h[g][static_cast<size_t>(lvl - static_cast<int>(k))]
                                     .partial(ev(b))
                                     .scaled(data.R[k - 1][g][a]);
                    }
                add_equation(contribs, known);
            }
        }
        // z-pairing normalization at order lvl:
        // d_b H^(a) + (-1)^lvl d_a H^(b) + middle = 0
        PRat sgn = (lvl % 2 == 0) ? PRat::one() : PRat(Rat(-1));
        for (size_t a = 0; a < n; ++a)
            for (size_t b = a; b < n; ++b) {
                std::vector<std::pair<size_t, DiffPoly>> contribs;
                for (size_t i = 0; i < basis.size(); ++i) {
                    DiffPoly da = bpoly[i].partial(ev(b));
                    if (!da.is_zero()) contribs.emplace_back(col(a, i), da);
                    DiffPoly db = bpoly[i].partial(ev(a)).scaled(sgn);
                    if (!db.is_zero()) contribs.emplace_back(col(b, i), db);
                }
                DiffPoly middle(ctx);
                for (int i = 1; i <= lvl - 1; ++i) {
                    PRat msgn = ((lvl - i) % 2 == 0) ? PRat::one() : PRat(Rat(-1));
                    for (size_t l = 0; l < n; ++l)
                        for (size_t m = 0; m < n; ++m) {
                            if (data.eta_inv[l][m].is_zero()) continue;
                            middle += (cal.h[a][static_cast<size_t>(i)].partial(ev(l)) *
                                       cal.h[b][static_cast<size_t>(lvl - i)].partial(ev(m)))
                                          .scaled(data.eta_inv[l][m] * msgn);
                        }
                }
                add_equation(contribs, middle);
            }

        PMatrix mat(rows.size(), std::vector<PRat>(ncols, PRat::zero()));
        std::vector<PRat> rhs(rows.size(), PRat::zero());
        for (size_t r = 0; r < rows.size(); ++r) {
            for (const auto& [c, v] : rows[r].lhs) mat[r][c] = v;
            rhs[r] = rows[r].rhs;
        }
        LinearSolution sol = solve_linear(std::move(mat), std::move(rhs));
        if (!sol.consistent)
            fail(Errc::NoSolution, "density recursion inconsistent at level " +
                                       std::to_string(lvl));
        if (!sol.kernel.empty())
            fail(Errc::ResonantCalibration,
                 "density at level " + std::to_string(lvl) + " underdetermined (" +
                     std::to_string(sol.kernel.size()) + " free integration constants)");
        for (size_t a = 0; a < n; ++a) {
            DiffPoly h(ctx);
            for (size_t i = 0; i < basis.size(); ++i) {
                const PRat& v = sol.particular[col(a, i)];
                if (!v.is_zero()) h += bpoly[i].scaled(v);
            }
            cal.h[a].push_back(h);
        }
    }
    return cal;
}

LocalFunctional principal_x(const FrobeniusData& data, const Calibration& cal, size_t a, int p) {
    const CtxPtr& ctx = data.ctx;
    DiffPoly density(ctx);
    for (size_t l = 0; l < data.n; ++l) {
        DiffPoly flow(ctx);
        for (size_t g = 0; g < data.n; ++g) {
            if (data.eta_inv[l][g].is_zero()) continue;
            flow += cal.at(a, p + 1).partial(ev(g)).dx().scaled(data.eta_inv[l][g]);
        }
        density += flow * DiffPoly::generator(ctx, Gen::odd(static_cast<uint16_t>(l), 0, 0));
    }
    return functional(density);
}

BihamPair biham_from_frobenius(const FrobeniusData& data) {
    const CtxPtr& ctx = data.ctx;
    const size_t n = data.n;
    auto sig = [&](size_t a, int s) {
        return DiffPoly::generator(ctx, Gen::odd(static_cast<uint16_t>(a), 0, s));
    };
    DiffPoly d0(ctx), d1(ctx);
    for (size_t a = 0; a < n; ++a)
        for (size_t b = 0; b < n; ++b) {
            if (!data.eta_inv[a][b].is_zero())
                d0 += (sig(a, 0) * sig(b, 1)).scaled(data.eta_inv[a][b] * PRat(Rat(1) / 2));
            DiffPoly g(ctx);
            for (size_t e = 0; e < n; ++e) g += data.euler_coeff(e) * data.c_upper2(a, b, e);
            d1 += (g * sig(a, 0) * sig(b, 1)).scaled(PRat(Rat(1) / 2));
            for (size_t gi = 0; gi < n; ++gi) {
                DiffPoly gamma = data.c_upper2(a, b, gi).scaled(PRat(Rat(1) / 2) - data.mu[b]);
                if (gamma.is_zero()) continue;
                DiffPoly v1 = DiffPoly::generator(ctx, Gen::even(static_cast<uint16_t>(gi), 1));
                d1 += (gamma * v1 * sig(a, 0) * sig(b, 0)).scaled(PRat(Rat(1) / 2));
            }
        }
    BihamPair pair(functional(d0), functional(d1));
    LocalFunctional z = functional(sig(0, 0));
    if (!(schouten(z, pair.p1()) == pair.p0()))
        fail(Errc::ExactnessFailed,
             "flat bivector is not the unity-direction derivative of the second one");
    return pair;
}

DiffPoly omega(const FrobeniusData& data, const Calibration& cal, size_t a, int p, size_t b,
               int q) {
    if (p < 0 || q < 0 || p + q + 1 > cal.depth)
        fail(Errc::LevelOutOfRange, "two-point entry needs calibration depth " +
                                        std::to_string(p + q + 1));
    const CtxPtr& ctx = data.ctx;
    auto N = [&](int i, int j) {
        DiffPoly s(ctx);
        for (size_t l = 0; l < data.n; ++l)
            for (size_t m = 0; m < data.n; ++m) {
                if (data.eta_inv[l][m].is_zero()) continue;
                s += (cal.at(a, i).partial(ev(l)) * cal.at(b, j).partial(ev(m)))
                         .scaled(data.eta_inv[l][m]);
            }
        if (i == 0 && j == 0) s -= DiffPoly::constant(ctx, data.eta[a][b]);
        return s;
    };
    DiffPoly out(ctx);
    for (int k = 0; k <= q; ++k) {
        DiffPoly term = N(p + 1 + k, q - k);
        out += (k % 2 == 0) ? term : -term;
    }
    return out;
}

EvolDerivation principal_t_flow(const FrobeniusData& data, const Calibration& cal,
                                const BihamPair& pair, size_t b, int p) {
    const CtxPtr& ctx = data.ctx;
    EvolDerivation d;
    d.ctx = ctx;
    d.parity = 0;
    d.dx_table = pair.dx_table();
    const DiffPoly& h = cal.at(b, p + 1);
    for (size_t a = 0; a < data.n; ++a) {
        DiffPoly img(ctx);
        for (size_t g = 0; g < data.n; ++g) {
            if (data.eta_inv[a][g].is_zero()) continue;
            img += h.partial(ev(g)).dx().scaled(data.eta_inv[a][g]);
        }
        d.images[ev(a)] = img;
    }
    for (size_t a = 0; a < data.n; ++a)
        for (int k = 0; k <= ctx->max_odd_level; ++k) {
            DiffPoly img(ctx);
            for (size_t g = 0; g < data.n; ++g)
                for (size_t e = 0; e < data.n; ++e) {
                    if (data.eta_inv[g][e].is_zero()) continue;
                    DiffPoly coef = h.partial(ev(a)).partial(ev(e)).scaled(data.eta_inv[g][e]);
                    if (coef.is_zero()) continue;
                    img += coef * DiffPoly::generator(
                                      ctx, Gen::odd(static_cast<uint16_t>(g), k, 1));
                }
            d.images[Gen::odd(static_cast<uint16_t>(a), k, 0)] = reduce_recursion(img, pair);
        }
    return d;
}

EvolDerivation principal_tau_flow(const FrobeniusData& data, const BihamPair& pair, int m) {
    const CtxPtr& ctx = data.ctx;
    if (m < 0 || m > ctx->max_odd_level)
        fail(Errc::LevelOutOfRange, "odd flow level out of range");
    EvolDerivation d;
    d.ctx = ctx;
    d.parity = 1;
    d.dx_table = pair.dx_table();
    auto sig = [&](size_t a, int lvl, int s) {
        return DiffPoly::generator(ctx, Gen::odd(static_cast<uint16_t>(a), lvl, s));
    };
    for (size_t a = 0; a < data.n; ++a) {
        DiffPoly img(ctx);
        for (size_t b = 0; b < data.n; ++b)
            if (!data.eta_inv[a][b].is_zero())
                img += sig(b, m, 1).scaled(data.eta_inv[a][b]);
        d.images[ev(a)] = reduce_recursion(img, pair);
    }
    // Gamma^{gb}_a sum_{i=0}^{hi-lo-1} s_{b,lo+i} s^1_{g,hi-i-1}, the image of
    // s_{a,lo} under the level-hi odd flow; minus-transposed for lo > hi.
    auto gamma_sum = [&](size_t a, int lo, int hi) {
        DiffPoly img(ctx);
        for (size_t g = 0; g < data.n; ++g)
            for (size_t b = 0; b < data.n; ++b) {
                DiffPoly gamma = data.c_upper2(g, b, a).scaled(PRat(Rat(1) / 2) - data.mu[b]);
                if (gamma.is_zero()) continue;
                for (int i = 0; i < hi - lo; ++i)
                    img += gamma * sig(b, lo + i, 0) * sig(g, hi - i - 1, 1);
            }
        return img;
    };
    for (size_t a = 0; a < data.n; ++a)
        for (int k = 0; k <= ctx->max_odd_level; ++k) {
            DiffPoly img(ctx);
            if (k < m)
                img = gamma_sum(a, k, m);
            else if (k > m)
                img = -gamma_sum(a, m, k);
            d.images[Gen::odd(static_cast<uint16_t>(a), k, 0)] = reduce_recursion(img, pair);
        }
    return d;
}

DiffPoly phi_undeformed(const FrobeniusData& data, const Calibration& cal, size_t a, int p,
                        int m) {
    const CtxPtr& ctx = data.ctx;
    if (m < 0 || p < 0 || m + p > ctx->max_odd_level)
        fail(Errc::LevelOutOfRange, "odd two-point entry exceeds the context level bound");
    if (p == 0) return DiffPoly::generator(ctx, Gen::odd(static_cast<uint16_t>(a), m, 0));
    PRat denom = PRat(Rat(2 * p - 1) / 2) + data.mu[a];
    if (denom.is_zero())
        fail(Errc::ResonantSpectrum, "spectrum value mu = " + std::string("1/2 - ") +
                                         std::to_string(p) + " makes the level recursion singular");
    DiffPoly acc(ctx);
    for (size_t l = 0; l < data.n; ++l)
        for (size_t e = 0; e < data.n; ++e) {
            if (data.eta_inv[l][e].is_zero()) continue;
            PRat w = (PRat(Rat(1) / 2) + data.mu[l]) * data.eta_inv[l][e];
            acc += (cal.at(a, p).partial(ev(l)) *
                    DiffPoly::generator(ctx, Gen::odd(static_cast<uint16_t>(e), m, 0)))
                       .scaled(w);
        }
    for (size_t k = 1; k <= data.R.size() && static_cast<int>(k) <= p; ++k)
        for (size_t x = 0; x < data.n; ++x) {
            if (data.R[k - 1][x][a].is_zero()) continue;
            acc += phi_undeformed(data, cal, x, p - static_cast<int>(k), m)
                       .scaled(data.R[k - 1][x][a]);
        }
    acc -= phi_undeformed(data, cal, a, p - 1, m + 1);
    return acc.scaled(PRat::zero() - denom.inverse());
}

PRat QuadraticTauOperator::a_coef(TimeIdx i, TimeIdx j) const {
    TimePair key = (j < i) ? TimePair{j, i} : TimePair{i, j};
    auto it = a.find(key);
    return it == a.end() ? PRat::zero() : it->second;
}

PRat QuadraticTauOperator::b_coef(TimeIdx src, TimeIdx dst) const {
    auto it = b.find({src, dst});
    return it == b.end() ? PRat::zero() : it->second;
}

PRat QuadraticTauOperator::c_coef(TimeIdx i, TimeIdx j) const {
    TimePair key = (j < i) ? TimePair{j, i} : TimePair{i, j};
    auto it = c.find(key);
    return it == c.end() ? PRat::zero() : it->second;
}

QuadraticTauOperator QuadraticTauOperator::scaled(const PRat& k) const {
    QuadraticTauOperator out = *this;
    if (k.is_zero()) {
        out.a.clear();
        out.b.clear();
        out.c.clear();
        out.scalar = PRat::zero();
        return out;
    }
    for (auto& [key, v] : out.a) v = v * k;
    for (auto& [key, v] : out.b) v = v * k;
    for (auto& [key, v] : out.c) v = v * k;
    out.scalar = out.scalar * k;
    return out;
}

QuadraticTauOperator virasoro_L(const FrobeniusData& data, int m, int cutoff) {
    QuadraticTauOperator op;
    op.scalar = PRat::zero();
    const size_t n = data.n;
    auto ti = [](size_t a, int p) { return TimeIdx{static_cast<uint16_t>(a), p}; };
    if (m == -1) {
        for (size_t a = 0; a < n; ++a)
            for (int p = 1; p <= cutoff; ++p) op.b[{ti(a, p), ti(a, p - 1)}] = PRat::one();
        for (size_t a = 0; a < n; ++a)
            for (size_t b = a; b < n; ++b) {
                if (data.eta[a][b].is_zero()) continue;
                op.c[{ti(a, 0), ti(b, 0)}] =
                    (a == b) ? data.eta[a][b] * PRat(Rat(1) / 2) : data.eta[a][b];
            }
        return op;
    }
    if (m == 2) {
        if (data.has_R())
            fail(Errc::UnsupportedResonance,
                 "quadratic tables for nonzero grading matrices are not determined");
        for (size_t a = 0; a < n; ++a)
            for (size_t b = 0; b < n; ++b) {
                if (data.eta_inv[a][b].is_zero()) continue;
                PRat half = PRat(Rat(1) / 2);
                PRat v = data.eta_inv[a][b] * (half + data.mu[b]) * (half + data.mu[a]) *
                         (PRat(Rat(3) / 2) + data.mu[a]);
                if (v.is_zero()) continue;
                TimeIdx i = ti(a, 1), j = ti(b, 0);
                TimePair key = (j < i) ? TimePair{j, i} : TimePair{i, j};
                auto [it, fresh] = op.a.try_emplace(key, v);
                if (!fresh) it->second = it->second + v;
            }
        for (size_t a = 0; a < n; ++a)
            for (int p = 0; p + 2 <= cutoff; ++p) {
                PRat base = PRat(Rat(1) / 2) + data.mu[a];
                PRat v = (PRat(Rat(p)) + base) * (PRat(Rat(p + 1)) + base) *
                         (PRat(Rat(p + 2)) + base);
                if (!v.is_zero()) op.b[{ti(a, p), ti(a, p + 2)}] = v;
            }
        op.c_known = false;
        return op;
    }
    fail(Errc::UnsupportedResonance, "only the m = -1 and m = 2 tables are stored");
}

namespace {

using OpMat = std::map<TimeIdx, std::map<TimeIdx, PRat>>;

void om_add(OpMat& m, TimeIdx i, TimeIdx j, const PRat& v) {
    if (v.is_zero()) return;
    auto [it, fresh] = m[i].try_emplace(j, v);
    if (!fresh) {
        it->second = it->second + v;
        if (it->second.is_zero()) m[i].erase(it);
    }
}

// Full-sum symmetric coefficient matrix from a displayed-monomial table.
OpMat to_tilde(const std::map<TimePair, PRat>& t) {
    OpMat m;
    for (const auto& [key, v] : t) {
        if (key.first == key.second) {
            om_add(m, key.first, key.second, v);
        } else {
            PRat half = v * PRat(Rat(1) / 2);
            om_add(m, key.first, key.second, half);
            om_add(m, key.second, key.first, half);
        }
    }
    return m;
}

OpMat to_mat(const std::map<TimePair, PRat>& t) {
    OpMat m;
    for (const auto& [key, v] : t) om_add(m, key.first, key.second, v);
    return m;
}

OpMat om_mul(const OpMat& x, const OpMat& y) {
    OpMat out;
    for (const auto& [i, row] : x)
        for (const auto& [j, v] : row) {
            auto it = y.find(j);
            if (it == y.end()) continue;
            for (const auto& [k, w] : it->second) om_add(out, i, k, v * w);
        }
    return out;
}

void om_axpy(OpMat& acc, const OpMat& m, const PRat& k) {
    for (const auto& [i, row] : m)
        for (const auto& [j, v] : row) om_add(acc, i, j, v * k);
}

// (m + m^T) / 2
OpMat om_sym(const OpMat& m) {
    OpMat out;
    PRat half = PRat(Rat(1) / 2);
    for (const auto& [i, row] : m)
        for (const auto& [j, v] : row) {
            om_add(out, i, j, v * half);
            om_add(out, j, i, v * half);
        }
    return out;
}

PRat om_trace_mul(const OpMat& x, const OpMat& y) {
    PRat s = PRat::zero();
    for (const auto& [i, row] : x)
        for (const auto& [j, v] : row) {
            auto it = y.find(j);
            if (it == y.end()) continue;
            auto jt = it->second.find(i);
            if (jt != it->second.end()) s = s + v * jt->second;
        }
    return s;
}

std::map<TimePair, PRat> from_sym(const OpMat& m) {
    std::map<TimePair, PRat> out;
    for (const auto& [i, row] : m)
        for (const auto& [j, v] : row) {
            if (j < i || v.is_zero()) continue;
            out[{i, j}] = (i == j) ? v : v * PRat(Rat(2));
        }
    return out;
}

std::map<TimePair, PRat> from_mat(const OpMat& m) {
    std::map<TimePair, PRat> out;
    for (const auto& [i, row] : m)
        for (const auto& [j, v] : row)
            if (!v.is_zero()) out[{i, j}] = v;
    return out;
}

// A product term P * Q is determined when both tables are known, or when
// either factor is known to vanish.
bool term_ok(bool kp, bool ep, bool kq, bool eq) {
    return (kp && ep) || (kq && eq) || (kp && kq);
}

}  // namespace

QuadraticTauOperator tau_op_commutator(const QuadraticTauOperator& x,
                                       const QuadraticTauOperator& y) {
    OpMat ax = to_tilde(x.a), ay = to_tilde(y.a);
    OpMat cx = to_tilde(x.c), cy = to_tilde(y.c);
    OpMat bx = to_mat(x.b), by = to_mat(y.b);

    QuadraticTauOperator out;
    out.scalar = PRat::zero();
    out.a_known = term_ok(x.a_known, x.a.empty(), y.b_known, y.b.empty()) &&
                  term_ok(y.a_known, y.a.empty(), x.b_known, x.b.empty());
    out.b_known = term_ok(x.b_known, x.b.empty(), y.b_known, y.b.empty()) &&
                  term_ok(y.c_known, y.c.empty(), x.a_known, x.a.empty()) &&
                  term_ok(x.c_known, x.c.empty(), y.a_known, y.a.empty());
    out.c_known = term_ok(x.b_known, x.b.empty(), y.c_known, y.c.empty()) &&
                  term_ok(y.b_known, y.b.empty(), x.c_known, x.c.empty());
    out.scalar_known = term_ok(x.a_known, x.a.empty(), y.c_known, y.c.empty()) &&
                       term_ok(y.a_known, y.a.empty(), x.c_known, x.c.empty());

    if (out.a_known) {
        OpMat acc;
        om_axpy(acc, om_sym(om_mul(ax, by)), PRat(Rat(2)));
        om_axpy(acc, om_sym(om_mul(ay, bx)), PRat(Rat(-2)));
        out.a = from_sym(acc);
    }
    if (out.b_known) {
        OpMat acc;
        om_axpy(acc, om_mul(bx, by), PRat::one());
        om_axpy(acc, om_mul(by, bx), PRat(Rat(-1)));
        om_axpy(acc, om_mul(cy, ax), PRat(Rat(4)));
        om_axpy(acc, om_mul(cx, ay), PRat(Rat(-4)));
        out.b = from_mat(acc);
    }
    if (out.c_known) {
        OpMat acc;
        om_axpy(acc, om_sym(om_mul(bx, cy)), PRat(Rat(2)));
        om_axpy(acc, om_sym(om_mul(by, cx)), PRat(Rat(-2)));
        out.c = from_sym(acc);
    }
    if (out.scalar_known)
        out.scalar = (om_trace_mul(ax, cy) - om_trace_mul(ay, cx)) * PRat(Rat(2));
    return out;
}

}  // namespace superjet
