#include "superjet/variational.hpp"

#include <algorithm>
#include <array>
#include <mutex>
#include <set>

namespace superjet {

namespace {

// dx preserves the generator content of a monomial (which fields and odd
// levels appear, with multiplicities) and raises the unweighted jet degree by
// exactly one, so canonicalization can work slice by slice.
struct SliceKey {
    // (tag, level, field, count): tag 0 = even family, 1 = odd family
    std::vector<std::array<int, 4>> content;
    int64_t jet_deg = 0;
    auto operator<=>(const SliceKey&) const = default;
};

SliceKey slice_of(const MonoKey& k) {
    SliceKey s;
    std::map<std::pair<int, int>, int> ev, od;
    for (const auto& [g, e] : k.evens) {
        if (g.kind != GenKind::EvenJet) fail(Errc::InvalidGenerator, "not a jet monomial");
        ev[{0, g.field}] += e;
    }
    for (const Gen& g : k.odds) {
        if (g.kind != GenKind::OddJet) fail(Errc::InvalidGenerator, "not a jet monomial");
        od[{g.level, g.field}] += 1;
    }
    for (const auto& [key, c] : ev) s.content.push_back({0, 0, key.second, c});
    for (const auto& [key, c] : od) s.content.push_back({1, key.first, key.second, c});
    s.jet_deg = mono_jet_degree(k);
    return s;
}

// Nondecreasing order sequences of the given length and sum.
void enum_multisets(int count, int sum, int min_order, std::vector<int>& cur,
                    const std::function<void(const std::vector<int>&)>& emit) {
    if (count == 0) {
        if (sum == 0) emit(cur);
        return;
    }
    for (int o = min_order; o * count <= sum; ++o) {
        cur.push_back(o);
        enum_multisets(count - 1, sum - o, o, cur, emit);
        cur.pop_back();
    }
}

// Strictly increasing order sequences of the given length and sum.
void enum_strict(int count, int sum, int min_order, std::vector<int>& cur,
                 const std::function<void(const std::vector<int>&)>& emit) {
    if (count == 0) {
        if (sum == 0) emit(cur);
        return;
    }
    // minimal attainable sum: min, min+1, ..., min+count-1
    for (int o = min_order; o * count + count * (count - 1) / 2 <= sum; ++o) {
        cur.push_back(o);
        enum_strict(count - 1, sum - o, o + 1, cur, emit);
        cur.pop_back();
    }
}

// All monomials with the given content and jet degree.
std::vector<MonoKey> slice_monomials(const SliceKey& s) {
    std::vector<MonoKey> out;
    MonoKey acc;
    std::function<void(size_t, int64_t)> rec = [&](size_t fam, int64_t rem) {
        if (fam == s.content.size()) {
            if (rem == 0) out.push_back(acc);
            return;
        }
        const auto& [tag, level, field, count] = s.content[fam];
        bool last = fam + 1 == s.content.size();
        int64_t max_share = rem;
        for (int64_t share = last ? rem : 0; share <= max_share; ++share) {
            std::vector<int> cur;
            auto emit = [&](const std::vector<int>& orders) {
                size_t ne = acc.evens.size(), no = acc.odds.size();
                if (tag == 0) {
                    for (size_t i = 0; i < orders.size();) {
                        size_t j = i;
                        while (j < orders.size() && orders[j] == orders[i]) ++j;
                        acc.evens.emplace_back(Gen::even(uint16_t(field), orders[i]), int(j - i));
                        i = j;
                    }
                } else {
                    for (int o : orders) acc.odds.push_back(Gen::odd(uint16_t(field), level, o));
                }
                rec(fam + 1, rem - share);
                acc.evens.resize(ne);
                acc.odds.resize(no);
            };
            if (tag == 0)
                enum_multisets(count, int(share), 0, cur, emit);
            else
                enum_strict(count, int(share), 0, cur, emit);
        }
    };
    rec(0, s.jet_deg);
    return out;
}

using RatRow = std::map<MonoKey, Rat>;

struct ERow {
    RatRow row;   // dx-image combination, integer coefficients
    RatRow comb;  // the preimage monomial combination producing `row`
};

// pivot (largest monomial of row) -> row
using Echelon = std::map<MonoKey, ERow>;

void axpy(RatRow& dst, const RatRow& src, const Rat& f) {
    for (const auto& [m, c] : src) {
        auto it = dst.find(m);
        if (it == dst.end()) {
            dst.emplace(m, c * f);
        } else {
            it->second += c * f;
            if (it->second == 0) dst.erase(it);
        }
    }
}

void echelon_insert(Echelon& ech, RatRow row, RatRow comb) {
    while (!row.empty()) {
        const MonoKey& pivot = row.rbegin()->first;
        auto it = ech.find(pivot);
        if (it == ech.end()) {
            ech.emplace(pivot, ERow{std::move(row), std::move(comb)});
            return;
        }
        Rat f = -row.rbegin()->second / it->second.row.rbegin()->second;
        axpy(row, it->second.row, f);
        axpy(comb, it->second.comb, f);
    }
}

// Context large enough to host the slice's generators (dx is context-free,
// but polynomial construction is not).
CtxPtr slice_context(const SliceKey& s) {
    int max_field = 0, max_level = 0;
    for (const auto& [tag, level, field, count] : s.content) {
        max_field = std::max(max_field, field);
        max_level = std::max(max_level, level);
    }
    std::vector<std::string> names;
    for (int i = 0; i <= max_field; ++i) names.push_back("x" + std::to_string(i + 1));
    return make_context(std::move(names), {}, max_level);
}

const Echelon& slice_echelon(const SliceKey& target) {
    static std::map<SliceKey, Echelon> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(target);
    if (it != cache.end()) return it->second;

    Echelon ech;
    if (target.jet_deg > 0) {
        SliceKey src = target;
        src.jet_deg -= 1;
        CtxPtr ctx = slice_context(src);
        for (const MonoKey& m : slice_monomials(src)) {
            DiffPoly mono(ctx);
            mono.add_term(m, PRat::one());
            DiffPoly img = mono.dx();
            RatRow row;
            for (const auto& [k, c] : img.terms()) row.emplace(k, c.rational_value());
            echelon_insert(ech, std::move(row), RatRow{{m, Rat(1)}});
        }
    }
    return cache.emplace(target, std::move(ech)).first->second;
}

using PGroup = std::map<MonoKey, PRat>;

// Eliminate every pivot monomial of the echelon from the group; optionally
// accumulate the preimage combination used.
void reduce_group(const Echelon& ech, PGroup& group, PGroup* comb_out) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto it = group.rbegin(); it != group.rend(); ++it) {
            auto eit = ech.find(it->first);
            if (eit == ech.end()) continue;
            PRat f = it->second * PRat(Rat(1) / eit->second.row.rbegin()->second);
            for (const auto& [m, c] : eit->second.row) {
                auto git = group.find(m);
                PRat delta = f * PRat(c);
                if (git == group.end()) {
                    group.emplace(m, -delta);
                } else {
                    git->second -= delta;
                    if (git->second.is_zero()) group.erase(git);
                }
            }
            if (comb_out)
                for (const auto& [m, c] : eit->second.comb) {
                    auto cit = comb_out->find(m);
                    PRat delta = f * PRat(c);
                    if (cit == comb_out->end()) {
                        comb_out->emplace(m, delta);
                    } else {
                        cit->second += delta;
                        if (cit->second.is_zero()) comb_out->erase(cit);
                    }
                }
            changed = true;
            break;  // the map was mutated: restart the scan
        }
    }
}

std::map<SliceKey, PGroup> split_slices(const DiffPoly& f) {
    std::map<SliceKey, PGroup> groups;
    for (const auto& [k, c] : f.terms()) groups[slice_of(k)].emplace(k, c);
    return groups;
}

}  // namespace

DiffPoly ibp_canonical(const DiffPoly& f) {
    if (f.is_zero()) return f;
    DiffPoly out(f.context());
    for (auto& [sk, group] : split_slices(f)) {
        if (sk.jet_deg > 0) reduce_group(slice_echelon(sk), group, nullptr);
        for (const auto& [m, c] : group) out.add_term(m, c);
    }
    return out;
}

std::optional<DiffPoly> invert_dx(const DiffPoly& f) {
    if (f.is_zero()) return DiffPoly(f.context());
    DiffPoly out(f.context());
    for (auto& [sk, group] : split_slices(f)) {
        if (sk.jet_deg == 0) return std::nullopt;  // dx-images have jet degree >= 1
        PGroup comb;
        reduce_group(slice_echelon(sk), group, &comb);
        if (!group.empty()) return std::nullopt;
        for (const auto& [m, c] : comb) out.add_term(m, c);
    }
    return out;
}

bool is_dx_exact(const DiffPoly& f) { return ibp_canonical(f).is_zero(); }

LocalFunctional& LocalFunctional::operator+=(const LocalFunctional& o) {
    rep_ += o.rep_;  // the reduction is linear: sums of canonical forms stay canonical
    return *this;
}

LocalFunctional& LocalFunctional::operator-=(const LocalFunctional& o) {
    rep_ -= o.rep_;
    return *this;
}

LocalFunctional operator-(const LocalFunctional& a) {
    LocalFunctional r;
    r.rep_ = -a.rep_;
    return r;
}

LocalFunctional LocalFunctional::scaled(const PRat& c) const {
    LocalFunctional r;
    r.rep_ = rep_.scaled(c);
    return r;
}

LocalFunctional functional(const DiffPoly& f) { return LocalFunctional(f); }

DiffPoly var_derivative(const DiffPoly& f, Gen level0) {
    if (!level0.is_jet() || level0.order != 0)
        fail(Errc::InvalidGenerator, "variational target must be an order-0 jet generator");
    int max_s = -1;
    for (const Gen& g : f.generators())
        if (g.kind == level0.kind && g.field == level0.field && g.level == level0.level)
            max_s = std::max(max_s, g.order);
    DiffPoly acc(f.context());
    for (int s = 0; s <= max_s; ++s) {
        Gen gs = level0;
        gs.order = s;
        DiffPoly term = f.partial(gs);
        for (int t = 0; t < s; ++t) term = term.dx();
        if (s % 2) term = -term;
        acc += term;
    }
    return acc;
}

DiffPoly var_derivative(const LocalFunctional& f, Gen level0) {
    return var_derivative(f.rep(), level0);
}

LocalFunctional schouten(const LocalFunctional& p, const LocalFunctional& q) {
    if (p.is_zero() || q.is_zero()) return LocalFunctional();
    int pdeg = p.super_degree();  // NotHomogeneous on mixed input
    (void)q.super_degree();
    const CtxPtr& ctx = p.context();
    DiffPoly density(ctx);
    for (size_t a = 0; a < ctx->n_fields(); ++a) {
        Gen th = Gen::odd(uint16_t(a), 0, 0);
        Gen u = Gen::even(uint16_t(a), 0);
        DiffPoly cross = var_derivative(p, u) * var_derivative(q, th);
        if (pdeg % 2) cross = -cross;
        density += var_derivative(p, th) * var_derivative(q, u) + cross;
    }
    return LocalFunctional(density);
}

DiffPoly EvolDerivation::image_of(Gen g) const {
    Gen g0 = g;
    g0.order = 0;
    auto it = images.find(g0);
    if (it == images.end()) return DiffPoly(ctx);
    DiffPoly v = it->second;
    for (int s = 0; s < g.order; ++s) v = v.dx_with(dx_table);
    return v;
}

DiffPoly EvolDerivation::apply(const DiffPoly& f) const {
    std::map<Gen, DiffPoly> cache;
    return f.apply_derivation([&](Gen g) -> const DiffPoly* {
        Gen g0 = g;
        g0.order = 0;
        auto it0 = images.find(g0);
        if (it0 == images.end()) return nullptr;
        auto [it, fresh] = cache.try_emplace(g);
        if (fresh) {
            DiffPoly v = it0->second;
            for (int s = 0; s < g.order; ++s) v = v.dx_with(dx_table);
            it->second = std::move(v);
        }
        return &it->second;
    });
}

EvolDerivation dp_derivation(const LocalFunctional& p) {
    EvolDerivation d;
    d.ctx = p.context();
    if (p.is_zero()) return d;
    int pdeg = p.super_degree();
    d.parity = ((pdeg - 1) % 2 + 2) % 2;
    const CtxPtr& ctx = p.context();
    for (size_t a = 0; a < ctx->n_fields(); ++a) {
        DiffPoly even_img = var_derivative(p, Gen::odd(uint16_t(a), 0, 0));
        if (!even_img.is_zero()) d.images.emplace(Gen::even(uint16_t(a), 0), std::move(even_img));
        DiffPoly odd_img = var_derivative(p, Gen::even(uint16_t(a), 0));
        if (pdeg % 2) odd_img = -odd_img;
        if (!odd_img.is_zero()) d.images.emplace(Gen::odd(uint16_t(a), 0, 0), std::move(odd_img));
    }
    return d;
}

EvolDerivation commutator(const EvolDerivation& d1, const EvolDerivation& d2) {
    EvolDerivation r;
    r.ctx = d1.ctx ? d1.ctx : d2.ctx;
    r.parity = (d1.parity + d2.parity) % 2;
    r.dx_table = d1.dx_table;
    for (const auto& [g, img] : d2.dx_table) {
        auto [it, fresh] = r.dx_table.emplace(g, img);
        if (!fresh && it->second != img)
            fail(Errc::InvalidGenerator,
                 "commutator of derivations over different prolongation rules");
    }
    bool anti = (d1.parity * d2.parity) % 2 != 0;
    std::set<Gen> keys;
    for (const auto& [g, img] : d1.images) keys.insert(g);
    for (const auto& [g, img] : d2.images) keys.insert(g);
    for (const Gen& g : keys) {
        DiffPoly first = d1.apply(d2.image_of(g));
        DiffPoly second = d2.apply(d1.image_of(g));
        DiffPoly img = anti ? first + second : first - second;
        if (!img.is_zero()) r.images.emplace(g, std::move(img));
    }
    return r;
}

DiffPoly HamOperator::row_applied_to_odds(size_t alpha) const {
    DiffPoly acc(ctx);
    for (size_t beta = 0; beta < entries[alpha].size(); ++beta)
        for (const auto& [s, coef] : entries[alpha][beta])
            acc += coef * DiffPoly::generator(ctx, Gen::odd(uint16_t(beta), 0, s));
    return acc;
}

HamOperator ham_operator(const LocalFunctional& p) {
    const CtxPtr& ctx = p.context();
    if (!ctx) fail(Errc::ContextMismatch, "operator of an empty functional");
    size_t n = ctx->n_fields();
    HamOperator op;
    op.ctx = ctx;
    op.entries.assign(n, std::vector<std::vector<std::pair<int, DiffPoly>>>(n));
    if (p.is_zero()) return op;
    if (p.super_degree() != 2) fail(Errc::NotHomogeneous, "bivector required");
    for (const Gen& g : p.rep().generators())
        if (g.is_odd() && g.level != 0)
            fail(Errc::OddLevelTooHigh, "operator extraction needs level-0 odd variables");
    for (size_t a = 0; a < n; ++a) {
        DiffPoly e = var_derivative(p, Gen::odd(uint16_t(a), 0, 0));
        std::map<std::pair<size_t, int>, DiffPoly> buckets;
        for (const auto& [k, c] : e.terms()) {
            if (k.odds.size() != 1)
                fail(Errc::NotHomogeneous, "row is not linear in the odd variables");
            Gen th = k.odds[0];
            MonoKey even_part{k.evens, {}};
            auto [it, fresh] =
                buckets.try_emplace({size_t(th.field), th.order}, DiffPoly(ctx));
            it->second.add_term(even_part, c);
        }
        for (auto& [key, coef] : buckets)
            op.entries[a][key.first].emplace_back(key.second, std::move(coef));
        for (auto& row : op.entries[a])
            std::sort(row.begin(), row.end(),
                      [](const auto& x, const auto& y) { return x.first < y.first; });
    }
    return op;
}

namespace {

bool jet_free(const DiffPoly& f) {
    for (const auto& [k, c] : f.terms())
        if (mono_jet_degree(k) != 0 || !k.odds.empty()) return false;
    return true;
}

DiffPoly poly_det(const std::vector<std::vector<DiffPoly>>& m, std::vector<size_t> cols,
                  size_t row, const CtxPtr& ctx) {
    if (row == m.size()) return DiffPoly::constant(ctx, Rat(1));
    DiffPoly acc(ctx);
    for (size_t i = 0; i < cols.size(); ++i) {
        size_t c = cols[i];
        if (m[row][c].is_zero()) continue;
        std::vector<size_t> rest = cols;
        rest.erase(rest.begin() + i);
        DiffPoly minor = poly_det(m, rest, row + 1, ctx);
        DiffPoly term = m[row][c] * minor;
        if (i % 2) term = -term;
        acc += term;
    }
    return acc;
}

}  // namespace

HydroData hydro_metric(const LocalFunctional& p) {
    HamOperator op = ham_operator(p);
    const CtxPtr& ctx = op.ctx;
    size_t n = ctx->n_fields();
    HydroData h;
    h.g.assign(n, std::vector<DiffPoly>(n, DiffPoly(ctx)));
    h.gamma.assign(n, std::vector<std::vector<DiffPoly>>(n, std::vector<DiffPoly>(n, DiffPoly(ctx))));
    for (size_t a = 0; a < n; ++a)
        for (size_t b = 0; b < n; ++b)
            for (const auto& [s, coef] : op.entries[a][b]) {
                if (s > 1) fail(Errc::NotHydrodynamic, "operator order exceeds one");
                if (s == 1) {
                    if (!jet_free(coef))
                        fail(Errc::NotHydrodynamic, "metric entry depends on jet variables");
                    h.g[a][b] = coef;
                } else {
                    DiffPoly rebuilt(ctx);
                    for (size_t c = 0; c < n; ++c) {
                        DiffPoly gm = coef.partial(Gen::even(uint16_t(c), 1));
                        if (!jet_free(gm))
                            fail(Errc::NotHydrodynamic, "connection entry not hydrodynamic");
                        h.gamma[a][b][c] = gm;
                        rebuilt += gm * DiffPoly::generator(ctx, Gen::even(uint16_t(c), 1));
                    }
                    if (rebuilt != coef)
                        fail(Errc::NotHydrodynamic, "order-zero part not linear in first jets");
                }
            }
    std::vector<size_t> cols(n);
    for (size_t i = 0; i < n; ++i) cols[i] = i;
    if (poly_det(h.g, cols, 0, ctx).is_zero())
        fail(Errc::DegenerateMetric, "metric determinant vanishes identically");
    return h;
}

DiffPoly truncate_param(const DiffPoly& f, const std::string& param, int cutoff) {
    const CtxPtr& ctx = f.context();
    if (!ctx) return f;
    auto idx = ctx->param_index(param);
    if (!idx) return f;
    DiffPoly out(ctx);
    for (const auto& [k, c] : f.terms()) {
        if (c.den.degree_in(*idx) != 0)
            fail(Errc::NotHomogeneous, "cannot truncate: parameter occurs in a denominator");
        ParamPoly kept;
        for (const auto& [m, q] : c.num.terms)
            if (int(m.deg(*idx)) <= cutoff) kept.terms.emplace(m, q);
        if (kept.is_zero()) continue;
        out.add_term(k, PRat(std::move(kept), c.den));
    }
    return out;
}

DiffPoly miura(const DiffPoly& expr, const std::vector<DiffPoly>& map_images,
               const std::string& param, int cutoff) {
    const CtxPtr& ctx = expr.context();
    if (!ctx) return expr;
    size_t n = ctx->n_fields();
    if (map_images.size() != n)
        fail(Errc::InvalidGenerator, "coordinate map must cover every even field");
    for (const DiffPoly& f : map_images)
        for (const Gen& g : f.generators())
            if (g.is_odd() || !g.is_jet())
                fail(Errc::InvalidGenerator, "coordinate map must be even and local");

    // order-0 part must be affine with an invertible constant matrix
    PMatrix a(n, std::vector<PRat>(n));
    int max_t = 0;
    for (size_t b = 0; b < n; ++b) {
        for (const Gen& g : map_images[b].generators()) max_t = std::max(max_t, g.order);
        for (size_t al = 0; al < n; ++al) {
            DiffPoly d = map_images[b].partial(Gen::even(uint16_t(al), 0));
            DiffPoly d0(ctx);
            for (const auto& [k, c] : d.terms())
                if (mono_jet_degree(k) == 0 && k.evens.empty()) d0.add_term(k, c);
            // nonlinearity in the order-0 fields is out of scope here
            if (d0 != d) {
                DiffPoly rest = d - d0;
                for (const auto& [k, c] : rest.terms())
                    if (mono_jet_degree(k) == 0)
                        fail(Errc::NonInvertibleLeadingJacobian,
                             "order-0 part of the map is not affine");
            }
            a[b][al] = d0.coefficient(MonoKey{});
        }
    }
    auto ainv = invert_matrix(a);
    if (!ainv) fail(Errc::NonInvertibleLeadingJacobian, "leading matrix is singular");

    auto substitute_evens = [&](const DiffPoly& f,
                                const std::vector<DiffPoly>& w) -> DiffPoly {
        return f.substitute(ctx, [&](Gen g) -> DiffPoly {
            if (g.kind == GenKind::EvenJet) {
                DiffPoly v = w[g.field];
                for (int s = 0; s < g.order; ++s) v = v.dx();
                return v;
            }
            return DiffPoly::generator(ctx, g);
        });
    };

    // fixed point: w = Ainv (u - N(w)), N = map minus its linear order-0 part
    std::vector<DiffPoly> nonlin(n, DiffPoly(ctx));
    for (size_t b = 0; b < n; ++b) {
        nonlin[b] = map_images[b];
        for (size_t al = 0; al < n; ++al)
            nonlin[b] -= DiffPoly::generator(ctx, Gen::even(uint16_t(al), 0))
                             .scaled(a[b][al]);
    }
    std::vector<DiffPoly> w(n, DiffPoly(ctx));
    for (size_t al = 0; al < n; ++al)
        for (size_t b = 0; b < n; ++b)
            w[al] += DiffPoly::generator(ctx, Gen::even(uint16_t(b), 0)).scaled((*ainv)[al][b]);
    for (int it = 0; it <= cutoff + 1; ++it) {
        std::vector<DiffPoly> next(n, DiffPoly(ctx));
        for (size_t al = 0; al < n; ++al) {
            for (size_t b = 0; b < n; ++b) {
                DiffPoly inner = DiffPoly::generator(ctx, Gen::even(uint16_t(b), 0)) -
                                 substitute_evens(nonlin[b], w);
                next[al] += inner.scaled((*ainv)[al][b]);
            }
            next[al] = truncate_param(next[al], param, cutoff);
        }
        bool stable = true;
        for (size_t al = 0; al < n; ++al)
            if (next[al] != w[al]) stable = false;
        w = std::move(next);
        if (stable) break;
    }
    for (size_t b = 0; b < n; ++b) {
        DiffPoly check = truncate_param(substitute_evens(map_images[b], w), param, cutoff);
        if (check != DiffPoly::generator(ctx, Gen::even(uint16_t(b), 0)))
            fail(Errc::NoSolution, "coordinate change is not invertible at this order");
    }

    // adjoint images for the odd variables, with old even fields replaced
    std::map<std::pair<int, int>, DiffPoly> odd_imgs;  // (field, level) -> image
    std::set<std::pair<int, int>> odd_needed;
    for (const Gen& g : expr.generators())
        if (g.kind == GenKind::OddJet) odd_needed.insert({g.field, g.level});
    for (const auto& [field, level] : odd_needed) {
        DiffPoly img(ctx);
        for (size_t b = 0; b < n; ++b)
            for (int t = 0; t <= max_t; ++t) {
                DiffPoly jac = map_images[b].partial(Gen::even(uint16_t(field), t));
                if (jac.is_zero()) continue;
                DiffPoly term = substitute_evens(jac, w) *
                                DiffPoly::generator(ctx, Gen::odd(uint16_t(b), level, 0));
                for (int k = 0; k < t; ++k) term = term.dx();
                if (t % 2) term = -term;
                img += term;
            }
        odd_imgs.emplace(std::make_pair(field, level), truncate_param(img, param, cutoff));
    }

    DiffPoly out = expr.substitute(ctx, [&](Gen g) -> DiffPoly {
        if (g.kind == GenKind::EvenJet) {
            DiffPoly v = w[g.field];
            for (int s = 0; s < g.order; ++s) v = v.dx();
            return v;
        }
        if (g.kind == GenKind::OddJet) {
            DiffPoly v = odd_imgs.at({g.field, g.level});
            for (int s = 0; s < g.order; ++s) v = v.dx();
            return v;
        }
        fail(Errc::InvalidGenerator, "coordinate change applies to jet expressions only");
    });
    return truncate_param(out, param, cutoff);
}

}  // namespace superjet
