#include "superjet/superext.hpp"

#include <algorithm>
#include <mutex>
#include <set>

namespace superjet {

struct BihamPair::Impl {
    LocalFunctional p0, p1;
    HamOperator h1;
    CtxPtr ctx;
    PMatrix eta, eta_inv;
    DiffPoly::DxTable table;

    mutable std::mutex mu;
    mutable std::map<Gen, DiffPoly> nf;  // write-once rewrite images

    const DiffPoly& get(Gen g) {
        {
            std::lock_guard<std::mutex> lk(mu);
            auto it = nf.find(g);
            if (it != nf.end()) return it->second;
        }
        DiffPoly v = compute(g);
        std::lock_guard<std::mutex> lk(mu);
        return nf.try_emplace(g, std::move(v)).first->second;
    }

    // s_{c,m}^k as a normal form: free generator when m = 0 or k = 0,
    // cached image otherwise (strictly lower level than the caller's).
    DiffPoly sigma_jet(uint16_t c, int m, int k) {
        Gen g = Gen::odd(c, m, k);
        if (m == 0 || k == 0) return DiffPoly::generator(ctx, g);
        return get(g);
    }

    DiffPoly compute(Gen g) {
        if (g.order > 1) {
            Gen lower = g;
            lower.order -= 1;
            return get(lower).dx_with(table);
        }
        // base rewrite: s_{a,m}^1 = (eta^{-1})_{ab} sum_{c,k} A^{bc}_k s_{c,m-1}^k
        size_t n = ctx->n_fields();
        DiffPoly acc(ctx);
        for (size_t b = 0; b < n; ++b) {
            const PRat& w = eta_inv[g.field][b];
            if (w.is_zero()) continue;
            DiffPoly row(ctx);
            for (size_t c = 0; c < n; ++c)
                for (const auto& [k, coef] : h1.entries[b][c])
                    row += coef * sigma_jet(uint16_t(c), g.level - 1, k);
            acc += row.scaled(w);
        }
        return acc;
    }
};

BihamPair::BihamPair(LocalFunctional p0, LocalFunctional p1) : impl_(std::make_shared<Impl>()) {
    if (!p0.context() || p0.context() != p1.context())
        fail(Errc::ContextMismatch, "pair over mismatched contexts");
    impl_->ctx = p0.context();
    if (!schouten(p0, p0).is_zero())
        fail(Errc::NotBihamiltonianVectorField, "[P0,P0] != 0");
    if (!schouten(p0, p1).is_zero())
        fail(Errc::NotBihamiltonianVectorField, "[P0,P1] != 0");
    if (!schouten(p1, p1).is_zero())
        fail(Errc::NotBihamiltonianVectorField, "[P1,P1] != 0");

    HamOperator h0 = ham_operator(p0);
    size_t n = impl_->ctx->n_fields();
    impl_->eta.assign(n, std::vector<PRat>(n, PRat()));
    for (size_t a = 0; a < n; ++a)
        for (size_t b = 0; b < n; ++b) {
            for (const auto& [k, coef] : h0.entries[a][b]) {
                if (k != 1 || coef != DiffPoly::constant(impl_->ctx, coef.coefficient({})))
                    fail(Errc::EtaNotConstant,
                         "first structure must be a constant matrix times d/dx");
                impl_->eta[a][b] = coef.coefficient({});
            }
        }
    auto inv = invert_matrix(impl_->eta);
    if (!inv) fail(Errc::EtaSingular, "flat pairing is singular");
    impl_->eta_inv = std::move(*inv);

    impl_->h1 = ham_operator(p1);
    impl_->p0 = std::move(p0);
    impl_->p1 = std::move(p1);

    // Level-by-level: the level-m entry only consults lower levels.
    for (int m = 1; m <= impl_->ctx->max_odd_level; ++m)
        for (size_t a = 0; a < n; ++a)
            impl_->table.emplace(Gen::odd(uint16_t(a), m, 0),
                                 impl_->get(Gen::odd(uint16_t(a), m, 1)));
}

const LocalFunctional& BihamPair::p0() const { return impl_->p0; }
const LocalFunctional& BihamPair::p1() const { return impl_->p1; }
const HamOperator& BihamPair::op1() const { return impl_->h1; }
const CtxPtr& BihamPair::context() const { return impl_->ctx; }
const PMatrix& BihamPair::eta() const { return impl_->eta; }
const PMatrix& BihamPair::eta_inv() const { return impl_->eta_inv; }
const DiffPoly::DxTable& BihamPair::dx_table() const { return impl_->table; }

const DiffPoly& BihamPair::normal_image(Gen g) const {
    if (g.kind != GenKind::OddJet || g.level < 1 || g.order < 1)
        fail(Errc::InvalidGenerator, "no rewrite for " + gen_to_string(g));
    if (g.level > impl_->ctx->max_odd_level)
        fail(Errc::LevelOutOfRange, "level beyond the context bound");
    return impl_->get(g);
}

ExtendedPoly reduce_recursion(const ExtendedPoly& x, const BihamPair& pair) {
    DiffPoly cur = x;
    for (;;) {
        std::map<Gen, DiffPoly> sub;
        for (const Gen& g : cur.generators())
            if (g.kind == GenKind::OddJet && g.level >= 1 && g.order >= 1)
                sub.emplace(g, pair.normal_image(g));
        if (sub.empty()) return cur;
        cur = cur.substitute(cur.context(), [&](Gen g) {
            auto it = sub.find(g);
            return it != sub.end() ? it->second : DiffPoly::generator(cur.context(), g);
        });
    }
}

ExtendedPoly dx_reduced(const ExtendedPoly& x, const BihamPair& pair) {
    return x.dx_with(pair.dx_table());
}

bool is_local(const ExtendedPoly& x) {
    for (const Gen& g : x.generators())
        if (g.kind == GenKind::OddJet && g.level >= 1) return false;
    return true;
}

namespace {

// The single odd factor of a degree-1 monomial / both factors of a
// degree-2 monomial must sit at level 0.
void require_level0(const Gen& g) {
    if (g.kind != GenKind::OddJet || g.level != 0)
        fail(Errc::MixedOddLevels, "shift input must use level-0 odd variables");
}

}  // namespace

ExtendedPoly shift_T(int k, const ExtendedPoly& x, const BihamPair& pair) {
    const CtxPtr& ctx = pair.context();
    if (k < 0 || k > ctx->max_odd_level)
        fail(Errc::LevelOutOfRange, "shift level " + std::to_string(k));
    if (x.is_zero()) return DiffPoly(ctx);
    if (x.super_degree() != 1)
        fail(Errc::NotHomogeneous, "level shift needs super degree 1");
    DiffPoly out(ctx);
    for (const auto& [key, c] : x.terms()) {
        require_level0(key.odds[0]);
        MonoKey shifted = key;
        shifted.odds[0].level = k;
        out.add_term(shifted, c);
    }
    return reduce_recursion(out, pair);
}

ExtendedPoly shift_Tkl(int k, int l, const ExtendedPoly& x, const BihamPair& pair) {
    const CtxPtr& ctx = pair.context();
    if (x.is_zero() || k == l) return DiffPoly(ctx);
    if (k > l) {
        DiffPoly r = shift_Tkl(l, k, x, pair);
        return -r;
    }
    if (k < 0 || l - 1 > ctx->max_odd_level)
        fail(Errc::LevelOutOfRange,
             "shift levels " + std::to_string(k) + "," + std::to_string(l));
    if (x.super_degree() != 2)
        fail(Errc::NotHomogeneous, "two-index shift needs super degree 2");
    DiffPoly out(ctx);
    for (const auto& [key, c] : x.terms()) {
        require_level0(key.odds[0]);
        require_level0(key.odds[1]);
        for (int i = 0; i <= l - k - 1; ++i) {
            Gen ga = key.odds[0];
            Gen gb = key.odds[1];
            ga.level = k + i;
            gb.level = l - i - 1;
            if (ga == gb) continue;
            MonoKey shifted = key;
            if (ga < gb)
                shifted.odds = {ga, gb};
            else
                shifted.odds = {gb, ga};
            out.add_term(shifted, ga < gb ? c : -c);
        }
    }
    return reduce_recursion(out, pair);
}

EvolDerivation odd_flow(int m, const BihamPair& pair) {
    const CtxPtr& ctx = pair.context();
    if (m < 0 || m > ctx->max_odd_level)
        fail(Errc::LevelOutOfRange, "odd flow index " + std::to_string(m));
    EvolDerivation d;
    d.ctx = ctx;
    d.parity = 1;
    d.dx_table = pair.dx_table();
    size_t n = ctx->n_fields();
    for (size_t a = 0; a < n; ++a) {
        DiffPoly dp0 = var_derivative(pair.p0(), Gen::odd(uint16_t(a), 0, 0));
        DiffPoly img = shift_T(m, dp0, pair);
        if (!img.is_zero()) d.images.emplace(Gen::even(uint16_t(a), 0), std::move(img));
        DiffPoly dp1 = var_derivative(pair.p1(), Gen::even(uint16_t(a), 0));
        for (int kk = 0; kk <= ctx->max_odd_level; ++kk) {
            DiffPoly oimg = shift_Tkl(kk, m, dp1, pair);
            if (!oimg.is_zero())
                d.images.emplace(Gen::odd(uint16_t(a), kk, 0), std::move(oimg));
        }
    }
    return d;
}

EvolDerivation super_flow(const LocalFunctional& x, const BihamPair& pair) {
    if (!schouten(x, pair.p0()).is_zero())
        fail(Errc::NotBihamiltonianVectorField, "[X,P0] != 0");
    if (!schouten(x, pair.p1()).is_zero())
        fail(Errc::NotBihamiltonianVectorField, "[X,P1] != 0");
    const CtxPtr& ctx = pair.context();
    EvolDerivation d = dp_derivation(x);
    d.dx_table = pair.dx_table();
    size_t n = ctx->n_fields();
    for (size_t a = 0; a < n; ++a) {
        auto it = d.images.find(Gen::odd(uint16_t(a), 0, 0));
        if (it == d.images.end()) continue;
        for (int m = 1; m <= ctx->max_odd_level; ++m) {
            DiffPoly img = shift_T(m, it->second, pair);
            if (!img.is_zero()) d.images.emplace(Gen::odd(uint16_t(a), m, 0), std::move(img));
        }
    }
    return d;
}

namespace {

// Normal-form monomials of the given super degree with jet degree and
// factor count within the budgets. Odd part: strictly increasing choices
// from level-0 jets and level >= 1 order-0 generators; even part: bounded
// multisets of even jets.
void enum_even_part(const CtxPtr& ctx, const std::vector<Gen>& evens, size_t from,
                    int64_t jet_budget, int64_t count_budget, MonoKey& cur,
                    std::vector<MonoKey>& out) {
    out.push_back(cur);
    if (count_budget == 0) return;
    for (size_t i = from; i < evens.size(); ++i) {
        if (evens[i].order > jet_budget) continue;
        if (!cur.evens.empty() && cur.evens.back().first == evens[i])
            continue;  // handled by the exponent loop below
        int64_t max_e = evens[i].order > 0
                            ? std::min(count_budget, jet_budget / evens[i].order)
                            : count_budget;
        for (int64_t e = 1; e <= max_e; ++e) {
            cur.evens.emplace_back(evens[i], int(e));
            enum_even_part(ctx, evens, i + 1, jet_budget - e * evens[i].order,
                           count_budget - e, cur, out);
            cur.evens.pop_back();
        }
    }
}

void enum_odd_part(const CtxPtr& ctx, const std::vector<Gen>& odds,
                   const std::vector<Gen>& evens, size_t from, int want,
                   int64_t jet_budget, int64_t count_budget, MonoKey& cur,
                   std::vector<MonoKey>& out) {
    if (want == 0) {
        enum_even_part(ctx, evens, 0, jet_budget, count_budget, cur, out);
        return;
    }
    if (count_budget < want) return;
    for (size_t i = from; i < odds.size(); ++i) {
        if (odds[i].order > jet_budget) continue;
        cur.odds.push_back(odds[i]);
        enum_odd_part(ctx, odds, evens, i + 1, want - 1, jet_budget - odds[i].order,
                      count_budget - 1, cur, out);
        cur.odds.pop_back();
    }
}

}  // namespace

ExtendedPoly invert_dx(const ExtendedPoly& f, const BihamPair& pair) {
    const CtxPtr& ctx = pair.context();
    if (f.is_zero()) return DiffPoly(ctx);
    int p = f.super_degree();
    (void)f.diff_degree();  // enforce parameter-weighted homogeneity
    int64_t j_max = 0, k_max = 0;
    for (const auto& [key, c] : f.terms()) {
        j_max = std::max(j_max, mono_jet_degree(key));
        int64_t cnt = int64_t(key.odds.size());
        for (const auto& [g, e] : key.evens) cnt += e;
        k_max = std::max(k_max, cnt);
    }
    // the quotient x-derivative raises jet degree by at least one and
    // never lowers the factor count
    std::vector<Gen> odd_pool, even_pool;
    for (size_t a = 0; a < ctx->n_fields(); ++a) {
        for (int s = 0; s + 1 <= j_max; ++s) odd_pool.push_back(Gen::odd(uint16_t(a), 0, s));
        for (int m = 1; m <= ctx->max_odd_level; ++m)
            odd_pool.push_back(Gen::odd(uint16_t(a), m, 0));
        for (int s = 0; s + 1 <= j_max; ++s) even_pool.push_back(Gen::even(uint16_t(a), s));
    }
    std::sort(odd_pool.begin(), odd_pool.end());

    std::vector<MonoKey> basis;
    MonoKey cur;
    enum_odd_part(ctx, odd_pool, even_pool, 0, p, j_max - 1, k_max, cur, basis);
    if (p == 0 && !basis.empty())
        basis.erase(std::remove(basis.begin(), basis.end(), MonoKey{}), basis.end());

    std::map<MonoKey, size_t> row_of;
    std::vector<std::vector<std::pair<size_t, PRat>>> cols(basis.size());
    for (size_t j = 0; j < basis.size(); ++j) {
        DiffPoly mono(ctx);
        mono.add_term(basis[j], PRat(Rat(1)));
        DiffPoly img = dx_reduced(mono, pair);
        for (const auto& [key, c] : img.terms()) {
            auto [it, fresh] = row_of.try_emplace(key, row_of.size());
            cols[j].emplace_back(it->second, c);
        }
    }
    for (const auto& [key, c] : f.terms()) row_of.try_emplace(key, row_of.size());

    size_t nrows = row_of.size(), ncols = basis.size();
    PMatrix mat(nrows, std::vector<PRat>(ncols, PRat()));
    std::vector<PRat> rhs(nrows, PRat());
    for (size_t j = 0; j < ncols; ++j)
        for (const auto& [r, c] : cols[j]) mat[r][j] = c;
    for (const auto& [key, c] : f.terms()) rhs[row_of.at(key)] = c;

    LinearSolution sol = solve_linear(mat, rhs);
    if (!sol.consistent) fail(Errc::NotExact, "no antiderivative in the extended ring");
    DiffPoly g(ctx);
    for (size_t j = 0; j < ncols; ++j)
        if (!sol.particular[j].is_zero()) g.add_term(basis[j], sol.particular[j]);
    return g;
}

std::map<Gen, DiffPoly> verify_commute(const EvolDerivation& d1, const EvolDerivation& d2) {
    EvolDerivation c = commutator(d1, d2);
    std::map<Gen, DiffPoly> residual;
    for (auto& [g, img] : c.images)
        if (!img.is_zero()) residual.emplace(g, std::move(img));
    return residual;
}

}  // namespace superjet
