#include "superjet/diffpoly.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace superjet {

JetContext::JetContext(std::vector<std::string> fields, std::vector<ParamDecl> ps, int max_level)
    : field_names(std::move(fields)), params(std::move(ps)), max_odd_level(max_level) {
    for (size_t i = 0; i < params.size(); ++i)
        for (size_t j = i + 1; j < params.size(); ++j)
            if (params[i].name == params[j].name)
                fail(Errc::ContextMismatch, "duplicate parameter " + params[i].name);
}

std::optional<size_t> JetContext::param_index(const std::string& name) const {
    for (size_t i = 0; i < params.size(); ++i)
        if (params[i].name == name) return i;
    return std::nullopt;
}

std::vector<int> JetContext::eps_weights() const {
    std::vector<int> w(params.size());
    for (size_t i = 0; i < params.size(); ++i) w[i] = params[i].eps_weight;
    return w;
}

CtxPtr make_context(std::vector<std::string> fields, std::vector<ParamDecl> params,
                    int max_odd_level) {
    return std::make_shared<const JetContext>(std::move(fields), std::move(params),
                                              max_odd_level);
}

DiffPoly DiffPoly::constant(CtxPtr ctx, const PRat& c) {
    DiffPoly p(std::move(ctx));
    if (!c.is_zero()) p.terms_.emplace(MonoKey{}, c);
    return p;
}

DiffPoly DiffPoly::generator(CtxPtr ctx, Gen g) {
    DiffPoly p(std::move(ctx));
    MonoKey k;
    if (g.is_odd())
        k.odds.push_back(g);
    else
        k.evens.emplace_back(g, 1);
    p.add_term(k, PRat::one());
    return p;
}

DiffPoly DiffPoly::parameter(CtxPtr ctx, const std::string& name) {
    auto idx = ctx->param_index(name);
    if (!idx) fail(Errc::UnknownGenerator, "parameter " + name);
    return constant(std::move(ctx), PRat::variable(*idx));
}

void DiffPoly::add_term(const MonoKey& key, const PRat& coeff) {
    if (coeff.is_zero()) return;
    for (const auto& [g, e] : key.evens) {
        if (g.is_odd() || e < 1 || g.order < 0 || g.level < 0)
            fail(Errc::InvalidGenerator, "bad even factor");
        if (g.kind != GenKind::TauOdd && ctx_ && g.field >= ctx_->n_fields())
            fail(Errc::InvalidGenerator, "field index out of range");
    }
    for (size_t i = 0; i < key.odds.size(); ++i) {
        const Gen& g = key.odds[i];
        if (!g.is_odd() || g.order < 0 || g.level < 0) fail(Errc::InvalidGenerator, "bad odd factor");
        if (g.kind == GenKind::OddJet && ctx_) {
            if (g.field >= ctx_->n_fields()) fail(Errc::InvalidGenerator, "field index out of range");
            if (g.level > ctx_->max_odd_level)
                fail(Errc::LevelOutOfRange, "odd level " + std::to_string(g.level) +
                                                " exceeds context bound " +
                                                std::to_string(ctx_->max_odd_level));
        }
        if (i + 1 < key.odds.size() && !(key.odds[i] < key.odds[i + 1]))
            fail(Errc::InvalidGenerator, "odd factors not strictly increasing");
    }
    auto it = terms_.find(key);
    if (it == terms_.end()) {
        terms_.emplace(key, coeff);
    } else {
        it->second += coeff;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

void DiffPoly::check_ctx(const DiffPoly& o) const {
    if (!ctx_ || !o.ctx_ || !(*ctx_ == *o.ctx_))
        fail(Errc::ContextMismatch, "operands from different contexts");
}

DiffPoly& DiffPoly::operator+=(const DiffPoly& o) {
    if (o.is_zero()) return *this;
    if (is_zero() && !ctx_) { *this = o; return *this; }
    check_ctx(o);
    for (const auto& [k, c] : o.terms_) {
        auto it = terms_.find(k);
        if (it == terms_.end()) {
            terms_.emplace(k, c);
        } else {
            it->second += c;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }
    return *this;
}

DiffPoly& DiffPoly::operator-=(const DiffPoly& o) {
    return *this += -o;
}

DiffPoly operator-(const DiffPoly& a) {
    DiffPoly r(a.ctx_);
    for (const auto& [k, c] : a.terms_) r.terms_.emplace(k, -c);
    return r;
}

namespace {

// Merge strictly increasing odd-factor lists; nullopt on a repeated factor.
// sign = (-1)^{number of transpositions needed to interleave}.
std::optional<std::pair<std::vector<Gen>, int>> merge_odds(const std::vector<Gen>& a,
                                                           const std::vector<Gen>& b) {
    std::vector<Gen> out;
    out.reserve(a.size() + b.size());
    size_t i = 0, j = 0;
    long inversions = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return std::nullopt;
        if (a[i] < b[j]) {
            out.push_back(a[i++]);
        } else {
            inversions += long(a.size() - i);
            out.push_back(b[j++]);
        }
    }
    while (i < a.size()) out.push_back(a[i++]);
    while (j < b.size()) out.push_back(b[j++]);
    return std::make_pair(std::move(out), inversions % 2 == 0 ? 1 : -1);
}

std::vector<std::pair<Gen, int>> merge_evens(const std::vector<std::pair<Gen, int>>& a,
                                             const std::vector<std::pair<Gen, int>>& b) {
    std::vector<std::pair<Gen, int>> out;
    out.reserve(a.size() + b.size());
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first == b[j].first) {
            out.emplace_back(a[i].first, a[i].second + b[j].second);
            ++i, ++j;
        } else if (a[i].first < b[j].first) {
            out.push_back(a[i++]);
        } else {
            out.push_back(b[j++]);
        }
    }
    while (i < a.size()) out.push_back(a[i++]);
    while (j < b.size()) out.push_back(b[j++]);
    return out;
}

}  // namespace

DiffPoly operator*(const DiffPoly& a, const DiffPoly& b) {
    a.check_ctx(b);
    DiffPoly r(a.ctx_);
    for (const auto& [ka, ca] : a.terms_)
        for (const auto& [kb, cb] : b.terms_) {
            auto merged = merge_odds(ka.odds, kb.odds);
            if (!merged) continue;  // repeated odd factor: zero
            PRat c = ca * cb;
            if (merged->second < 0) c = -c;
            if (c.is_zero()) continue;
            MonoKey k{merge_evens(ka.evens, kb.evens), std::move(merged->first)};
            auto it = r.terms_.find(k);
            if (it == r.terms_.end()) {
                r.terms_.emplace(std::move(k), std::move(c));
            } else {
                it->second += c;
                if (it->second.is_zero()) r.terms_.erase(it);
            }
        }
    return r;
}

DiffPoly DiffPoly::scaled(const PRat& c) const {
    DiffPoly r(ctx_);
    if (c.is_zero()) return r;
    for (const auto& [k, v] : terms_) r.terms_.emplace(k, v * c);
    return r;
}

DiffPoly DiffPoly::pow(int e) const {
    if (e < 0) fail(Errc::InvalidGenerator, "negative power");
    DiffPoly r = constant(ctx_, Rat(1));
    for (int i = 0; i < e; ++i) r = r * *this;
    return r;
}

bool DiffPoly::operator==(const DiffPoly& o) const {
    if (is_zero() && o.is_zero()) return true;
    if (!ctx_ || !o.ctx_) return is_zero() == o.is_zero();
    return *ctx_ == *o.ctx_ && terms_ == o.terms_;
}

DiffPoly DiffPoly::partial(Gen g) const {
    DiffPoly r(ctx_);
    for (const auto& [k, c] : terms_) {
        if (g.is_odd()) {
            auto it = std::find(k.odds.begin(), k.odds.end(), g);
            if (it == k.odds.end()) continue;
            size_t pos = size_t(it - k.odds.begin());
            MonoKey k2{k.evens, {}};
            k2.odds.reserve(k.odds.size() - 1);
            for (size_t i = 0; i < k.odds.size(); ++i)
                if (i != pos) k2.odds.push_back(k.odds[i]);
            PRat c2 = (pos % 2 == 0) ? c : -c;
            auto dst = r.terms_.find(k2);
            if (dst == r.terms_.end()) {
                r.terms_.emplace(std::move(k2), std::move(c2));
            } else {
                dst->second += c2;
                if (dst->second.is_zero()) r.terms_.erase(dst);
            }
        } else {
            auto it = std::find_if(k.evens.begin(), k.evens.end(),
                                   [&](const auto& p) { return p.first == g; });
            if (it == k.evens.end()) continue;
            MonoKey k2 = k;
            size_t pos = size_t(it - k.evens.begin());
            int e = k2.evens[pos].second;
            if (e == 1)
                k2.evens.erase(k2.evens.begin() + pos);
            else
                k2.evens[pos].second = e - 1;
            PRat c2 = c * PRat(Rat(e));
            auto dst = r.terms_.find(k2);
            if (dst == r.terms_.end()) {
                r.terms_.emplace(std::move(k2), std::move(c2));
            } else {
                dst->second += c2;
                if (dst->second.is_zero()) r.terms_.erase(dst);
            }
        }
    }
    return r;
}

std::vector<Gen> DiffPoly::generators() const {
    std::set<Gen> s;
    for (const auto& [k, c] : terms_) {
        for (const auto& [g, e] : k.evens) s.insert(g);
        for (const Gen& g : k.odds) s.insert(g);
    }
    return {s.begin(), s.end()};
}

PRat DiffPoly::coefficient(const MonoKey& key) const {
    auto it = terms_.find(key);
    return it == terms_.end() ? PRat() : it->second;
}

DiffPoly DiffPoly::apply_derivation(const std::function<const DiffPoly*(Gen)>& image) const {
    DiffPoly r(ctx_);
    for (const Gen& g : generators()) {
        const DiffPoly* img = image(g);
        if (!img || img->is_zero()) continue;
        r += *img * partial(g);
    }
    return r;
}

DiffPoly DiffPoly::dx() const { return dx_with({}); }

DiffPoly DiffPoly::dx_with(const DxTable& table) const {
    std::map<Gen, DiffPoly> cache;
    return apply_derivation([&](Gen g) -> const DiffPoly* {
        auto it = cache.find(g);
        if (it != cache.end()) return &it->second;
        // Table entries override the default rule for any generator kind;
        // quotient rings install images for their constrained generators.
        if (auto t = table.find(g); t != table.end()) return &t->second;
        switch (g.kind) {
            case GenKind::EvenJet:
            case GenKind::OddJet: {
                Gen up = g;
                up.order += 1;
                return &cache.emplace(g, generator(ctx_, up)).first->second;
            }
            case GenKind::TauF:
                fail(Errc::InvalidGenerator, "dx of " + gen_to_string(g) + " undeclared");
            case GenKind::TimeT:
            case GenKind::TauOdd:
                return nullptr;
        }
        return nullptr;
    });
}

int64_t mono_jet_degree(const MonoKey& k) {
    int64_t d = 0;
    for (const auto& [g, e] : k.evens)
        if (g.kind == GenKind::EvenJet) d += int64_t(g.order) * e;
    for (const Gen& g : k.odds)
        if (g.kind == GenKind::OddJet) d += g.order;
    return d;
}

int64_t mono_diff_degree(const MonoKey& k, const PRat& coeff, const JetContext& ctx) {
    auto w = coeff.weighted_degree(ctx.eps_weights());
    if (!w) fail(Errc::NotHomogeneous, "coefficient not eps-homogeneous");
    return mono_jet_degree(k) + *w;
}

int DiffPoly::super_degree() const {
    std::optional<size_t> d;
    for (const auto& [k, c] : terms_) {
        if (d && *d != k.odds.size()) fail(Errc::NotHomogeneous, "mixed super degrees");
        d = k.odds.size();
    }
    return d ? int(*d) : 0;
}

int64_t DiffPoly::diff_degree() const {
    std::optional<int64_t> d;
    for (const auto& [k, c] : terms_) {
        int64_t t = mono_diff_degree(k, c, *ctx_);
        if (d && *d != t) fail(Errc::NotHomogeneous, "mixed differential degrees");
        d = t;
    }
    return d ? *d : 0;
}

bool DiffPoly::is_homogeneous_super() const {
    std::optional<size_t> d;
    for (const auto& [k, c] : terms_) {
        if (d && *d != k.odds.size()) return false;
        d = k.odds.size();
    }
    return true;
}

bool DiffPoly::is_homogeneous_diff() const {
    std::optional<int64_t> d;
    for (const auto& [k, c] : terms_) {
        auto w = c.weighted_degree(ctx_->eps_weights());
        if (!w) return false;
        int64_t t = mono_jet_degree(k) + *w;
        if (d && *d != t) return false;
        d = t;
    }
    return true;
}

DiffPoly DiffPoly::substitute(const CtxPtr& target,
                              const std::function<DiffPoly(Gen)>& image) const {
    DiffPoly r(target);
    for (const auto& [k, c] : terms_) {
        DiffPoly term = DiffPoly::constant(target, c);
        for (const auto& [g, e] : k.evens) term = term * image(g).pow(e);
        for (const Gen& g : k.odds) term = term * image(g);
        r += term;
    }
    return r;
}

DiffPoly DiffPoly::eval_param(const std::string& name, const Rat& value) const {
    auto idx = ctx_->param_index(name);
    if (!idx) fail(Errc::UnknownGenerator, "parameter " + name);
    DiffPoly r(ctx_);
    for (const auto& [k, c] : terms_) {
        PRat c2 = c.eval_at(*idx, value);
        if (c2.is_zero()) continue;
        auto it = r.terms_.find(k);
        if (it == r.terms_.end()) {
            r.terms_.emplace(k, std::move(c2));
        } else {
            it->second += c2;
            if (it->second.is_zero()) r.terms_.erase(it);
        }
    }
    return r;
}

std::string gen_to_string(const Gen& g) {
    std::ostringstream os;
    switch (g.kind) {
        case GenKind::EvenJet:
            os << "u" << (g.field + 1) << "_" << g.order;
            break;
        case GenKind::OddJet:
            if (g.level == 0)
                os << "th" << (g.field + 1) << "_" << g.order;
            else
                os << "s" << (g.field + 1) << "_" << g.level << "_" << g.order;
            break;
        case GenKind::TauF:
            os << "f" << (g.field + 1) << "_" << g.level;
            break;
        case GenKind::TimeT:
            os << "t" << (g.field + 1) << "_" << g.level;
            break;
        case GenKind::TauOdd:
            os << "tau_" << g.level;
            break;
    }
    return os.str();
}

std::string prat_to_string(const PRat& c, const JetContext& ctx) {
    auto mono_str = [&](const ParamMono& m, const Rat& q, bool force_q) {
        std::ostringstream os;
        bool printed = false;
        if (force_q || q != 1 || m.is_one()) {
            os << rat_to_string(q);
            printed = true;
        }
        for (size_t i = 0; i < m.exp.size(); ++i) {
            if (!m.exp[i]) continue;
            if (printed) os << "*";
            os << (i < ctx.params.size() ? ctx.params[i].name : "p" + std::to_string(i));
            if (m.exp[i] > 1) os << "^" << m.exp[i];
            printed = true;
        }
        return os.str();
    };
    auto poly_to_string = [&](const ParamPoly& p, bool parens_if_sum) {
        if (p.is_zero()) return std::string("0");
        std::ostringstream os;
        bool sum = p.terms.size() > 1;
        if (sum && parens_if_sum) os << "(";
        bool first = true;
        for (const auto& [m, q] : p.terms) {
            if (!first) os << " + ";
            os << mono_str(m, q, false);
            first = false;
        }
        if (sum && parens_if_sum) os << ")";
        return os.str();
    };
    std::string s = poly_to_string(c.num, true);
    if (!(c.den.is_constant() && c.den.constant_value() == 1)) {
        ParamPoly den = c.den;
        s += " / ";
        if (den.terms.size() > 1) {
            s += poly_to_string(den, true);
        } else {
            s += "(" + poly_to_string(den, false) + ")";
        }
    }
    return s;
}

std::string DiffPoly::to_string() const {
    if (is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, c] : terms_) {
        if (!first) os << " + ";
        first = false;
        bool has_factors = !k.evens.empty() || !k.odds.empty();
        std::string cs = prat_to_string(c, *ctx_);
        if (!has_factors) {
            os << cs;
            continue;
        }
        bool coeff_is_one = c.is_one();
        bool printed = false;
        if (!coeff_is_one) {
            os << cs;
            printed = true;
        }
        for (const auto& [g, e] : k.evens) {
            if (printed) os << " * ";
            os << gen_to_string(g);
            if (e > 1) os << "^" << e;
            printed = true;
        }
        for (const Gen& g : k.odds) {
            if (printed) os << " * ";
            os << gen_to_string(g);
            printed = true;
        }
    }
    return os.str();
}

}  // namespace superjet
