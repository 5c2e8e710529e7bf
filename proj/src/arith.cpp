#include "superjet/arith.hpp"

#include <algorithm>

namespace superjet {

void ParamMono::trim() {
    while (!exp.empty() && exp.back() == 0) exp.pop_back();
}

ParamMono ParamMono::var(size_t i, uint32_t e) {
    ParamMono m;
    if (e) {
        m.exp.assign(i + 1, 0);
        m.exp[i] = e;
    }
    return m;
}

ParamMono operator*(const ParamMono& a, const ParamMono& b) {
    ParamMono r;
    r.exp.resize(std::max(a.exp.size(), b.exp.size()), 0);
    for (size_t i = 0; i < r.exp.size(); ++i) r.exp[i] = a.deg(i) + b.deg(i);
    return r;
}

std::optional<ParamMono> ParamMono::divide(const ParamMono& b) const {
    ParamMono r;
    r.exp.resize(std::max(exp.size(), b.exp.size()), 0);
    for (size_t i = 0; i < r.exp.size(); ++i) {
        if (deg(i) < b.deg(i)) return std::nullopt;
        r.exp[i] = deg(i) - b.deg(i);
    }
    r.trim();
    return r;
}

ParamPoly::ParamPoly(const Rat& c) {
    if (c != 0) terms.emplace(ParamMono::one(), c);
}

ParamPoly ParamPoly::variable(size_t i) {
    ParamPoly p;
    p.terms.emplace(ParamMono::var(i), Rat(1));
    return p;
}

bool ParamPoly::is_constant() const {
    return terms.empty() || (terms.size() == 1 && terms.begin()->first.is_one());
}

Rat ParamPoly::constant_value() const {
    if (terms.empty()) return Rat(0);
    if (!is_constant()) throw std::logic_error("ParamPoly: not constant");
    return terms.begin()->second;
}

ParamPoly& ParamPoly::operator+=(const ParamPoly& o) {
    for (const auto& [m, c] : o.terms) {
        auto it = terms.find(m);
        if (it == terms.end()) {
            terms.emplace(m, c);
        } else {
            it->second += c;
            if (it->second == 0) terms.erase(it);
        }
    }
    return *this;
}

ParamPoly& ParamPoly::operator-=(const ParamPoly& o) {
    for (const auto& [m, c] : o.terms) {
        auto it = terms.find(m);
        if (it == terms.end()) {
            terms.emplace(m, -c);
        } else {
            it->second -= c;
            if (it->second == 0) terms.erase(it);
        }
    }
    return *this;
}

ParamPoly operator*(const ParamPoly& a, const ParamPoly& b) {
    ParamPoly r;
    for (const auto& [ma, ca] : a.terms)
        for (const auto& [mb, cb] : b.terms) {
            ParamMono m = ma * mb;
            auto it = r.terms.find(m);
            if (it == r.terms.end()) {
                r.terms.emplace(std::move(m), ca * cb);
            } else {
                it->second += ca * cb;
                if (it->second == 0) r.terms.erase(it);
            }
        }
    return r;
}

ParamPoly operator*(const ParamPoly& a, const Rat& c) {
    ParamPoly r;
    if (c == 0) return r;
    for (const auto& [m, v] : a.terms) r.terms.emplace(m, v * c);
    return r;
}

ParamPoly operator-(const ParamPoly& a) {
    ParamPoly r;
    for (const auto& [m, v] : a.terms) r.terms.emplace(m, -v);
    return r;
}

const std::pair<const ParamMono, Rat>& ParamPoly::leading() const {
    if (terms.empty()) throw std::logic_error("ParamPoly: leading of zero");
    return *terms.rbegin();
}

size_t ParamPoly::max_var_index_plus1() const {
    size_t n = 0;
    for (const auto& [m, c] : terms) n = std::max(n, m.exp.size());
    return n;
}

uint32_t ParamPoly::degree_in(size_t var) const {
    uint32_t d = 0;
    for (const auto& [m, c] : terms) d = std::max(d, m.deg(var));
    return d;
}

std::optional<ParamPoly> ParamPoly::divide_exact(const ParamPoly& b) const {
    if (b.is_zero()) throw std::logic_error("ParamPoly: division by zero");
    ParamPoly rem = *this, quot;
    const auto& [lm, lc] = b.leading();
    while (!rem.is_zero()) {
        const auto& [rm, rc] = rem.leading();
        auto qm = rm.divide(lm);
        if (!qm) return std::nullopt;
        Rat qc = rc / lc;
        ParamPoly t;
        t.terms.emplace(*qm, qc);
        quot += t;
        rem -= t * b;
    }
    return quot;
}

std::optional<int64_t> ParamPoly::weighted_degree(const std::vector<int>& w) const {
    std::optional<int64_t> d;
    for (const auto& [m, c] : terms) {
        int64_t t = 0;
        for (size_t i = 0; i < m.exp.size(); ++i)
            t += int64_t(m.exp[i]) * (i < w.size() ? w[i] : 0);
        if (d && *d != t) return std::nullopt;
        d = t;
    }
    return d ? d : std::optional<int64_t>(0);
}

ParamPoly ParamPoly::eval_at(size_t var, const Rat& v) const {
    ParamPoly r;
    for (const auto& [m, c] : terms) {
        uint32_t e = m.deg(var);
        Rat scale = c;
        for (uint32_t k = 0; k < e; ++k) scale *= v;
        if (scale == 0) continue;
        ParamMono m2 = m;
        if (var < m2.exp.size()) m2.exp[var] = 0;
        m2.trim();
        auto it = r.terms.find(m2);
        if (it == r.terms.end()) {
            r.terms.emplace(std::move(m2), scale);
        } else {
            it->second += scale;
            if (it->second == 0) r.terms.erase(it);
        }
    }
    return r;
}

namespace {

// Univariate view in `var` with ParamPoly coefficients.
std::map<uint32_t, ParamPoly> to_univar(const ParamPoly& p, size_t var) {
    std::map<uint32_t, ParamPoly> u;
    for (const auto& [m, c] : p.terms) {
        uint32_t e = m.deg(var);
        ParamMono m2 = m;
        if (var < m2.exp.size()) m2.exp[var] = 0;
        m2.trim();
        u[e].terms.emplace(std::move(m2), c);
    }
    return u;
}

ParamPoly from_univar(const std::map<uint32_t, ParamPoly>& u, size_t var) {
    ParamPoly p;
    for (const auto& [e, coef] : u)
        for (const auto& [m, c] : coef.terms) {
            ParamMono m2 = m * ParamMono::var(var, e);
            p.terms.emplace(std::move(m2), c);
        }
    return p;
}

// Normalize so the leading rational coefficient is 1.
ParamPoly make_monic(const ParamPoly& p) {
    if (p.is_zero()) return p;
    Rat lc = p.leading().second;
    ParamPoly r;
    for (const auto& [m, c] : p.terms) r.terms.emplace(m, c / lc);
    return r;
}

// Scale to integer coefficients with content 1 and positive leading sign.
// Unit-equivalent to the input; keeps all later coefficient work in integers.
ParamPoly make_primitive_int(const ParamPoly& p) {
    if (p.is_zero()) return p;
    Int ng = 0, dl = 1;
    for (const auto& [m, c] : p.terms) {
        ng = boost::multiprecision::gcd(ng, boost::multiprecision::numerator(c));
        dl = boost::multiprecision::lcm(dl, boost::multiprecision::denominator(c));
    }
    ParamPoly r = p * Rat(dl, ng);
    if (r.leading().second < 0) r = -r;
    return r;
}

size_t first_var(const ParamPoly& a, const ParamPoly& b) {
    size_t n = std::max(a.max_var_index_plus1(), b.max_var_index_plus1());
    for (size_t i = 0; i < n; ++i)
        if (a.degree_in(i) > 0 || b.degree_in(i) > 0) return i;
    return n;  // both constant
}

using Uni = std::map<uint32_t, ParamPoly>;

int udeg(const Uni& u) { return u.empty() ? -1 : int(u.rbegin()->first); }

Uni udiv_exact(Uni u, const ParamPoly& d) {
    if (d.is_constant()) {
        Rat inv = Rat(1) / d.constant_value();
        for (auto& [e, c] : u) c = c * inv;
        return u;
    }
    for (auto& [e, c] : u) {
        auto q = c.divide_exact(d);
        if (!q) throw std::logic_error("poly_gcd: inexact coefficient division");
        c = *q;
    }
    return u;
}

// Subresultant pseudo-remainder: lc(b)^{deg a - deg b + 1} * a  mod  b.
Uni prem(Uni a, const Uni& b) {
    int db = udeg(b);
    const ParamPoly& lb = b.rbegin()->second;
    int e = udeg(a) - db + 1;
    while (!a.empty() && udeg(a) >= db) {
        int da = udeg(a);
        ParamPoly la = a.rbegin()->second;
        uint32_t shift = uint32_t(da - db);
        Uni r2;
        for (const auto& [k, c] : a) {
            ParamPoly t = c * lb;
            if (!t.is_zero()) r2.emplace(k, std::move(t));
        }
        for (const auto& [k, c] : b) {
            ParamPoly t = c * la;
            auto it = r2.find(k + shift);
            if (it == r2.end()) {
                if (!t.is_zero()) r2.emplace(k + shift, -t);
            } else {
                it->second -= t;
                if (it->second.is_zero()) r2.erase(it);
            }
        }
        a = std::move(r2);
        --e;
    }
    for (; e > 0; --e)
        for (auto& [k, c] : a) c = c * lb;
    return a;
}

ParamPoly upow(const ParamPoly& p, int e) {
    ParamPoly r(Rat(1));
    for (int i = 0; i < e; ++i) r = r * p;
    return r;
}

}  // namespace

ParamPoly poly_gcd(const ParamPoly& a0, const ParamPoly& b0) {
    if (a0.is_zero()) return make_monic(b0);
    if (b0.is_zero()) return make_monic(a0);
    if (a0.is_constant() || b0.is_constant()) return ParamPoly(Rat(1));

    ParamPoly a = make_primitive_int(a0), b = make_primitive_int(b0);
    size_t var = first_var(a, b);
    Uni ua = to_univar(a, var), ub = to_univar(b, var);

    auto content = [](const Uni& u) {
        ParamPoly c;
        bool first = true;
        for (const auto& [e, coef] : u) {
            if (first) {
                c = make_primitive_int(coef);
                first = false;
            } else if (!c.is_constant()) {
                c = poly_gcd(c, coef);
            }
        }
        return c.is_constant() ? ParamPoly(Rat(1)) : c;
    };

    if (udeg(ua) == 0 || udeg(ub) == 0) {
        // var absent from one side: gcd divides both contents
        return poly_gcd(content(ua), content(ub));
    }

    ParamPoly ca = content(ua), cb = content(ub);
    Uni A = udiv_exact(std::move(ua), ca);
    Uni B = udiv_exact(std::move(ub), cb);
    ParamPoly cg = poly_gcd(ca, cb);
    if (udeg(A) < udeg(B)) std::swap(A, B);

    // Subresultant PRS (divisors g*h^delta keep growth polynomial without
    // per-step content extraction).
    ParamPoly g(Rat(1)), h(Rat(1));
    bool var_part = true;
    for (;;) {
        int delta = udeg(A) - udeg(B);
        Uni R = prem(A, B);
        if (R.empty()) break;  // B is the final remainder
        if (udeg(R) == 0) {
            var_part = false;  // gcd is free of var
            break;
        }
        ParamPoly divisor = g * upow(h, delta);
        A = std::move(B);
        B = udiv_exact(std::move(R), divisor);
        g = A.rbegin()->second;
        if (delta == 1) {
            h = g;
        } else if (delta > 1) {
            auto q = upow(g, delta).divide_exact(upow(h, delta - 1));
            h = q ? *q : upow(g, delta);
        }
    }
    if (!var_part) return make_monic(cg);
    ParamPoly bc = content(B);
    ParamPoly gp = from_univar(udiv_exact(std::move(B), bc), var);
    return make_monic(cg * gp);
}

PRat::PRat(ParamPoly n, ParamPoly d) : num(std::move(n)), den(std::move(d)) {
    if (den.is_zero()) throw std::logic_error("PRat: zero denominator");
    reduce();
}

bool PRat::is_one() const {
    return num.is_constant() && den.is_constant() && !num.is_zero() &&
           num.constant_value() == den.constant_value();
}

Rat PRat::rational_value() const { return num.constant_value() / den.constant_value(); }

void PRat::normalize_monic() {
    Rat lc = den.leading().second;
    if (lc != 1) {
        num = num * (Rat(1) / lc);
        den = den * (Rat(1) / lc);
    }
}

void PRat::reduce() {
    if (num.is_zero()) {
        den = ParamPoly(Rat(1));
        return;
    }
    // gcd(const, p) is a unit, so only the both-nonconstant case needs work
    if (!den.is_constant() && !num.is_constant()) {
        ParamPoly g = poly_gcd(num, den);
        if (!g.is_constant()) {
            num = *num.divide_exact(g);
            den = *den.divide_exact(g);
        }
    }
    normalize_monic();
}

// Addition keeps gcd inputs minimal: with g = gcd(d1, d2) the only common
// factor of the combined numerator and d1*d2/g divides g.
PRat& PRat::operator+=(const PRat& o) {
    if (o.is_zero()) return *this;
    if (is_zero()) { *this = o; return *this; }
    if (den == o.den) {
        num += o.num;
        if (num.is_zero()) { den = ParamPoly(Rat(1)); return *this; }
        reduce();
        return *this;
    }
    ParamPoly g;
    if (!den.is_constant() && !o.den.is_constant()) g = poly_gcd(den, o.den);
    if (g.is_zero() || g.is_constant()) {
        num = num * o.den + o.num * den;
        den = den * o.den;
        if (num.is_zero()) { den = ParamPoly(Rat(1)); return *this; }
        normalize_monic();  // coprime denominators: already reduced
    } else {
        ParamPoly d2g = *o.den.divide_exact(g);
        ParamPoly d1g = *den.divide_exact(g);
        num = num * d2g + o.num * d1g;
        den = den * d2g;
        if (num.is_zero()) { den = ParamPoly(Rat(1)); return *this; }
        if (!num.is_constant()) {
            ParamPoly h = poly_gcd(num, g);
            if (!h.is_constant()) {
                num = *num.divide_exact(h);
                den = *den.divide_exact(h);
            }
        }
        normalize_monic();
    }
    return *this;
}

PRat& PRat::operator-=(const PRat& o) { return *this += -o; }

// Cross-cancel before multiplying: operands are reduced, so stripping
// gcd(n1,d2) and gcd(n2,d1) leaves the product already reduced.
PRat& PRat::operator*=(const PRat& o) {
    if (is_zero()) return *this;
    if (o.is_zero()) { *this = PRat(); return *this; }
    ParamPoly on = o.num, od = o.den;
    if (!num.is_constant() && !od.is_constant()) {
        ParamPoly g = poly_gcd(num, od);
        if (!g.is_constant()) {
            num = *num.divide_exact(g);
            od = *od.divide_exact(g);
        }
    }
    if (!on.is_constant() && !den.is_constant()) {
        ParamPoly g = poly_gcd(on, den);
        if (!g.is_constant()) {
            on = *on.divide_exact(g);
            den = *den.divide_exact(g);
        }
    }
    num = num * on;
    den = den * od;
    normalize_monic();
    return *this;
}

PRat operator-(const PRat& a) {
    PRat r;
    r.num = -a.num;
    r.den = a.den;
    return r;
}

PRat PRat::inverse() const {
    if (is_zero()) throw std::logic_error("PRat: inverse of zero");
    PRat r;
    r.num = den;  // parts of a reduced value are coprime; just renormalize
    r.den = num;
    r.normalize_monic();
    return r;
}

std::optional<int64_t> PRat::weighted_degree(const std::vector<int>& w) const {
    auto dn = num.weighted_degree(w);
    auto dd = den.weighted_degree(w);
    if (!dn || !dd) return std::nullopt;
    if (is_zero()) return 0;
    return *dn - *dd;
}

PRat PRat::eval_at(size_t var, const Rat& v) const {
    return PRat(num.eval_at(var, v), den.eval_at(var, v));
}

std::string rat_to_string(const Rat& r) {
    Int n = boost::multiprecision::numerator(r);
    Int d = boost::multiprecision::denominator(r);
    std::string s = n.str();
    if (d != 1) s += "/" + d.str();
    return s;
}

Rat rat_from_string(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return Rat(Int(s));
    return Rat(Int(s.substr(0, slash)), Int(s.substr(slash + 1)));
}

}  // namespace superjet
