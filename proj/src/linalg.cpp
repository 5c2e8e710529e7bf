#include "superjet/linalg.hpp"

#include <stdexcept>

namespace superjet {

namespace {

// Pivot preference: fewer terms means cheaper eliminations downstream.
size_t prat_size(const PRat& v) { return v.num.terms.size() + v.den.terms.size(); }

}  // namespace

LinearSolution solve_linear(PMatrix a, std::vector<PRat> b) {
    size_t rows = a.size();
    size_t cols = rows ? a[0].size() : 0;
    for (const auto& r : a)
        if (r.size() != cols) throw std::logic_error("solve_linear: ragged matrix");
    if (b.size() != rows) throw std::logic_error("solve_linear: rhs size mismatch");

    std::vector<size_t> pivot_col;  // per eliminated row
    size_t rank = 0;
    for (size_t col = 0; col < cols && rank < rows; ++col) {
        size_t best = rows;
        for (size_t r = rank; r < rows; ++r) {
            if (a[r][col].is_zero()) continue;
            if (best == rows || prat_size(a[r][col]) < prat_size(a[best][col])) best = r;
        }
        if (best == rows) continue;
        std::swap(a[rank], a[best]);
        std::swap(b[rank], b[best]);
        PRat inv = a[rank][col].inverse();
        for (size_t c = col; c < cols; ++c)
            if (!a[rank][c].is_zero()) a[rank][c] *= inv;
        b[rank] *= inv;
        for (size_t r = 0; r < rows; ++r) {
            if (r == rank || a[r][col].is_zero()) continue;
            PRat f = a[r][col];
            for (size_t c = col; c < cols; ++c)
                if (!a[rank][c].is_zero()) a[r][c] -= f * a[rank][c];
            if (!b[rank].is_zero()) b[r] -= f * b[rank];
        }
        pivot_col.push_back(col);
        ++rank;
    }

    LinearSolution out;
    for (size_t r = rank; r < rows; ++r)
        if (!b[r].is_zero()) return out;  // inconsistent
    out.consistent = true;
    out.particular.assign(cols, PRat());
    for (size_t r = 0; r < rank; ++r) out.particular[pivot_col[r]] = b[r];

    std::vector<bool> is_pivot(cols, false);
    for (size_t c : pivot_col) is_pivot[c] = true;
    for (size_t free = 0; free < cols; ++free) {
        if (is_pivot[free]) continue;
        std::vector<PRat> v(cols, PRat());
        v[free] = PRat::one();
        for (size_t r = 0; r < rank; ++r) v[pivot_col[r]] = -a[r][free];
        out.kernel.push_back(std::move(v));
    }
    return out;
}

std::optional<PMatrix> invert_matrix(const PMatrix& a) {
    size_t n = a.size();
    PMatrix m = a;
    PMatrix inv(n, std::vector<PRat>(n, PRat()));
    for (size_t i = 0; i < n; ++i) {
        if (m[i].size() != n) throw std::logic_error("invert_matrix: not square");
        inv[i][i] = PRat::one();
    }
    for (size_t col = 0; col < n; ++col) {
        size_t best = n;
        for (size_t r = col; r < n; ++r) {
            if (m[r][col].is_zero()) continue;
            if (best == n || prat_size(m[r][col]) < prat_size(m[best][col])) best = r;
        }
        if (best == n) return std::nullopt;
        std::swap(m[col], m[best]);
        std::swap(inv[col], inv[best]);
        PRat s = m[col][col].inverse();
        for (size_t c = 0; c < n; ++c) {
            if (!m[col][c].is_zero()) m[col][c] *= s;
            if (!inv[col][c].is_zero()) inv[col][c] *= s;
        }
        for (size_t r = 0; r < n; ++r) {
            if (r == col || m[r][col].is_zero()) continue;
            PRat f = m[r][col];
            for (size_t c = 0; c < n; ++c) {
                if (!m[col][c].is_zero()) m[r][c] -= f * m[col][c];
                if (!inv[col][c].is_zero()) inv[r][c] -= f * inv[col][c];
            }
        }
    }
    return inv;
}

PRat determinant(PMatrix a) {
    size_t n = a.size();
    PRat det = PRat::one();
    for (size_t col = 0; col < n; ++col) {
        if (a[col].size() != n) throw std::logic_error("determinant: not square");
        size_t best = n;
        for (size_t r = col; r < n; ++r) {
            if (a[r][col].is_zero()) continue;
            if (best == n || prat_size(a[r][col]) < prat_size(a[best][col])) best = r;
        }
        if (best == n) return PRat();
        if (best != col) {
            std::swap(a[col], a[best]);
            det = -det;
        }
        det *= a[col][col];
        PRat inv = a[col][col].inverse();
        for (size_t r = col + 1; r < n; ++r) {
            if (a[r][col].is_zero()) continue;
            PRat f = a[r][col] * inv;
            for (size_t c = col; c < n; ++c)
                if (!a[col][c].is_zero()) a[r][c] -= f * a[col][c];
        }
    }
    return det;
}

}  // namespace superjet
