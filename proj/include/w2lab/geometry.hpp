#pragma once

#include <optional>
#include <vector>

#include "scalar.hpp"

namespace w2lab {

template <class S>
using Point = std::vector<S>;

template <class S>
using Matrix = std::vector<std::vector<S>>; // dense, row-major rows

template <class S>
S dot(const Point<S>& a, const Point<S>& b) {
    S acc(0);
    for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
    return acc;
}

template <class S>
S sqdist(const Point<S>& a, const Point<S>& b) {
    S acc(0);
    for (std::size_t k = 0; k < a.size(); ++k) {
        S diff = a[k] - b[k];
        acc += diff * diff;
    }
    return acc;
}

template <class S>
S sqnorm(const Point<S>& a) { return dot(a, a); }

template <class S>
Point<S> sub(const Point<S>& a, const Point<S>& b) {
    Point<S> r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] - b[k];
    return r;
}

template <class S>
Point<S> add(const Point<S>& a, const Point<S>& b) {
    Point<S> r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] + b[k];
    return r;
}

template <class S>
Point<S> scaled(const Point<S>& a, const S& c) {
    Point<S> r(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) r[k] = c * a[k];
    return r;
}

// y = A x for a square or rectangular dense matrix.
template <class S>
Point<S> mat_vec(const Matrix<S>& A, const Point<S>& x) {
    Point<S> y(A.size(), S(0));
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t k = 0; k < x.size(); ++k) y[i] += A[i][k] * x[k];
    return y;
}

template <class S>
bool lex_less(const Point<S>& a, const Point<S>& b) {
    for (std::size_t k = 0; k < a.size() && k < b.size(); ++k) {
        if (a[k] < b[k]) return true;
        if (b[k] < a[k]) return false;
    }
    return a.size() < b.size();
}

// ---------------------------------------------------------------------------
// Dense linear solve with full pivoting and rank handling.  Returns a
// particular solution of A x = b with free variables set to zero, or nullopt
// if the system is inconsistent.  Intended for small systems (KKT blocks,
// quadratic-objective gradients), both exact and floating scalars.
// ---------------------------------------------------------------------------

template <class S>
std::optional<std::vector<S>> solve_linear_system(Matrix<S> A, std::vector<S> b) {
    const std::size_t rows = A.size();
    const std::size_t cols = rows == 0 ? 0 : A[0].size();
    std::vector<std::size_t> col_of_pivot; // column chosen at elimination step r
    std::vector<std::size_t> col_perm(cols);
    for (std::size_t j = 0; j < cols; ++j) col_perm[j] = j;

    // Floating mode: treat entries below this relative threshold as zero.
    S zero_tol(0);
    if (!scalar_traits<S>::is_exact) {
        S scale(1);
        for (const auto& row : A)
            for (const auto& v : row)
                if (abs_val(v) > scale) scale = abs_val(v);
        zero_tol = scale * pow10_neg<S>(13);
    }

    std::size_t rank = 0;
    for (std::size_t step = 0; step < rows && rank < cols; ++step) {
        // Full pivot search over the untouched block.
        std::size_t pi = rank, pj = rank;
        S best(0);
        bool found = false;
        for (std::size_t i = rank; i < rows; ++i)
            for (std::size_t j = rank; j < cols; ++j) {
                S a = abs_val(A[i][j]);
                if (a > zero_tol && (!found || a > best)) {
                    best = a; pi = i; pj = j; found = true;
                }
            }
        if (!found) break;
        std::swap(A[rank], A[pi]);
        std::swap(b[rank], b[pi]);
        if (pj != rank) {
            for (std::size_t i = 0; i < rows; ++i) std::swap(A[i][rank], A[i][pj]);
            std::swap(col_perm[rank], col_perm[pj]);
        }
        for (std::size_t i = rank + 1; i < rows; ++i) {
            if (A[i][rank] == S(0)) continue;
            S f = A[i][rank] / A[rank][rank];
            A[i][rank] = S(0);
            for (std::size_t j = rank + 1; j < cols; ++j) A[i][j] -= f * A[rank][j];
            b[i] -= f * b[rank];
        }
        ++rank;
    }

    // Consistency: the eliminated rows below `rank` must have zero rhs.
    for (std::size_t i = rank; i < rows; ++i) {
        if (abs_val(b[i]) > zero_tol && b[i] != S(0)) {
            if (scalar_traits<S>::is_exact) return std::nullopt;
            // Floating: allow rhs residual comparable to the elimination noise.
            S scale(1);
            for (const auto& v : b) if (abs_val(v) > scale) scale = abs_val(v);
            if (abs_val(b[i]) > scale * pow10_neg<S>(9)) return std::nullopt;
        }
    }

    std::vector<S> x_perm(cols, S(0));
    for (std::size_t i = rank; i-- > 0;) {
        S acc = b[i];
        for (std::size_t j = i + 1; j < cols; ++j) acc -= A[i][j] * x_perm[j];
        x_perm[i] = acc / A[i][i];
    }
    std::vector<S> x(cols, S(0));
    for (std::size_t j = 0; j < cols; ++j) x[col_perm[j]] = x_perm[j];
    return x;
}

// Symmetry within the merge tolerance of the mode.
template <class S>
bool is_symmetric(const Matrix<S>& A) {
    const std::size_t d = A.size();
    for (const auto& row : A)
        if (row.size() != d) return false;
    S tol = scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(12);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            if (abs_val(S(A[i][j] - A[j][i])) > tol) return false;
    return true;
}

// Strict positive definiteness of a symmetric matrix, decided by the signs of
// the LDL^T pivots (no square roots, so the test is exact in rational mode).
template <class S>
bool is_positive_definite(Matrix<S> A) {
    const std::size_t d = A.size();
    S floor_(0);
    if (!scalar_traits<S>::is_exact) {
        S scale(1);
        for (const auto& row : A)
            for (const auto& v : row)
                if (abs_val(v) > scale) scale = abs_val(v);
        floor_ = scale * pow10_neg<S>(12);
    }
    for (std::size_t k = 0; k < d; ++k) {
        if (!(A[k][k] > floor_)) return false;
        for (std::size_t i = k + 1; i < d; ++i) {
            S f = A[i][k] / A[k][k];
            for (std::size_t j = k; j < d; ++j) A[i][j] -= f * A[k][j];
        }
    }
    return true;
}

} // namespace w2lab
