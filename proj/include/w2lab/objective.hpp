#pragma once

#include <cstddef>
#include <utility>

#include "errors.hpp"
#include "geometry.hpp"
#include "scalar.hpp"

namespace w2lab {

// ---------------------------------------------------------------------------
// Strictly convex quadratic objective phi(w) = w^T A w + b . w with A
// symmetric positive definite; positive definiteness is certified at
// construction.  The built-in squared norm is the special case A = I, b = 0.
// ---------------------------------------------------------------------------

template <class S>
class QuadraticObjective {
public:
    QuadraticObjective(Matrix<S> a, Point<S> b) : A_(std::move(a)), b_(std::move(b)) {
        const std::size_t d = A_.size();
        if (d == 0 || b_.size() != d)
            throw InvalidArgument("objective matrix and vector sizes disagree");
        for (const auto& row : A_)
            if (row.size() != d) throw InvalidArgument("objective matrix is not square");
        if (!is_symmetric(A_) || !is_positive_definite(A_))
            throw NotStrictlyConvex(
                "objective requires a symmetric positive-definite quadratic part");
    }

    static QuadraticObjective norm_sq(std::size_t d) {
        Matrix<S> a(d, Point<S>(d, S(0)));
        for (std::size_t k = 0; k < d; ++k) a[k][k] = S(1);
        return QuadraticObjective(std::move(a), Point<S>(d, S(0)));
    }

    std::size_t dimension() const { return A_.size(); }
    const Matrix<S>& quadratic_part() const { return A_; }
    const Point<S>& linear_part() const { return b_; }

    S eval(const Point<S>& w) const {
        require_dim(w);
        return quad_form(w) + dot(b_, w);
    }

    Point<S> gradient(const Point<S>& w) const {
        require_dim(w);
        Point<S> g = mat_vec(A_, w);
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = S(2) * g[k] + b_[k];
        return g;
    }

    // The pure quadratic form u^T A u (curvature along direction u).
    S quad_form(const Point<S>& u) const {
        require_dim(u);
        return dot(u, mat_vec(A_, u));
    }

    // phi + lambda |w|^2: strictly sharper copy used for tie-breaking.
    QuadraticObjective regularized(const S& lambda) const {
        Matrix<S> a = A_;
        for (std::size_t k = 0; k < a.size(); ++k) a[k][k] += lambda;
        return QuadraticObjective(std::move(a), b_);
    }

private:
    void require_dim(const Point<S>& w) const {
        if (w.size() != A_.size())
            throw DimensionMismatch("objective evaluated at a point of the wrong dimension");
    }

    Matrix<S> A_;
    Point<S> b_;
};

} // namespace w2lab
