#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "measure.hpp"
#include "scalar.hpp"

namespace w2lab {

// ---------------------------------------------------------------------------
// A coupling of two finitely supported measures: a nonnegative matrix whose
// row sums are the source weights and whose column sums are the target
// weights.  Rows index source atoms, columns target atoms, both in the
// canonical order of the respective measures.
// ---------------------------------------------------------------------------

template <class S>
struct Coupling {
    DiscreteMeasure<S> source;
    DiscreteMeasure<S> target;
    std::vector<S> matrix; // n*m row-major

    Coupling(DiscreteMeasure<S> src, DiscreteMeasure<S> tgt, std::vector<S> mat)
        : source(std::move(src)), target(std::move(tgt)), matrix(std::move(mat)) {
        validate();
    }

    std::size_t rows() const { return source.size(); }
    std::size_t cols() const { return target.size(); }
    const S& at(std::size_t i, std::size_t j) const { return matrix[i * cols() + j]; }
    S& at(std::size_t i, std::size_t j) { return matrix[i * cols() + j]; }

    // Transport cost under the squared Euclidean ground metric.
    S quadratic_cost() const {
        S acc(0);
        for (std::size_t i = 0; i < rows(); ++i)
            for (std::size_t j = 0; j < cols(); ++j) {
                const S& p = at(i, j);
                if (p != S(0)) acc += p * sqdist(source.point(i), target.point(j));
            }
        return acc;
    }

private:
    void validate() const {
        const std::size_t n = source.size(), m = target.size();
        if (matrix.size() != n * m)
            throw InvalidArgument("coupling matrix has the wrong shape");
        if (source.dimension() != target.dimension())
            throw DimensionMismatch("coupled measures must share one dimension");
        const S tol = tolerances<S>::marginal();
        for (const auto& p : matrix)
            if (p < S(0) && abs_val(p) > tol)
                throw InvalidArgument("coupling matrix has a negative entry");
        for (std::size_t i = 0; i < n; ++i) {
            S row(0);
            for (std::size_t j = 0; j < m; ++j) row += at(i, j);
            if (abs_val(S(row - source.weight(i))) > tol)
                throw InvalidArgument("coupling row marginal does not match the source");
        }
        for (std::size_t j = 0; j < m; ++j) {
            S col(0);
            for (std::size_t i = 0; i < n; ++i) col += at(i, j);
            if (abs_val(S(col - target.weight(j))) > tol)
                throw InvalidArgument("coupling column marginal does not match the target");
        }
    }
};

// ---------------------------------------------------------------------------
// A transition kernel on finite supports: one probability row per source
// atom, columns indexing the target support.
// ---------------------------------------------------------------------------

template <class S>
struct Kernel {
    DiscreteMeasure<S> source;
    DiscreteMeasure<S> target;
    std::vector<S> rows; // n*m row-major, each row sums to one

    Kernel(DiscreteMeasure<S> src, DiscreteMeasure<S> tgt, std::vector<S> r)
        : source(std::move(src)), target(std::move(tgt)), rows(std::move(r)) {
        const std::size_t n = source.size(), m = target.size();
        if (rows.size() != n * m) throw InvalidArgument("kernel has the wrong shape");
        const S tol = tolerances<S>::martingale();
        for (std::size_t i = 0; i < n; ++i) {
            S sum(0);
            for (std::size_t j = 0; j < m; ++j) {
                const S& p = rows[i * m + j];
                if (p < S(0) && abs_val(p) > tol)
                    throw InvalidArgument("kernel has a negative entry");
                sum += p;
            }
            if (abs_val(S(sum - S(1))) > tol)
                throw InvalidArgument("kernel row does not sum to one");
        }
    }

    const S& at(std::size_t i, std::size_t j) const { return rows[i * target.size() + j]; }

    // Barycenter of row i: the conditional mean of the kernel at source atom i.
    Point<S> row_mean(std::size_t i) const {
        const std::size_t m = target.size(), d = target.dimension();
        Point<S> b(d, S(0));
        for (std::size_t j = 0; j < m; ++j) {
            const S& p = rows[i * m + j];
            if (p == S(0)) continue;
            for (std::size_t k = 0; k < d; ++k) b[k] += p * target.point(j)[k];
        }
        return b;
    }

    // Mean preservation: every row's barycenter equals its source atom.
    bool is_martingale() const {
        if (source.dimension() != target.dimension()) return false;
        const S tol = tolerances<S>::martingale();
        for (std::size_t i = 0; i < source.size(); ++i) {
            Point<S> b = row_mean(i);
            for (std::size_t k = 0; k < source.dimension(); ++k)
                if (abs_val(S(b[k] - source.point(i)[k])) > tol) return false;
        }
        return true;
    }

    void require_martingale() const {
        if (!is_martingale())
            throw MartingaleViolation("kernel rows do not preserve their source atoms' means");
    }
};

// Conditional law representation pi_ij = mu_i * k(i, j).
template <class S>
Kernel<S> disintegrate(const Coupling<S>& pi) {
    const std::size_t n = pi.rows(), m = pi.cols();
    std::vector<S> rows(n * m, S(0));
    for (std::size_t i = 0; i < n; ++i) {
        const S& mass = pi.source.weight(i);
        for (std::size_t j = 0; j < m; ++j) {
            S p = pi.at(i, j);
            if (p < S(0)) p = S(0); // clear float marginal residue
            rows[i * m + j] = p / mass;
        }
        if constexpr (!scalar_traits<S>::is_exact) {
            S sum(0);
            for (std::size_t j = 0; j < m; ++j) sum += rows[i * m + j];
            for (std::size_t j = 0; j < m; ++j) rows[i * m + j] /= sum;
        }
    }
    return Kernel<S>(pi.source, pi.target, std::move(rows));
}

template <class S>
Coupling<S> kernel_to_coupling(const DiscreteMeasure<S>& mu, const Kernel<S>& k) {
    if (mu != k.source)
        throw SupportMismatch("kernel source must equal the coupled measure");
    const std::size_t n = mu.size(), m = k.target.size();
    std::vector<S> mat(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) mat[i * m + j] = mu.weight(i) * k.at(i, j);
    return Coupling<S>(mu, k.target, std::move(mat));
}

// Per-source-atom barycenters T_i = E[Y | X = x_i] of a coupling.
template <class S>
std::vector<Point<S>> barycentric_projection(const Coupling<S>& pi) {
    const std::size_t n = pi.rows(), m = pi.cols(), d = pi.target.dimension();
    std::vector<Point<S>> t(n, Point<S>(d, S(0)));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const S& p = pi.at(i, j);
            if (p == S(0)) continue;
            for (std::size_t k = 0; k < d; ++k) t[i][k] += p * pi.target.point(j)[k];
        }
        for (std::size_t k = 0; k < d; ++k) t[i][k] = t[i][k] / pi.source.weight(i);
    }
    return t;
}

// Image of the source under the barycentric projection (atoms merged).
template <class S>
DiscreteMeasure<S> barycentric_image(const Coupling<S>& pi) {
    return pi.source.push_forward(barycentric_projection(pi));
}

// Total conditional variance sum_i mu_i E[|Y - T_i|^2 | X = x_i].
template <class S>
S conditional_variance(const Coupling<S>& pi) {
    const std::vector<Point<S>> t = barycentric_projection(pi);
    S acc(0);
    for (std::size_t i = 0; i < pi.rows(); ++i)
        for (std::size_t j = 0; j < pi.cols(); ++j) {
            const S& p = pi.at(i, j);
            if (p != S(0)) acc += p * sqdist(pi.target.point(j), t[i]);
        }
    return acc;
}

// Composition of kernels along the chain X -> Z -> Y: q carries mu to eta,
// m carries eta to nu; the result is the coupling of (X, Y), with matrix
// mu_i * sum_z q_{iz} m_{zj}.
template <class S>
Coupling<S> compose(const Kernel<S>& q, const Kernel<S>& m) {
    if (q.target != m.source)
        throw SupportMismatch("composition needs the first kernel's target to equal the second's source");
    const std::size_t n = q.source.size(), r = q.target.size(), mm = m.target.size();
    std::vector<S> mat(n * mm, S(0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t z = 0; z < r; ++z) {
            const S& qiz = q.at(i, z);
            if (qiz == S(0)) continue;
            for (std::size_t j = 0; j < mm; ++j) mat[i * mm + j] += qiz * m.at(z, j);
        }
        for (std::size_t j = 0; j < mm; ++j) mat[i * mm + j] *= q.source.weight(i);
    }
    return Coupling<S>(q.source, m.target, std::move(mat));
}

// Also accept a coupling on the left: compose its disintegration.
template <class S>
Coupling<S> compose(const Coupling<S>& q, const Kernel<S>& m) {
    return compose(disintegrate(q), m);
}

// The deterministic coupling of mu with itself (diagonal matrix).
template <class S>
Coupling<S> identity_coupling(const DiscreteMeasure<S>& mu) {
    const std::size_t n = mu.size();
    std::vector<S> mat(n * n, S(0));
    for (std::size_t i = 0; i < n; ++i) mat[i * n + i] = mu.weight(i);
    return Coupling<S>(mu, mu, std::move(mat));
}

} // namespace w2lab
