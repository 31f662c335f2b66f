#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "coupling.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "lp.hpp"
#include "measure.hpp"
#include "scalar.hpp"

namespace w2lab {

// ---------------------------------------------------------------------------
// Convex order eta <=cx nu: existence of a mean-preserving (martingale)
// kernel carrying eta to nu.  The test is a pure feasibility LP over kernel
// entries; when it is infeasible, the dual ray assembles into a convex
// piecewise-affine function integrating strictly larger against eta than
// against nu, which is a direct witness that the order fails.
// ---------------------------------------------------------------------------

template <class S>
struct SeparatingFunction {
    // phi(w) = max_i (intercepts[i] + slopes[i] . w): convex piecewise affine.
    std::vector<S> intercepts;
    std::vector<Point<S>> slopes;

    S eval(const Point<S>& w) const {
        S best(0);
        bool first = true;
        for (std::size_t i = 0; i < intercepts.size(); ++i) {
            S v = intercepts[i] + dot(slopes[i], w);
            if (first || v > best) { best = v; first = false; }
        }
        return best;
    }

    S integral(const DiscreteMeasure<S>& m) const {
        S acc(0);
        for (std::size_t k = 0; k < m.size(); ++k) acc += m.weight(k) * eval(m.point(k));
        return acc;
    }
};

template <class S>
struct ConvexOrderResult {
    bool ordered = false;
    std::optional<Kernel<S>> kernel;              // martingale witness when ordered
    std::optional<SeparatingFunction<S>> witness; // separating function otherwise
};

template <class S>
ConvexOrderResult<S> convex_order_test(const DiscreteMeasure<S>& eta,
                                       const DiscreteMeasure<S>& nu) {
    if (eta.dimension() != nu.dimension())
        throw DimensionMismatch("convex order requires measures sharing one ambient dimension");
    const std::size_t n = eta.size(), m = nu.size(), d = eta.dimension();
    const std::size_t R = n + n * d + m;

    // Variables k_ij >= 0.  Rows: each kernel row sums to one; each kernel row
    // has barycenter at its eta atom; the eta-weighted column sums equal nu.
    std::vector<SparseColumn<S>> cols(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            auto& col = cols[i * m + j].nz;
            col.reserve(d + 2);
            col.emplace_back(static_cast<int>(i), S(1));
            for (std::size_t c = 0; c < d; ++c)
                col.emplace_back(static_cast<int>(n + i * d + c), nu.point(j)[c]);
            col.emplace_back(static_cast<int>(n + n * d + j), eta.weight(i));
        }
    std::vector<S> rhs(R);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = S(1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) rhs[n + i * d + c] = eta.point(i)[c];
    for (std::size_t j = 0; j < m; ++j) rhs[n + n * d + j] = nu.weight(j);

    FeasibilityCertificate<S> lp = solve_equality_feasibility(R, cols, std::move(rhs));

    ConvexOrderResult<S> out;
    if (lp.feasible) {
        out.ordered = true;
        std::vector<S> rows = std::move(lp.x);
        // Exact solutions are row-stochastic by construction; floating ones
        // are renormalized to absorb solver residue.
        if constexpr (!scalar_traits<S>::is_exact) {
            for (std::size_t i = 0; i < n; ++i) {
                S sum(0);
                for (std::size_t j = 0; j < m; ++j) sum += rows[i * m + j];
                for (std::size_t j = 0; j < m; ++j) rows[i * m + j] /= sum;
            }
        }
        out.kernel.emplace(eta, nu, std::move(rows));
        if constexpr (scalar_traits<S>::is_exact) {
            if (!out.kernel->is_martingale())
                throw AssertionFailed("feasible convex-order kernel is not a martingale");
        }
    } else {
        out.ordered = false;
        SeparatingFunction<S> phi;
        phi.intercepts.reserve(n);
        phi.slopes.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const S& alpha = lp.farkas_y[i];
            phi.intercepts.push_back(alpha / eta.weight(i));
            Point<S> g(d);
            for (std::size_t c = 0; c < d; ++c)
                g[c] = lp.farkas_y[n + i * d + c] / eta.weight(i);
            phi.slopes.push_back(std::move(g));
        }
        if constexpr (scalar_traits<S>::is_exact) {
            if (!(phi.integral(eta) > phi.integral(nu)))
                throw AssertionFailed("separating function fails to separate");
        }
        out.witness = std::move(phi);
    }
    return out;
}

// 1D potential-function characterization: equal means and, at every atom t of
// either measure, integral of (x - t)^+ against eta at most that against nu.
template <class S>
bool convex_order_1d(const DiscreteMeasure<S>& eta, const DiscreteMeasure<S>& nu) {
    if (eta.dimension() != 1 || nu.dimension() != 1)
        throw WrongDimension("the potential-function order test requires dimension one");
    const S tol = tolerances<S>::martingale();
    if (abs_val(S(eta.mean()[0] - nu.mean()[0])) > tol) return false;

    auto upper_hockey = [](const DiscreteMeasure<S>& m, const S& t) {
        S acc(0);
        for (std::size_t k = 0; k < m.size(); ++k) {
            S gap = m.point(k)[0] - t;
            if (gap > S(0)) acc += m.weight(k) * gap;
        }
        return acc;
    };
    auto check_thresholds = [&](const DiscreteMeasure<S>& atoms) {
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            const S& t = atoms.point(k)[0];
            if (upper_hockey(eta, t) > upper_hockey(nu, t) + tol) return false;
        }
        return true;
    };
    return check_thresholds(eta) && check_thresholds(nu);
}

// Barycenter check of a kernel against an explicit list of source atoms.
template <class S>
bool is_martingale(const Kernel<S>& k, const DiscreteMeasure<S>& eta) {
    if (k.source.size() != eta.size() || k.source.dimension() != eta.dimension())
        throw InvalidArgument("kernel shape does not match the measure");
    const S tol = tolerances<S>::martingale();
    for (std::size_t i = 0; i < eta.size(); ++i) {
        Point<S> b = k.row_mean(i);
        for (std::size_t c = 0; c < eta.dimension(); ++c)
            if (abs_val(S(b[c] - eta.point(i)[c])) > tol) return false;
    }
    return true;
}

} // namespace w2lab
