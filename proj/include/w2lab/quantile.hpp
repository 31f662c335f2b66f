#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "coupling.hpp"
#include "errors.hpp"
#include "measure.hpp"
#include "scalar.hpp"

namespace w2lab {

namespace detail {

template <class S>
void require_1d(const DiscreteMeasure<S>& m, const char* what) {
    if (m.dimension() != 1)
        throw WrongDimension(std::string(what) + " requires one-dimensional measures");
}

// Cumulative weights [0, w_1, w_1+w_2, ..., 1] in canonical atom order.
template <class S>
std::vector<S> cumulative(const DiscreteMeasure<S>& m) {
    std::vector<S> c(m.size() + 1, S(0));
    for (std::size_t i = 0; i < m.size(); ++i) c[i + 1] = c[i] + m.weight(i);
    return c;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Generalized inverse of the CDF of a 1D measure: F^{-1}(u) = value_j for
// u in (c_{j-1}, c_j], left-continuous by construction.
// ---------------------------------------------------------------------------

template <class S>
struct QuantileFunction {
    std::vector<S> breaks; // c_0 = 0 < c_1 < ... < c_n = 1
    std::vector<S> values; // strictly increasing atom locations

    // u must lie in (0, 1].
    const S& operator()(const S& u) const {
        if (!(u > S(0)) || u > S(1))
            throw InvalidArgument("quantile argument must lie in (0,1]");
        // Smallest j >= 1 with breaks[j] >= u.
        auto it = std::lower_bound(breaks.begin() + 1, breaks.end(), u);
        return values[static_cast<std::size_t>(it - breaks.begin()) - 1];
    }

    DiscreteMeasure<S> to_measure() const {
        std::vector<Point<S>> pts;
        std::vector<S> wts;
        for (std::size_t j = 0; j < values.size(); ++j) {
            pts.push_back({values[j]});
            wts.push_back(breaks[j + 1] - breaks[j]);
        }
        return DiscreteMeasure<S>(std::move(pts), std::move(wts));
    }
};

template <class S>
QuantileFunction<S> quantile_of(const DiscreteMeasure<S>& m) {
    detail::require_1d(m, "quantile_of");
    QuantileFunction<S> q;
    q.breaks = detail::cumulative(m);
    q.values.reserve(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) q.values.push_back(m.point(i)[0]);
    return q;
}

// ---------------------------------------------------------------------------
// Exact sweep over the merged breakpoint partition of two 1D measures.  Every
// cumulative break of either measure is a segment endpoint, so each segment
// (prev, g] lies inside exactly one quantile cell of each measure; visiting
// them in order yields the comonotone coupling and all its integrals without
// quadrature.
// ---------------------------------------------------------------------------

namespace detail {

template <class S, class Visit>
void comonotone_sweep(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu, Visit&& visit) {
    const std::vector<S> a = cumulative(mu), b = cumulative(nu);
    std::vector<S> grid;
    grid.reserve(a.size() + b.size() - 2);
    grid.insert(grid.end(), a.begin() + 1, a.end());
    grid.insert(grid.end(), b.begin() + 1, b.end());
    std::sort(grid.begin(), grid.end());

    std::size_t ia = 0, ib = 0;
    S prev(0);
    for (const S& g : grid) {
        S len = g - prev;
        if (len > S(0)) visit(ia, ib, len);
        prev = g;
        while (ia + 1 < mu.size() && a[ia + 1] <= g) ++ia;
        while (ib + 1 < nu.size() && b[ib + 1] <= g) ++ib;
    }
}

} // namespace detail

// The unique quadratic-optimal 1D coupling: the image of Lebesgue measure on
// (0,1] under the pair of quantile functions.
template <class S>
Coupling<S> comonotone_coupling(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu) {
    detail::require_1d(mu, "comonotone_coupling");
    detail::require_1d(nu, "comonotone_coupling");
    std::vector<S> mat(mu.size() * nu.size(), S(0));
    detail::comonotone_sweep(mu, nu, [&](std::size_t i, std::size_t j, const S& len) {
        mat[i * nu.size() + j] += len;
    });
    return Coupling<S>(mu, nu, std::move(mat));
}

// Integral over (0,1] of (F_mu^{-1} - F_nu^{-1})^2, segment by segment.
template <class S>
S w2_squared_1d(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu) {
    detail::require_1d(mu, "w2_squared_1d");
    detail::require_1d(nu, "w2_squared_1d");
    S acc(0);
    detail::comonotone_sweep(mu, nu, [&](std::size_t i, std::size_t j, const S& len) {
        S diff = mu.point(i)[0] - nu.point(j)[0];
        acc += len * diff * diff;
    });
    return acc;
}

// ---------------------------------------------------------------------------
// Monotone-map existence: a transport map exists iff no cumulative break of
// nu falls strictly inside any source atom's quantile cell (a break exactly
// at the cell's right endpoint is fine by left-continuity).
// ---------------------------------------------------------------------------

template <class S>
struct MapExistence1D {
    bool exists = false;
    std::vector<S> map;                        // per-atom images when exists
    std::optional<std::size_t> violating_atom; // first offender otherwise
};

template <class S>
MapExistence1D<S> map_exists_1d(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu) {
    detail::require_1d(mu, "map_exists_1d");
    detail::require_1d(nu, "map_exists_1d");
    const std::vector<S> a = detail::cumulative(mu), b = detail::cumulative(nu);
    // Floating mode treats breaks within the weight-sum tolerance of a cell
    // endpoint as sitting exactly on it.
    const S band = tolerances<S>::weight_sum();
    MapExistence1D<S> out;
    std::size_t jb = 1;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        while (jb < nu.size() && !(b[jb] > a[i] + band)) ++jb;
        if (jb < nu.size() && b[jb] < a[i + 1] - band) {
            out.exists = false;
            out.map.clear();
            out.violating_atom = i;
            return out;
        }
    }
    out.exists = true;
    QuantileFunction<S> qn = quantile_of(nu);
    for (std::size_t i = 0; i < mu.size(); ++i) out.map.push_back(qn(a[i + 1]));
    return out;
}

// Per-atom conditional quantile average: the barycenter of F_nu^{-1} over
// each source atom's quantile cell.
template <class S>
std::vector<S> barycentric_map_1d(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu) {
    detail::require_1d(mu, "barycentric_map_1d");
    detail::require_1d(nu, "barycentric_map_1d");
    std::vector<S> t(mu.size(), S(0));
    detail::comonotone_sweep(mu, nu, [&](std::size_t i, std::size_t j, const S& len) {
        t[i] += len * nu.point(j)[0];
    });
    for (std::size_t i = 0; i < mu.size(); ++i) t[i] = t[i] / mu.weight(i);
    return t;
}

// Image of mu under the barycentric map, as a 1D measure.
template <class S>
DiscreteMeasure<S> barycentric_image_1d(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu) {
    std::vector<S> t = barycentric_map_1d(mu, nu);
    std::vector<Point<S>> images;
    images.reserve(t.size());
    for (const S& v : t) images.push_back({v});
    return mu.push_forward(images);
}

// The unique martingale coupling between the barycentric image of mu and nu;
// it coincides with their comonotone coupling, and the row-by-row mean
// preservation is verified (a failure signals an internal bug).
template <class S>
Coupling<S> martingale_coupling_1d(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu) {
    DiscreteMeasure<S> eta = barycentric_image_1d(mu, nu);
    Coupling<S> pi = comonotone_coupling(eta, nu);
    if (!disintegrate(pi).is_martingale())
        throw MartingaleViolation(
            "comonotone coupling of the barycentric image failed the mean-preservation check");
    return pi;
}

} // namespace w2lab
