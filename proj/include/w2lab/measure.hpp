#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "scalar.hpp"

namespace w2lab {

// ---------------------------------------------------------------------------
// A finitely supported probability measure on R^d in canonical form:
//   * atoms sorted lexicographically by coordinates,
//   * coordinates equal within the merge tolerance fused into one atom,
//   * zero-mass atoms dropped,
//   * weights normalized to total mass one.
// Canonical form makes measure equality, hashing-free deduplication and
// deterministic serialization trivial.
// ---------------------------------------------------------------------------

template <class S>
class DiscreteMeasure {
public:
    DiscreteMeasure(std::vector<Point<S>> points, std::vector<S> weights) {
        canonicalize(std::move(points), std::move(weights));
    }

    static DiscreteMeasure dirac(Point<S> x) {
        return DiscreteMeasure({std::move(x)}, {S(1)});
    }

    std::size_t dimension() const { return dim_; }
    std::size_t size() const { return points_.size(); }
    const std::vector<Point<S>>& points() const { return points_; }
    const std::vector<S>& weights() const { return weights_; }
    const Point<S>& point(std::size_t i) const { return points_[i]; }
    const S& weight(std::size_t i) const { return weights_[i]; }

    Point<S> mean() const {
        Point<S> m(dim_, S(0));
        for (std::size_t i = 0; i < points_.size(); ++i)
            for (std::size_t k = 0; k < dim_; ++k) m[k] += weights_[i] * points_[i][k];
        return m;
    }

    // Integral of |x|^2.
    S second_moment() const {
        S acc(0);
        for (std::size_t i = 0; i < points_.size(); ++i) acc += weights_[i] * sqnorm(points_[i]);
        return acc;
    }

    // Image measure under a map given by per-atom image points (which may
    // live in a different ambient dimension).  Colliding images are merged.
    DiscreteMeasure push_forward(const std::vector<Point<S>>& images) const {
        if (images.size() != points_.size())
            throw SupportMismatch("push_forward needs one image per atom");
        return DiscreteMeasure(images, weights_);
    }

    bool operator==(const DiscreteMeasure& o) const {
        return dim_ == o.dim_ && points_ == o.points_ && weights_ == o.weights_;
    }
    bool operator!=(const DiscreteMeasure& o) const { return !(*this == o); }

    // Coordinate-and-weight agreement within tolerances (canonical order).
    static bool approx_equal(const DiscreteMeasure& a, const DiscreteMeasure& b,
                             const S& coord_tol, const S& weight_tol) {
        if (a.dim_ != b.dim_ || a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (abs_val(S(a.weights_[i] - b.weights_[i])) > weight_tol) return false;
            for (std::size_t k = 0; k < a.dim_; ++k)
                if (abs_val(S(a.points_[i][k] - b.points_[i][k])) > coord_tol) return false;
        }
        return true;
    }

private:
    void canonicalize(std::vector<Point<S>> pts, std::vector<S> wts) {
        if (pts.size() != wts.size())
            throw InvalidArgument("points and weights must have equal length");
        if (pts.empty()) throw EmptyMeasure();
        dim_ = pts[0].size();
        if (dim_ == 0) throw InvalidArgument("ambient dimension must be at least 1");
        for (const auto& p : pts)
            if (p.size() != dim_)
                throw DimensionMismatch("all atoms of a measure must share one dimension");
        for (const auto& w : wts) {
            if constexpr (!scalar_traits<S>::is_exact) {
                if (!std::isfinite(to_double(w)))
                    throw InvalidArgument("weights must be finite");
            }
            if (w < S(0)) throw InvalidArgument("weights must be nonnegative");
        }
        if constexpr (!scalar_traits<S>::is_exact) {
            for (const auto& p : pts)
                for (const auto& c : p)
                    if (!std::isfinite(to_double(c)))
                        throw InvalidArgument("coordinates must be finite");
        }

        std::vector<std::size_t> order(pts.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (lex_less(pts[a], pts[b])) return true;
            if (lex_less(pts[b], pts[a])) return false;
            return a < b;
        });

        const S merge_tol = tolerances<S>::merge();
        points_.clear();
        weights_.clear();
        for (std::size_t idx : order) {
            if (wts[idx] == S(0)) continue;
            if (!points_.empty() && close(points_.back(), pts[idx], merge_tol)) {
                weights_.back() += wts[idx];
            } else {
                points_.push_back(pts[idx]);
                weights_.push_back(wts[idx]);
            }
        }
        if (points_.empty()) throw EmptyMeasure();

        S total(0);
        for (const auto& w : weights_) total += w;
        if (!(total > S(0))) throw EmptyMeasure();
        for (auto& w : weights_) w = w / total;
    }

    static bool close(const Point<S>& a, const Point<S>& b, const S& tol) {
        for (std::size_t k = 0; k < a.size(); ++k)
            if (abs_val(S(a[k] - b[k])) > tol) return false;
        return true;
    }

    std::size_t dim_ = 0;
    std::vector<Point<S>> points_;
    std::vector<S> weights_;
};

// Mixture lambda*a + (1-lambda)*b of two measures on the same space.
template <class S>
DiscreteMeasure<S> mix(const DiscreteMeasure<S>& a, const DiscreteMeasure<S>& b, const S& lambda) {
    if (a.dimension() != b.dimension())
        throw DimensionMismatch("mixture components must share one dimension");
    if (lambda < S(0) || lambda > S(1))
        throw InvalidArgument("mixture weight must lie in [0,1]");
    std::vector<Point<S>> pts = a.points();
    std::vector<S> wts;
    wts.reserve(a.size() + b.size());
    for (const auto& w : a.weights()) wts.push_back(lambda * w);
    for (std::size_t i = 0; i < b.size(); ++i) {
        pts.push_back(b.point(i));
        wts.push_back((S(1) - lambda) * b.weight(i));
    }
    return DiscreteMeasure<S>(std::move(pts), std::move(wts));
}

} // namespace w2lab
