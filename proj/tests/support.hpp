#pragma once

// Shared helpers for the test suite: measure builders, seeded random
// instance generators, and independent oracles used to cross-check the
// library's results.

#include <algorithm>
#include <array>
#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include <w2lab/w2lab.hpp>

namespace testsup {

using w2lab::Coupling;
using w2lab::DiscreteMeasure;
using w2lab::Kernel;
using w2lab::Matrix;
using w2lab::Point;
using w2lab::QuadraticObjective;
using R = w2lab::Rational;

// --- builders ---------------------------------------------------------------

inline R rq(long p, long q = 1) { return R(p) / R(q); }

template <class S>
DiscreteMeasure<S> m1(std::vector<S> xs, std::vector<S> ws) {
    std::vector<Point<S>> pts;
    pts.reserve(xs.size());
    for (auto& x : xs) pts.push_back(Point<S>{std::move(x)});
    return DiscreteMeasure<S>(std::move(pts), std::move(ws));
}

template <class S>
DiscreteMeasure<S> md(std::vector<Point<S>> pts, std::vector<S> ws) {
    return DiscreteMeasure<S>(std::move(pts), std::move(ws));
}

inline DiscreteMeasure<double> to_double_measure(const DiscreteMeasure<R>& m) {
    std::vector<Point<double>> pts;
    std::vector<double> wts;
    for (std::size_t i = 0; i < m.size(); ++i) {
        Point<double> p;
        for (const auto& c : m.point(i)) p.push_back(w2lab::to_double(c));
        pts.push_back(std::move(p));
        wts.push_back(w2lab::to_double(m.weight(i)));
    }
    return DiscreteMeasure<double>(std::move(pts), std::move(wts));
}

inline QuadraticObjective<double> to_double_objective(const QuadraticObjective<R>& phi) {
    Matrix<double> A;
    for (const auto& row : phi.quadratic_part()) {
        Point<double> r;
        for (const auto& c : row) r.push_back(w2lab::to_double(c));
        A.push_back(std::move(r));
    }
    Point<double> b;
    for (const auto& c : phi.linear_part()) b.push_back(w2lab::to_double(c));
    return QuadraticObjective<double>(std::move(A), std::move(b));
}

// Distance (not squared) between rational measures, evaluated exactly and
// then rooted in double precision.
inline double w2_dist(const DiscreteMeasure<R>& a, const DiscreteMeasure<R>& b) {
    return std::sqrt(w2lab::to_double(w2lab::solve_w2(a, b).value));
}

// --- seeded random generation ------------------------------------------------

struct Rng {
    std::mt19937_64 eng;
    explicit Rng(unsigned long seed) : eng(seed) {}

    long below(long n) { // uniform in [0, n)
        return static_cast<long>(eng() % static_cast<unsigned long>(n));
    }
    long range(long lo, long hi) { return lo + below(hi - lo + 1); } // inclusive
};

// Random rational in [-span, span] with denominator at most max_den.
inline R rand_coord(Rng& rng, long span = 8, long max_den = 4) {
    const long den = rng.range(1, max_den);
    return rq(rng.range(-span * den, span * den), den);
}

inline Point<R> rand_point(Rng& rng, std::size_t d, long span = 8, long max_den = 4) {
    Point<R> p;
    for (std::size_t c = 0; c < d; ++c) p.push_back(rand_coord(rng, span, max_den));
    return p;
}

// Random measure with n atoms in dimension d.  `grid` restricts coordinates
// to small integers (ties and degenerate faces become likely); otherwise
// coordinates have random small denominators.  `equal_weights` forces mass
// 1/n per atom (pre-merge).
inline DiscreteMeasure<R> rand_measure(Rng& rng, std::size_t n, std::size_t d,
                                       bool grid = false, bool equal_weights = false) {
    std::vector<Point<R>> pts;
    std::vector<R> wts;
    for (std::size_t i = 0; i < n; ++i) {
        pts.push_back(grid ? [&] {
            Point<R> p;
            for (std::size_t c = 0; c < d; ++c) p.push_back(R(rng.range(-2, 2)));
            return p;
        }() : rand_point(rng, d));
        wts.push_back(equal_weights ? R(1) : R(rng.range(1, 6)));
    }
    return DiscreteMeasure<R>(std::move(pts), std::move(wts));
}

inline DiscreteMeasure<R> rand_measure_1d(Rng& rng, std::size_t n, bool grid = false) {
    return rand_measure(rng, n, 1, grid);
}

// Measure with n distinct atoms and equal weights 1/n.
inline DiscreteMeasure<R> rand_uniform_distinct(Rng& rng, std::size_t n, std::size_t d,
                                                long span = 5) {
    std::vector<Point<R>> pts;
    while (pts.size() < n) {
        Point<R> p;
        for (std::size_t c = 0; c < d; ++c) p.push_back(R(rng.range(-span, span)));
        if (std::find(pts.begin(), pts.end(), p) == pts.end()) pts.push_back(std::move(p));
    }
    return DiscreteMeasure<R>(std::move(pts), std::vector<R>(n, R(1)));
}

// Convex-ordered pair: nu is obtained from eta by a few mean-preserving
// splits (each split replaces an atom z by z - a*v and z + b*v with weights
// chosen so the mean is preserved), hence eta <=cx nu by construction.
inline std::pair<DiscreteMeasure<R>, DiscreteMeasure<R>>
ordered_pair(Rng& rng, std::size_t n, std::size_t d, int splits = 3) {
    DiscreteMeasure<R> eta = rand_measure(rng, n, d);
    std::vector<Point<R>> pts(eta.points());
    std::vector<R> wts(eta.weights());
    for (int s = 0; s < splits; ++s) {
        const std::size_t i = static_cast<std::size_t>(rng.below(static_cast<long>(pts.size())));
        Point<R> v;
        bool nonzero = false;
        for (std::size_t c = 0; c < d; ++c) {
            R e = rq(rng.range(-2, 2), rng.range(1, 2));
            if (e != R(0)) nonzero = true;
            v.push_back(e);
        }
        if (!nonzero) v[0] = R(1);
        const R a = rq(rng.range(1, 3), rng.range(1, 2));
        const R b = rq(rng.range(1, 3), rng.range(1, 2));
        // weight w splits into w*b/(a+b) at z - a*v and w*a/(a+b) at z + b*v.
        const R w = wts[i];
        const Point<R> z = pts[i];
        pts[i] = w2lab::sub(z, w2lab::scaled(v, a));
        wts[i] = w * b / (a + b);
        pts.push_back(w2lab::add(z, w2lab::scaled(v, b)));
        wts.push_back(w * a / (a + b));
    }
    return {std::move(eta), DiscreteMeasure<R>(std::move(pts), std::move(wts))};
}

// Mixture along a martingale kernel from eta to nu: the law of
// (1-t) Z + t Y under the glued pair (Z, Y).  It sits between eta and nu in
// convex order for every t in [0, 1].
inline DiscreteMeasure<R> mix_along_martingale(const DiscreteMeasure<R>& eta,
                                               const Kernel<R>& m, const R& t) {
    std::vector<Point<R>> pts;
    std::vector<R> wts;
    for (std::size_t k = 0; k < eta.size(); ++k)
        for (std::size_t j = 0; j < m.target.size(); ++j) {
            const R w = eta.weight(k) * m.at(k, j);
            if (w == R(0)) continue;
            pts.push_back(w2lab::add(w2lab::scaled(eta.point(k), R(1) - t),
                                     w2lab::scaled(m.target.point(j), t)));
            wts.push_back(w);
        }
    return DiscreteMeasure<R>(std::move(pts), std::move(wts));
}

// Random strictly convex quadratic objective: A = B^T B + I (so the smallest
// eigenvalue is at least one), b a small integer vector.
inline QuadraticObjective<R> rand_objective(Rng& rng, std::size_t d) {
    Matrix<R> B(d, Point<R>(d, R(0)));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) B[i][j] = R(rng.range(-2, 2));
    Matrix<R> A(d, Point<R>(d, R(0)));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            R acc(0);
            for (std::size_t k = 0; k < d; ++k) acc += B[k][i] * B[k][j];
            A[i][j] = acc;
        }
    for (std::size_t i = 0; i < d; ++i) A[i][i] += R(1);
    Point<R> b;
    for (std::size_t c = 0; c < d; ++c) b.push_back(R(rng.range(-2, 2)));
    return QuadraticObjective<R>(std::move(A), std::move(b));
}

// --- independent oracles ------------------------------------------------------

// Brute-force oracle for 3x3 equal-weight instances: scans all six
// permutations and returns the minimum cost and the set of optimal
// permutations.
struct PermutationOracle {
    R value;
    std::vector<std::array<std::size_t, 3>> optimal;
};

inline PermutationOracle permutation_oracle_3x3(const DiscreteMeasure<R>& mu,
                                                const DiscreteMeasure<R>& nu) {
    std::array<std::size_t, 3> perm{0, 1, 2};
    PermutationOracle out;
    bool first = true;
    std::vector<std::pair<R, std::array<std::size_t, 3>>> all;
    std::sort(perm.begin(), perm.end());
    do {
        R cost(0);
        for (std::size_t i = 0; i < 3; ++i)
            cost += mu.weight(i) * w2lab::sqdist(mu.point(i), nu.point(perm[i]));
        all.emplace_back(cost, perm);
        if (first || cost < out.value) {
            out.value = cost;
            first = false;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (const auto& [cost, p] : all)
        if (cost == out.value) out.optimal.push_back(p);
    return out;
}

// Exhaustive enumeration of 1D measures supported on a subset of `positions`
// with weights that are positive multiples of 1/den (den = number of weight
// units to distribute).
inline std::vector<DiscreteMeasure<R>> all_quantized_measures_1d(
    const std::vector<long>& positions, long den) {
    std::vector<DiscreteMeasure<R>> out;
    const std::size_t P = positions.size();
    // units[i] >= 0 sums to den over the chosen subset; iterate over all
    // allocations of den units to P slots, dropping zero slots.
    std::vector<long> units(P, 0);
    // Recursive lambda over slot index.
    auto rec = [&](auto&& self, std::size_t slot, long left) -> void {
        if (slot + 1 == P) {
            units[slot] = left;
            std::vector<Point<R>> pts;
            std::vector<R> wts;
            for (std::size_t k = 0; k < P; ++k)
                if (units[k] > 0) {
                    pts.push_back(Point<R>{R(positions[k])});
                    wts.push_back(rq(units[k], den));
                }
            out.emplace_back(std::move(pts), std::move(wts));
            return;
        }
        for (long u = 0; u <= left; ++u) {
            units[slot] = u;
            self(self, slot + 1, left - u);
        }
    };
    rec(rec, 0, den);
    return out;
}

// Grid-search oracle for the minimum of sum_i mu_i phi(b_i) over the convex
// hull of the given per-vertex barycenter profiles, by repeatedly sampling a
// simplex grid and shrinking it around the incumbent.  Everything runs in
// double precision; the returned profile is accurate enough (far below 1e-4)
// because the objective is strongly convex in the barycenters.
struct HullOracle {
    double value = 0.0;
    std::vector<Point<double>> bary; // one barycenter per source atom
};

inline HullOracle hull_grid_minimum(const std::vector<double>& mu_w,
                                    const std::vector<std::vector<Point<double>>>& vertex_bary,
                                    const QuadraticObjective<double>& phi,
                                    int divisions = 24, int rounds = 26) {
    const std::size_t K = vertex_bary.size();
    const std::size_t n = mu_w.size();
    const std::size_t d = vertex_bary[0][0].size();

    auto value_at = [&](const std::vector<double>& lam, std::vector<Point<double>>& b) {
        double g = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            Point<double> bi(d, 0.0);
            for (std::size_t k = 0; k < K; ++k) {
                if (lam[k] == 0.0) continue;
                for (std::size_t c = 0; c < d; ++c) bi[c] += lam[k] * vertex_bary[k][i][c];
            }
            g += mu_w[i] * phi.eval(bi);
            b[i] = std::move(bi);
        }
        return g;
    };

    // All lattice points of the simplex grid with `divisions` subdivisions.
    std::vector<std::vector<double>> grid;
    std::vector<long> units(K, 0);
    auto rec = [&](auto&& self, std::size_t slot, long left) -> void {
        if (slot + 1 == K) {
            units[slot] = left;
            std::vector<double> lam(K);
            for (std::size_t k = 0; k < K; ++k)
                lam[k] = static_cast<double>(units[k]) / static_cast<double>(divisions);
            grid.push_back(std::move(lam));
            return;
        }
        for (long u = 0; u <= left; ++u) {
            units[slot] = u;
            self(self, slot + 1, left - u);
        }
    };
    rec(rec, 0, divisions);

    std::vector<double> best_lam(K, 1.0 / static_cast<double>(K));
    std::vector<Point<double>> b(n), best_b(n);
    double best = value_at(best_lam, best_b);

    double radius = 1.0;
    std::vector<double> lam(K);
    for (int round = 0; round < rounds; ++round) {
        std::vector<double> center = best_lam;
        for (const auto& g : grid) {
            for (std::size_t k = 0; k < K; ++k)
                lam[k] = (1.0 - radius) * center[k] + radius * g[k];
            const double v = value_at(lam, b);
            if (v < best) {
                best = v;
                best_lam = lam;
                best_b = b;
            }
        }
        radius *= 0.6;
    }
    return HullOracle{best, std::move(best_b)};
}

// Barycenter profile of a coupling in double precision.
inline std::vector<Point<double>> bary_profile(const Coupling<double>& pi) {
    return w2lab::barycentric_projection(pi);
}

} // namespace testsup
