#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "coupling.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "measure.hpp"
#include "scalar.hpp"
#include "transport.hpp"

namespace w2lab {

// ---------------------------------------------------------------------------
// Differentiability of sigma -> W2^2(sigma, nu) at a finitely supported mu.
// The squared distance is differentiable exactly when the optimal coupling is
// unique and induced by a map T, in which case the derivative at atom x_i is
// 2(x_i - T(x_i)); otherwise a coupling with positive conditional variance
// witnesses a first-order decrease in every perturbation direction Y - E[Y|X].
// ---------------------------------------------------------------------------

template <class S>
struct DiffWitness {
    Coupling<S> coupling;
    S xi_norm_sq; // E|Y - E[Y|X]|^2 under the witness coupling, positive
};

template <class S>
struct DiffCertificate {
    bool differentiable = false;
    std::optional<std::vector<Point<S>>> derivative; // 2(x_i - T(x_i)) per atom
    std::optional<DiffWitness<S>> witness;           // present iff not differentiable
};

template <class S>
DiffCertificate<S> diff_certificate(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu) {
    StructureCertificate<S> cert = certify_structure(mu, nu);
    DiffCertificate<S> out;
    out.differentiable = cert.unique && cert.is_map;
    if (out.differentiable) {
        std::vector<Point<S>> d;
        d.reserve(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i)
            d.push_back(scaled(sub(mu.point(i), (*cert.map)[i]), S(2)));
        out.derivative = std::move(d);
    } else {
        out.witness = DiffWitness<S>{std::move(cert.witness_coupling), cert.conditional_variance};
    }
    return out;
}

// ---------------------------------------------------------------------------
// Law of X + t(Y - T(X)) under a coupling pi of (X, Y), built by splitting
// each source atom along the rows of pi; T is the barycentric map of pi.
// ---------------------------------------------------------------------------

template <class S>
struct PerturbedMeasure {
    S t;
    DiscreteMeasure<S> measure;
};

template <class S>
PerturbedMeasure<S> perturbed_measure(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
                                      const Coupling<S>& pi, const S& t) {
    if (pi.source != mu || pi.target != nu)
        throw InvalidArgument("coupling does not match the supplied measures");
    if (t < S(0) || t > S(1)) throw InvalidArgument("step size must lie in [0, 1]");

    const std::vector<Point<S>> bary = barycentric_projection(pi);
    std::vector<Point<S>> pts;
    std::vector<S> wts;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        for (std::size_t j = 0; j < nu.size(); ++j) {
            const S& p = pi.at(i, j);
            if (p == S(0)) continue;
            Point<S> z = add(mu.point(i), scaled(sub(nu.point(j), bary[i]), t));
            pts.push_back(std::move(z));
            wts.push_back(p);
        }
    }
    return PerturbedMeasure<S>{t, DiscreteMeasure<S>(std::move(pts), std::move(wts))};
}

// ---------------------------------------------------------------------------
// Non-differentiability decrease check: along the perturbation X + t xi with
// xi = Y - E[Y|X], the squared distance drops at least linearly,
//   W2^2(mu_t, nu) <= W2^2(mu, nu) - (2t - t^2) V,   V = E|xi|^2.
// ---------------------------------------------------------------------------

template <class S>
struct DecreaseReport {
    S base_value;                 // W2^2(mu, nu)
    S variance;                   // V under the supplied coupling
    std::vector<S> t;             // tested step sizes
    std::vector<S> value;         // W2^2(mu_t, nu) per step
    std::vector<S> decrease_rate; // (base_value - value) / t, at least (2 - t) V
};

template <class S>
DecreaseReport<S> nondiff_decrease_check(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
                                         const Coupling<S>& pi, const std::vector<S>& t_list) {
    const S variance = conditional_variance(pi);
    if (!(variance > S(0)))
        throw InvalidArgument("decrease check needs a coupling with positive conditional variance");

    DecreaseReport<S> out;
    out.base_value = solve_w2(mu, nu).value;
    out.variance = variance;
    const S slack = scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(9);
    for (const S& t : t_list) {
        if (!(t > S(0)) || t > S(1))
            throw InvalidArgument("step sizes must lie in (0, 1]");
        PerturbedMeasure<S> mt = perturbed_measure(mu, nu, pi, t);
        const S val = solve_w2(mt.measure, nu).value;
        const S bound = out.base_value - (S(2) * t - t * t) * variance;
        if (val > bound + slack)
            throw AssertionFailed("perturbation failed to decrease the squared distance "
                                  "at the guaranteed linear rate");
        out.t.push_back(t);
        out.value.push_back(val);
        out.decrease_rate.push_back((out.base_value - val) / t);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Finite-difference check of the derivative on differentiable instances:
//   residual(t) = |W2^2(law(X + t xi), nu) - W2^2(mu, nu)
//                  - 2t sum_i mu_i (x_i - T(x_i)) . xi(x_i)|
// must vanish faster than linearly; fitted_order is the log-log slope of
// residual against t over the steps with positive residual, and +infinity
// when fewer than two of them remain (residuals identically zero).
// ---------------------------------------------------------------------------

template <class S>
struct FdReport {
    std::vector<S> residuals;
    double fitted_order;
};

template <class S>
FdReport<S> fd_derivative_check(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
                                const std::vector<Point<S>>& directions,
                                const std::vector<S>& t_list) {
    DiffCertificate<S> cert = diff_certificate(mu, nu);
    if (!cert.differentiable)
        throw NotDifferentiable("finite-difference check requires a unique map coupling");
    if (directions.size() != mu.size())
        throw InvalidArgument("one direction vector per source atom is required");
    for (const auto& xi : directions)
        if (xi.size() != mu.dimension())
            throw DimensionMismatch("direction dimension does not match the measure");

    const S base = solve_w2(mu, nu).value;
    S pairing(0); // sum_i mu_i derivative_i . xi_i  with derivative = 2(x - T(x))
    for (std::size_t i = 0; i < mu.size(); ++i)
        pairing += mu.weight(i) * dot((*cert.derivative)[i], directions[i]);

    FdReport<S> out;
    out.residuals.reserve(t_list.size());
    std::vector<double> lt, lr;
    for (const S& t : t_list) {
        std::vector<Point<S>> pts;
        pts.reserve(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i)
            pts.push_back(add(mu.point(i), scaled(directions[i], t)));
        DiscreteMeasure<S> shifted = mu.push_forward(pts);
        const S val = solve_w2(shifted, nu).value;
        const S res = abs_val(S(val - base - t * pairing));
        out.residuals.push_back(res);
        if (res > S(0) && t > S(0)) {
            lt.push_back(std::log(to_double(t)));
            lr.push_back(std::log(to_double(res)));
        }
    }

    if (lt.size() < 2) {
        out.fitted_order = std::numeric_limits<double>::infinity();
        return out;
    }
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < lt.size(); ++k) { mx += lt[k]; my += lr[k]; }
    mx /= static_cast<double>(lt.size());
    my /= static_cast<double>(lt.size());
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < lt.size(); ++k) {
        sxy += (lt[k] - mx) * (lr[k] - my);
        sxx += (lt[k] - mx) * (lt[k] - mx);
    }
    out.fitted_order = sxx > 0 ? sxy / sxx : std::numeric_limits<double>::infinity();
    return out;
}

// ---------------------------------------------------------------------------
// Prime-atom demonstration: for a uniform measure on p jittered sample points
// a transport map onto nu can only exist when every weight of nu is an
// integer multiple of 1/p, which singles out at most one prime.
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_prime(long p) {
    if (p < 2) return false;
    for (long q = 2; q * q <= p; ++q)
        if (p % q == 0) return false;
    return true;
}

// Radical-inverse (van der Corput) value of `index` in the given base; the
// result is an exact dyadic/triadic rational, so it stays exact in rational
// arithmetic.
template <class S>
S radical_inverse(unsigned long index, unsigned long base) {
    S r(0);
    S f = S(1) / S(static_cast<long>(base));
    while (index > 0) {
        r += f * S(static_cast<long>(index % base));
        index /= base;
        f /= S(static_cast<long>(base));
    }
    return r;
}

// Deterministic low-discrepancy jitter inside the unit ball: coordinate c of
// point i is the radical inverse of (seed + i + 1) in the c-th prime base,
// mapped from [0,1] to [-1/d, 1/d] so the euclidean norm stays below 1.
template <class S>
Point<S> halton_jitter(unsigned long index, std::size_t dim, unsigned long seed) {
    static const unsigned long bases[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
    if (dim > sizeof(bases) / sizeof(bases[0]))
        throw InvalidArgument("jitter supports dimensions up to 10");
    Point<S> v(dim, S(0));
    for (std::size_t c = 0; c < dim; ++c) {
        S u = radical_inverse<S>(seed + index + 1, bases[c]);
        v[c] = (S(2) * u - S(1)) / S(static_cast<long>(dim));
    }
    return v;
}

} // namespace detail

template <class S>
struct PrimeDemoReport {
    std::vector<long> primes;
    std::vector<bool> mass_feasible;          // per prime: all nu weights in (1/p) Z
    std::optional<long> feasible_prime;       // the at-most-one feasible entry
    std::vector<DiscreteMeasure<S>> perturbed; // mu_p per prime
};

template <class S>
PrimeDemoReport<S> prime_perturbation_demo(const std::vector<Point<S>>& sample_points,
                                           const DiscreteMeasure<S>& nu,
                                           const std::vector<long>& prime_list,
                                           unsigned long seed = 0) {
    if (nu.size() < 2)
        throw InvalidArgument("the demonstration requires a non-Dirac target");
    if (prime_list.empty()) throw InvalidArgument("at least one prime is required");
    for (long p : prime_list)
        if (!detail::is_prime(p)) throw InvalidArgument("prime list contains a composite entry");
    const std::size_t dim = nu.dimension();
    for (const auto& x : sample_points)
        if (x.size() != dim)
            throw DimensionMismatch("sample points must share the target's dimension");

    PrimeDemoReport<S> out;
    const S tol = scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(9);
    for (long p : prime_list) {
        if (sample_points.size() < static_cast<std::size_t>(p)) throw NotEnoughPoints();

        std::vector<Point<S>> pts;
        std::vector<S> wts;
        const S w = S(1) / S(p);
        for (long i = 0; i < p; ++i) {
            Point<S> y = detail::halton_jitter<S>(static_cast<unsigned long>(i), dim, seed);
            pts.push_back(add(sample_points[static_cast<std::size_t>(i)], scaled(y, w)));
            wts.push_back(w);
        }
        DiscreteMeasure<S> mu_p(std::move(pts), std::move(wts));
        if (mu_p.size() != static_cast<std::size_t>(p))
            throw InvalidArgument("sample points are not pairwise distinct after jitter");

        bool feasible = true;
        for (std::size_t j = 0; j < nu.size(); ++j) {
            const S scaled_w = nu.weight(j) * S(p);
            const S nearest = S(static_cast<long>(to_double(scaled_w) + 0.5));
            if (abs_val(S(scaled_w - nearest)) > tol) { feasible = false; break; }
        }

        out.primes.push_back(p);
        out.mass_feasible.push_back(feasible);
        out.perturbed.push_back(std::move(mu_p));
        if (feasible) {
            if (out.feasible_prime)
                throw AssertionFailed("two distinct primes cannot both divide every weight");
            out.feasible_prime = p;
        }
    }
    return out;
}

} // namespace w2lab
