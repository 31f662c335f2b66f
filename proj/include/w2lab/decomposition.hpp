#pragma once

#include <cstddef>

#include "convex_order.hpp"
#include "coupling.hpp"
#include "errors.hpp"
#include "measure.hpp"
#include "scalar.hpp"
#include "transport.hpp"

namespace w2lab {

// ---------------------------------------------------------------------------
// The decomposition identity: for an optimal coupling pi of (mu, nu) with
// barycentric image eta,
//
//     W2^2(mu, nu) = W2^2(mu, eta) + M2(nu) - M2(eta),
//
// where M2 is the second moment.  The residual of this identity is the
// certified quantity; membership of eta in the intermediate set I additionally
// requires eta <=cx nu.
// ---------------------------------------------------------------------------

template <class S>
S decomposition_residual(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
                         const Coupling<S>& pi) {
    if (pi.source != mu || pi.target != nu)
        throw InvalidArgument("coupling marginals must be the given measures");
    const W2Solution<S> opt = solve_w2(mu, nu);
    const S cost = pi.quadratic_cost();
    const S tol = scalar_traits<S>::is_exact
                      ? S(0)
                      : pow10_neg<S>(9) * (S(1) + abs_val(opt.value));
    if (cost > opt.value + tol)
        throw NotOptimal("coupling cost exceeds the optimal transport value");

    const DiscreteMeasure<S> eta = barycentric_image(pi);
    const S w2_mid = solve_w2(mu, eta).value;
    return opt.value - w2_mid - nu.second_moment() + eta.second_moment();
}

// eta belongs to I(mu, nu) when eta <=cx nu and the decomposition identity
// holds with eta in the middle, within `tol` (exact zero by default in
// rational mode).
template <class S>
bool in_I(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
          const DiscreteMeasure<S>& eta, const S& tol) {
    if (mu.dimension() != nu.dimension() || mu.dimension() != eta.dimension())
        throw DimensionMismatch("membership test requires a common dimension");
    // One-dimensional pairs use the potential-function characterization,
    // which agrees with the feasibility test but runs in quasi-linear time.
    const bool ordered = mu.dimension() == 1 ? convex_order_1d(eta, nu)
                                             : convex_order_test(eta, nu).ordered;
    if (!ordered) return false;
    const S residual = solve_w2(mu, nu).value - solve_w2(mu, eta).value -
                       nu.second_moment() + eta.second_moment();
    return abs_val(residual) <= tol;
}

template <class S>
bool in_I(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
          const DiscreteMeasure<S>& eta) {
    const S tol = scalar_traits<S>::is_exact ? S(0) : params::residual_tol<S>();
    return in_I(mu, nu, eta, tol);
}

} // namespace w2lab
