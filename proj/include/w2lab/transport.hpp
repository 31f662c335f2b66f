#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "coupling.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "measure.hpp"
#include "network_simplex.hpp"
#include "scalar.hpp"

namespace w2lab {

// ---------------------------------------------------------------------------
// Quadratic-cost optimal transport between finitely supported measures:
// the squared-Wasserstein value, an optimal coupling that is a vertex of the
// transport polytope, a dual feasibility certificate with zero gap, probing
// of the optimal face, and the uniqueness/map structure certificate.
// ---------------------------------------------------------------------------

template <class S>
std::vector<S> squared_cost_matrix(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu) {
    if (mu.dimension() != nu.dimension())
        throw DimensionMismatch("transport requires measures sharing one ambient dimension");
    std::vector<S> c(mu.size() * nu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < nu.size(); ++j)
            c[i * nu.size() + j] = sqdist(mu.point(i), nu.point(j));
    return c;
}

// Kantorovich potentials: u_i + v_j <= |x_i - y_j|^2 everywhere, with
// equality of sum(u_i mu_i) + sum(v_j nu_j) and the primal cost at optimum.
template <class S>
struct DualCertificate {
    std::vector<S> u, v;

    S value(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu) const {
        S acc(0);
        for (std::size_t i = 0; i < mu.size(); ++i) acc += u[i] * mu.weight(i);
        for (std::size_t j = 0; j < nu.size(); ++j) acc += v[j] * nu.weight(j);
        return acc;
    }
};

template <class S>
struct W2Solution {
    S value;                 // squared Wasserstein distance
    Coupling<S> coupling;    // an optimal vertex of the transport polytope
    DualCertificate<S> dual;
    std::vector<int> basis;  // spanning-tree arcs of the returned vertex
    long pivots = 0;
};

namespace detail {

// Verifies dual feasibility and the duality gap; both hold by construction of
// the simplex termination rule, so a violation signals an internal bug.
template <class S>
void check_duality(const S& primal, const DualCertificate<S>& dual,
                   const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
                   const std::vector<S>& c) {
    S scale(1);
    for (const auto& x : c)
        if (abs_val(x) > scale) scale = abs_val(x);
    const S feas_tol = scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(9) * scale;
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (std::size_t j = 0; j < nu.size(); ++j)
            if (dual.u[i] + dual.v[j] > c[i * nu.size() + j] + feas_tol)
                throw AssertionFailed("transport dual certificate is infeasible");
    const S gap = primal - dual.value(mu, nu);
    const S gap_tol = scalar_traits<S>::is_exact
                          ? S(0)
                          : pow10_neg<S>(9) * (S(1) + abs_val(primal));
    if (abs_val(gap) > gap_tol)
        throw AssertionFailed("transport solve terminated with a nonzero duality gap");
}

} // namespace detail

template <class S>
W2Solution<S> solve_w2(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu) {
    const std::vector<S> c = squared_cost_matrix(mu, nu);
    TransportSolution<S> sol =
        solve_transport(mu.size(), nu.size(), mu.weights(), nu.weights(), c);
    DualCertificate<S> dual{std::move(sol.u), std::move(sol.v)};
    detail::check_duality(sol.cost, dual, mu, nu, c);
    return W2Solution<S>{sol.cost, Coupling<S>(mu, nu, std::move(sol.flow)),
                         std::move(dual), std::move(sol.basis), sol.pivots};
}

// ---------------------------------------------------------------------------
// The optimal face: couplings of cost exactly W2^2.  By complementary
// slackness these are the feasible flows supported on the cells whose reduced
// cost under one optimal dual vanishes, so linear problems over the face are
// transport solves with a lexicographic secondary objective, warm-started
// from the original optimal basis.
// ---------------------------------------------------------------------------

template <class S>
class OptimalFace {
public:
    OptimalFace(DiscreteMeasure<S> mu, DiscreteMeasure<S> nu)
        : mu_(std::move(mu)), nu_(std::move(nu)),
          cost_(squared_cost_matrix(mu_, nu_)), base_(solve_w2(mu_, nu_)) {
        S scale(1);
        for (const auto& x : cost_)
            if (abs_val(x) > scale) scale = abs_val(x);
        band_ = scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(9) * scale;
        std::vector<char> in_support(cost_.size(), 0);
        for (std::size_t a = 0; a < cost_.size(); ++a) {
            const std::size_t i = a / nu_.size(), j = a % nu_.size();
            S rc = cost_[a] - base_.dual.u[i] - base_.dual.v[j];
            if (abs_val(rc) <= band_) in_support[a] = 1;
        }
        for (int a : base_.basis) in_support[static_cast<std::size_t>(a)] = 1;
        for (std::size_t a = 0; a < cost_.size(); ++a)
            if (in_support[a]) support_.push_back(static_cast<int>(a));
    }

    const DiscreteMeasure<S>& source() const { return mu_; }
    const DiscreteMeasure<S>& target() const { return nu_; }
    const S& value() const { return base_.value; }
    const W2Solution<S>& base() const { return base_; }

    // Arc ids i*m+j of the cells that can carry mass on the face.
    const std::vector<int>& support_arcs() const { return support_; }

    std::vector<std::pair<std::size_t, std::size_t>> support_cells() const {
        std::vector<std::pair<std::size_t, std::size_t>> cells;
        cells.reserve(support_.size());
        for (int a : support_)
            cells.emplace_back(static_cast<std::size_t>(a) / nu_.size(),
                               static_cast<std::size_t>(a) % nu_.size());
        return cells;
    }

    // If the support cells are acyclic they carry exactly one feasible flow,
    // so the face is a singleton without any probing.
    bool support_is_forest() const {
        std::vector<int> parent(mu_.size() + nu_.size());
        for (std::size_t k = 0; k < parent.size(); ++k) parent[k] = static_cast<int>(k);
        auto find = [&](int x) {
            while (parent[x] != x) { parent[x] = parent[parent[x]]; x = parent[x]; }
            return x;
        };
        for (int a : support_) {
            int i = a / static_cast<int>(nu_.size());
            int j = static_cast<int>(mu_.size()) + a % static_cast<int>(nu_.size());
            int ri = find(i), rj = find(j);
            if (ri == rj) return false;
            parent[ri] = rj;
        }
        return true;
    }

    // Vertex of the face minimizing sum(direction_ij pi_ij); lexicographic
    // secondary objective warm-started from the base optimum.
    TransportSolution<S> minimize(const std::vector<S>& direction) const {
        TransportOptions<S> opt;
        opt.secondary = &direction;
        opt.warm_basis = &base_.basis;
        opt.warm_flow = &base_.coupling.matrix;
        return solve_transport(mu_.size(), nu_.size(), mu_.weights(), nu_.weights(),
                               cost_, opt);
    }

    // Range of one matrix entry over the face.
    std::pair<S, S> coordinate_range(std::size_t i, std::size_t j) const {
        std::vector<S> dir(cost_.size(), S(0));
        const std::size_t a = i * nu_.size() + j;
        dir[a] = S(1);
        TransportSolution<S> lo = minimize(dir);
        dir[a] = S(-1);
        TransportSolution<S> hi = minimize(dir);
        return {lo.flow[a], hi.flow[a]};
    }

private:
    DiscreteMeasure<S> mu_, nu_;
    std::vector<S> cost_;
    W2Solution<S> base_;
    S band_ = S(0);
    std::vector<int> support_;
};

// Range of pi_ij over the couplings of cost w2, where w2 must be the certified
// optimum: below it the face is empty, above it the probe is not supported.
template <class S>
std::pair<S, S> face_coordinate_range(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
                                      const S& w2, std::size_t i, std::size_t j) {
    if (i >= mu.size() || j >= nu.size())
        throw InvalidArgument("face probe cell is out of range");
    OptimalFace<S> face(mu, nu);
    const S tol = scalar_traits<S>::is_exact ? S(0)
                                             : pow10_neg<S>(9) * (S(1) + abs_val(face.value()));
    if (w2 < face.value() - tol)
        throw InfeasibleFace("no coupling reaches a cost below the optimum");
    if (w2 > face.value() + tol)
        throw NotOptimal("cost level above the optimum does not define a face");
    return face.coordinate_range(i, j);
}

// ---------------------------------------------------------------------------
// Structure certificate: either the optimal coupling is unique and given by a
// map, or some optimal coupling has positive conditional variance.  The
// uniqueness test probes the coordinate range of every face-support cell; the
// witness for non-uniqueness is the average of two optimal vertices split at
// the first ambiguous cell.
// ---------------------------------------------------------------------------

template <class S>
struct StructureCertificate {
    S w2_squared;
    bool unique = false;
    bool is_map = false;
    std::optional<std::vector<Point<S>>> map; // per source atom, when is_map
    S conditional_variance;
    Coupling<S> witness_coupling;
};

template <class S>
StructureCertificate<S> certify_structure(const DiscreteMeasure<S>& mu,
                                          const DiscreteMeasure<S>& nu) {
    OptimalFace<S> face(mu, nu);
    const std::size_t m = nu.size();
    const S split_tol = tolerances<S>::marginal();

    bool unique = true;
    std::optional<Coupling<S>> witness;
    if (!face.support_is_forest()) {
        for (int a : face.support_arcs()) {
            const std::size_t i = static_cast<std::size_t>(a) / m;
            const std::size_t j = static_cast<std::size_t>(a) % m;
            auto [lo, hi] = face.coordinate_range(i, j);
            if (hi - lo > split_tol) {
                unique = false;
                std::vector<S> dir(mu.size() * m, S(0));
                dir[static_cast<std::size_t>(a)] = S(1);
                TransportSolution<S> low = face.minimize(dir);
                dir[static_cast<std::size_t>(a)] = S(-1);
                TransportSolution<S> high = face.minimize(dir);
                std::vector<S> avg(low.flow.size());
                const S half = S(1) / S(2);
                for (std::size_t k = 0; k < avg.size(); ++k)
                    avg[k] = (low.flow[k] + high.flow[k]) * half;
                witness.emplace(mu, nu, std::move(avg));
                break;
            }
        }
    }
    if (!witness) witness.emplace(face.base().coupling);

    StructureCertificate<S> cert{face.value(), unique, false, std::nullopt,
                                 S(0), std::move(*witness)};

    if (unique) {
        const S support_tol = tolerances<S>::marginal();
        bool single = true;
        std::vector<Point<S>> images;
        for (std::size_t i = 0; i < mu.size() && single; ++i) {
            std::size_t hits = 0, jstar = 0;
            for (std::size_t j = 0; j < m; ++j)
                if (abs_val(cert.witness_coupling.at(i, j)) > support_tol) {
                    ++hits;
                    jstar = j;
                }
            if (hits == 1) images.push_back(nu.point(jstar)); else single = false;
        }
        if (single) {
            cert.is_map = true;
            cert.map = std::move(images);
        }
    }

    cert.conditional_variance = conditional_variance(cert.witness_coupling);
    const S var_tol = scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(12);
    if (cert.is_map) {
        if (cert.conditional_variance > var_tol)
            throw AssertionFailed("map coupling reported positive conditional variance");
    } else if (!(cert.conditional_variance > var_tol)) {
        throw AssertionFailed("structure witness has zero conditional variance");
    }
    return cert;
}

// ---------------------------------------------------------------------------
// Vertex enumeration of the optimal face, by breadth-first search over the
// feasible spanning-tree bases inside the face support.  Every entering arc
// keeps the cost optimal (zero reduced cost), and following every tie of the
// ratio test covers every simplex path, hence every vertex.
// ---------------------------------------------------------------------------

template <class S>
std::vector<Coupling<S>> enumerate_optimal_vertices(const DiscreteMeasure<S>& mu,
                                                    const DiscreteMeasure<S>& nu) {
    const std::size_t n = mu.size(), m = nu.size(), V = n + m;
    if (V > static_cast<std::size_t>(params::enumerate_guard))
        throw TooLarge("vertex enumeration is limited to n+m <= 12 atoms");

    OptimalFace<S> face(mu, nu);
    std::vector<char> in_support(n * m, 0);
    for (int a : face.support_arcs()) in_support[static_cast<std::size_t>(a)] = 1;

    std::vector<int> start_basis = face.base().basis;
    std::sort(start_basis.begin(), start_basis.end());

    std::set<std::vector<int>> seen_bases;
    std::set<std::vector<S>> flows;
    std::deque<std::pair<std::vector<int>, std::vector<S>>> queue;
    seen_bases.insert(start_basis);
    flows.insert(face.base().coupling.matrix);
    queue.emplace_back(std::move(start_basis), face.base().coupling.matrix);

    std::vector<std::vector<int>> adj(V);
    std::vector<int> parent_arc(V), parent_node(V), order;
    std::vector<char> visited(V);

    while (!queue.empty()) {
        if (seen_bases.size() > static_cast<std::size_t>(params::enumerate_max_vertices))
            throw TooLarge("optimal face has too many bases to enumerate");
        auto [basis, flow] = std::move(queue.front());
        queue.pop_front();

        for (auto& lst : adj) lst.clear();
        std::vector<char> basic(n * m, 0);
        for (int a : basis) {
            basic[static_cast<std::size_t>(a)] = 1;
            adj[static_cast<std::size_t>(a) / m].push_back(a);
            adj[n + static_cast<std::size_t>(a) % m].push_back(a);
        }

        for (std::size_t e = 0; e < n * m; ++e) {
            if (basic[e] || !in_support[e]) continue;
            const int ei = static_cast<int>(e / m), ej = static_cast<int>(e % m);
            // Tree path from the arc's column node back to its row node.
            std::fill(visited.begin(), visited.end(), 0);
            order.clear();
            const int start = static_cast<int>(n) + ej, goal = ei;
            order.push_back(start);
            visited[static_cast<std::size_t>(start)] = 1;
            for (std::size_t head = 0; head < order.size() && !visited[static_cast<std::size_t>(goal)]; ++head) {
                int node = order[head];
                for (int arc : adj[static_cast<std::size_t>(node)]) {
                    int i = arc / static_cast<int>(m);
                    int other = (node == i) ? static_cast<int>(n) + arc % static_cast<int>(m) : i;
                    if (visited[static_cast<std::size_t>(other)]) continue;
                    visited[static_cast<std::size_t>(other)] = 1;
                    parent_arc[static_cast<std::size_t>(other)] = arc;
                    parent_node[static_cast<std::size_t>(other)] = node;
                    order.push_back(other);
                }
            }

            std::vector<int> cyc_arcs;
            std::vector<int> cyc_sign;
            for (int node = goal; node != start; node = parent_node[static_cast<std::size_t>(node)]) {
                int arc = parent_arc[static_cast<std::size_t>(node)];
                bool node_is_source = (node == arc / static_cast<int>(m));
                cyc_arcs.push_back(arc);
                cyc_sign.push_back(node_is_source ? -1 : 1);
            }

            bool have_theta = false;
            S theta(0);
            for (std::size_t k = 0; k < cyc_arcs.size(); ++k) {
                if (cyc_sign[k] > 0) continue;
                const S& f = flow[static_cast<std::size_t>(cyc_arcs[k])];
                if (!have_theta || f < theta) { theta = f; have_theta = true; }
            }
            if (!have_theta) throw AssertionFailed("face pivot found no blocking arc");

            for (std::size_t k = 0; k < cyc_arcs.size(); ++k) {
                if (cyc_sign[k] > 0 || flow[static_cast<std::size_t>(cyc_arcs[k])] != theta)
                    continue;
                const int leave = cyc_arcs[k];
                std::vector<int> next_basis;
                next_basis.reserve(basis.size());
                for (int a : basis)
                    if (a != leave) next_basis.push_back(a);
                next_basis.push_back(static_cast<int>(e));
                std::sort(next_basis.begin(), next_basis.end());
                if (!seen_bases.insert(next_basis).second) continue;

                std::vector<S> next_flow = flow;
                next_flow[e] += theta;
                for (std::size_t q = 0; q < cyc_arcs.size(); ++q) {
                    auto arc = static_cast<std::size_t>(cyc_arcs[q]);
                    if (cyc_sign[q] > 0) next_flow[arc] += theta;
                    else next_flow[arc] -= theta;
                }
                next_flow[static_cast<std::size_t>(leave)] = S(0);
                flows.insert(next_flow);
                queue.emplace_back(std::move(next_basis), std::move(next_flow));
            }
        }
    }

    std::vector<Coupling<S>> out;
    out.reserve(flows.size());
    for (const auto& f : flows) out.emplace_back(mu, nu, f);
    return out;
}

} // namespace w2lab
