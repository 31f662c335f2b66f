#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "scalar.hpp"

namespace w2lab {

// ---------------------------------------------------------------------------
// Primal network simplex for the dense bipartite transportation problem
//
//     minimize    sum_{ij} c_ij f_ij
//     subject to  sum_j f_ij = supply_i,   sum_i f_ij = demand_j,   f >= 0,
//
// with an optional *lexicographic* secondary objective g: among the minimizers
// of c, minimize g.  The pivot rule enters arcs whose reduced-cost pair
// (rc_c, rc_g) is lexicographically negative, which is the standard
// parametric-cost simplex for c + epsilon*g with infinitesimal epsilon; the
// returned basic solution is therefore a vertex of the c-optimal face that
// minimizes g over that face.
//
// Exact scalars use Bland's rule (guaranteed termination); floating scalars
// use a Dantzig (most-negative) rule with deterministic tie-breaking and a
// pivot cap.  A previous optimal basis for the same marginals can be supplied
// as a warm start, which makes repeated face probes cheap.
// ---------------------------------------------------------------------------

template <class S>
struct TransportSolution {
    std::size_t n = 0, m = 0;
    std::vector<S> flow;     // n*m, row-major; basic feasible solution
    std::vector<S> u, v;     // potentials: u_i + v_j = c_ij on the basis tree
    S cost = S(0);           // primary objective at the solution
    S secondary = S(0);      // secondary objective (0 when unused)
    std::vector<int> basis;  // n+m-1 arc ids (i*m + j) forming a spanning tree
    long pivots = 0;

    const S& at(std::size_t i, std::size_t j) const { return flow[i * m + j]; }
};

template <class S>
struct TransportOptions {
    const std::vector<S>* secondary = nullptr;   // lexicographic tie objective
    const std::vector<int>* warm_basis = nullptr;
    const std::vector<S>* warm_flow = nullptr;
    long pivot_cap = 0;                          // 0: use the built-in default
};

namespace detail {

template <class S>
class TransportSimplex {
public:
    TransportSimplex(std::size_t n, std::size_t m,
                     const std::vector<S>& supply, const std::vector<S>& demand,
                     const std::vector<S>& cost, const TransportOptions<S>& opt)
        : n_(n), m_(m), V_(n + m), supply_(supply), demand_(demand),
          cost_(cost), opt_(opt) {
        if (n_ == 0 || m_ == 0) throw EmptyMeasure("transport problem with empty side");
        if (supply_.size() != n_ || demand_.size() != m_ || cost_.size() != n_ * m_)
            throw InvalidArgument("transport problem arrays have inconsistent sizes");
        if (opt_.secondary && opt_.secondary->size() != n_ * m_)
            throw InvalidArgument("secondary cost array has the wrong size");
        if constexpr (!scalar_traits<S>::is_exact) {
            S scale1(1);
            for (const auto& c : cost_)
                if (abs_val(c) > scale1) scale1 = abs_val(c);
            face_band_ = pow10_neg<S>(9) * scale1;
            opt_tol1_ = pow10_neg<S>(11) * scale1;
            if (opt_.secondary) {
                S scale2(1);
                for (const auto& g : *opt_.secondary)
                    if (abs_val(g) > scale2) scale2 = abs_val(g);
                opt_tol2_ = pow10_neg<S>(11) * scale2;
            }
        }
    }

    TransportSolution<S> run() {
        if (opt_.warm_basis) warm_start(); else northwest_start();
        build_adjacency();

        const long cap = opt_.pivot_cap > 0
                             ? opt_.pivot_cap
                             : 1000 + 5L * static_cast<long>(n_ * m_);
        long pivots = 0;
        for (;;) {
            compute_potentials();
            // Floating mode falls back from Dantzig to first-improving arc
            // selection after many pivots to escape degenerate cycling.
            int entering = price(pivots > cap / 2);
            if (entering < 0) break;
            if (++pivots > cap) throw SolverStalled();
            pivot(entering);
        }

        TransportSolution<S> out;
        out.n = n_; out.m = m_;
        out.flow = std::move(flow_);
        out.u = std::move(u_);
        out.v = std::move(v_);
        out.basis.reserve(V_ - 1);
        for (std::size_t a = 0; a < n_ * m_; ++a)
            if (in_basis_[a]) out.basis.push_back(static_cast<int>(a));
        out.pivots = pivots;
        for (std::size_t a = 0; a < n_ * m_; ++a) {
            if (out.flow[a] == S(0)) continue;
            out.cost += cost_[a] * out.flow[a];
            if (opt_.secondary) out.secondary += (*opt_.secondary)[a] * out.flow[a];
        }
        return out;
    }

private:
    // --- initial basis -----------------------------------------------------

    void northwest_start() {
        flow_.assign(n_ * m_, S(0));
        in_basis_.assign(n_ * m_, false);
        std::vector<S> a = supply_, b = demand_;
        std::size_t i = 0, j = 0;
        for (;;) {
            const std::size_t arc = i * m_ + j;
            S theta = a[i] < b[j] ? a[i] : b[j];
            if (theta < S(0)) theta = S(0); // guard against float residue
            flow_[arc] = theta;
            in_basis_[arc] = true;
            a[i] -= theta;
            b[j] -= theta;
            if (i == n_ - 1 && j == m_ - 1) break;
            // Advance one index per step so exactly n+m-1 cells are visited;
            // once the last column is reached only rows may advance (guards
            // against floating residue walking j out of range).
            if ((!(a[i] > S(0)) || j == m_ - 1) && i < n_ - 1) ++i; else ++j;
        }
    }

    void warm_start() {
        flow_.assign(n_ * m_, S(0));
        in_basis_.assign(n_ * m_, false);
        const auto& basis = *opt_.warm_basis;
        if (basis.size() != V_ - 1)
            throw InvalidArgument("warm-start basis must have n+m-1 arcs");
        if (!opt_.warm_flow || opt_.warm_flow->size() != n_ * m_)
            throw InvalidArgument("warm start requires the matching flow array");
        flow_ = *opt_.warm_flow;
        for (int a : basis) in_basis_[a] = true;
        for (std::size_t a = 0; a < n_ * m_; ++a)
            if (!in_basis_[a] && flow_[a] != S(0))
                throw InvalidArgument("warm-start flow is positive off its basis");
    }

    // --- tree bookkeeping ---------------------------------------------------

    void build_adjacency() {
        adj_.assign(V_, {});
        for (std::size_t a = 0; a < n_ * m_; ++a)
            if (in_basis_[a]) adj_link(static_cast<int>(a));
        // Validate the basis is a spanning tree (V-1 arcs + connected).
        std::size_t count = 0;
        for (std::size_t a = 0; a < n_ * m_; ++a) count += in_basis_[a] ? 1u : 0u;
        if (count != V_ - 1) throw InvalidArgument("basis does not have n+m-1 arcs");
        bfs_order_.reserve(V_);
        compute_potentials(); // also checks connectivity
    }

    void adj_link(int arc) {
        int i = arc / static_cast<int>(m_), j = arc % static_cast<int>(m_);
        adj_[i].push_back(arc);
        adj_[n_ + j].push_back(arc);
    }

    void adj_unlink(int arc) {
        int i = arc / static_cast<int>(m_), j = arc % static_cast<int>(m_);
        auto drop = [&](std::vector<int>& lst) {
            for (std::size_t k = 0; k < lst.size(); ++k)
                if (lst[k] == arc) { lst[k] = lst.back(); lst.pop_back(); return; }
        };
        drop(adj_[i]);
        drop(adj_[static_cast<std::size_t>(n_) + j]);
    }

    // BFS from node 0 assigning potentials so u_i + v_j = c_ij on tree arcs
    // (and likewise for the secondary cost).
    void compute_potentials() {
        u_.assign(n_, S(0));
        v_.assign(m_, S(0));
        if (opt_.secondary) { u2_.assign(n_, S(0)); v2_.assign(m_, S(0)); }
        visited_.assign(V_, false);
        bfs_order_.clear();
        bfs_order_.push_back(0);
        visited_[0] = true;
        for (std::size_t head = 0; head < bfs_order_.size(); ++head) {
            int node = bfs_order_[head];
            for (int arc : adj_[node]) {
                int i = arc / static_cast<int>(m_), j = arc % static_cast<int>(m_);
                int other = (node == i) ? static_cast<int>(n_) + j : i;
                if (visited_[other]) continue;
                visited_[other] = true;
                if (node == i) {
                    v_[j] = cost_[arc] - u_[i];
                    if (opt_.secondary) v2_[j] = (*opt_.secondary)[arc] - u2_[i];
                } else {
                    u_[i] = cost_[arc] - v_[j];
                    if (opt_.secondary) u2_[i] = (*opt_.secondary)[arc] - v2_[j];
                }
                bfs_order_.push_back(other);
            }
        }
        if (bfs_order_.size() != V_)
            throw InvalidArgument("basis arcs do not form a spanning tree");
    }

    // Lexicographic sign of the reduced-cost pair of a nonbasic arc:
    // negative means "entering improves the solution".
    bool lex_negative(std::size_t arc, S& rc1_out) const {
        const int i = static_cast<int>(arc / m_), j = static_cast<int>(arc % m_);
        S rc1 = cost_[arc] - u_[i] - v_[j];
        rc1_out = rc1;
        if constexpr (scalar_traits<S>::is_exact) {
            if (rc1 < S(0)) return true;
            if (opt_.secondary && rc1 == S(0)) {
                S rc2 = (*opt_.secondary)[arc] - u2_[i] - v2_[j];
                return rc2 < S(0);
            }
            return false;
        } else {
            if (!opt_.secondary) return rc1 < -opt_tol1_;
            if (rc1 < -face_band_) return true;
            if (abs_val(rc1) <= face_band_) {
                S rc2 = (*opt_.secondary)[arc] - u2_[i] - v2_[j];
                return rc2 < -opt_tol2_;
            }
            return false;
        }
    }

    // Entering-arc selection.  Exact: Bland (first improving arc id).
    // Floating: Dantzig (most lexicographically negative; ties -> lowest id),
    // degrading to first-improving when asked.
    int price(bool first_improving) {
        if constexpr (scalar_traits<S>::is_exact) {
            for (std::size_t a = 0; a < n_ * m_; ++a) {
                if (in_basis_[a]) continue;
                S rc1;
                if (lex_negative(a, rc1)) return static_cast<int>(a);
            }
            return -1;
        } else {
            int best = -1;
            S best_key(0);
            for (std::size_t a = 0; a < n_ * m_; ++a) {
                if (in_basis_[a]) continue;
                S rc1;
                if (!lex_negative(a, rc1)) continue;
                if (first_improving) return static_cast<int>(a);
                // Improving arcs in the face band score by their secondary
                // reduced cost, shifted to rank below all primary improvements.
                S key;
                if (rc1 < -face_band_) {
                    key = rc1;
                } else {
                    const int i = static_cast<int>(a / m_), j = static_cast<int>(a % m_);
                    S rc2 = (*opt_.secondary)[a] - u2_[i] - v2_[j];
                    key = rc2 * pow10_neg<S>(6); // face moves rank after cost moves
                }
                if (best < 0 || key < best_key) { best = static_cast<int>(a); best_key = key; }
            }
            return best;
        }
    }

    // Add `entering`, push the largest feasible flow around the induced
    // cycle, and remove the blocking arc.
    void pivot(int entering) {
        const int ei = entering / static_cast<int>(m_);
        const int ej = entering % static_cast<int>(m_);
        // Tree path from head (sink n+ej) to tail (source ei).
        parent_arc_.assign(V_, -1);
        parent_node_.assign(V_, -1);
        visited_.assign(V_, false);
        bfs_order_.clear();
        const int start = static_cast<int>(n_) + ej, goal = ei;
        bfs_order_.push_back(start);
        visited_[start] = true;
        for (std::size_t head = 0; head < bfs_order_.size() && !visited_[goal]; ++head) {
            int node = bfs_order_[head];
            for (int arc : adj_[node]) {
                int i = arc / static_cast<int>(m_), j = arc % static_cast<int>(m_);
                int other = (node == i) ? static_cast<int>(n_) + j : i;
                if (visited_[other]) continue;
                visited_[other] = true;
                parent_arc_[other] = arc;
                parent_node_[other] = node;
                bfs_order_.push_back(other);
            }
        }
        if (!visited_[goal]) throw AssertionFailed("pivot cycle not found in basis tree");

        // The cycle runs tail ->(entering)-> head ->(tree path)-> tail, so on
        // the tree path it is oriented parent -> child of the BFS walk below.
        // An arc traversed with its source->sink direction carries +theta,
        // against it -theta; "node is the source end" means parent is the
        // sink end, i.e. the cycle traverses the arc sink -> source: -theta.
        cycle_arcs_.clear();
        cycle_sign_.clear();
        for (int node = goal; node != start; node = parent_node_[node]) {
            int arc = parent_arc_[node];
            int i = arc / static_cast<int>(m_);
            bool node_is_source = (node == i);
            cycle_arcs_.push_back(arc);
            cycle_sign_.push_back(node_is_source ? S(-1) : S(1));
        }

        // Ratio test over the -theta arcs; Bland tie-break on arc id.
        bool have_theta = false;
        S theta(0);
        int leaving = -1;
        for (std::size_t k = 0; k < cycle_arcs_.size(); ++k) {
            if (cycle_sign_[k] > S(0)) continue; // flow increases, no bound
            const S& f = flow_[cycle_arcs_[k]];
            if (!have_theta || f < theta ||
                (f == theta && cycle_arcs_[k] < leaving)) {
                theta = f;
                leaving = cycle_arcs_[k];
                have_theta = true;
            }
        }
        if (!have_theta) throw AssertionFailed("transport pivot found no blocking arc");

        if (theta != S(0)) {
            flow_[entering] += theta;
            for (std::size_t k = 0; k < cycle_arcs_.size(); ++k) {
                if (cycle_sign_[k] > S(0)) flow_[cycle_arcs_[k]] += theta;
                else flow_[cycle_arcs_[k]] -= theta;
            }
        }
        flow_[leaving] = S(0);
        in_basis_[leaving] = false;
        in_basis_[entering] = true;
        adj_unlink(leaving);
        adj_link(entering);
    }

    const std::size_t n_, m_, V_;
    std::vector<S> supply_, demand_, cost_;
    TransportOptions<S> opt_;
    S face_band_ = S(0), opt_tol1_ = S(0), opt_tol2_ = S(0);

    std::vector<S> flow_, u_, v_, u2_, v2_;
    std::vector<char> in_basis_;
    std::vector<std::vector<int>> adj_;
    std::vector<char> visited_;
    std::vector<int> bfs_order_, parent_arc_, parent_node_;
    std::vector<int> cycle_arcs_;
    std::vector<S> cycle_sign_;
};

} // namespace detail

template <class S>
TransportSolution<S> solve_transport(std::size_t n, std::size_t m,
                                     const std::vector<S>& supply,
                                     const std::vector<S>& demand,
                                     const std::vector<S>& cost,
                                     const TransportOptions<S>& opt = {}) {
    detail::TransportSimplex<S> solver(n, m, supply, demand, cost, opt);
    return solver.run();
}

} // namespace w2lab
