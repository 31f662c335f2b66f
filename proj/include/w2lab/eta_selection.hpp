#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "coupling.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "measure.hpp"
#include "objective.hpp"
#include "scalar.hpp"
#include "transport.hpp"

namespace w2lab {

// ---------------------------------------------------------------------------
// Minimization of G(pi) = sum_i mu_i phi(b_i(pi)) over the optimal face of
// the transport polytope, where b_i is the conditional barycenter of row i.
// The scheme is a fully corrective Frank-Wolfe: vertices produced by the
// linear-minimization oracle over the face are collected, and the convex
// weights over the collected vertices are re-optimized exactly by an
// active-set solve of the (quadratic) restricted problem.  In exact
// arithmetic each outer round with positive gap contributes a vertex that is
// not yet in the collection, so the method terminates at an exact minimizer.
// ---------------------------------------------------------------------------

template <class S>
struct EtaSelection {
    DiscreteMeasure<S> eta;      // pushforward of the optimal barycenter map
    Coupling<S> pi;              // witness coupling on the optimal face
    std::vector<Point<S>> map;   // barycenter map values, one per source atom
    S fw_gap;                    // final linearization gap
    long iterations;
    std::vector<S> objective_history; // objective value at each outer round
};

namespace detail {

template <class S>
class FaceObjectiveMinimizer {
public:
    FaceObjectiveMinimizer(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
                           const QuadraticObjective<S>& phi)
        : mu_(mu), nu_(nu), phi_(phi), face_(mu, nu),
          n_(mu.size()), m_(nu.size()), d_(mu.dimension()) {
        if (phi_.dimension() != d_)
            throw DimensionMismatch("objective dimension does not match the measures");
    }

    EtaSelection<S> run() {
        push_vertex(face_.base().coupling.matrix);
        lambda_.assign(1, S(1));

        const S gap_tol = params::fw_gap_tol<S>();
        S gap(0);
        long outer = 0;
        bool converged = false;
        std::vector<S> pi, grad;
        std::vector<S> history;
        for (; outer < params::fw_max_iters; ++outer) {
            combine(pi);
            std::vector<Point<S>> b = barycenters_of(pi);
            S gval(0);
            for (std::size_t i = 0; i < n_; ++i) gval += mu_.weight(i) * phi_.eval(b[i]);
            history.push_back(gval);
            gradient_from(b, grad);
            TransportSolution<S> sol = face_.minimize(grad);
            S at_pi(0);
            for (std::size_t a = 0; a < pi.size(); ++a)
                if (pi[a] != S(0)) at_pi += grad[a] * pi[a];
            gap = at_pi - sol.secondary;
            if (gap <= gap_tol) { converged = true; break; }

            long idx = find_vertex(sol.flow);
            if (idx < 0) {
                push_vertex(sol.flow);
                lambda_.push_back(S(0));
                idx = static_cast<long>(vertices_.size()) - 1;
            }
            if (!polish()) fw_step(pi, static_cast<std::size_t>(idx), gap);
            prune();
        }
        if (!converged) throw FWStalled();

        combine(pi);
        std::vector<Point<S>> t = barycenters_of(pi);
        DiscreteMeasure<S> eta = mu_.push_forward(t);
        StructureCertificate<S> cert = certify_structure(mu_, eta);
        if (!cert.is_map)
            throw AssertionFailed(
                "face minimizer produced an intermediate measure without a unique map");
        return EtaSelection<S>{std::move(eta), Coupling<S>(mu_, nu_, std::move(pi)),
                               std::move(t), gap, outer, std::move(history)};
    }

private:
    // --- vertex bookkeeping -------------------------------------------------

    void push_vertex(const std::vector<S>& flow) {
        vertices_.push_back(flow);
        bary_.push_back(barycenters_of(flow));
    }

    long find_vertex(const std::vector<S>& flow) const {
        for (std::size_t k = 0; k < vertices_.size(); ++k)
            if (vertices_[k] == flow) return static_cast<long>(k);
        return -1;
    }

    std::vector<Point<S>> barycenters_of(const std::vector<S>& flow) const {
        std::vector<Point<S>> b(n_, Point<S>(d_, S(0)));
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < m_; ++j) {
                const S& p = flow[i * m_ + j];
                if (p == S(0)) continue;
                for (std::size_t c = 0; c < d_; ++c) b[i][c] += p * nu_.point(j)[c];
            }
            for (std::size_t c = 0; c < d_; ++c) b[i][c] = b[i][c] / mu_.weight(i);
        }
        return b;
    }

    void combine(std::vector<S>& pi) const {
        pi.assign(n_ * m_, S(0));
        for (std::size_t k = 0; k < vertices_.size(); ++k) {
            if (lambda_[k] == S(0)) continue;
            for (std::size_t a = 0; a < pi.size(); ++a)
                pi[a] += lambda_[k] * vertices_[k][a];
        }
    }

    void gradient_from(const std::vector<Point<S>>& b, std::vector<S>& grad) const {
        grad.assign(n_ * m_, S(0));
        for (std::size_t i = 0; i < n_; ++i) {
            Point<S> g = phi_.gradient(b[i]);
            for (std::size_t j = 0; j < m_; ++j)
                grad[i * m_ + j] = dot(g, nu_.point(j));
        }
    }

    // --- restricted problem over the collected vertices ---------------------
    //
    // G as a function of the convex weights is  lambda^T H lambda + c^T lambda
    // with H_kl = sum_i mu_i B_i^k A B_i^l and c_k = sum_i mu_i b . B_i^k.

    void build_restricted(std::vector<std::vector<S>>& H, std::vector<S>& c) const {
        const std::size_t K = vertices_.size();
        std::vector<std::vector<Point<S>>> AB(K);
        for (std::size_t k = 0; k < K; ++k) {
            AB[k].reserve(n_);
            for (std::size_t i = 0; i < n_; ++i)
                AB[k].push_back(mat_vec(phi_.quadratic_part(), bary_[k][i]));
        }
        H.assign(K, std::vector<S>(K, S(0)));
        c.assign(K, S(0));
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t l = k; l < K; ++l) {
                S acc(0);
                for (std::size_t i = 0; i < n_; ++i)
                    acc += mu_.weight(i) * dot(bary_[k][i], AB[l][i]);
                H[k][l] = acc;
                H[l][k] = acc;
            }
            S lin(0);
            for (std::size_t i = 0; i < n_; ++i)
                lin += mu_.weight(i) * dot(phi_.linear_part(), bary_[k][i]);
            c[k] = lin;
        }
    }

    S restricted_value(const std::vector<std::vector<S>>& H, const std::vector<S>& c,
                       const std::vector<S>& lam) const {
        S acc(0);
        for (std::size_t k = 0; k < lam.size(); ++k) {
            if (lam[k] == S(0)) continue;
            acc += c[k] * lam[k];
            for (std::size_t l = 0; l < lam.size(); ++l)
                if (lam[l] != S(0)) acc += lam[k] * H[k][l] * lam[l];
        }
        return acc;
    }

    // Exact active-set solve of min lambda^T H lambda + c^T lambda over the
    // probability simplex.  Returns true only when the weights were replaced
    // by a strictly better configuration; otherwise the caller falls back to
    // a plain Frank-Wolfe step, which makes strict progress whenever the
    // linearization gap is positive.
    bool polish() {
        const std::size_t K = vertices_.size();
        if (K == 1) return false;
        std::vector<std::vector<S>> H;
        std::vector<S> c;
        build_restricted(H, c);

        const S cur = restricted_value(H, c, lambda_);
        const S drop_tol = scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(12);
        const S enter_tol = scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(10);

        std::vector<std::size_t> W;
        for (std::size_t k = 0; k < K; ++k)
            if (lambda_[k] > S(0)) W.push_back(k);
        if (W.empty()) W.push_back(0);

        std::vector<S> best = lambda_;
        S best_val = cur;
        const std::size_t cap = 4 * K + 8;
        for (std::size_t iter = 0; iter < cap; ++iter) {
            const std::size_t w = W.size();
            Matrix<S> M(w + 1, Point<S>(w + 1, S(0)));
            std::vector<S> rhs(w + 1, S(0));
            for (std::size_t a = 0; a < w; ++a) {
                for (std::size_t bidx = 0; bidx < w; ++bidx)
                    M[a][bidx] = S(2) * H[W[a]][W[bidx]];
                M[a][w] = S(1);
                rhs[a] = -c[W[a]];
            }
            for (std::size_t bidx = 0; bidx < w; ++bidx) M[w][bidx] = S(1);
            rhs[w] = S(1);
            auto sol = solve_linear_system(M, rhs);
            if (!sol) break;

            std::size_t worst = w;
            for (std::size_t a = 0; a < w; ++a)
                if ((*sol)[a] < -drop_tol &&
                    (worst == w || (*sol)[a] < (*sol)[worst]))
                    worst = a;
            if (worst != w) {
                W.erase(W.begin() + static_cast<long>(worst));
                if (W.empty()) break;
                continue;
            }

            std::vector<S> cand(K, S(0));
            for (std::size_t a = 0; a < w; ++a)
                cand[W[a]] = (*sol)[a] < S(0) ? S(0) : (*sol)[a];
            const S kappa = (*sol)[w];
            const S val = restricted_value(H, c, cand);
            if (val < best_val) { best = cand; best_val = val; }

            // Reduced costs of the vertices left out of the working set.
            std::size_t enter = K;
            S enter_rc(0);
            for (std::size_t k = 0; k < K; ++k) {
                bool in_w = false;
                for (std::size_t a = 0; a < w; ++a)
                    if (W[a] == k) { in_w = true; break; }
                if (in_w) continue;
                S rc = c[k] + kappa;
                for (std::size_t l = 0; l < K; ++l)
                    if (cand[l] != S(0)) rc += S(2) * H[k][l] * cand[l];
                if (rc < -enter_tol && (enter == K || rc < enter_rc)) {
                    enter = k;
                    enter_rc = rc;
                }
            }
            if (enter == K) break;
            W.push_back(enter);
        }

        if (best_val < cur) { lambda_ = std::move(best); return true; }
        return false;
    }

    // Plain Frank-Wolfe step toward vertex `idx` with exact line search.
    void fw_step(const std::vector<S>& pi, std::size_t idx, const S& gap) {
        std::vector<Point<S>> cur_bary = barycenters_of(pi);
        S curvature(0);
        for (std::size_t i = 0; i < n_; ++i) {
            Point<S> u = sub(bary_[idx][i], cur_bary[i]);
            curvature += mu_.weight(i) * phi_.quad_form(u);
        }
        S gamma(1);
        if (curvature > S(0)) {
            gamma = gap / (S(2) * curvature);
            if (gamma > S(1)) gamma = S(1);
        }
        for (auto& l : lambda_) l *= (S(1) - gamma);
        lambda_[idx] += gamma;
    }

    void prune() {
        const S floor_tol = scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(14);
        std::vector<std::vector<S>> keep_v;
        std::vector<std::vector<Point<S>>> keep_b;
        std::vector<S> keep_l;
        for (std::size_t k = 0; k < vertices_.size(); ++k) {
            if (!(lambda_[k] > floor_tol)) continue;
            keep_v.push_back(std::move(vertices_[k]));
            keep_b.push_back(std::move(bary_[k]));
            keep_l.push_back(lambda_[k]);
        }
        vertices_ = std::move(keep_v);
        bary_ = std::move(keep_b);
        lambda_ = std::move(keep_l);
        if constexpr (!scalar_traits<S>::is_exact) {
            S total(0);
            for (const auto& l : lambda_) total += l;
            for (auto& l : lambda_) l /= total;
        }
    }

    const DiscreteMeasure<S>& mu_;
    const DiscreteMeasure<S>& nu_;
    const QuadraticObjective<S>& phi_;
    OptimalFace<S> face_;
    const std::size_t n_, m_, d_;

    std::vector<std::vector<S>> vertices_;       // flows of collected vertices
    std::vector<std::vector<Point<S>>> bary_;    // barycenters per vertex
    std::vector<S> lambda_;                      // convex weights
};

} // namespace detail

template <class S>
EtaSelection<S> minimize_phi_over_face(const DiscreteMeasure<S>& mu,
                                       const DiscreteMeasure<S>& nu,
                                       const QuadraticObjective<S>& phi) {
    detail::FaceObjectiveMinimizer<S> solver(mu, nu, phi);
    return solver.run();
}

template <class S>
DiscreteMeasure<S> underline_eta(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu) {
    return minimize_phi_over_face(mu, nu, QuadraticObjective<S>::norm_sq(mu.dimension())).eta;
}

// Tie-break among minimizers of phi by a small squared-norm regularization.
template <class S>
EtaSelection<S> tie_break_eta_phi(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
                                  const QuadraticObjective<S>& phi) {
    return minimize_phi_over_face(mu, nu, phi.regularized(params::tie_break_lambda<S>()));
}

// ---------------------------------------------------------------------------
// Probe for a convex-order-minimal element: if every objective in the family
// selects the same intermediate measure, that measure is the candidate
// minimum; otherwise two objectives with distinct selections witness that no
// minimum exists among the probed directions.
// ---------------------------------------------------------------------------

template <class S>
struct ProbeResult {
    bool all_equal = false;
    std::optional<DiscreteMeasure<S>> candidate;
    std::optional<std::pair<std::size_t, std::size_t>> counterexample;
    std::vector<DiscreteMeasure<S>> etas;
};

template <class S>
ProbeResult<S> minimal_element_probe(const DiscreteMeasure<S>& mu, const DiscreteMeasure<S>& nu,
                                     const std::vector<QuadraticObjective<S>>& family) {
    if (family.empty()) throw InvalidArgument("probe requires at least one objective");
    ProbeResult<S> out;
    for (const auto& phi : family)
        out.etas.push_back(minimize_phi_over_face(mu, nu, phi).eta);

    const S tol = params::probe_match<S>();
    for (std::size_t a = 0; a < out.etas.size(); ++a)
        for (std::size_t b = a + 1; b < out.etas.size(); ++b)
            if (!DiscreteMeasure<S>::approx_equal(out.etas[a], out.etas[b], tol, tol)) {
                out.all_equal = false;
                out.counterexample = std::make_pair(a, b);
                return out;
            }
    out.all_equal = true;
    out.candidate = underline_eta(mu, nu);
    return out;
}

} // namespace w2lab
