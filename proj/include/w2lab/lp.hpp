#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "scalar.hpp"

namespace w2lab {

// ---------------------------------------------------------------------------
// Phase-1 revised simplex for equality-form feasibility:
//
//     does there exist x >= 0 with  A x = b ?
//
// Columns are sparse; the basis inverse is dense.  Starting from an all-
// artificial basis, the artificial mass is minimized; zero mass certifies
// feasibility with the structural basic solution, positive mass yields the
// optimal dual multipliers y, which satisfy  y^T A <= 0  and  y^T b > 0 -- a
// certificate that no nonnegative solution exists.
// ---------------------------------------------------------------------------

template <class S>
struct SparseColumn {
    std::vector<std::pair<int, S>> nz; // (row, coefficient)
};

template <class S>
struct FeasibilityCertificate {
    bool feasible = false;
    std::vector<S> x;        // primal solution when feasible
    std::vector<S> farkas_y; // separating dual ray when infeasible
    long iterations = 0;
};

namespace detail {

template <class S>
class Phase1Simplex {
public:
    Phase1Simplex(std::size_t nrows, const std::vector<SparseColumn<S>>& cols,
                  std::vector<S> rhs)
        : R_(nrows), N_(cols.size()), cols_(cols), b_(std::move(rhs)) {
        if (b_.size() != R_) throw InvalidArgument("feasibility rhs has the wrong size");
        for (const auto& c : cols_)
            for (const auto& [r, v] : c.nz) {
                (void)v;
                if (r < 0 || static_cast<std::size_t>(r) >= R_)
                    throw InvalidArgument("feasibility column has a row out of range");
            }
        row_scale_.assign(R_, S(1));
        if constexpr (!scalar_traits<S>::is_exact) equilibrate();
        sign_.assign(R_, S(1));
        for (std::size_t r = 0; r < R_; ++r)
            if (b_[r] < S(0)) { sign_[r] = S(-1); b_[r] = -b_[r]; }
    }

    FeasibilityCertificate<S> run() {
        basis_var_.resize(R_);
        for (std::size_t r = 0; r < R_; ++r) basis_var_[r] = static_cast<long>(N_ + r);
        binv_.assign(R_ * R_, S(0));
        for (std::size_t r = 0; r < R_; ++r) binv_[r * R_ + r] = S(1);
        xb_ = b_;
        in_basis_.assign(N_, 0);

        const long cap = 2000 + 25L * static_cast<long>(R_) + static_cast<long>(N_);
        long iters = 0;
        std::vector<S> y(R_), d(R_);
        for (;;) {
            compute_duals(y);
            long entering = price(y, iters > cap / 2);
            if (entering < 0) break;
            if (++iters > cap) throw SolverStalled();
            if constexpr (!scalar_traits<S>::is_exact) {
                if (iters % 512 == 0) refactorize();
            }
            apply_column(entering, d);
            long p = ratio_test(d, entering);
            pivot(entering, p, d);
        }

        FeasibilityCertificate<S> out;
        out.iterations = iters;
        if constexpr (!scalar_traits<S>::is_exact) refactorize();

        S artificial_mass(0);
        for (std::size_t r = 0; r < R_; ++r)
            if (basis_var_[r] >= static_cast<long>(N_)) artificial_mass += xb_[r];

        const S feas_tol = tolerances<S>::lp_feasibility();
        if (artificial_mass <= feas_tol) {
            out.feasible = true;
            out.x.assign(N_, S(0));
            for (std::size_t r = 0; r < R_; ++r) {
                if (basis_var_[r] >= static_cast<long>(N_)) continue;
                S v = xb_[r];
                if (v < S(0)) {
                    if (abs_val(v) > feas_tol) throw SolverStalled();
                    v = S(0);
                }
                out.x[static_cast<std::size_t>(basis_var_[r])] = v;
            }
            check_residual(out.x);
        } else {
            out.feasible = false;
            std::vector<S> y_final(R_);
            compute_duals(y_final);
            // The solved system scales row r of the original by sign_r/scale_r,
            // so y'^T A'' <= 0 becomes y^T A <= 0 with y_r = y'_r sign_r/scale_r.
            out.farkas_y.resize(R_);
            for (std::size_t r = 0; r < R_; ++r)
                out.farkas_y[r] = y_final[r] * sign_[r] / row_scale_[r];
            if constexpr (scalar_traits<S>::is_exact) verify_farkas(out.farkas_y);
        }
        return out;
    }

    // Certificate check against the caller-visible system A x = b_original,
    // where b_original_r = sign_r * scale_r * b_r (exact mode only).
    void verify_farkas(const std::vector<S>& y) const {
        S yb(0);
        for (std::size_t r = 0; r < R_; ++r)
            yb += y[r] * (sign_[r] * row_scale_[r] * b_[r]);
        if (!(yb > S(0)))
            throw AssertionFailed("infeasibility certificate has nonpositive rhs product");
        for (std::size_t j = 0; j < N_; ++j) {
            S dot(0);
            for (const auto& [r, v] : cols_[j].nz)
                dot += y[static_cast<std::size_t>(r)] * v;
            if (dot > S(0))
                throw AssertionFailed("infeasibility certificate violates a column");
        }
    }

private:
    void equilibrate() {
        for (std::size_t r = 0; r < R_; ++r) row_scale_[r] = S(0);
        for (const auto& c : cols_)
            for (const auto& [r, v] : c.nz)
                if (abs_val(v) > row_scale_[static_cast<std::size_t>(r)])
                    row_scale_[static_cast<std::size_t>(r)] = abs_val(v);
        for (std::size_t r = 0; r < R_; ++r)
            if (!(row_scale_[r] > S(0))) row_scale_[r] = S(1);
        for (std::size_t r = 0; r < R_; ++r) b_[r] = b_[r] / row_scale_[r];
    }

    S col_entry_scaled(std::size_t j, int r, const S& v) const {
        (void)j;
        return sign_[static_cast<std::size_t>(r)] * v / row_scale_[static_cast<std::size_t>(r)];
    }

    // y = (phase-1 basic costs)^T B^{-1}: the sum of the inverse rows that
    // correspond to basic artificials.
    void compute_duals(std::vector<S>& y) const {
        std::fill(y.begin(), y.end(), S(0));
        for (std::size_t p = 0; p < R_; ++p) {
            if (basis_var_[p] < static_cast<long>(N_)) continue;
            const S* row = &binv_[p * R_];
            for (std::size_t r = 0; r < R_; ++r) y[r] += row[r];
        }
    }

    S reduced_cost(std::size_t j, const std::vector<S>& y) const {
        S rc(0);
        for (const auto& [r, v] : cols_[j].nz)
            rc -= y[static_cast<std::size_t>(r)] * col_entry_scaled(j, r, v);
        return rc;
    }

    long price(const std::vector<S>& y, bool first_improving) const {
        const S tol = scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(10);
        long best = -1;
        S best_rc(0);
        for (std::size_t j = 0; j < N_; ++j) {
            if (in_basis_[j]) continue;
            S rc = reduced_cost(j, y);
            if (!(rc < -tol)) continue;
            if constexpr (scalar_traits<S>::is_exact) return static_cast<long>(j);
            if (first_improving) return static_cast<long>(j);
            if (best < 0 || rc < best_rc) { best = static_cast<long>(j); best_rc = rc; }
        }
        return best;
    }

    void apply_column(long j, std::vector<S>& d) const {
        std::fill(d.begin(), d.end(), S(0));
        for (const auto& [r, v] : cols_[static_cast<std::size_t>(j)].nz) {
            const S a = col_entry_scaled(static_cast<std::size_t>(j), r, v);
            const std::size_t rr = static_cast<std::size_t>(r);
            for (std::size_t p = 0; p < R_; ++p) d[p] += binv_[p * R_ + rr] * a;
        }
    }

    long ratio_test(const std::vector<S>& d, long entering) const {
        (void)entering;
        S piv_tol(0);
        if constexpr (!scalar_traits<S>::is_exact) {
            S dmax(0);
            for (const auto& v : d)
                if (abs_val(v) > dmax) dmax = abs_val(v);
            piv_tol = pow10_neg<S>(11) * (S(1) + dmax);
        }
        long leave = -1;
        S theta(0);
        for (std::size_t p = 0; p < R_; ++p) {
            if (!(d[p] > piv_tol)) continue;
            S ratio = xb_[p] / d[p];
            if (leave < 0 || ratio < theta ||
                (ratio == theta && basis_var_[p] < basis_var_[static_cast<std::size_t>(leave)])) {
                theta = ratio;
                leave = static_cast<long>(p);
            }
        }
        if (leave < 0) {
            // The phase-1 objective is bounded below by zero, so an unbounded
            // ray cannot occur; reaching this line means numeric breakdown.
            if constexpr (scalar_traits<S>::is_exact)
                throw AssertionFailed("phase-1 simplex reported an unbounded ray");
            else
                throw SolverStalled();
        }
        return leave;
    }

    void pivot(long entering, long p, std::vector<S>& d) {
        const std::size_t pp = static_cast<std::size_t>(p);
        const S theta = xb_[pp] / d[pp];
        for (std::size_t q = 0; q < R_; ++q) {
            if (q == pp) continue;
            xb_[q] -= theta * d[q];
            if constexpr (!scalar_traits<S>::is_exact) {
                if (xb_[q] < S(0)) xb_[q] = S(0);
            }
        }
        xb_[pp] = theta;

        const S inv = S(1) / d[pp];
        S* prow = &binv_[pp * R_];
        for (std::size_t r = 0; r < R_; ++r) prow[r] *= inv;
        for (std::size_t q = 0; q < R_; ++q) {
            if (q == pp) continue;
            const S f = d[q];
            if (f == S(0)) continue;
            S* qrow = &binv_[q * R_];
            for (std::size_t r = 0; r < R_; ++r) qrow[r] -= f * prow[r];
        }

        if (basis_var_[pp] < static_cast<long>(N_))
            in_basis_[static_cast<std::size_t>(basis_var_[pp])] = 0;
        basis_var_[pp] = entering;
        in_basis_[static_cast<std::size_t>(entering)] = 1;
    }

    // Rebuild the dense inverse from the basis columns (floating mode drift
    // control), then refresh the basic values.
    void refactorize() {
        std::vector<S> B(R_ * R_, S(0));
        for (std::size_t p = 0; p < R_; ++p) {
            long var = basis_var_[p];
            if (var >= static_cast<long>(N_)) {
                B[static_cast<std::size_t>(var - static_cast<long>(N_)) * R_ + p] = S(1);
            } else {
                for (const auto& [r, v] : cols_[static_cast<std::size_t>(var)].nz)
                    B[static_cast<std::size_t>(r) * R_ + p] =
                        col_entry_scaled(static_cast<std::size_t>(var), r, v);
            }
        }
        // Gauss-Jordan with partial pivoting on [B | I].
        std::vector<S> inv(R_ * R_, S(0));
        for (std::size_t r = 0; r < R_; ++r) inv[r * R_ + r] = S(1);
        for (std::size_t col = 0; col < R_; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < R_; ++r)
                if (abs_val(B[r * R_ + col]) > abs_val(B[piv * R_ + col])) piv = r;
            if (B[piv * R_ + col] == S(0)) throw SolverStalled();
            if (piv != col)
                for (std::size_t k = 0; k < R_; ++k) {
                    std::swap(B[piv * R_ + k], B[col * R_ + k]);
                    std::swap(inv[piv * R_ + k], inv[col * R_ + k]);
                }
            const S scale = S(1) / B[col * R_ + col];
            for (std::size_t k = 0; k < R_; ++k) {
                B[col * R_ + k] *= scale;
                inv[col * R_ + k] *= scale;
            }
            for (std::size_t r = 0; r < R_; ++r) {
                if (r == col) continue;
                const S f = B[r * R_ + col];
                if (f == S(0)) continue;
                for (std::size_t k = 0; k < R_; ++k) {
                    B[r * R_ + k] -= f * B[col * R_ + k];
                    inv[r * R_ + k] -= f * inv[col * R_ + k];
                }
            }
        }
        binv_ = std::move(inv);
        for (std::size_t p = 0; p < R_; ++p) {
            S acc(0);
            for (std::size_t r = 0; r < R_; ++r) acc += binv_[p * R_ + r] * b_[r];
            xb_[p] = acc < S(0) ? S(0) : acc;
        }
    }

    void check_residual(const std::vector<S>& x) const {
        std::vector<S> res = b_;
        for (std::size_t j = 0; j < N_; ++j) {
            if (x[j] == S(0)) continue;
            for (const auto& [r, v] : cols_[j].nz)
                res[static_cast<std::size_t>(r)] -= col_entry_scaled(j, r, v) * x[j];
        }
        const S tol = tolerances<S>::lp_feasibility();
        for (const auto& v : res)
            if (abs_val(v) > tol)
                throw SolverStalled();
    }

    const std::size_t R_, N_;
    const std::vector<SparseColumn<S>>& cols_;
    std::vector<S> b_;
    std::vector<S> sign_, row_scale_;

    std::vector<long> basis_var_;
    std::vector<S> binv_, xb_;
    std::vector<char> in_basis_;
};

} // namespace detail

template <class S>
FeasibilityCertificate<S> solve_equality_feasibility(std::size_t nrows,
                                                     const std::vector<SparseColumn<S>>& columns,
                                                     std::vector<S> rhs) {
    detail::Phase1Simplex<S> solver(nrows, columns, std::move(rhs));
    return solver.run();
}

} // namespace w2lab
