#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace w2lab;
using namespace testsup;

namespace {

DiscreteMeasure<R> cross_mu() {
    return md<R>({{R(-1), R(0)}, {R(1), R(0)}}, {rq(1, 2), rq(1, 2)});
}
DiscreteMeasure<R> cross_nu() {
    return md<R>({{R(0), R(-1)}, {R(0), R(1)}}, {rq(1, 2), rq(1, 2)});
}
Coupling<R> cross_coupling(const R& p) {
    const R h = rq(1, 2);
    return Coupling<R>(cross_mu(), cross_nu(),
                       {p * h, (R(1) - p) * h, (R(1) - p) * h, p * h});
}

Coupling<R> random_coupling(Rng& rng, std::size_t n, std::size_t m, std::size_t d) {
    // Random positive joint weights; the marginals define source and target.
    std::vector<Point<R>> xs, ys;
    for (std::size_t i = 0; i < n; ++i) xs.push_back(rand_point(rng, d));
    for (std::size_t j = 0; j < m; ++j) ys.push_back(rand_point(rng, d));
    std::vector<R> joint(n * m);
    R total(0);
    for (auto& v : joint) {
        v = R(rng.range(0, 4));
        total += v;
    }
    if (total == R(0)) {
        joint[0] = R(1);
        total = R(1);
    }
    for (auto& v : joint) v /= total;
    std::vector<R> mu_w(n, R(0)), nu_w(m, R(0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            mu_w[i] += joint[i * m + j];
            nu_w[j] += joint[i * m + j];
        }
    // Drop empty rows/columns by re-adding tiny structure: simplest is to
    // regenerate when any marginal weight vanishes.
    for (const auto& w : mu_w)
        if (w == R(0)) return random_coupling(rng, n, m, d);
    for (const auto& w : nu_w)
        if (w == R(0)) return random_coupling(rng, n, m, d);
    // Canonicalization may reorder atoms; distinct random rational points make
    // collisions measure-zero, but guard by regenerating on size change.
    DiscreteMeasure<R> mu(xs, mu_w), nu(ys, nu_w);
    if (mu.size() != n || nu.size() != m) return random_coupling(rng, n, m, d);
    // Match canonical order.
    std::vector<R> mat(n * m, R(0));
    for (std::size_t i = 0; i < n; ++i) {
        const auto pi = std::find(mu.points().begin(), mu.points().end(), xs[i]);
        const std::size_t ci = static_cast<std::size_t>(pi - mu.points().begin());
        for (std::size_t j = 0; j < m; ++j) {
            const auto pj = std::find(nu.points().begin(), nu.points().end(), ys[j]);
            const std::size_t cj = static_cast<std::size_t>(pj - nu.points().begin());
            mat[ci * m + cj] = joint[i * m + j];
        }
    }
    return Coupling<R>(std::move(mu), std::move(nu), std::move(mat));
}

} // namespace

TEST_CASE("disintegration of simple couplings", "[coupling]") {
    Rng rng(51);
    auto m = rand_measure(rng, 4, 2);
    auto idk = disintegrate(identity_coupling(m));
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
            REQUIRE(idk.at(i, j) == (i == j ? R(1) : R(0)));

    // Product coupling: every kernel row equals the target weights.
    auto mu = m1<R>({R(0), R(1)}, {rq(1, 3), rq(2, 3)});
    auto nu = m1<R>({R(5), R(7)}, {rq(1, 4), rq(3, 4)});
    std::vector<R> prod;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) prod.push_back(mu.weight(i) * nu.weight(j));
    auto k = disintegrate(Coupling<R>(mu, nu, prod));
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) REQUIRE(k.at(i, j) == nu.weight(j));

    auto kp = disintegrate(cross_coupling(rq(1, 4)));
    REQUIRE(kp.at(0, 0) == rq(1, 4));
    REQUIRE(kp.at(0, 1) == rq(3, 4));
    REQUIRE(kp.at(1, 0) == rq(3, 4));
    REQUIRE(kp.at(1, 1) == rq(1, 4));
}

TEST_CASE("disintegration inverts kernel gluing", "[coupling]") {
    Rng rng(52);
    for (int rep = 0; rep < 20; ++rep) {
        auto pi = random_coupling(rng, 3, 4, 2);
        auto k = disintegrate(pi);
        auto glued = kernel_to_coupling(pi.source, k);
        REQUIRE(glued.matrix == pi.matrix);
        REQUIRE(disintegrate(glued).rows == k.rows);
    }
}

TEST_CASE("barycentric projection of the tilted couplings", "[coupling]") {
    for (R p : {R(0), rq(1, 4), rq(1, 2)}) {
        auto pi = cross_coupling(p);
        auto t = barycentric_projection(pi);
        REQUIRE(t[0] == Point<R>{R(0), R(1) - R(2) * p});
        REQUIRE(t[1] == Point<R>{R(0), R(2) * p - R(1)});
        auto eta = barycentric_image(pi);
        if (p == rq(1, 2)) {
            REQUIRE(eta == md<R>({{R(0), R(0)}}, {R(1)}));
        } else {
            REQUIRE(eta == md<R>({{R(0), R(2) * p - R(1)}, {R(0), R(1) - R(2) * p}},
                                 {rq(1, 2), rq(1, 2)}));
        }
    }
}

TEST_CASE("barycentric projection of a map coupling returns the map", "[coupling]") {
    auto mu = m1<R>({R(0), R(1)}, {rq(1, 2), rq(1, 2)});
    auto nu = m1<R>({R(2), R(3)}, {rq(1, 2), rq(1, 2)});
    auto pi = comonotone_coupling(mu, nu);
    auto t = barycentric_projection(pi);
    REQUIRE(t[0] == Point<R>{R(2)});
    REQUIRE(t[1] == Point<R>{R(3)});
    REQUIRE(barycentric_image(pi) == nu);
}

TEST_CASE("barycentric images preserve the mean", "[coupling]") {
    Rng rng(53);
    for (int rep = 0; rep < 20; ++rep) {
        auto pi = random_coupling(rng, 3, 3, 2);
        REQUIRE(barycentric_image(pi).mean() == pi.target.mean());
    }
}

TEST_CASE("conditional variance on pinned couplings", "[coupling]") {
    auto mu = m1<R>({R(0), R(1)}, {rq(1, 2), rq(1, 2)});
    auto nu = m1<R>({R(2), R(3)}, {rq(1, 2), rq(1, 2)});
    REQUIRE(conditional_variance(comonotone_coupling(mu, nu)) == R(0));

    auto split = comonotone_coupling(m1<R>({R(0)}, {R(1)}),
                                     m1<R>({R(-1), R(1)}, {rq(1, 2), rq(1, 2)}));
    REQUIRE(conditional_variance(split) == R(1));

    REQUIRE(conditional_variance(cross_coupling(rq(1, 2))) == R(1));
}

TEST_CASE("conditional variance vanishes exactly on map couplings", "[coupling]") {
    Rng rng(54);
    for (int rep = 0; rep < 20; ++rep) {
        auto pi = random_coupling(rng, 3, 4, 2);
        const bool is_map = [&] {
            for (std::size_t i = 0; i < pi.rows(); ++i) {
                std::size_t nz = 0;
                for (std::size_t j = 0; j < pi.cols(); ++j)
                    if (pi.at(i, j) != R(0)) ++nz;
                if (nz != 1) return false;
            }
            return true;
        }();
        REQUIRE((conditional_variance(pi) == R(0)) == is_map);
    }
}

TEST_CASE("kernel composition identities", "[coupling]") {
    Rng rng(55);
    auto pi = random_coupling(rng, 3, 4, 2);
    auto q = disintegrate(pi);
    auto id_src = disintegrate(identity_coupling(pi.source));
    auto id_tgt = disintegrate(identity_coupling(pi.target));
    REQUIRE(compose(id_src, q).matrix == pi.matrix);
    REQUIRE(compose(q, id_tgt).matrix == pi.matrix);

    auto bad = disintegrate(identity_coupling(rand_measure(rng, 5, 2)));
    REQUIRE_THROWS_AS(compose(q, bad), SupportMismatch);
}

TEST_CASE("optimal kernel composed with a martingale kernel stays optimal", "[coupling]") {
    Rng rng(56);
    for (int rep = 0; rep < 15; ++rep) {
        auto mu = rand_measure_1d(rng, static_cast<std::size_t>(rng.range(1, 5)));
        auto nu = rand_measure_1d(rng, static_cast<std::size_t>(rng.range(1, 5)));
        auto eta = barycentric_image_1d(mu, nu);
        // Optimal coupling from mu to eta, then the martingale back to nu.
        auto q = disintegrate(comonotone_coupling(mu, eta));
        auto m = disintegrate(martingale_coupling_1d(mu, nu));
        auto glued = compose(q, m);
        REQUIRE(glued.quadratic_cost() == solve_w2(mu, nu).value);
    }
}

TEST_CASE("decomposition residual vanishes on optimal couplings", "[coupling]") {
    auto mu = m1<R>({R(0), R(1)}, {rq(1, 2), rq(1, 2)});
    auto nu = m1<R>({R(2), R(3)}, {rq(1, 2), rq(1, 2)});
    REQUIRE(decomposition_residual(mu, nu, comonotone_coupling(mu, nu)) == R(0));

    for (R p : {R(0), rq(1, 4), rq(1, 2), R(1)})
        REQUIRE(decomposition_residual(cross_mu(), cross_nu(), cross_coupling(p)) == R(0));

    Rng rng(57);
    for (int rep = 0; rep < 15; ++rep) {
        auto a = rand_measure_1d(rng, static_cast<std::size_t>(rng.range(1, 5)));
        auto b = rand_measure_1d(rng, static_cast<std::size_t>(rng.range(1, 5)));
        REQUIRE(decomposition_residual(a, b, comonotone_coupling(a, b)) == R(0));
    }
}

TEST_CASE("suboptimal couplings are rejected by the residual", "[coupling]") {
    auto a = m1<R>({R(0), R(1)}, {rq(1, 2), rq(1, 2)});
    auto b = m1<R>({R(2), R(3)}, {rq(1, 2), rq(1, 2)});
    // The anti-monotone rearrangement costs strictly more in one dimension.
    Coupling<R> anti(a, b, {R(0), rq(1, 2), rq(1, 2), R(0)});
    REQUIRE_THROWS_AS(decomposition_residual(a, b, anti), NotOptimal);
    // Mismatched marginals are a usage error.
    auto c = m1<R>({R(5), R(6)}, {rq(1, 2), rq(1, 2)});
    REQUIRE_THROWS_AS(decomposition_residual(a, c, anti), InvalidArgument);
}

TEST_CASE("membership in the intermediate set on pinned instances", "[coupling]") {
    Rng rng(58);
    auto mu = rand_measure(rng, 4, 2);
    auto nu = rand_measure(rng, 4, 2);
    REQUIRE(in_I(mu, nu, nu)); // the target itself always belongs

    for (R p : {R(0), rq(1, 4), rq(1, 2)}) {
        auto eta = barycentric_image(cross_coupling(p));
        REQUIRE(in_I(cross_mu(), cross_nu(), eta));
    }

    // On a unique-map instance the set collapses to {nu}: the Dirac at the
    // target mean is in convex order below nu yet fails the identity.
    auto a = m1<R>({R(0), R(1)}, {rq(1, 2), rq(1, 2)});
    auto b = m1<R>({R(2), R(3)}, {rq(1, 2), rq(1, 2)});
    auto dirac_mean = m1<R>({rq(5, 2)}, {R(1)});
    REQUIRE(convex_order_test(dirac_mean, b).ordered);
    REQUIRE(!in_I(a, b, dirac_mean));
}

TEST_CASE("sandwiched measures remain members", "[coupling]") {
    Rng rng(59);
    for (int rep = 0; rep < 10; ++rep) {
        auto mu = rand_measure(rng, static_cast<std::size_t>(rng.range(2, 4)), 2);
        auto nu = rand_measure(rng, static_cast<std::size_t>(rng.range(2, 4)), 2);
        auto pi = solve_w2(mu, nu).coupling;
        auto eta = barycentric_image(pi);
        REQUIRE(in_I(mu, nu, eta));
        auto ord = convex_order_test(eta, nu);
        REQUIRE(ord.ordered);
        for (R t : {rq(1, 3), rq(2, 3)}) {
            auto between = mix_along_martingale(eta, *ord.kernel, t);
            REQUIRE(in_I(mu, nu, between));
            REQUIRE(in_I(mu, between, eta));
        }
    }
}

TEST_CASE("the intermediate set is convex", "[coupling]") {
    Rng rng(60);
    // The tilted family gives distinct members; mix members pairwise.
    auto eta0 = barycentric_image(cross_coupling(R(0)));
    auto eta_half = barycentric_image(cross_coupling(rq(1, 2)));
    for (R lam : {rq(1, 4), rq(1, 2), rq(2, 3)})
        REQUIRE(in_I(cross_mu(), cross_nu(), mix(eta0, eta_half, lam)));

    for (int rep = 0; rep < 8; ++rep) {
        auto mu = rand_measure(rng, 3, 2);
        auto nu = rand_measure(rng, 3, 2);
        auto verts = enumerate_optimal_vertices(mu, nu);
        auto eta1 = barycentric_image(verts.front());
        auto eta2 = barycentric_image(verts.back());
        REQUIRE(in_I(mu, nu, mix(eta1, eta2, rq(1, 3))));
    }
}

TEST_CASE("Jensen inequality for barycentric images", "[coupling]") {
    Rng rng(61);
    for (int rep = 0; rep < 20; ++rep) {
        auto pi = random_coupling(rng, 3, 4, 2);
        auto eta = barycentric_image(pi);
        REQUIRE(eta.second_moment() <= pi.target.second_moment());
        if (conditional_variance(pi) == R(0)) {
            REQUIRE(eta.second_moment() == pi.target.second_moment());
        } else {
            REQUIRE(eta.second_moment() < pi.target.second_moment());
        }
    }
}
