#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace w2lab;
using namespace testsup;

TEST_CASE("canonical form merges duplicate atoms and sorts", "[measure]") {
    auto m = md<R>({{R(1), R(0)}, {R(0), R(0)}, {R(0), R(0)}},
                   {rq(1, 2), rq(1, 4), rq(1, 4)});
    REQUIRE(m.size() == 2);
    REQUIRE(m.point(0) == Point<R>{R(0), R(0)});
    REQUIRE(m.point(1) == Point<R>{R(1), R(0)});
    REQUIRE(m.weight(0) == rq(1, 2));
    REQUIRE(m.weight(1) == rq(1, 2));
}

TEST_CASE("weights renormalize to total mass one", "[measure]") {
    auto m = md<R>({{R(1), R(2)}}, {R(3)});
    REQUIRE(m.size() == 1);
    REQUIRE(m.weight(0) == R(1));
}

TEST_CASE("zero-weight atoms are dropped", "[measure]") {
    auto m = m1<R>({R(0), R(1), R(2)}, {rq(1, 2), R(0), rq(1, 2)});
    REQUIRE(m.size() == 2);
    REQUIRE(m.point(0)[0] == R(0));
    REQUIRE(m.point(1)[0] == R(2));
}

TEST_CASE("all mass vanishing is rejected", "[measure]") {
    REQUIRE_THROWS_AS(m1<R>({R(0)}, {R(0)}), EmptyMeasure);
    REQUIRE_THROWS_AS(md<R>({}, {}), EmptyMeasure);
}

TEST_CASE("mixed ambient dimensions are rejected", "[measure]") {
    REQUIRE_THROWS_AS(md<R>({{R(0)}, {R(0), R(1)}}, {rq(1, 2), rq(1, 2)}),
                      DimensionMismatch);
}

TEST_CASE("canonical form is idempotent", "[measure]") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        auto m = rand_measure(rng, 5, 2, rep % 2 == 0);
        auto again = md<R>(m.points(), m.weights());
        REQUIRE(m == again);
    }
}

TEST_CASE("second moment on pinned inputs", "[measure]") {
    REQUIRE(md<R>({{R(0), R(0)}}, {R(1)}).second_moment() == R(0));
    REQUIRE(md<R>({{R(0), R(-1)}, {R(0), R(1)}}, {rq(1, 2), rq(1, 2)}).second_moment() == R(1));
    auto four = md<R>({{R(-1), R(-1)}, {R(0), R(-1)}, {R(0), R(1)}, {R(1), R(1)}},
                      {rq(1, 4), rq(1, 4), rq(1, 4), rq(1, 4)});
    REQUIRE(four.second_moment() == rq(3, 2));
}

TEST_CASE("mean of the two-point source", "[measure]") {
    auto mu = md<R>({{R(-1), R(0)}, {R(1), R(0)}}, {rq(1, 2), rq(1, 2)});
    REQUIRE(mu.mean() == Point<R>{R(0), R(0)});
}

TEST_CASE("push-forward merges colliding images", "[measure]") {
    auto mu = m1<R>({R(0), R(1), R(2)}, {rq(1, 4), rq(1, 4), rq(1, 2)});
    auto eta = mu.push_forward({{R(5)}, {R(5)}, {R(7)}});
    REQUIRE(eta.size() == 2);
    REQUIRE(eta.point(0)[0] == R(5));
    REQUIRE(eta.weight(0) == rq(1, 2));
    REQUIRE(eta.weight(1) == rq(1, 2));
}

TEST_CASE("push-forward under the identity is the identity", "[measure]") {
    Rng rng(12);
    auto m = rand_measure(rng, 6, 3);
    REQUIRE(m.push_forward(m.points()) == m);
}

TEST_CASE("second moment of a push-forward matches the direct sum", "[measure]") {
    Rng rng(13);
    for (int rep = 0; rep < 20; ++rep) {
        auto m = rand_measure(rng, 5, 2);
        std::vector<Point<R>> images;
        for (std::size_t i = 0; i < m.size(); ++i) images.push_back(rand_point(rng, 2));
        R direct(0);
        for (std::size_t i = 0; i < m.size(); ++i)
            direct += m.weight(i) * sqnorm(images[i]);
        REQUIRE(m.push_forward(images).second_moment() == direct);
    }
}

TEST_CASE("mixtures combine atoms with the right masses", "[measure]") {
    auto a = m1<R>({R(0)}, {R(1)});
    auto b = m1<R>({R(0), R(2)}, {rq(1, 2), rq(1, 2)});
    auto m = mix(a, b, rq(1, 2));
    REQUIRE(m.size() == 2);
    REQUIRE(m.weight(0) == rq(3, 4));
    REQUIRE(m.weight(1) == rq(1, 4));
}

TEST_CASE("floating mode agrees with exact mode on moments", "[measure]") {
    Rng rng(14);
    for (int rep = 0; rep < 10; ++rep) {
        auto m = rand_measure(rng, 6, 2);
        auto dm = to_double_measure(m);
        REQUIRE(std::abs(dm.second_moment() - to_double(m.second_moment())) < 1e-10);
        for (std::size_t c = 0; c < 2; ++c)
            REQUIRE(std::abs(dm.mean()[c] - to_double(m.mean()[c])) < 1e-10);
    }
}

TEST_CASE("approximate equality separates nearby measures", "[measure]") {
    auto a = m1<double>({0.0, 1.0}, {0.5, 0.5});
    auto b = m1<double>({1e-9, 1.0}, {0.5 + 1e-9, 0.5 - 1e-9});
    auto c = m1<double>({0.1, 1.0}, {0.5, 0.5});
    REQUIRE(DiscreteMeasure<double>::approx_equal(a, b, 1e-7, 1e-7));
    REQUIRE(!DiscreteMeasure<double>::approx_equal(a, c, 1e-7, 1e-7));
}
