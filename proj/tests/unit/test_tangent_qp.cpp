#include <doctest.h>

#include "hinf/errors.hpp"
#include "hinf/tangent_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace hinf;

namespace {

double objective(const TangentProblem& p, const Vec& y) {
    const std::size_t n = p.x.size();
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) quad += (y[i] - p.x[i]) * p.Q[i * n + j] * (y[j] - p.x[j]);
    return polyhedral_value(p.planes, p.x, y) + 0.5 * quad;
}

// Brute-force minimum over a k x k grid on the box, n = 2 only.
double grid_minimum(const TangentProblem& p, int k) {
    double best = std::numeric_limits<double>::infinity();
    const double q00 = p.Q[0], q01 = p.Q[1] + p.Q[2], q11 = p.Q[3];
    for (int i = 0; i < k; ++i) {
        const double d0 = -p.R + 2.0 * p.R * i / (k - 1);
        for (int j = 0; j < k; ++j) {
            const double d1 = -p.R + 2.0 * p.R * j / (k - 1);
            double t = -std::numeric_limits<double>::infinity();
            for (const Plane& pl : p.planes) t = std::max(t, pl.a + pl.g[0] * d0 + pl.g[1] * d1);
            best = std::min(best, t + 0.5 * (q00 * d0 * d0 + q01 * d0 * d1 + q11 * d1 * d1));
        }
    }
    return best;
}

TangentProblem random_problem(std::mt19937_64& rng, std::size_t n, std::size_t planes) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TangentProblem p;
    p.x.resize(n);
    for (auto& v : p.x) v = u(rng);
    for (std::size_t i = 0; i < planes; ++i) {
        Plane pl;
        pl.a = u(rng);
        pl.g.resize(n);
        for (auto& v : pl.g) v = 3.0 * u(rng);
        p.planes.push_back(pl);
    }
    // Q = B^T B, rank deficient half of the time.
    Vec b(n * n);
    for (auto& v : b) v = u(rng);
    const std::size_t rank = (planes % 2) ? n : n - 1;
    p.Q.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < rank; ++k) p.Q[i * n + j] += b[k * n + i] * b[k * n + j];
    p.R = 0.2 + std::fabs(u(rng));
    return p;
}

void check_kkt(const TangentSolution& s) {
    CHECK(s.kkt.stationarity <= 1e-8);
    CHECK(s.kkt.primal <= 1e-8);
    CHECK(s.kkt.complementarity <= 1e-8);
    CHECK(s.kkt.multiplier_sum <= 1e-8);
}

} // namespace

TEST_CASE("single plane with Q = I is the prox step") {
    const TangentProblem p{{0.0, 0.0}, {{0.0, {1.0, 0.0}}}, {1.0, 0.0, 0.0, 1.0}, 10.0};
    const TangentSolution s = solve_tangent(p);
    CHECK(s.y[0] == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(std::fabs(s.y[1]) < 1e-12);
    CHECK(s.t == doctest::Approx(-1.0).epsilon(1e-10));
    check_kkt(s);
}

TEST_CASE("single plane with Q = 0 steps to the box edge") {
    const TangentProblem p{{0.0, 0.0}, {{0.0, {1.0, 0.0}}}, {0.0, 0.0, 0.0, 0.0}, 1.0};
    const TangentSolution s = solve_tangent(p);
    CHECK(s.y[0] == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(std::fabs(s.y[1]) < 1e-12);
    CHECK(s.t == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("symmetric two-plane problem") {
    const TangentProblem p{{0.0, 0.0}, {{0.0, {1.0, 0.0}}, {0.0, {-1.0, 0.0}}}, {1.0, 0.0, 0.0, 1.0}, 1.0};
    const TangentSolution s = solve_tangent(p);
    CHECK(std::fabs(s.y[0]) < 1e-12);
    CHECK(std::fabs(s.y[1]) < 1e-12);
    CHECK(std::fabs(s.t) < 1e-12);
    CHECK(s.multipliers[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(s.multipliers[1] == doctest::Approx(0.5).epsilon(1e-10));
    const Plane agg = aggregate_plane(p, s);
    CHECK(std::fabs(agg.a) < 1e-12);
    CHECK(std::fabs(agg.g[0]) < 1e-12);
    CHECK(std::fabs(agg.g[1]) < 1e-12);
}

TEST_CASE("single-plane aggregate equals the plane") {
    const TangentProblem p{{0.3, -0.2}, {{0.7, {2.0, -1.0}}}, {1.0, 0.0, 0.0, 1.0}, 0.5};
    const TangentSolution s = solve_tangent(p);
    const Plane agg = aggregate_plane(p, s);
    CHECK(agg.a == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(agg.g[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(agg.g[1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("random n = 2 instances match the dense-grid minimum") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        const TangentProblem p = random_problem(rng, 2, 1 + trial % 4);
        const TangentSolution s = solve_tangent(p);
        const double obj = objective(p, s.y);
        const double grid = grid_minimum(p, 2001);
        CHECK(obj <= grid + 1e-12);
        CHECK(grid - obj <= 1e-3);
        check_kkt(s);
    }
}

TEST_CASE("solution invariants on larger random instances") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 9;
        const TangentProblem p = random_problem(rng, n, 1 + trial % 15);
        const TangentSolution s = solve_tangent(p);
        check_kkt(s);
        double sum = 0.0;
        for (double l : s.multipliers) {
            CHECK(l >= -1e-10);
            sum += l;
        }
        CHECK(std::fabs(sum - 1.0) <= 1e-8);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(s.y[i] - p.x[i]) <= p.R + 1e-10);
        CHECK(std::fabs(s.t - polyhedral_value(p.planes, p.x, s.y)) <= 1e-8);
        for (std::size_t j = 0; j < n; ++j) {
            double gj = 0.0;
            for (std::size_t i = 0; i < p.planes.size(); ++i) gj += s.multipliers[i] * p.planes[i].g[j];
            CHECK(std::fabs(gj - s.aggregate[j]) <= 1e-10 * (1.0 + std::fabs(gj)));
        }
    }
}

TEST_CASE("aggregate plane minorizes the polyhedral model") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + trial % 5;
        const TangentProblem p = random_problem(rng, n, 2 + trial % 6);
        const TangentSolution s = solve_tangent(p);
        const std::vector<Plane> agg{aggregate_plane(p, s)};
        CHECK(std::fabs(polyhedral_value(agg, p.x, s.y) - polyhedral_value(p.planes, p.x, s.y)) <= 1e-9);
        for (int k = 0; k < 1000; ++k) {
            Vec y(n);
            for (auto& v : y) v = u(rng);
            CHECK(polyhedral_value(agg, p.x, y) <= polyhedral_value(p.planes, p.x, y) + 1e-9);
        }
    }
}

TEST_CASE("replacing active planes by the aggregate leaves y unchanged") {
    std::mt19937_64 rng(34);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + trial % 4;
        TangentProblem p = random_problem(rng, n, 2 + trial % 6);
        for (std::size_t i = 0; i < n; ++i) p.Q[i * n + i] += 0.1; // strictly convex, y unique
        const TangentSolution s = solve_tangent(p);
        TangentProblem r = p;
        r.planes.clear();
        r.planes.push_back(aggregate_plane(p, s));
        for (std::size_t i = 0; i < p.planes.size(); ++i)
            if (s.multipliers[i] <= 1e-12) r.planes.push_back(p.planes[i]);
        const TangentSolution s2 = solve_tangent(r);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(s2.y[i] - s.y[i]) <= 1e-6);
    }
}

TEST_CASE("enlarging the radius never increases the optimal value") {
    std::mt19937_64 rng(35);
    for (int trial = 0; trial < 50; ++trial) {
        TangentProblem p = random_problem(rng, 3, 1 + trial % 5);
        double prev = objective(p, solve_tangent(p).y);
        for (int k = 0; k < 4; ++k) {
            p.R *= 1.7;
            const double cur = objective(p, solve_tangent(p).y);
            CHECK(cur <= prev + 1e-10);
            prev = cur;
        }
    }
}

TEST_CASE("near-duplicate planes still solve") {
    TangentProblem p{{0.0, 0.0}, {}, {1e-6, 0.0, 0.0, 1e-6}, 1.0};
    for (int i = 0; i < 6; ++i) p.planes.push_back({1e-9 * i, {1.0 + 1e-7 * i, -0.5 - 1e-7 * i}});
    p.planes.push_back({0.0, {1.0, -0.5}});
    const TangentSolution s = solve_tangent(p);
    check_kkt(s);
    CHECK(s.y[0] == doctest::Approx(-1.0));
    CHECK(s.y[1] == doctest::Approx(1.0));
}

TEST_CASE("invalid problems are rejected") {
    CHECK_THROWS_AS(validate(TangentProblem{{0.0}, {}, {1.0}, 1.0}), InvalidInput);
    CHECK_THROWS_AS(validate(TangentProblem{{0.0}, {{0.0, {1.0}}}, {1.0}, 0.0}), InvalidInput);
    CHECK_THROWS_AS(validate(TangentProblem{{0.0, 0.0}, {{0.0, {1.0, 0.0}}}, {1.0, 1.0, 0.0, 1.0}, 1.0}),
                    InvalidInput);
    CHECK_THROWS_AS(validate(TangentProblem{{0.0}, {{std::nan(""), {1.0}}}, {1.0}, 1.0}), InvalidInput);
}
