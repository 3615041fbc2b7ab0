#include <doctest.h>

#include "hinf/grid.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace hinf;

namespace {

AnalyticBound constant_bound(double m) {
    return AnalyticBound([m](double, double) { return m; });
}

// Sum of sinusoids with a global slope bound sum |a_k b_k|.
struct SineCurve {
    std::vector<double> a, b, c;
    double offset = 0.0;
    double operator()(double w) const {
        double v = offset;
        for (std::size_t k = 0; k < a.size(); ++k) v += a[k] * std::sin(b[k] * w + c[k]);
        return v;
    }
    [[nodiscard]] double slope_bound() const {
        double m = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) m += std::fabs(a[k] * b[k]);
        return m;
    }
};

SineCurve random_curve(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SineCurve s;
    const int terms = 1 + int(rng() % 4);
    for (int k = 0; k < terms; ++k) {
        s.a.push_back(0.1 + u(rng));
        s.b.push_back(0.5 + 5.0 * u(rng));
        s.c.push_back(2.0 * std::numbers::pi * u(rng));
    }
    s.offset = 3.0;
    return s;
}

} // namespace

TEST_CASE("grid: zero slope closes the range in one step") {
    GridOptions o;
    o.omegaMin = 0.1;
    o.omegaMax = 100.0;
    const GridCertificate g = build_grid([](double) { return 1.0; }, constant_bound(0.0), o);
    CHECK(g.grid == std::vector<double>{0.1, 100.0});
    CHECK(g.all_hold());
}

TEST_CASE("grid: flat curve with M = 2 and theta = 0.1 needs spacing below 0.1") {
    GridOptions o;
    o.theta = 0.1;
    o.omegaMin = 0.0;
    o.omegaMax = 1.0;
    const GridCertificate g = build_grid([](double) { return 1.0; }, constant_bound(2.0), o);
    REQUIRE(g.grid.size() >= 11);
    for (std::size_t i = 0; i + 1 < g.grid.size(); ++i) CHECK(g.grid[i + 1] - g.grid[i] < 0.1);
    CHECK(g.grid.back() == 1.0);
    CHECK(g.all_hold());
}

TEST_CASE("grid: finite-difference bound") {
    std::vector<double> w, lin, flat, sn;
    for (int i = 0; i <= 100; ++i) {
        w.push_back(0.01 * i);
        lin.push_back(2.0 * w.back() + 1.0);
        flat.push_back(4.0);
    }
    CHECK(fd_bound(w, lin, 0.0, 1.0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(fd_bound(w, flat, 0.2, 0.7) == 0.0);
    CHECK_THROWS_AS(fd_bound(w, lin, 0.501, 0.509), InvalidInput);
    std::vector<double> ws;
    for (double x = 0.0; x <= std::numbers::pi; x += 1e-3) {
        ws.push_back(x);
        sn.push_back(std::sin(x));
    }
    CHECK(std::fabs(fd_bound(ws, sn, 0.0, std::numbers::pi) - 1.5) <= 0.02 * 1.5);

    const FdBound fb(w, lin);
    CHECK(fb(0.123, 0.124) == doctest::Approx(3.0));
    CHECK(fb(0.0, 1.0) == doctest::Approx(3.0));
    CHECK(fb.provenance() == "finite-difference");
}

TEST_CASE("grid: finite-difference bound covers the segments an interval overlaps") {
    // slope 0 on [0, 1], 10 on [1, 2]
    const FdBound fb({0.0, 1.0, 2.0}, {0.0, 0.0, 10.0}, 1.0);
    CHECK(fb(0.2, 0.8) == 0.0);
    CHECK(fb(0.9, 1.1) == 10.0);
    CHECK(fb(1.2, 1.3) == 10.0);
}

TEST_CASE("grid: sound on random smooth curves with known slope bounds") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 20; ++t) {
        const SineCurve s = random_curve(rng);
        GridOptions o;
        o.theta = 0.01;
        o.omegaMin = 0.0;
        o.omegaMax = 10.0;
        const GridCertificate g = build_grid(s, constant_bound(s.slope_bound()), o);
        CHECK(g.all_hold());
        const VerifyReport r = verify_certificate(s, g, g.gammaStar);
        CHECK(r.pass);
        CHECK(r.violations.empty());
        // dense scan: nothing reaches gamma* + theta
        double scan = -INFINITY;
        for (int i = 0; i <= 100000; ++i) scan = std::max(scan, s(10.0 * i / 100000.0));
        CHECK(scan <= g.gammaStar + o.theta);
    }
}

TEST_CASE("grid: a needle between nodes is caught and located") {
    std::mt19937_64 rng(22);
    for (int t = 0; t < 10; ++t) {
        const SineCurve s = random_curve(rng);
        GridOptions o;
        o.omegaMin = 0.0;
        o.omegaMax = 10.0;
        const GridCertificate g = build_grid(s, constant_bound(s.slope_bound()), o);
        const std::size_t i = rng() % (g.grid.size() - 1);
        const double lo = g.grid[i], hi = g.grid[i + 1], mid = 0.5 * (lo + hi), half = (hi - lo) / 8.0;
        const double height = g.gammaStar + 2.0 * o.theta;
        auto needled = [&](double w) { return std::fabs(w - mid) <= half ? std::max(s(w), height) : s(w); };
        const VerifyReport r = verify_certificate(needled, g, g.gammaStar);
        CHECK_FALSE(r.pass);
        REQUIRE(r.violations.size() == 1);
        CHECK(std::fabs(r.violations.front() - mid) <= half);
        CHECK(r.scanMax == doctest::Approx(height));
    }
}

TEST_CASE("grid: certificate evidence and replay") {
    const SineCurve s{{1.0}, {2.0}, {0.3}, 2.0};
    GridOptions o;
    o.omegaMin = 0.0;
    o.omegaMax = 6.0;
    const GridCertificate g = build_grid(s, constant_bound(2.0), o);
    REQUIRE(g.checks.size() == g.grid.size() - 1);
    for (const IntervalCheck& c : g.checks) {
        CHECK(c.lhs == doctest::Approx(c.M * (c.hi - c.lo)));
        CHECK(c.rhs == doctest::Approx(2.0 * g.gammaStar + 2.0 * o.theta - c.phiLo - c.phiHi));
        CHECK(c.lhs < c.rhs);
        CHECK(c.certified == (std::max(c.phiLo, c.phiHi) >= g.gammaStar - 10.0 * o.theta));
    }
    CHECK(g.boundProvenance == "analytic");
    const GridCertificate again = certify_grid(g.grid, g.values, constant_bound(2.0), o.theta);
    CHECK(again.gammaStar == g.gammaStar);
    CHECK(again.all_hold());
    const VerifyReport r = verify_certificate(s, again, again.gammaStar, 10);
    CHECK(r.pass);
    CHECK(r.scanned == g.grid.size() + 10 * (g.grid.size() - 1));

    std::ostringstream os;
    write_certificate_csv(os, g, &r);
    const std::string text = os.str();
    CHECK(text.rfind("omega_lo,omega_hi,phi_lo,phi_hi,M,lhs,rhs,holds,certified\n", 0) == 0);
    CHECK(text.find("# gamma_star=") != std::string::npos);
    CHECK(text.find("# verify pass=1") != std::string::npos);
}

TEST_CASE("grid: tabulated nodes restrict the grid and the scan") {
    std::vector<double> nodes;
    for (int i = 0; i <= 2000; ++i) nodes.push_back(0.005 * i);
    const SineCurve s{{1.0, 0.3}, {1.5, 7.0}, {0.0, 1.0}, 2.0};
    GridOptions o;
    o.omegaMin = 0.0;
    o.omegaMax = 10.0;
    o.nodes = nodes;
    const GridCertificate g = build_grid(s, constant_bound(s.slope_bound()), o);
    for (double w : g.grid) CHECK(std::binary_search(nodes.begin(), nodes.end(), w));
    CHECK(g.grid.back() == 10.0);
    const VerifyReport r = verify_certificate(s, g, g.gammaStar, 10, nodes);
    CHECK(r.pass);
    CHECK(r.scanned == nodes.size());
}

TEST_CASE("grid: budget and argument errors") {
    GridOptions o;
    o.omegaMin = 0.0;
    o.omegaMax = 1.0;
    o.theta = 1e-3;
    o.budget = 5;
    try {
        build_grid([](double w) { return std::sin(50 * w); }, constant_bound(50.0), o);
        FAIL("expected GridBudgetExceeded");
    } catch (const GridBudgetExceeded& e) {
        CHECK(e.partial().grid.size() == 5);
    }
    o.theta = 0.0;
    CHECK_THROWS_AS(build_grid([](double) { return 1.0; }, constant_bound(0.0), o), InvalidInput);
    o.theta = 0.1;
    o.omegaMax = -1.0;
    CHECK_THROWS_AS(build_grid([](double) { return 1.0; }, constant_bound(0.0), o), InvalidInput);
}
