#pragma once

// Independent reference solutions for the convection-diffusion-reaction tube,
//   D c'' - U c' - (k + s) c = C_ss'(z),
//   D c'(0) - U c(0) = -(C_in - C_ss(0)),   c'(L) = 0,
// used to check the library's transfer function.

#include "hinf/plants.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace hinf::oracle {

// Steady profile written as A e^{p z} + B e^{q z} with D r^2 - U r - k = 0,
// coefficients fitted to the library's endpoint values.
struct SteadyExp {
    double p, q, A, B;

    explicit SteadyExp(const RcdConstants& c) {
        const double disc = std::sqrt(c.U * c.U + 4.0 * c.D * c.k);
        p = (c.U + disc) / (2.0 * c.D);
        q = (c.U - disc) / (2.0 * c.D);
        const double c0 = rcd_steady_state(c, 0.0).c, cL = rcd_steady_state(c, c.L).c;
        const double ep = std::exp(p * c.L), eq = std::exp(q * c.L);
        const double det = eq - ep;
        A = (eq * c0 - cL) / det;
        B = (cL - ep * c0) / det;
    }
    // d^n/dz^n C_ss
    [[nodiscard]] double d(double z, int n) const {
        return A * std::pow(p, n) * std::exp(p * z) + B * std::pow(q, n) * std::exp(q * z);
    }
};

// Closed form with particular solution c_p = -C_ss'/s (valid because C_ss
// solves the homogeneous steady equation), s != 0.
inline std::complex<double> rcd_closed_form(const RcdConstants& c, std::complex<double> s) {
    using C = std::complex<double>;
    const SteadyExp ss(c);
    const C sq = std::sqrt(C(c.U * c.U) + 4.0 * c.D * (c.k + s));
    const C r1 = (c.U + sq) / (2.0 * c.D), r2 = (c.U - sq) / (2.0 * c.D);
    const C e1 = std::exp(-r1 * c.L), e2 = std::exp(r2 * c.L);
    // c = -C_ss'/s + al e^{r1 (z - L)} + be e^{r2 z}
    const C a00 = c.D * r1 * e1 - c.U * e1, a01 = c.D * r2 - c.U;
    const C b0 = -(c.Cin - ss.d(0.0, 0)) + (c.D * ss.d(0.0, 2) - c.U * ss.d(0.0, 1)) / s;
    const C a10 = r1, a11 = r2 * e2;
    const C b1 = ss.d(c.L, 2) / s;
    const C det = a00 * a11 - a01 * a10;
    const C al = (b0 * a11 - a01 * b1) / det;
    const C be = (a00 * b1 - a10 * b0) / det;
    return -ss.d(c.L, 1) / s + al + be * e2;
}

// Central-difference semi-discretization with N intervals (N + 1 states),
// ghost nodes for both boundary conditions; returns c(L).
inline std::complex<double> rcd_fd(const RcdConstants& c, std::complex<double> s, std::size_t N) {
    using C = std::complex<double>;
    const SteadyExp ss(c);
    const double h = c.L / double(N);
    const std::size_t n = N + 1;
    std::vector<C> lo(n, C(c.D / (h * h) + c.U / (2 * h))), up(n, C(c.D / (h * h) - c.U / (2 * h)));
    std::vector<C> mid(n, C(-2.0 * c.D / (h * h) - c.k) - s), rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = ss.d(h * double(i), 1);
    const double cl = c.D / (h * h) + c.U / (2 * h);
    const double inflow = c.Cin - rcd_steady_state(c, 0.0).c;
    up[0] += cl;
    mid[0] -= cl * 2.0 * h * c.U / c.D;
    rhs[0] -= cl * 2.0 * h * inflow / c.D;
    lo[n - 1] += c.D / (h * h) - c.U / (2 * h);
    // Thomas algorithm; lo[i] couples row i to i-1, up[i] couples row i to i+1
    for (std::size_t i = 1; i < n; ++i) {
        const C m = lo[i] / mid[i - 1];
        mid[i] -= m * up[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    std::vector<C> x(n);
    x[n - 1] = rhs[n - 1] / mid[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - up[i] * x[i + 1]) / mid[i];
    return x[n - 1];
}

// C_ss(0) by shooting on D c'' - U c' - k c = 0 with RK4: c'(0) follows from
// the inlet condition, and c'(L) is affine in c(0).
inline double rcd_shooting_c0(const RcdConstants& c, std::size_t steps = 20000) {
    auto endSlope = [&](double c0) {
        double y = c0, dy = c.U * (c0 - c.Cin) / c.D;
        const double h = c.L / double(steps);
        auto acc = [&](double yy, double dd) { return (c.U * dd + c.k * yy) / c.D; };
        for (std::size_t i = 0; i < steps; ++i) {
            const double k1y = dy, k1d = acc(y, dy);
            const double k2y = dy + 0.5 * h * k1d, k2d = acc(y + 0.5 * h * k1y, dy + 0.5 * h * k1d);
            const double k3y = dy + 0.5 * h * k2d, k3d = acc(y + 0.5 * h * k2y, dy + 0.5 * h * k2d);
            const double k4y = dy + h * k3d, k4d = acc(y + h * k3y, dy + h * k3d);
            y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
            dy += h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
        }
        return dy;
    };
    const double s0 = endSlope(0.0), s1 = endSlope(1.0);
    return -s0 / (s1 - s0);
}

} // namespace hinf::oracle
