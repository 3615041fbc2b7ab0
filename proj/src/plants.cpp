#include "hinf/plants.hpp"

#include "hinf/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hinf {

cplx eval_poly(const Poly& p, cplx s) {
    cplx v = 0.0;
    for (double c : p) v = v * s + c;
    return v;
}

RationalFilter RationalFilter::constant(std::string name, double gain) { return {std::move(name), {gain}, {1.0}}; }

void RationalFilter::validate() const {
    if (num.empty() || den.empty()) throw InvalidInput("filter " + name + ": empty polynomial");
    bool nz = false;
    for (double v : den) {
        if (!std::isfinite(v)) throw InvalidInput("filter " + name + ": non-finite coefficient");
        nz = nz || v != 0.0;
    }
    for (double v : num)
        if (!std::isfinite(v)) throw InvalidInput("filter " + name + ": non-finite coefficient");
    if (!nz) throw InvalidInput("filter " + name + ": zero denominator");
}

cplx RationalFilter::eval(cplx s) const {
    const cplx d = eval_poly(den, s);
    double scale = 0.0, pw = 1.0;
    for (std::size_t i = den.size(); i-- > 0;) {
        scale += std::fabs(den[i]) * pw;
        pw *= std::abs(s);
    }
    if (std::abs(d) <= 1e-14 * scale) throw PoleError("filter " + name + " has a pole on the grid", s.imag());
    return eval_poly(num, s) / d;
}

double RcdConstants::f() const { return std::sqrt(b() * b() + 4.0 * a() * k); }

void RcdConstants::validate() const {
    for (double v : {D, U, Cin, k, L})
        if (!std::isfinite(v)) throw InvalidInput("rcd: non-finite constant");
    if (!(D > 0.0) || !(L > 0.0) || !(Cin > 0.0)) throw InvalidInput("rcd: D, L and C_in must be positive");
    if (b() * b() + 4.0 * a() * k < 0.0) throw InvalidInput("rcd: b^2 + 4 a k must be nonnegative");
}

SteadyState rcd_steady_state(const RcdConstants& k, double z) {
    const double a = k.a(), b = k.b(), f = k.f();
    const double xi = z / k.L;
    const double e1 = std::exp((f * (1.0 - xi) - b * xi) / (2.0 * a));
    const double e2 = std::exp((f * (xi - 1.0) - b * xi) / (2.0 * a));
    const double den = (-b * f - 2.0 * a * k.k - b * b) * std::exp(-f / (2.0 * a)) -
                       (b * f - 2.0 * a * k.k - b * b) * std::exp(f / (2.0 * a));
    const double num = (b - f) * e1 - (b + f) * e2;
    // d num / d xi = (f^2 - b^2) / (2a) (e1 - e2) = 2k (e1 - e2)
    const double dnum = 2.0 * k.k * (e1 - e2);
    return {k.Cin * b * num / den, k.Cin * b * dnum / (den * k.L)};
}

cplx adaptive_simpson(const std::function<cplx(double)>& fn, double lo, double hi, double tol,
                      std::size_t maxIntervals) {
    struct Seg {
        double a, b;
        cplx fa, fm, fb, whole;
        double tol;
        int depth;
    };
    auto simpson = [](double a, double b, cplx fa, cplx fm, cplx fb) { return (b - a) / 6.0 * (fa + 4.0 * fm + fb); };
    const cplx fa = fn(lo), fb = fn(hi), fm = fn(0.5 * (lo + hi));
    std::vector<Seg> stack{{lo, hi, fa, fm, fb, simpson(lo, hi, fa, fm, fb), tol, 0}};
    cplx total = 0.0;
    std::size_t intervals = 1;
    while (!stack.empty()) {
        const Seg s = stack.back();
        stack.pop_back();
        const double m = 0.5 * (s.a + s.b);
        const cplx flm = fn(0.5 * (s.a + m)), frm = fn(0.5 * (m + s.b));
        const cplx left = simpson(s.a, m, s.fa, flm, s.fm);
        const cplx right = simpson(m, s.b, s.fm, frm, s.fb);
        const cplx delta = left + right - s.whole;
        if (std::abs(delta) <= 15.0 * s.tol || s.depth >= 60) {
            if (s.depth >= 60) throw PrecisionError("adaptive Simpson: recursion limit reached");
            total += left + right + delta / 15.0;
            continue;
        }
        if (++intervals > maxIntervals) throw PrecisionError("adaptive Simpson: interval cap exceeded");
        stack.push_back({m, s.b, s.fm, frm, s.fb, right, 0.5 * s.tol, s.depth + 1});
        stack.push_back({s.a, m, s.fa, flm, s.fm, left, 0.5 * s.tol, s.depth + 1});
    }
    return total;
}

cplx rcd_transfer(const RcdConstants& k, cplx s, double quadTol) {
    k.validate();
    const double D = k.D, U = k.U, L = k.L;
    const cplx T = std::sqrt(U * U + 4.0 * D * (k.k + s));
    const cplx r1 = (U + T) / (2.0 * D); // Re r1 > 0
    const cplx r2 = (U - T) / (2.0 * D); // Re r2 < 0
    const cplx delta = r1 - r2;
    if (std::abs(delta) == 0.0) throw PoleError("rcd: repeated characteristic root", s.imag());

    // Particular solution with kernel -e^{r2 (z - xi)} / (D delta) for xi < z
    // and -e^{r1 (z - xi)} / (D delta) for xi > z, source C_ss'(xi).
    // J1 = int_0^L e^{-r1 xi} C_ss'(xi) dxi, J2 = int_0^L e^{r2 (L - xi)} C_ss'(xi) dxi.
    auto src = [&](double x) { return rcd_steady_state(k, L * x).dc; };
    // The kernels have boundary layers of width ~1/(|Re r| L) at x = 0 and
    // x = 1. Pre-split geometrically there so the first Simpson samples see
    // them.
    const double layer = 1.0 / (std::max(r1.real(), -r2.real()) * L);
    std::vector<double> cuts{0.0, 1.0};
    for (double w = layer; w < 0.5; w *= 2.0) {
        cuts.push_back(w);
        cuts.push_back(1.0 - w);
    }
    std::sort(cuts.begin(), cuts.end());
    auto integrate = [&](const std::function<cplx(double)>& fn) {
        cplx sum = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double lo = cuts[i], hi = cuts[i + 1];
            if (hi > lo) sum += adaptive_simpson(fn, lo, hi, quadTol / L * (hi - lo));
        }
        return L * sum;
    };
    const cplx J1 = integrate([&](double x) { return std::exp(-r1 * (L * x)) * src(x); });
    const cplx J2 = integrate([&](double x) { return std::exp(r2 * (L * (1.0 - x))) * src(x); });
    const cplx scale = -1.0 / (D * delta);
    const cplx cp0 = scale * J1, dcp0 = scale * r1 * J1;
    const cplx cpL = scale * J2, dcpL = scale * r2 * J2;

    // Homogeneous part alpha e^{r1 (z - L)} + beta e^{r2 z}.
    // z = 0: D c' - U c = -(C_in - C_ss(0)); z = L: c' = 0.
    const cplx e1 = std::exp(-r1 * L), e2 = std::exp(r2 * L);
    const double css0 = rcd_steady_state(k, 0.0).c;
    const cplx a11 = (D * r1 - U) * e1, a12 = D * r2 - U;
    const cplx b1 = -(k.Cin - css0) - (D * dcp0 - U * cp0);
    const cplx a21 = r1, a22 = r2 * e2;
    const cplx b2 = -dcpL;
    const cplx det = a11 * a22 - a12 * a21;
    if (std::abs(det) <= 1e-300 || !std::isfinite(std::abs(det))) throw PoleError("rcd: singular boundary system", s.imag());
    const cplx alpha = (b1 * a22 - a12 * b2) / det;
    const cplx beta = (a11 * b2 - b1 * a21) / det;
    return cpL + alpha + beta * e2;
}

void CavityParams::validate() const {
    if (p2.empty() || p2.front() == 0.0) throw InvalidInput("cavity: p2 leading coefficient must be nonzero");
    if (q2.empty()) throw InvalidInput("cavity: q2 must have at least one coefficient");
    for (double t : {tau1, tau2, tau3})
        if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidInput("cavity: delays must be finite and nonnegative");
    for (double v : p2)
        if (!std::isfinite(v)) throw InvalidInput("cavity: non-finite coefficient");
    for (double v : q2)
        if (!std::isfinite(v)) throw InvalidInput("cavity: non-finite coefficient");
    if (!std::isfinite(c)) throw InvalidInput("cavity: non-finite coefficient");
}

cplx cavity_transfer(const CavityParams& p, cplx s) {
    const cplx den = eval_poly(p.p2, s) + eval_poly(p.q2, s) * std::exp(-p.tau2 * s) + p.c * std::exp(-p.tau3 * s);
    const double scale = std::abs(eval_poly(p.p2, s)) + std::abs(eval_poly(p.q2, s)) + std::fabs(p.c);
    if (std::abs(den) <= 1e-14 * scale) throw PoleError("cavity: pole on the grid", s.imag());
    return std::exp(-p.tau1 * s) / den;
}

PlantSample assemble_mixed_sensitivity(const CMat& G, const MixedSensitivityFilters& w, double omega) {
    const cplx s(0.0, omega);
    const cplx we = w.We.eval(s), wn = w.Wn.eval(s), wu = w.Wu.eval(s);
    const std::size_t ny = G.rows(), nu = G.cols();
    PlantSample p;
    p.omega = omega;
    p.P11 = CMat(ny + nu, 2 * ny);
    p.P12 = CMat(ny + nu, nu);
    p.P21 = CMat(ny, 2 * ny);
    p.P22 = CMat(ny, nu);
    for (std::size_t i = 0; i < ny; ++i) {
        p.P11(i, i) = we;
        p.P11(i, ny + i) = -we * wn;
        p.P21(i, i) = 1.0;
        p.P21(i, ny + i) = -wn;
        for (std::size_t j = 0; j < nu; ++j) {
            p.P12(i, j) = -we * G(i, j);
            p.P22(i, j) = -G(i, j);
        }
    }
    for (std::size_t j = 0; j < nu; ++j) p.P12(ny + j, j) = wu;
    return p;
}

PlantSource mixed_sensitivity_source(std::function<CMat(double)> G, std::size_t ny, std::size_t nu,
                                     MixedSensitivityFilters w, double omegaMin, double omegaMax) {
    w.We.validate();
    w.Wn.validate();
    w.Wu.validate();
    if (!(omegaMin > 0.0) || !(omegaMax > omegaMin)) throw InvalidInput("plant: need 0 < omega_min < omega_max");
    PlantSource src;
    src.dims = {ny + nu, 2 * ny, ny, nu};
    src.omegaMin = omegaMin;
    src.omegaMax = omegaMax;
    src.at = [G = std::move(G), w = std::move(w), ny, nu](double omega) {
        const CMat g = G(omega);
        if (g.rows() != ny || g.cols() != nu) throw InvalidInput("plant: G has wrong dimensions");
        return assemble_mixed_sensitivity(g, w, omega);
    };
    return src;
}

} // namespace hinf
