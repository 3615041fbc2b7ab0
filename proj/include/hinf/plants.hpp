#pragma once

// Analytic plant models, weighting filters and mixed-sensitivity assembly.

#include "hinf/controller.hpp"
#include "hinf/plant.hpp"

#include <functional>
#include <string>

namespace hinf {

// Real polynomial evaluated at complex s (coefficients highest power first).
cplx eval_poly(const Poly& p, cplx s);

struct RationalFilter {
    std::string name = "W";
    Poly num{1.0};
    Poly den{1.0};

    static RationalFilter constant(std::string name, double gain);
    // Throws PoleError naming the filter when s is a root of the denominator.
    [[nodiscard]] cplx eval(cplx s) const;
    void validate() const;
};

// Convection-diffusion-reaction tube, single species, first-order reaction.
struct RcdConstants {
    double D = 1.05;   // dispersion, m^2/min
    double U = 1.24;   // steady-state velocity, m/min
    double Cin = 0.5;  // inlet concentration, mol/m^3
    double k = 0.25;   // reaction rate, 1/min
    double L = 6.36;   // length, m

    [[nodiscard]] double a() const { return D / (L * L); }
    [[nodiscard]] double b() const { return -U / L; }
    [[nodiscard]] double f() const;
    void validate() const;
};

struct SteadyState {
    double c = 0.0;  // C_ss(z)
    double dc = 0.0; // dC_ss/dz
};

SteadyState rcd_steady_state(const RcdConstants& k, double z);

// Transfer from the velocity deviation u to the outlet concentration c(L).
// The boundary value problem is solved by variation of parameters with
// decaying kernels on both sides; the two source integrals are computed by
// adaptive Simpson to absolute tolerance quadTol. Throws PrecisionError when
// the interval cap is hit and PoleError at a singular boundary system.
cplx rcd_transfer(const RcdConstants& k, cplx s, double quadTol = 1e-10);

// Adaptive Simpson on [lo, hi] for a complex integrand.
cplx adaptive_simpson(const std::function<cplx(double)>& fn, double lo, double hi, double tol,
                      std::size_t maxIntervals = 1000000);

struct CavityParams {
    Poly p2{1.0, 0.0, 0.0};
    Poly q2{0.0};
    double c = 0.0;
    double tau1 = 0.0, tau2 = 0.0, tau3 = 0.0;
    void validate() const;
};

// e^{-tau1 s} / (p2(s) + q2(s) e^{-tau2 s} + c e^{-tau3 s}).
cplx cavity_transfer(const CavityParams& p, cplx s);

struct MixedSensitivityFilters {
    RationalFilter We = RationalFilter::constant("W_e", 1.0);
    RationalFilter Wn = RationalFilter::constant("W_n", 1.0);
    RationalFilter Wu = RationalFilter::constant("W_u", 1.0);
};

// Generalized plant for w = (r, n), z = (W_e e, W_u u), measurement e =
// r - G u - W_n n and control u. P22 = -G, so closing u = K e gives
// S = (I - P22 K)^-1 = (I + G K)^-1 = T_re.
PlantSample assemble_mixed_sensitivity(const CMat& G, const MixedSensitivityFilters& w, double omega);

// Source wrapper for a G(jw) function with ny outputs and nu inputs.
PlantSource mixed_sensitivity_source(std::function<CMat(double)> G, std::size_t ny, std::size_t nu,
                                     MixedSensitivityFilters w, double omegaMin, double omegaMax);

} // namespace hinf
