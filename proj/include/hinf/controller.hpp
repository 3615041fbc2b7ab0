#pragma once

// Fixed-structure controller parametrizations K(x).

#include "hinf/linalg.hpp"
#include "hinf/tangent_qp.hpp"

#include <string>
#include <vector>

namespace hinf {

enum class ControllerKind { StaticGain, Pi, Tridiag };

std::string to_string(ControllerKind k);
ControllerKind controller_kind_from_string(const std::string& s);

struct ControllerStructure {
    ControllerKind kind = ControllerKind::StaticGain;
    std::size_t ny = 1; // controller inputs (measurements)
    std::size_t nu = 1; // controller outputs (controls)
    std::size_t order = 0;

    static ControllerStructure static_gain(std::size_t ny, std::size_t nu);
    static ControllerStructure pi();
    static ControllerStructure tridiag(std::size_t order, std::size_t ny, std::size_t nu);

    [[nodiscard]] std::size_t param_count() const;
    void validate() const;
};

// Real state-space realization (A, B, C, D), matrices row-major.
struct StateSpace {
    std::size_t n = 0, ny = 0, nu = 0;
    std::vector<double> A, B, C, D;
};

// Tridiagonal packing: sub-diagonal, main diagonal, super-diagonal, then B,
// C, D row-major.
StateSpace unpack(const ControllerStructure& s, const Vec& x);
Vec pack(const ControllerStructure& s, const StateSpace& ss);

// K(jw), nu x ny. Throws SingularMatrix when jw is an eigenvalue of A_K.
CMat k_eval(const ControllerStructure& s, const Vec& x, double omega);

// dK/dx_i (jw), one nu x ny matrix per parameter.
std::vector<CMat> k_jacobian(const ControllerStructure& s, const Vec& x, double omega);

// Number of controller poles at s = 0 (integrators).
std::size_t integrator_count(const ControllerStructure& s, const Vec& x);

// Number of controller poles in the open right half plane, or -1 when the
// Routh test hits a degenerate row.
int unstable_pole_count(const ControllerStructure& s, const Vec& x);

// Real polynomial coefficients, highest power first.
using Poly = std::vector<double>;

Poly char_poly(const std::vector<double>& A, std::size_t n);

// SISO transfer function numerator / denominator.
std::pair<Poly, Poly> transfer_function(const ControllerStructure& s, const Vec& x);

std::string format_poly(const Poly& p, int digits = 4);
std::string format_transfer(const ControllerStructure& s, const Vec& x, int digits = 4);

// Plain-text controller file: structure line, dimensions, parameter vector
// with 17 significant digits, and a commented state-space realization.
std::string export_controller(const ControllerStructure& s, const Vec& x);
std::pair<ControllerStructure, Vec> import_controller(const std::string& text);

} // namespace hinf
