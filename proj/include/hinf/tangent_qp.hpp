#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hinf {

using Vec = std::vector<double>;

// Affine function a + g^T (y - x) in center-relative form.
struct Plane {
    double a = 0.0;
    Vec g;
};

// minimize t + 1/2 (y-x)^T Q (y-x)  s.t.  a_i + g_i^T (y-x) <= t,  |y_j - x_j| <= R.
struct TangentProblem {
    Vec x;
    std::vector<Plane> planes;
    Vec Q; // n x n row-major, symmetric positive semidefinite
    double R = 1.0;
};

struct KktResiduals {
    double stationarity = 0.0;
    double primal = 0.0;
    double complementarity = 0.0;
    double multiplier_sum = 0.0; // |sum lambda - 1|
};

struct TangentSolution {
    Vec y;
    double t = 0.0;
    Vec multipliers;    // one per plane, >= 0
    Vec boxMultipliers; // v in g* + Q (y - x) + v = 0
    Vec aggregate;      // g* = sum lambda_i g_i
    KktResiduals kkt;
    std::size_t pivots = 0; // active-set pivots plus interior-point iterations
    std::string method;     // "active-set" or "interior-point"
};

void validate(const TangentProblem& prob);

// Primal active-set solve. Throws NumericalFailure after 10000 pivots.
TangentSolution solve_tangent(const TangentProblem& prob);

// Aggregate plane in center-relative form; minorizes the polyhedral model and
// touches it at sol.y.
Plane aggregate_plane(const TangentProblem& prob, const TangentSolution& sol);

// max_i a_i + g_i^T (y - x)
double polyhedral_value(const std::vector<Plane>& planes, const Vec& x, const Vec& y);

} // namespace hinf
