#pragma once

// Frequency grids certified by a first-order bound on the magnitude curve.

#include "hinf/errors.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hinf {

using MagnitudeFn = std::function<double(double omega)>;

// M[lo, hi] >= |phi'| on [lo, hi].
class FirstOrderBound {
public:
    virtual ~FirstOrderBound() = default;
    virtual double operator()(double lo, double hi) const = 0;
    virtual std::string provenance() const = 0;
};

class AnalyticBound : public FirstOrderBound {
public:
    explicit AnalyticBound(std::function<double(double, double)> m) : m_(std::move(m)) {}
    double operator()(double lo, double hi) const override { return m_(lo, hi); }
    std::string provenance() const override { return "analytic"; }

private:
    std::function<double(double, double)> m_;
};

// safety * max |forward difference| of fine samples inside [lo, hi].
// Throws InvalidInput when fewer than two samples fall inside.
double fd_bound(const std::vector<double>& omega, const std::vector<double>& phi, double lo, double hi,
                double safety = 1.5);

// Finite-difference bound over fine samples. Intervals narrower than the
// fine spacing use the slopes of the fine segments they overlap.
class FdBound : public FirstOrderBound {
public:
    FdBound(std::vector<double> omega, std::vector<double> phi, double safety = 1.5);
    double operator()(double lo, double hi) const override;
    std::string provenance() const override { return "finite-difference"; }

private:
    std::vector<double> omega_, slope_;
    double safety_;
};

struct IntervalCheck {
    double lo = 0.0, hi = 0.0;
    double phiLo = 0.0, phiHi = 0.0;
    double M = 0.0;
    double lhs = 0.0; // M (hi - lo)
    double rhs = 0.0; // 2 gamma* + 2 theta - phi(lo) - phi(hi)
    bool holds = false;
    bool certified = false; // false where phi stays below gamma* - 10 theta
};

struct GridCertificate {
    std::vector<double> grid;
    std::vector<double> values;
    double theta = 0.0;
    double gammaStar = 0.0;
    std::string boundProvenance;
    std::vector<IntervalCheck> checks;

    [[nodiscard]] bool all_hold() const;
};

struct GridOptions {
    double theta = 0.01;
    double omegaMin = 0.0;
    double omegaMax = 1.0;
    std::size_t budget = 100000;
    double growth = 1.5;         // omega# = growth * omega_i + seed
    double seedFraction = 1e-4;  // seed = seedFraction * (omegaMax - omegaMin)
    double bisectRelTol = 1e-6;
    // When set, nodes are restricted to this ascending set.
    std::optional<std::vector<double>> nodes;
};

class GridBudgetExceeded : public BudgetExceeded {
public:
    GridBudgetExceeded(const std::string& what, GridCertificate partial)
        : BudgetExceeded(what), partial_(std::move(partial)) {}
    [[nodiscard]] const GridCertificate& partial() const { return partial_; }

private:
    GridCertificate partial_;
};

// Adaptive grid: each step extrapolates omega# and bisects for the largest
// next node with M (w_{i+1} - w_i) < |phi(w_i) - phi(w_{i+1})| + 2 theta.
GridCertificate build_grid(const MagnitudeFn& phi, const FirstOrderBound& M, const GridOptions& opt);

// Evidence for an existing grid.
GridCertificate certify_grid(const std::vector<double>& grid, const std::vector<double>& values,
                             const FirstOrderBound& M, double theta, const std::string& provenance = "");

struct VerifyReport {
    bool pass = false;
    double gammaStar = 0.0;
    double theta = 0.0;
    double scanMax = 0.0;
    double scanArgmax = 0.0;
    std::size_t scanned = 0;
    std::vector<double> violations; // worst violating omega per interval, worst first
};

// Scan `subnodes` interior points per interval (or every node of `nodes`
// inside it) and pass iff the scan maximum is <= gammaStar + theta.
VerifyReport verify_certificate(const MagnitudeFn& phi, const GridCertificate& cert, double gammaStar,
                                std::size_t subnodes = 10,
                                const std::optional<std::vector<double>>& nodes = std::nullopt);

void write_certificate_csv(std::ostream& os, const GridCertificate& cert, const VerifyReport* report = nullptr);

} // namespace hinf
