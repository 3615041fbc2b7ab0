#include "hinf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace hinf {

double fd_bound(const std::vector<double>& omega, const std::vector<double>& phi, double lo, double hi,
                double safety) {
    if (omega.size() != phi.size()) throw InvalidInput("fd_bound: sample size mismatch");
    double m = 0.0;
    std::size_t inside = 0;
    std::optional<std::size_t> prev;
    for (std::size_t i = 0; i < omega.size(); ++i) {
        if (omega[i] < lo || omega[i] > hi) continue;
        ++inside;
        if (prev) m = std::max(m, std::fabs((phi[i] - phi[*prev]) / (omega[i] - omega[*prev])));
        prev = i;
    }
    if (inside < 2) throw InvalidInput("fd_bound: insufficient resolution, fewer than two samples in the interval");
    return safety * m;
}

FdBound::FdBound(std::vector<double> omega, std::vector<double> phi, double safety)
    : omega_(std::move(omega)), safety_(safety) {
    if (omega_.size() != phi.size() || omega_.size() < 2) throw InvalidInput("FdBound: need at least two samples");
    for (std::size_t i = 0; i + 1 < omega_.size(); ++i) {
        if (!(omega_[i + 1] > omega_[i])) throw InvalidInput("FdBound: samples not ascending");
        slope_.push_back(std::fabs((phi[i + 1] - phi[i]) / (omega_[i + 1] - omega_[i])));
    }
}

double FdBound::operator()(double lo, double hi) const {
    // Segments [w_k, w_{k+1}] that overlap [lo, hi].
    auto first = std::upper_bound(omega_.begin(), omega_.end(), lo);
    std::size_t k0 = first == omega_.begin() ? 0 : std::size_t(first - omega_.begin()) - 1;
    k0 = std::min(k0, slope_.size() - 1);
    double m = 0.0;
    for (std::size_t k = k0; k < slope_.size() && omega_[k] < hi; ++k) m = std::max(m, slope_[k]);
    if (hi <= omega_[k0]) m = std::max(m, slope_[k0]);
    return safety_ * m;
}

bool GridCertificate::all_hold() const {
    return std::all_of(checks.begin(), checks.end(), [](const IntervalCheck& c) { return c.holds; });
}

GridCertificate certify_grid(const std::vector<double>& grid, const std::vector<double>& values,
                             const FirstOrderBound& M, double theta, const std::string& provenance) {
    if (grid.size() != values.size() || grid.empty()) throw InvalidInput("certify_grid: bad grid");
    GridCertificate cert;
    cert.grid = grid;
    cert.values = values;
    cert.theta = theta;
    cert.boundProvenance = provenance.empty() ? M.provenance() : provenance;
    cert.gammaStar = *std::max_element(values.begin(), values.end());
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        IntervalCheck c;
        c.lo = grid[i];
        c.hi = grid[i + 1];
        c.phiLo = values[i];
        c.phiHi = values[i + 1];
        c.M = M(c.lo, c.hi);
        c.lhs = c.M * (c.hi - c.lo);
        c.rhs = 2.0 * cert.gammaStar + 2.0 * theta - c.phiLo - c.phiHi;
        c.holds = c.lhs < c.rhs;
        c.certified = std::max(c.phiLo, c.phiHi) >= cert.gammaStar - 10.0 * theta;
        cert.checks.push_back(c);
    }
    return cert;
}

GridCertificate build_grid(const MagnitudeFn& phi, const FirstOrderBound& M, const GridOptions& opt) {
    if (!(opt.theta > 0.0)) throw InvalidInput("build_grid: theta must be positive");
    if (!(opt.omegaMax > opt.omegaMin) || !(opt.omegaMin >= 0.0)) throw InvalidInput("build_grid: bad frequency range");
    const double seed = opt.seedFraction * (opt.omegaMax - opt.omegaMin);
    std::vector<double> grid{opt.omegaMin};
    std::vector<double> vals{phi(opt.omegaMin)};

    auto admissible = [&](double w0, double f0, double w1, double f1) {
        return M(w0, w1) * (w1 - w0) < std::fabs(f0 - f1) + 2.0 * opt.theta;
    };
    auto partial = [&] {
        return certify_grid(grid, vals, M, opt.theta);
    };

    const std::vector<double>* nodes = opt.nodes ? &*opt.nodes : nullptr;
    std::size_t idx = 0;
    if (nodes) {
        if (nodes->empty()) throw InvalidInput("build_grid: empty node set");
        auto it = std::lower_bound(nodes->begin(), nodes->end(), opt.omegaMin);
        if (it == nodes->end() || *it != opt.omegaMin) throw InvalidInput("build_grid: omegaMin is not a node");
        idx = std::size_t(it - nodes->begin());
    }

    // The right end is tried first so flat stretches close in one step.
    double wEnd = opt.omegaMax;
    if (nodes) {
        auto last = std::upper_bound(nodes->begin(), nodes->end(), opt.omegaMax);
        wEnd = *(last - 1);
    }
    const double fEnd = wEnd > opt.omegaMin ? phi(wEnd) : vals.front();

    while (grid.back() < wEnd) {
        if (grid.size() >= opt.budget)
            throw GridBudgetExceeded("build_grid: node budget of " + std::to_string(opt.budget) + " exhausted",
                                     partial());
        const double w0 = grid.back(), f0 = vals.back();
        if (admissible(w0, f0, wEnd, fEnd)) {
            grid.push_back(wEnd);
            vals.push_back(fEnd);
            break;
        }
        const double sharp = std::min(opt.growth * w0 + seed, opt.omegaMax);
        if (nodes) {
            // Largest admissible node index in (idx, j#], bisected on indices.
            std::size_t hi = std::size_t(std::upper_bound(nodes->begin(), nodes->end(), sharp) - nodes->begin()) - 1;
            hi = std::max(hi, idx + 1);
            if (hi >= nodes->size()) break;
            double fh = phi((*nodes)[hi]);
            if (!admissible(w0, f0, (*nodes)[hi], fh)) {
                std::size_t lo = idx, h = hi;
                std::optional<std::pair<std::size_t, double>> best;
                while (h - lo > 1) {
                    const std::size_t mid = lo + (h - lo) / 2;
                    const double fm = phi((*nodes)[mid]);
                    if (admissible(w0, f0, (*nodes)[mid], fm)) {
                        lo = mid;
                        best = {mid, fm};
                    } else {
                        h = mid;
                    }
                }
                if (best) {
                    hi = best->first;
                    fh = best->second;
                } else {
                    hi = idx + 1; // fine grid too coarse here; the evidence row records it
                    fh = phi((*nodes)[hi]);
                }
            }
            idx = hi;
            grid.push_back((*nodes)[hi]);
            vals.push_back(fh);
            continue;
        }
        double fs = phi(sharp);
        if (admissible(w0, f0, sharp, fs)) {
            grid.push_back(sharp);
            vals.push_back(fs);
            continue;
        }
        double lo = w0, hi = sharp, flo = f0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = phi(mid);
            if (admissible(w0, f0, mid, fm)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
            if (lo > w0 && hi - lo <= opt.bisectRelTol * hi) break;
            if (hi - w0 <= 1e-15 * hi) break;
        }
        if (!(lo > w0)) throw NumericalFailure("build_grid: no admissible node after omega = " + std::to_string(w0));
        grid.push_back(lo);
        vals.push_back(flo);
    }
    return certify_grid(grid, vals, M, opt.theta);
}

VerifyReport verify_certificate(const MagnitudeFn& phi, const GridCertificate& cert, double gammaStar,
                                std::size_t subnodes, const std::optional<std::vector<double>>& nodes) {
    VerifyReport rep;
    rep.gammaStar = gammaStar;
    rep.theta = cert.theta;
    rep.scanMax = -std::numeric_limits<double>::infinity();
    const double limit = gammaStar + cert.theta;
    std::vector<std::pair<double, double>> worst; // (value, omega) per violating interval
    auto visit = [&](double w, double v, std::optional<std::pair<double, double>>& local) {
        ++rep.scanned;
        if (v > rep.scanMax) {
            rep.scanMax = v;
            rep.scanArgmax = w;
        }
        if (v > limit && (!local || v > local->first)) local = {v, w};
    };
    for (std::size_t i = 0; i < cert.grid.size(); ++i) {
        std::optional<std::pair<double, double>> local;
        visit(cert.grid[i], cert.values[i], local);
        if (i + 1 < cert.grid.size()) {
            const double lo = cert.grid[i], hi = cert.grid[i + 1];
            if (nodes) {
                auto it = std::upper_bound(nodes->begin(), nodes->end(), lo);
                for (; it != nodes->end() && *it < hi; ++it) visit(*it, phi(*it), local);
            } else {
                for (std::size_t k = 1; k <= subnodes; ++k) {
                    const double w = lo + (hi - lo) * double(k) / double(subnodes + 1);
                    visit(w, phi(w), local);
                }
            }
        }
        if (local) worst.push_back(*local);
    }
    std::sort(worst.begin(), worst.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& w : worst) rep.violations.push_back(w.second);
    rep.pass = rep.scanMax <= limit;
    return rep;
}

void write_certificate_csv(std::ostream& os, const GridCertificate& cert, const VerifyReport* report) {
    char buf[512];
    os << "omega_lo,omega_hi,phi_lo,phi_hi,M,lhs,rhs,holds,certified\n";
    for (const IntervalCheck& c : cert.checks) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n", c.lo, c.hi, c.phiLo,
                      c.phiHi, c.M, c.lhs, c.rhs, c.holds ? 1 : 0, c.certified ? 1 : 0);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "# gamma_star=%.17g theta=%.17g nodes=%zu bound=%s all_hold=%d\n", cert.gammaStar,
                  cert.theta, cert.grid.size(), cert.boundProvenance.c_str(), cert.all_hold() ? 1 : 0);
    os << buf;
    if (report) {
        std::snprintf(buf, sizeof buf, "# verify pass=%d scan_max=%.17g at omega=%.17g scanned=%zu limit=%.17g\n",
                      report->pass ? 1 : 0, report->scanMax, report->scanArgmax, report->scanned,
                      report->gammaStar + report->theta);
        os << buf;
    }
}

} // namespace hinf
