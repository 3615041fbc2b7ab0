#include "hinf/pipeline.hpp"

#include "hinf/errors.hpp"
#include "hinf/frd_io.hpp"
#include "hinf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

namespace hinf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RationalFilter read_filter(const Config& c, const std::string& name, const std::string& label) {
    RationalFilter f = RationalFilter::constant(label, 1.0);
    f.num = c.get_doubles("filter." + name + ".num", f.num);
    f.den = c.get_doubles("filter." + name + ".den", f.den);
    f.validate();
    return f;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < n; ++i) g[i] = std::pow(10.0, a + (b - a) * double(i) / double(n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

} // namespace

RunConfig load_run_config(const Config& c) {
    RunConfig rc;
    rc.plant = c.get_string("plant", rc.plant);
    if (rc.plant == "rcd") {
        rc.rcd.D = c.get_double("rcd.D", rc.rcd.D);
        rc.rcd.U = c.get_double("rcd.U", rc.rcd.U);
        rc.rcd.Cin = c.get_double("rcd.C_in", rc.rcd.Cin);
        rc.rcd.k = c.get_double("rcd.k", rc.rcd.k);
        rc.rcd.L = c.get_double("rcd.L", rc.rcd.L);
        rc.rcd.validate();
    } else if (rc.plant == "cavity") {
        rc.cavity.p2 = c.get_doubles("cavity.p2");
        rc.cavity.q2 = c.get_doubles("cavity.q2");
        rc.cavity.c = c.get_double("cavity.c");
        rc.cavity.tau1 = c.get_double("cavity.tau1");
        rc.cavity.tau2 = c.get_double("cavity.tau2");
        rc.cavity.tau3 = c.get_double("cavity.tau3");
        rc.cavity.validate();
    } else if (rc.plant == "frd") {
        rc.frdPath = c.get_string("frd.path");
    } else {
        throw InvalidInput("config: plant must be rcd, cavity or frd");
    }
    if (rc.plant != "frd") {
        rc.filters.We = read_filter(c, "We", "W_e");
        rc.filters.Wn = read_filter(c, "Wn", "W_n");
        rc.filters.Wu = read_filter(c, "Wu", "W_u");
    }
    rc.objective.c = c.get_double("barrier.c", rc.objective.c);
    if (!(rc.objective.c >= 0.0)) throw InvalidInput("config: barrier.c must be nonnegative");
    rc.objective.activeTol = c.get_double("objective.active_tol", rc.objective.activeTol);
    rc.objective.epsBar = c.get_double("objective.eps_bar", rc.objective.epsBar);
    rc.objective.peakRelTol = c.get_double("objective.peak_rel_tol", rc.objective.peakRelTol);
    rc.objective.nyquist = nyquist_mode_from_string(c.get_string("objective.nyquist", "advisory"));
    rc.objective.plantUnstablePoles = c.get_count("objective.plant_unstable_poles", 0);
    rc.objective.threads = c.get_count("threads", 0);

    const ControllerKind kind = controller_kind_from_string(c.get_string("controller.structure", "pi"));
    rc.structure.kind = kind;
    rc.structure.order = kind == ControllerKind::Tridiag ? c.get_count("controller.order", 1) : (kind == ControllerKind::Pi ? 1 : 0);
    rc.x0 = c.get_doubles("controller.x0", rc.x0);

    SolverParams& s = rc.solver;
    s.gamma = c.get_double("solver.gamma", s.gamma);
    s.gammaTilde = c.get_double("solver.gamma_tilde", s.gammaTilde);
    s.GammaCap = c.get_double("solver.Gamma", s.GammaCap);
    s.theta = c.get_double("solver.theta", s.theta);
    s.M = c.get_double("solver.M", s.M);
    s.q = c.get_double("solver.q", s.q);
    s.epsStop = c.get_double("solver.eps_stop", s.epsStop);
    s.maxOuter = c.get_count("solver.max_outer", s.maxOuter);
    s.maxInner = c.get_count("solver.max_inner", s.maxInner);
    s.maxPlanes = c.get_count("solver.max_planes", s.maxPlanes);
    s.RSharp1 = c.get_double("solver.R_sharp", s.RSharp1);
    s.Qeps = c.get_double("solver.Q_eps", s.Qeps);
    s.bfgs = c.get_bool("solver.bfgs", s.bfgs);
    s.recycle = c.get_bool("solver.recycle", s.recycle);
    s.fallback = c.get_bool("solver.fallback", s.fallback);
    s.debugChecks = c.get_bool("solver.debug_checks", s.debugChecks);
    s.maxValueCalls = c.get_count("solver.max_value_calls", s.maxValueCalls);
    s.seed = c.get_count("seed", std::size_t(s.seed));
    validate(s);

    rc.theta = c.get_double("grid.theta", rc.theta);
    if (!(rc.theta > 0.0)) throw InvalidInput("config: grid.theta must be positive");
    rc.omegaMin = c.get_double("grid.omega_min", rc.plant == "frd" ? 0.0 : rc.omegaMin);
    rc.omegaMax = c.get_double("grid.omega_max", rc.plant == "frd" ? 0.0 : rc.omegaMax);
    rc.finePoints = c.get_count("grid.fine_points", rc.finePoints);
    rc.verifySubnodes = c.get_count("grid.verify_subnodes", rc.verifySubnodes);
    rc.gridBudget = c.get_count("grid.budget", rc.gridBudget);
    rc.fdSafety = c.get_double("grid.fd_safety", rc.fdSafety);
    if (rc.finePoints < 2) throw InvalidInput("config: grid.fine_points must be at least 2");
    rc.maxRefine = c.get_count("synth.max_refine", rc.maxRefine);
    rc.outDir = c.get_string("out_dir", rc.outDir);

    const auto unused = c.unused();
    if (!unused.empty()) throw InvalidInput("config: unknown key '" + unused.front() + "'");
    return rc;
}

struct PlantCache::Impl {
    std::mutex mu;
    std::map<double, PlantSample> memo;
};

PlantCache::PlantCache(PlantSource src) : src_(std::move(src)), impl_(std::make_shared<Impl>()) {}

PlantSample PlantCache::at(double omega) const {
    {
        std::lock_guard<std::mutex> lock(impl_->mu);
        auto it = impl_->memo.find(omega);
        if (it != impl_->memo.end()) return it->second;
    }
    PlantSample s = src_.at(omega);
    s.omega = omega;
    check_sample(s, src_.dims);
    std::lock_guard<std::mutex> lock(impl_->mu);
    impl_->memo.emplace(omega, s);
    return s;
}

FrdPlant PlantCache::sample(const std::vector<double>& grid, std::size_t threads) const {
    FrdPlant out;
    out.dims = src_.dims;
    out.samples.resize(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t i) { out.samples[i] = at(grid[i]); });
    out.validate();
    return out;
}

PlantSource make_plant(const RunConfig& rc) {
    if (rc.plant == "frd") return source_from_frd(frd_load(rc.frdPath));
    const double lo = rc.omegaMin > 0.0 ? rc.omegaMin : 1e-4;
    const double hi = rc.omegaMax > 0.0 ? rc.omegaMax : 1e4;
    if (rc.plant == "rcd") {
        const RcdConstants k = rc.rcd;
        return mixed_sensitivity_source([k](double w) { return CMat(1, 1, {rcd_transfer(k, cplx(0.0, w))}); }, 1, 1,
                                        rc.filters, lo, hi);
    }
    if (rc.plant == "cavity") {
        const CavityParams p = rc.cavity;
        return mixed_sensitivity_source([p](double w) { return CMat(1, 1, {cavity_transfer(p, cplx(0.0, w))}); }, 1,
                                        1, rc.filters, lo, hi);
    }
    throw InvalidInput("unknown plant '" + rc.plant + "'");
}

Pipeline::Pipeline(RunConfig rc, std::ostream& log) : rc_(std::move(rc)), log_(log), cache_(make_plant(rc_)) {
    const PlantSource& src = cache_.source();
    rc_.structure.ny = src.dims.ny;
    rc_.structure.nu = src.dims.nu;
    rc_.structure.validate();
    if (rc_.x0.size() != rc_.structure.param_count())
        throw InvalidInput("config: controller.x0 has " + std::to_string(rc_.x0.size()) + " entries, structure needs " +
                           std::to_string(rc_.structure.param_count()));
    if (src.nodes) {
        discrete_ = true;
        const double lo = rc_.omegaMin > 0.0 ? rc_.omegaMin : src.nodes->front();
        const double hi = rc_.omegaMax > 0.0 ? rc_.omegaMax : src.nodes->back();
        for (double w : *src.nodes)
            if (w >= lo && w <= hi) fine_.push_back(w);
        if (fine_.size() < 2) throw InvalidInput("plant: fewer than two tabulated frequencies in range");
    } else {
        fine_ = log_grid(src.omegaMin, src.omegaMax, rc_.finePoints);
    }
    rc_.omegaMin = fine_.front();
    rc_.omegaMax = fine_.back();
}

double Pipeline::phi(const Vec& x, double omega) const {
    try {
        const FrequencyValue v = closed_loop_values(cache_.at(omega), rc_.structure, x, rc_.objective.c);
        return std::max(v.perf, v.barrier);
    } catch (const SingularMatrix&) {
        return kInf;
    } catch (const PoleError&) {
        return kInf;
    }
}

std::vector<FrequencyValue> Pipeline::fine_values(const Vec& x) const {
    return evaluate(x, fine_).values;
}

Evaluation Pipeline::evaluate(const Vec& x, const std::vector<double>& grid) const {
    HinfObjective obj(cache_.sample(grid, rc_.objective.threads), rc_.structure, rc_.objective);
    return obj.evaluate(x);
}

GridCertificate Pipeline::build_opt_grid(const Vec& x) const {
    const Evaluation fine = evaluate(x, fine_);
    if (!fine.feasible) throw InvalidInput("grid: controller is not admissible on the fine grid (" + fine.reason + ")");
    std::vector<double> vals;
    for (const auto& v : fine.values) vals.push_back(std::max(v.perf, v.barrier));
    const FdBound bound(fine_, vals, rc_.fdSafety);
    GridOptions opt;
    opt.theta = rc_.theta;
    opt.omegaMin = rc_.omegaMin;
    opt.omegaMax = rc_.omegaMax;
    opt.budget = rc_.gridBudget;
    if (discrete_) opt.nodes = fine_;
    return build_grid([&](double w) { return phi(x, w); }, bound, opt);
}

std::pair<GridCertificate, VerifyReport> Pipeline::certify(const Vec& x, const std::vector<double>& grid) const {
    const Evaluation fine = evaluate(x, fine_);
    if (!fine.feasible) throw InvalidInput("certify: controller is not admissible on the fine grid (" + fine.reason + ")");
    std::vector<double> fineVals;
    for (const auto& v : fine.values) fineVals.push_back(std::max(v.perf, v.barrier));
    const FdBound bound(fine_, fineVals, rc_.fdSafety);
    const Evaluation onGrid = evaluate(x, grid);
    if (!onGrid.feasible) throw InvalidInput("certify: controller is not admissible on the grid (" + onGrid.reason + ")");
    std::vector<double> vals;
    for (const auto& v : onGrid.values) vals.push_back(std::max(v.perf, v.barrier));
    GridCertificate cert = certify_grid(grid, vals, bound, rc_.theta);
    const std::optional<std::vector<double>> nodes = discrete_ ? std::optional(fine_) : std::nullopt;
    VerifyReport rep = verify_certificate([&](double w) { return phi(x, w); }, cert, cert.gammaStar,
                                          rc_.verifySubnodes, nodes);
    return {std::move(cert), std::move(rep)};
}

Pipeline::SynthResult Pipeline::synthesize() const {
    SynthResult res;
    res.x = rc_.x0;
    const Evaluation ev0 = evaluate(rc_.x0, fine_);
    if (!ev0.feasible) {
        res.exitCode = kExitNotStabilizing;
        res.message = "x0 is not admissible: " + ev0.reason;
        return res;
    }
    if (ev0.nyquist.evaluated)
        log_ << "x0 Nyquist check: winding " << ev0.nyquist.winding << ", unstable closed-loop poles "
             << ev0.nyquist.closedLoopUnstable << (ev0.nyquist.resolved ? "" : " (unresolved)") << '\n';
    if (rc_.objective.nyquist == NyquistMode::Enforce && !ev0.nyquist.stable()) {
        res.exitCode = kExitNotStabilizing;
        res.message = "x0 fails the Nyquist test";
        return res;
    }

    try {
        res.grid = build_opt_grid(rc_.x0).grid;
    } catch (const GridBudgetExceeded& e) {
        res.exitCode = kExitBudget;
        res.message = e.what();
        res.grid = e.partial().grid;
        return res;
    }
    log_ << "optimization grid: " << res.grid.size() << " nodes on [" << rc_.omegaMin << ", " << rc_.omegaMax << "]\n";

    Vec x = rc_.x0;
    for (std::size_t round = 0;; ++round) {
        HinfObjective obj(cache_.sample(res.grid, rc_.objective.threads), rc_.structure, rc_.objective);
        const RunResult rr = run(obj, x, rc_.solver);
        res.trace.insert(res.trace.end(), rr.trace.begin(), rr.trace.end());
        res.valueCalls += rr.valueCalls;
        res.solverStatus = rr.status;
        if (!std::isfinite(rr.f)) {
            res.exitCode = kExitNumerical;
            res.message = "solver failed: " + rr.failure;
            return res;
        }
        x = rr.x;
        res.x = x;
        res.evaluation = obj.evaluate(x);
        res.f = res.evaluation.f;
        log_ << "round " << round << ": f = " << res.f << " (" << rr.status << ", " << rr.valueCalls
             << " value calls, " << rr.outerIterations << " outer iterations)\n";
        auto [cert, rep] = certify(x, res.grid);
        res.certificate = std::move(cert);
        res.verify = std::move(rep);
        log_ << "verification: scan max " << res.verify.scanMax << " vs gamma* + theta = "
             << res.verify.gammaStar + res.verify.theta << (res.verify.pass ? " (pass)" : " (fail)") << '\n';
        if (res.verify.pass) {
            const NyquistReport& nq = res.evaluation.nyquist;
            if (nq.evaluated && nq.resolved && nq.closedLoopUnstable > 0) {
                res.exitCode = kExitNotStabilizing;
                res.message = "certified, but the Nyquist test counts " + std::to_string(nq.closedLoopUnstable) +
                              " unstable closed-loop poles at the optimum";
                return res;
            }
            res.exitCode = kExitOk;
            res.message = "certified";
            return res;
        }
        if (round >= rc_.maxRefine) {
            res.exitCode = kExitBudget;
            res.message = "refinement budget exhausted; violation at omega = " +
                          std::to_string(res.verify.violations.front());
            return res;
        }
        std::set<double> nodes(res.grid.begin(), res.grid.end());
        for (double w : res.verify.violations) {
            auto hi = nodes.upper_bound(w);
            auto lo = hi;
            --lo;
            const double a = *lo, b = hi == nodes.end() ? w : *hi;
            nodes.insert(w);
            nodes.insert(0.5 * (a + w));
            if (b > w) nodes.insert(0.5 * (w + b));
        }
        res.grid.assign(nodes.begin(), nodes.end());
        ++res.refinements;
        log_ << "refined grid to " << res.grid.size() << " nodes\n";
    }
}

void write_grid_csv(std::ostream& os, const std::vector<double>& grid) {
    os << "omega_radps\n";
    char buf[64];
    for (double w : grid) {
        std::snprintf(buf, sizeof buf, "%.17g\n", w);
        os << buf;
    }
}

std::vector<double> read_grid_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot open grid file " + path);
    std::string line;
    std::size_t n = 0;
    std::vector<double> out;
    while (std::getline(is, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (n == 1 && line == "omega_radps") continue;
        if (line.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(line, &used));
            if (used != line.size()) throw std::invalid_argument(line);
        } catch (const std::exception&) {
            throw ParseError("bad frequency '" + line + "'", n);
        }
        if (out.size() > 1 && !(out.back() > out[out.size() - 2])) throw ParseError("grid not ascending", n);
    }
    if (out.empty()) throw ParseError("empty grid file", n);
    return out;
}

void write_closed_loop_csv(std::ostream& os, const std::vector<FrequencyValue>& values) {
    os << "omega_radps,sbar_Twz,c_sbar_S\n";
    char buf[128];
    for (const auto& v : values) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", v.omega, v.perf, v.barrier);
        os << buf;
    }
}

} // namespace hinf
