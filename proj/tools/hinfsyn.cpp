#include "hinf/config.hpp"
#include "hinf/controller.hpp"
#include "hinf/errors.hpp"
#include "hinf/grid.hpp"
#include "hinf/pipeline.hpp"
#include "hinf/simd.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace hinf;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::vector<std::string> sets;
    int threads = -1;
    double theta = 0.0;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("-c,--config", c.config, "run configuration file")->required()->check(CLI::ExistingFile);
    app->add_option("-o,--out", c.out, "output directory (overrides out_dir)");
    app->add_option("--set", c.sets, "override a configuration entry, key=value");
    app->add_option("-j,--threads", c.threads, "worker threads, 0 = hardware concurrency");
    app->add_option("--theta", c.theta, "grid tolerance (overrides grid.theta)");
}

RunConfig load(const Common& c) {
    Config cfg = Config::load(c.config);
    for (const auto& kv : c.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw InvalidInput("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (c.threads >= 0) cfg.set("threads", std::to_string(c.threads));
    if (c.theta > 0.0) {
        std::ostringstream s;
        s.precision(17);
        s << c.theta;
        cfg.set("grid.theta", s.str());
    }
    if (!c.out.empty()) cfg.set("out_dir", c.out);
    RunConfig rc = load_run_config(cfg);
    // a relative frd.path is taken relative to the config file
    if (rc.plant == "frd" && fs::path(rc.frdPath).is_relative() && !fs::exists(rc.frdPath))
        rc.frdPath = (fs::path(c.config).parent_path() / rc.frdPath).string();
    return rc;
}

void apply_controller(RunConfig& rc, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot open controller file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    auto [s, x] = import_controller(ss.str());
    rc.structure = s;
    rc.x0 = x;
}

fs::path out_dir(const RunConfig& rc) {
    fs::path d(rc.outDir);
    fs::create_directories(d);
    return d;
}

template <class F>
void write_file(const fs::path& p, F&& fn) {
    std::ofstream os(p);
    if (!os) throw InvalidInput("cannot write " + p.string());
    fn(os);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void write_summary(const fs::path& p, const RunConfig& rc, const Pipeline::SynthResult& r, double seconds) {
    write_file(p, [&](std::ostream& os) {
        os << "exit_code = " << r.exitCode << '\n';
        os << "message = " << r.message << '\n';
        os << "plant = " << rc.plant << '\n';
        os << "structure = " << to_string(rc.structure.kind) << '\n';
        os << "x =";
        for (double v : r.x) os << ' ' << fmt(v);
        os << '\n';
        os << "f = " << fmt(r.f) << '\n';
        os << "solver_status = " << r.solverStatus << '\n';
        os << "grid_nodes = " << r.grid.size() << '\n';
        os << "refinements = " << r.refinements << '\n';
        os << "value_calls = " << r.valueCalls << '\n';
        os << "gamma_star = " << fmt(r.verify.gammaStar) << '\n';
        os << "verify_scan_max = " << fmt(r.verify.scanMax) << '\n';
        os << "verify_pass = " << (r.verify.pass ? "true" : "false") << '\n';
        os << "simd = " << simd::isa_name(simd::active().isa) << '\n';
        os << "seconds = " << fmt(seconds) << '\n';
    });
}

int cmd_synth(const Common& c) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig rc = load(c);
    Pipeline pipe(rc, std::cerr);
    const auto r = pipe.synthesize();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const fs::path d = out_dir(pipe.config());
    if (!r.x.empty())
        write_file(d / "controller.txt", [&](std::ostream& os) { os << export_controller(pipe.config().structure, r.x); });
    write_file(d / "trace.csv", [&](std::ostream& os) { write_trace_csv(os, r.trace); });
    if (!r.grid.empty()) write_file(d / "grid.csv", [&](std::ostream& os) { write_grid_csv(os, r.grid); });
    if (!r.certificate.grid.empty())
        write_file(d / "certificate.csv", [&](std::ostream& os) { write_certificate_csv(os, r.certificate, &r.verify); });
    if (r.exitCode != kExitNotStabilizing)
        write_file(d / "closed_loop.csv", [&](std::ostream& os) { write_closed_loop_csv(os, pipe.fine_values(r.x)); });
    write_summary(d / "summary.txt", pipe.config(), r, secs);
    std::cout << "status: " << r.message << "\n";
    std::cout << "f = " << fmt(r.f) << "\nx =";
    for (double v : r.x) std::cout << ' ' << fmt(v);
    std::cout << "\ngrid nodes: " << r.grid.size() << ", refinements: " << r.refinements << ", " << fmt(secs)
              << " s\nartifacts: " << d.string() << '\n';
    return r.exitCode;
}

int cmd_certify(const Common& c, const std::string& controller, const std::string& gridPath) {
    RunConfig rc = load(c);
    apply_controller(rc, controller);
    Pipeline pipe(rc, std::cerr);
    const Evaluation ev = pipe.evaluate(rc.x0, pipe.fine_grid());
    if (!ev.feasible) {
        std::cout << "controller is not admissible: " << ev.reason << '\n';
        return kExitNotStabilizing;
    }
    std::vector<double> grid;
    if (gridPath.empty()) {
        try {
            grid = pipe.build_opt_grid(rc.x0).grid;
        } catch (const GridBudgetExceeded& e) {
            std::cout << e.what() << '\n';
            return kExitBudget;
        }
    } else {
        grid = read_grid_csv(gridPath);
    }
    auto [cert, rep] = pipe.certify(rc.x0, grid);
    const fs::path d = out_dir(pipe.config());
    write_file(d / "certificate.csv", [&](std::ostream& os) { write_certificate_csv(os, cert, &rep); });
    std::cout << "gamma* = " << fmt(rep.gammaStar) << " on " << grid.size() << " nodes\n";
    std::cout << "scan max = " << fmt(rep.scanMax) << " at omega = " << fmt(rep.scanArgmax) << " over "
              << rep.scanned << " points\n";
    std::cout << "bound inequality holds on " << [&] {
        std::size_t n = 0;
        for (const auto& ch : cert.checks) n += ch.holds;
        return n;
    }() << " of " << cert.checks.size() << " intervals\n";
    std::cout << (rep.pass ? "certificate: pass\n" : "certificate: FAIL\n");
    for (double w : rep.violations) std::cout << "  violation at omega = " << fmt(w) << '\n';
    return rep.pass ? kExitOk : kExitCertificateFailed;
}

int cmd_grid(const Common& c, const std::string& controller) {
    RunConfig rc = load(c);
    if (!controller.empty()) apply_controller(rc, controller);
    Pipeline pipe(rc, std::cerr);
    GridCertificate g;
    try {
        g = pipe.build_opt_grid(rc.x0);
    } catch (const GridBudgetExceeded& e) {
        std::cout << e.what() << '\n';
        return kExitBudget;
    }
    const fs::path d = out_dir(pipe.config());
    write_file(d / "grid.csv", [&](std::ostream& os) { write_grid_csv(os, g.grid); });
    std::cout << g.grid.size() << " nodes written to " << (d / "grid.csv").string() << '\n';
    return kExitOk;
}

int cmd_eval(const Common& c, const std::string& controller) {
    RunConfig rc = load(c);
    if (!controller.empty()) apply_controller(rc, controller);
    Pipeline pipe(rc, std::cerr);
    const Evaluation ev = pipe.evaluate(rc.x0, pipe.fine_grid());
    const fs::path d = out_dir(pipe.config());
    if (!ev.values.empty()) write_file(d / "closed_loop.csv", [&](std::ostream& os) { write_closed_loop_csv(os, ev.values); });
    if (!ev.feasible) {
        std::cout << "controller is not admissible: " << ev.reason << '\n';
        return kExitNotStabilizing;
    }
    std::cout << "f = " << fmt(ev.f) << " at omega = " << fmt(ev.values[ev.argmax].omega) << " ("
              << (ev.argmaxChannel == Channel::Performance ? "performance" : "barrier") << ")\n";
    if (ev.nyquist.evaluated)
        std::cout << "Nyquist: winding " << fmt(ev.nyquist.winding) << ", closed-loop RHP poles "
                  << ev.nyquist.closedLoopUnstable << (ev.nyquist.resolved ? "" : " (unresolved)") << '\n';
    std::cout << "K(s) = " << (pipe.config().structure.nu == 1 && pipe.config().structure.ny == 1 ? format_transfer(pipe.config().structure, rc.x0) : std::string("(MIMO)")) << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structured H-infinity controller synthesis with certified frequency grids"};
    app.require_subcommand(1);
    Common common;
    std::string controller, gridPath;

    auto* synth = app.add_subcommand("synth", "optimize the controller and certify the result");
    add_common(synth, common);
    auto* certify = app.add_subcommand("certify", "certify a saved controller");
    add_common(certify, common);
    certify->add_option("-k,--controller", controller, "controller file")->required()->check(CLI::ExistingFile);
    certify->add_option("-g,--grid", gridPath, "grid file; built from the controller when omitted")
        ->check(CLI::ExistingFile);
    auto* grid = app.add_subcommand("grid", "build the optimization grid for x0 or a saved controller");
    add_common(grid, common);
    grid->add_option("-k,--controller", controller, "controller file")->check(CLI::ExistingFile);
    auto* eval = app.add_subcommand("eval", "evaluate the closed loop on the fine grid");
    add_common(eval, common);
    eval->add_option("-k,--controller", controller, "controller file")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInvalidInput;
    }

    try {
        if (*synth) return cmd_synth(common);
        if (*certify) return cmd_certify(common, controller, gridPath);
        if (*grid) return cmd_grid(common, controller);
        if (*eval) return cmd_eval(common, controller);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalidInput;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalidInput;
    } catch (const PoleError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const SingularMatrix& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const NumericalFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitInvalidInput;
}
