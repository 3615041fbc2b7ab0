#pragma once

// End-to-end synthesis: plant setup, grid construction, bundle solve,
// verification and grid refinement.

#include "hinf/bundle.hpp"
#include "hinf/config.hpp"
#include "hinf/controller.hpp"
#include "hinf/grid.hpp"
#include "hinf/objective.hpp"
#include "hinf/plants.hpp"

#include <iosfwd>
#include <memory>
#include <string>

namespace hinf {

enum ExitCode : int {
    kExitOk = 0,
    kExitCertificateFailed = 1,
    kExitNotStabilizing = 2,
    kExitBudget = 3,
    kExitInvalidInput = 4,
    kExitNumerical = 5,
};

struct RunConfig {
    std::string plant = "rcd"; // rcd | cavity | frd
    RcdConstants rcd;
    CavityParams cavity;
    std::string frdPath;
    MixedSensitivityFilters filters;
    ControllerStructure structure = ControllerStructure::pi();
    Vec x0{1.0, 1e-5};
    SolverParams solver;
    ObjectiveOptions objective;
    double theta = 0.01;
    double omegaMin = 1e-4;
    double omegaMax = 1e4;
    std::size_t finePoints = 2000;
    std::size_t verifySubnodes = 10;
    std::size_t gridBudget = 100000;
    double fdSafety = 1.5;
    std::size_t maxRefine = 5;
    std::string outDir = "out";
};

// Reads every known key; unknown keys are rejected.
RunConfig load_run_config(const Config& cfg);

// Plant source with a memo of evaluated frequencies; thread-safe.
class PlantCache {
public:
    explicit PlantCache(PlantSource src);
    PlantSample at(double omega) const;
    FrdPlant sample(const std::vector<double>& grid, std::size_t threads) const;
    [[nodiscard]] const PlantSource& source() const { return src_; }

private:
    struct Impl;
    PlantSource src_;
    std::shared_ptr<Impl> impl_;
};

PlantSource make_plant(const RunConfig& rc);

class Pipeline {
public:
    Pipeline(RunConfig rc, std::ostream& log);

    [[nodiscard]] const RunConfig& config() const { return rc_; }
    [[nodiscard]] const std::vector<double>& fine_grid() const { return fine_; }
    [[nodiscard]] const PlantCache& plant() const { return cache_; }

    // max(sbar T, c sbar S) at one frequency; +inf on an ill-posed loop.
    double phi(const Vec& x, double omega) const;
    std::vector<FrequencyValue> fine_values(const Vec& x) const;
    Evaluation evaluate(const Vec& x, const std::vector<double>& grid) const;

    // Omega_opt for controller x with finite-difference bound from the fine grid.
    GridCertificate build_opt_grid(const Vec& x) const;
    // Evidence on a given grid plus the verification scan.
    std::pair<GridCertificate, VerifyReport> certify(const Vec& x, const std::vector<double>& grid) const;

    struct SynthResult {
        int exitCode = kExitOk;
        std::string message;
        Vec x;
        double f = 0.0;
        std::vector<double> grid;
        Evaluation evaluation;
        GridCertificate certificate;
        VerifyReport verify;
        std::vector<TraceRow> trace;
        std::string solverStatus;
        std::size_t refinements = 0;
        std::size_t valueCalls = 0;
    };
    SynthResult synthesize() const;

private:
    RunConfig rc_;
    std::ostream& log_;
    PlantCache cache_;
    std::vector<double> fine_;
    bool discrete_ = false;
};

// Artifact writers (17 significant digits).
void write_grid_csv(std::ostream& os, const std::vector<double>& grid);
std::vector<double> read_grid_csv(const std::string& path);
void write_closed_loop_csv(std::ostream& os, const std::vector<FrequencyValue>& values);

} // namespace hinf
