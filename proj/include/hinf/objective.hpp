#pragma once

// Discretized H-infinity objective f(x) = max over the grid of
// max(sbar(T_wz(K(x), jw)), c sbar(S(K(x), jw))) and its first-order model.

#include "hinf/bundle.hpp"
#include "hinf/controller.hpp"
#include "hinf/plant.hpp"

#include <string>
#include <vector>

namespace hinf {

// T = P11 + P12 K (I - P22 K)^-1 P21. Throws SingularMatrix carrying omega
// when the return difference is singular.
CMat lft_close(const PlantSample& p, const CMat& K);

// S = (I - P22 K)^-1. With P22 = -G this is the sensitivity (I + G K)^-1.
CMat sensitivity(const PlantSample& p, const CMat& K);

// dT/dx_i = P12 (I - K P22)^-1 dK_i (I - P22 K)^-1 P21.
std::vector<CMat> dT_dx(const PlantSample& p, const CMat& K, const std::vector<CMat>& dK);

// dS/dx_i = S P22 dK_i S.
std::vector<CMat> dS_dx(const PlantSample& p, const CMat& K, const std::vector<CMat>& dK);

enum class Channel { Performance, Barrier };

enum class NyquistMode { Off, Advisory, Enforce };

NyquistMode nyquist_mode_from_string(const std::string& s);
std::string to_string(NyquistMode m);

struct ObjectiveOptions {
    double c = 0.2;          // barrier weight; 0 disables the barrier channel
    double activeTol = 1e-8; // relative
    double epsBar = 1e-8;    // barrier above 1/epsBar marks x infeasible
    double peakRelTol = 0.05;
    std::size_t threads = 0; // 0 = all cores
    NyquistMode nyquist = NyquistMode::Advisory;
    std::size_t plantUnstablePoles = 0;
};

struct NyquistReport {
    bool evaluated = false;
    bool resolved = false;    // phase steps small enough to trust the count
    int closedLoopUnstable = 0;
    double winding = 0.0;     // total phase change over the Nyquist contour / 2 pi
    [[nodiscard]] bool stable() const { return !evaluated || !resolved || closedLoopUnstable == 0; }
};

struct FrequencyValue {
    double omega = 0.0;
    double perf = 0.0;    // sbar(T_wz)
    double barrier = 0.0; // c sbar(S)
};

// Both channels at one frequency; throws on an ill-posed loop.
FrequencyValue closed_loop_values(const PlantSample& p, const ControllerStructure& s, const Vec& x, double c);

struct Evaluation {
    double f = 0.0;
    bool feasible = true;
    std::string reason;
    std::vector<FrequencyValue> values;
    std::vector<std::size_t> active; // grid indices within activeTol of f
    std::size_t argmax = 0;
    Channel argmaxChannel = Channel::Performance;
    NyquistReport nyquist;
};

struct Peak {
    std::size_t index = 0;
    Channel channel = Channel::Performance;
    double value = 0.0;
};

// Grid-local maxima of each channel curve with value >= (1 - relTol) * peak,
// in descending value order.
std::vector<Peak> local_peaks(const std::vector<FrequencyValue>& values, double relTol);

class HinfObjective : public Oracle {
public:
    HinfObjective(FrdPlant plant, ControllerStructure structure, ObjectiveOptions options = {});

    std::size_t dim() const override { return structure_.param_count(); }

    // Full evaluation. Ill-posed loops and barrier blow-up give feasible =
    // false and f = +inf instead of throwing.
    Evaluation evaluate(const Vec& x) const;

    double value(const Vec& x) override;
    double model_value(const Vec& y, const Vec& x) override;
    Plane plane_at(const Vec& z, const Vec& x) override;
    std::vector<Plane> anticipated_planes(const Vec& x) override;

    std::vector<Peak> peaks(const Vec& x);

    [[nodiscard]] const FrdPlant& plant() const { return plant_; }
    [[nodiscard]] const ControllerStructure& structure() const { return structure_; }
    [[nodiscard]] const ObjectiveOptions& options() const { return options_; }

private:
    struct Node {
        CMat T, S;
        std::vector<CMat> dT, dS;
    };
    struct Branch {
        double value = 0.0;
        std::size_t index = 0;
        Channel channel = Channel::Performance;
    };
    void linearize(const Vec& x);
    CMat linear_at(std::size_t i, Channel ch, const Vec& d) const;
    Branch model_max(const Vec& y, std::vector<double>* perNode = nullptr);
    Plane branch_plane(std::size_t i, Channel ch, const Vec& z, const Vec& x) const;

    FrdPlant plant_;
    ControllerStructure structure_;
    ObjectiveOptions options_;
    Vec linX_;
    bool haveLin_ = false;
    std::vector<Node> nodes_;
};

// Winding-number stability check of det(I - P22 K) along the grid, extended
// below the first node with the plant frozen at its first sample.
NyquistReport nyquist_check(const FrdPlant& plant, const ControllerStructure& s, const Vec& x,
                            std::size_t plantUnstablePoles);

} // namespace hinf
