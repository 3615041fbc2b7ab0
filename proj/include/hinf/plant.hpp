#pragma once

// Generalized plant data P = [P11 P12; P21 P22] sampled on the imaginary axis.

#include "hinf/linalg.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace hinf {

struct PlantDims {
    std::size_t nz = 0, nw = 0, ny = 0, nu = 0;
    bool operator==(const PlantDims&) const = default;
};

struct PlantSample {
    double omega = 0.0;
    CMat P11, P12, P21, P22;
};

void check_sample(const PlantSample& s, const PlantDims& d);

struct FrdPlant {
    PlantDims dims;
    std::vector<PlantSample> samples;

    // Grid strictly ascending and nonnegative, block sizes constant, finite.
    void validate() const;
    [[nodiscard]] std::vector<double> grid() const;
};

// Frequency-response source. Analytic plants evaluate anywhere in
// [omegaMin, omegaMax]; tabulated plants only at their nodes.
struct PlantSource {
    PlantDims dims;
    double omegaMin = 0.0;
    double omegaMax = 0.0;
    std::optional<std::vector<double>> nodes;
    std::function<PlantSample(double omega)> at;
};

PlantSource source_from_frd(FrdPlant plant);

// Sample a source on a grid; evaluations run on up to `threads` threads.
FrdPlant sample_plant(const PlantSource& src, const std::vector<double>& grid, std::size_t threads = 0);

} // namespace hinf
