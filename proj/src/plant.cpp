#include "hinf/plant.hpp"

#include "hinf/errors.hpp"
#include "hinf/parallel.hpp"

#include <algorithm>
#include <memory>

namespace hinf {

void check_sample(const PlantSample& s, const PlantDims& d) {
    auto shape = [&](const CMat& m, std::size_t r, std::size_t c, const char* name) {
        if (m.rows() != r || m.cols() != c)
            throw InvalidInput(std::string("plant: block ") + name + " has wrong dimensions at omega = " +
                               std::to_string(s.omega));
        if (!m.all_finite())
            throw InvalidInput(std::string("plant: block ") + name + " not finite at omega = " +
                               std::to_string(s.omega));
    };
    shape(s.P11, d.nz, d.nw, "P11");
    shape(s.P12, d.nz, d.nu, "P12");
    shape(s.P21, d.ny, d.nw, "P21");
    shape(s.P22, d.ny, d.nu, "P22");
}

void FrdPlant::validate() const {
    if (samples.empty()) throw InvalidInput("plant: no samples");
    if (dims.ny == 0 || dims.nu == 0 || dims.nz == 0 || dims.nw == 0)
        throw InvalidInput("plant: dimensions must be positive");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i].omega >= 0.0)) throw InvalidInput("plant: negative frequency");
        if (i && !(samples[i].omega > samples[i - 1].omega))
            throw InvalidInput("plant: grid not strictly ascending at omega = " + std::to_string(samples[i].omega));
        check_sample(samples[i], dims);
    }
}

std::vector<double> FrdPlant::grid() const {
    std::vector<double> g;
    g.reserve(samples.size());
    for (const auto& s : samples) g.push_back(s.omega);
    return g;
}

PlantSource source_from_frd(FrdPlant plant) {
    plant.validate();
    auto shared = std::make_shared<const FrdPlant>(std::move(plant));
    PlantSource src;
    src.dims = shared->dims;
    src.nodes = shared->grid();
    src.omegaMin = src.nodes->front();
    src.omegaMax = src.nodes->back();
    src.at = [shared](double omega) {
        const auto& s = shared->samples;
        auto it = std::lower_bound(s.begin(), s.end(), omega,
                                   [](const PlantSample& p, double w) { return p.omega < w; });
        if (it == s.end() || it->omega != omega)
            throw InvalidInput("plant: tabulated data has no sample at omega = " + std::to_string(omega));
        return *it;
    };
    return src;
}

FrdPlant sample_plant(const PlantSource& src, const std::vector<double>& grid, std::size_t threads) {
    FrdPlant out;
    out.dims = src.dims;
    out.samples.resize(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        out.samples[i] = src.at(grid[i]);
        out.samples[i].omega = grid[i];
    });
    out.validate();
    return out;
}

} // namespace hinf
