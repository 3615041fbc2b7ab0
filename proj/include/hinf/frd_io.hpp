#pragma once

// FRD CSV: header `omega_radps,block,row,col,re,im` (or `freq_hz,...`, which
// is converted to rad/s on load), one row per matrix entry, sorted by
// (omega, block, row, col), blocks P11, P12, P21, P22.

#include "hinf/plant.hpp"

#include <iosfwd>
#include <string>

namespace hinf {

void frd_save(std::ostream& os, const FrdPlant& plant);
void frd_save(const std::string& path, const FrdPlant& plant);

FrdPlant frd_parse(std::istream& is);
FrdPlant frd_load(const std::string& path);

} // namespace hinf
