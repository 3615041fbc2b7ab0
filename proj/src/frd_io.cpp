#include "hinf/frd_io.hpp"

#include "hinf/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <tuple>

namespace hinf {

namespace {

constexpr std::array<const char*, 4> kBlocks{"P11", "P12", "P21", "P22"};

const CMat& block(const PlantSample& s, int b) {
    switch (b) {
    case 0: return s.P11;
    case 1: return s.P12;
    case 2: return s.P21;
    default: return s.P22;
    }
}

CMat& block(PlantSample& s, int b) { return const_cast<CMat&>(block(static_cast<const PlantSample&>(s), b)); }

double parse_double(const std::string& tok, std::size_t line) {
    double v = 0.0;
    const char* end = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || p != end) throw ParseError("bad number '" + tok + "'", line);
    return v;
}

std::size_t parse_index(const std::string& tok, std::size_t line) {
    std::size_t v = 0;
    const char* end = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || p != end) throw ParseError("bad index '" + tok + "'", line);
    return v;
}

struct Entry {
    double omega;
    int block;
    std::size_t row, col;
    double re, im;
    std::size_t line;
};

} // namespace

void frd_save(std::ostream& os, const FrdPlant& plant) {
    plant.validate();
    os << "omega_radps,block,row,col,re,im\n";
    char buf[160];
    for (const PlantSample& s : plant.samples)
        for (int b = 0; b < 4; ++b) {
            const CMat& m = block(s, b);
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (std::size_t j = 0; j < m.cols(); ++j) {
                    std::snprintf(buf, sizeof buf, "%.17g,%s,%zu,%zu,%.17g,%.17g\n", s.omega, kBlocks[b], i, j,
                                  m(i, j).real(), m(i, j).imag());
                    os << buf;
                }
        }
}

void frd_save(const std::string& path, const FrdPlant& plant) {
    std::ofstream os(path);
    if (!os) throw InvalidInput("cannot write " + path);
    frd_save(os, plant);
}

FrdPlant frd_parse(std::istream& is) {
    std::string line;
    std::size_t lineNo = 1;
    if (!std::getline(is, line)) throw ParseError("empty FRD file", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    double unit = 1.0;
    if (line == "freq_hz,block,row,col,re,im") unit = 2.0 * std::numbers::pi;
    else if (line != "omega_radps,block,row,col,re,im") throw ParseError("unexpected header '" + line + "'", 1);

    std::vector<Entry> entries;
    while (std::getline(is, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> tok;
        std::stringstream ss(line);
        std::string t;
        while (std::getline(ss, t, ',')) tok.push_back(t);
        if (tok.size() != 6) throw ParseError("expected 6 fields, got " + std::to_string(tok.size()), lineNo);
        Entry e{};
        e.line = lineNo;
        e.omega = parse_double(tok[0], lineNo) * unit;
        e.block = -1;
        for (int b = 0; b < 4; ++b)
            if (tok[1] == kBlocks[b]) e.block = b;
        if (e.block < 0) throw ParseError("unknown block '" + tok[1] + "'", lineNo);
        e.row = parse_index(tok[2], lineNo);
        e.col = parse_index(tok[3], lineNo);
        e.re = parse_double(tok[4], lineNo);
        e.im = parse_double(tok[5], lineNo);
        if (!std::isfinite(e.omega) || !std::isfinite(e.re) || !std::isfinite(e.im))
            throw ParseError("non-finite value", lineNo);
        if (!entries.empty()) {
            const Entry& p = entries.back();
            if (std::tie(e.omega, e.block, e.row, e.col) <= std::tie(p.omega, p.block, p.row, p.col))
                throw ParseError("rows not sorted by (omega, block, row, col)", lineNo);
        }
        entries.push_back(e);
    }
    if (entries.empty()) throw ParseError("no data rows", lineNo);

    // Block shapes from the first frequency.
    std::array<std::size_t, 4> rows{}, cols{};
    for (const Entry& e : entries) {
        if (e.omega != entries.front().omega) break;
        rows[e.block] = std::max(rows[e.block], e.row + 1);
        cols[e.block] = std::max(cols[e.block], e.col + 1);
    }
    FrdPlant plant;
    plant.dims = {rows[0], cols[0], rows[2], cols[1]};
    if (rows[1] != rows[0] || cols[2] != cols[0] || rows[3] != rows[2] || cols[3] != cols[1])
        throw InvalidInput("FRD: block dimensions are inconsistent");

    std::size_t k = 0;
    while (k < entries.size()) {
        PlantSample s;
        s.omega = entries[k].omega;
        for (int b = 0; b < 4; ++b) block(s, b) = CMat(rows[b], cols[b]);
        std::array<std::size_t, 4> count{};
        for (; k < entries.size() && entries[k].omega == s.omega; ++k) {
            const Entry& e = entries[k];
            if (e.row >= rows[e.block] || e.col >= cols[e.block])
                throw ParseError(std::string("index outside the ") + kBlocks[e.block] + " block", e.line);
            block(s, e.block)(e.row, e.col) = cplx(e.re, e.im);
            ++count[e.block];
        }
        for (int b = 0; b < 4; ++b)
            if (count[b] != rows[b] * cols[b])
                throw InvalidInput(std::string("FRD: block ") + kBlocks[b] + " incomplete at omega = " +
                                   std::to_string(s.omega));
        plant.samples.push_back(std::move(s));
    }
    plant.validate();
    return plant;
}

FrdPlant frd_load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot open " + path);
    return frd_parse(is);
}

} // namespace hinf
