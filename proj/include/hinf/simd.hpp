#pragma once

// Data-parallel inner loops used across the library. Every kernel has a
// scalar reference implementation; an AVX2 variant is compiled in on x86-64
// and picked at first use when the CPU supports it. Set HINF_SIMD=scalar in
// the environment to force the reference path.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace hinf::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
    Isa isa;

    // out[i] = |z[i]|
    void (*complex_abs)(const std::complex<double>* z, double* out, std::size_t n);

    // max_i |(y[i+1] - y[i]) / (x[i+1] - x[i])| over n samples; 0 when n < 2.
    double (*max_abs_slope)(const double* x, const double* y, std::size_t n);

    double (*dot)(const double* a, const double* b, std::size_t n);

    // max_i offsets[i] + rows[i, :] . d for an m x n row-major block. Ties go
    // to the lowest index, written to *argmax when non-null.
    double (*affine_max)(const double* offsets, const double* rows, std::size_t m, std::size_t n,
                         const double* d, std::size_t* argmax);

    // Simultaneous update x <- u11 x + u12 y, y <- u21 x + u22 y.
    void (*rotate_pair)(std::complex<double>* x, std::complex<double>* y, std::size_t n,
                        std::complex<double> u11, std::complex<double> u12, std::complex<double> u21,
                        std::complex<double> u22);
};

const KernelTable& scalar_kernels();

// nullptr when the variant is not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_kernels();

bool available(Isa isa);

// Kernels currently in use by the library.
const KernelTable& active();

// Switch the active table. Throws InvalidInput when the ISA is unavailable.
void select(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

inline double max_abs_slope(std::span<const double> x, std::span<const double> y) {
    return active().max_abs_slope(x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

} // namespace hinf::simd
