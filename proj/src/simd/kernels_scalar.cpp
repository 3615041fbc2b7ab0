#include "hinf/simd.hpp"

#include <cmath>

namespace hinf::simd {
namespace {

void complex_abs_ref(const std::complex<double>* z, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double re = z[i].real();
        const double im = z[i].imag();
        out[i] = std::sqrt(re * re + im * im);
    }
}

double max_abs_slope_ref(const double* x, const double* y, std::size_t n) {
    double best = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double s = std::fabs((y[i + 1] - y[i]) / (x[i + 1] - x[i]));
        best = s > best ? s : best;
    }
    return best;
}

double dot_ref(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double affine_max_ref(const double* offsets, const double* rows, std::size_t m, std::size_t n,
                      const double* d, std::size_t* argmax) {
    double best = -HUGE_VAL;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double v = offsets[i] + dot_ref(rows + i * n, d, n);
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    if (argmax) *argmax = best_i;
    return best;
}

inline void cmul_add(double ar, double ai, double xr, double xi, double br, double bi, double yr,
                     double yi, double& outr, double& outi) {
    outr = (ar * xr - ai * xi) + (br * yr - bi * yi);
    outi = (ar * xi + ai * xr) + (br * yi + bi * yr);
}

void rotate_pair_ref(std::complex<double>* x, std::complex<double>* y, std::size_t n,
                     std::complex<double> u11, std::complex<double> u12, std::complex<double> u21,
                     std::complex<double> u22) {
    for (std::size_t i = 0; i < n; ++i) {
        const double xr = x[i].real(), xi = x[i].imag();
        const double yr = y[i].real(), yi = y[i].imag();
        double nxr, nxi, nyr, nyi;
        cmul_add(u11.real(), u11.imag(), xr, xi, u12.real(), u12.imag(), yr, yi, nxr, nxi);
        cmul_add(u21.real(), u21.imag(), xr, xi, u22.real(), u22.imag(), yr, yi, nyr, nyi);
        x[i] = {nxr, nxi};
        y[i] = {nyr, nyi};
    }
}

} // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{Isa::Scalar,   complex_abs_ref, max_abs_slope_ref,
                                   dot_ref,       affine_max_ref,  rotate_pair_ref};
    return table;
}

} // namespace hinf::simd
