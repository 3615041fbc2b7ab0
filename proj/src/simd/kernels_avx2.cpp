#include "hinf/simd.hpp"

#include <immintrin.h>

#include <cmath>

namespace hinf::simd {
namespace {

void complex_abs_avx2(const std::complex<double>* z, double* out, std::size_t n) {
    const double* p = reinterpret_cast<const double*>(z);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a = _mm256_loadu_pd(p + 2 * i);
        const __m256d b = _mm256_loadu_pd(p + 2 * i + 4);
        // (|z0|^2, |z2|^2, |z1|^2, |z3|^2)
        const __m256d h = _mm256_hadd_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b));
        const __m256d ordered = _mm256_permute4x64_pd(h, 0xD8);
        _mm256_storeu_pd(out + i, _mm256_sqrt_pd(ordered));
    }
    for (; i < n; ++i) {
        const double re = z[i].real();
        const double im = z[i].imag();
        out[i] = std::sqrt(re * re + im * im);
    }
}

double max_abs_slope_avx2(const double* x, const double* y, std::size_t n) {
    if (n < 2) return 0.0;
    const std::size_t m = n - 1;
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d best = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y + i + 1), _mm256_loadu_pd(y + i));
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x + i + 1), _mm256_loadu_pd(x + i));
        const __m256d s = _mm256_andnot_pd(sign, _mm256_div_pd(dy, dx));
        best = _mm256_max_pd(s, best);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, best);
    double r = 0.0;
    for (double v : lanes) r = v > r ? v : r;
    for (; i < m; ++i) {
        const double s = std::fabs((y[i + 1] - y[i]) / (x[i + 1] - x[i]));
        r = s > r ? s : r;
    }
    return r;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
    double r = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

double affine_max_avx2(const double* offsets, const double* rows, std::size_t m, std::size_t n,
                       const double* d, std::size_t* argmax) {
    double best = -HUGE_VAL;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double v = offsets[i] + dot_avx2(rows + i * n, d, n);
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    if (argmax) *argmax = best_i;
    return best;
}

// (ur + i ui) * x for two interleaved complex numbers in x.
inline __m256d cmul(__m256d ur, __m256d ui, __m256d x) {
    const __m256d swapped = _mm256_permute_pd(x, 0x5);
    return _mm256_addsub_pd(_mm256_mul_pd(ur, x), _mm256_mul_pd(ui, swapped));
}

void rotate_pair_avx2(std::complex<double>* x, std::complex<double>* y, std::size_t n,
                      std::complex<double> u11, std::complex<double> u12, std::complex<double> u21,
                      std::complex<double> u22) {
    double* px = reinterpret_cast<double*>(x);
    double* py = reinterpret_cast<double*>(y);
    const __m256d a11r = _mm256_set1_pd(u11.real()), a11i = _mm256_set1_pd(u11.imag());
    const __m256d a12r = _mm256_set1_pd(u12.real()), a12i = _mm256_set1_pd(u12.imag());
    const __m256d a21r = _mm256_set1_pd(u21.real()), a21i = _mm256_set1_pd(u21.imag());
    const __m256d a22r = _mm256_set1_pd(u22.real()), a22i = _mm256_set1_pd(u22.imag());
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d vx = _mm256_loadu_pd(px + 2 * i);
        const __m256d vy = _mm256_loadu_pd(py + 2 * i);
        const __m256d nx = _mm256_add_pd(cmul(a11r, a11i, vx), cmul(a12r, a12i, vy));
        const __m256d ny = _mm256_add_pd(cmul(a21r, a21i, vx), cmul(a22r, a22i, vy));
        _mm256_storeu_pd(px + 2 * i, nx);
        _mm256_storeu_pd(py + 2 * i, ny);
    }
    if (i < n) scalar_kernels().rotate_pair(x + i, y + i, n - i, u11, u12, u21, u22);
}

} // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{Isa::Avx2,  complex_abs_avx2, max_abs_slope_avx2,
                                   dot_avx2,   affine_max_avx2,  rotate_pair_avx2};
    return table;
}

} // namespace hinf::simd
