#include <doctest.h>

#include "hinf/errors.hpp"
#include "hinf/simd.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace hinf;
using namespace hinf::simd;

namespace {

// Runs f for the scalar table and, when present, the AVX2 table.
template <class F>
void for_each_variant(F f) {
    f(scalar_kernels());
    if (const KernelTable* t = avx2_kernels()) f(*t);
}

} // namespace

TEST_CASE("scalar table is always available") {
    CHECK(available(Isa::Scalar));
    CHECK(scalar_kernels().isa == Isa::Scalar);
    CHECK(isa_name(Isa::Avx2) == "avx2");
}

TEST_CASE("select switches the active table") {
    const Isa before = active().isa;
    select(Isa::Scalar);
    CHECK(active().isa == Isa::Scalar);
    if (available(Isa::Avx2)) {
        select(Isa::Avx2);
        CHECK(active().isa == Isa::Avx2);
    } else {
        CHECK_THROWS_AS(select(Isa::Avx2), InvalidInput);
    }
    select(before);
}

TEST_CASE("kernels agree with the scalar reference") {
    const KernelTable& ref = scalar_kernels();
    std::mt19937_64 rng(21);
    std::normal_distribution<double> nd;
    for_each_variant([&](const KernelTable& k) {
        CAPTURE(isa_name(k.isa));
        for (std::size_t n = 0; n < 40; ++n) {
            std::vector<std::complex<double>> z(n);
            for (auto& v : z) v = {nd(rng), nd(rng)};
            std::vector<double> a(n), b(n), x(n), y(n);
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                a[i] = nd(rng);
                b[i] = nd(rng);
                acc += 0.1 + std::fabs(nd(rng));
                x[i] = acc;
                y[i] = nd(rng);
            }

            std::vector<double> o1(n), o2(n);
            ref.complex_abs(z.data(), o1.data(), n);
            k.complex_abs(z.data(), o2.data(), n);
            CHECK(o1 == o2);

            CHECK(ref.max_abs_slope(x.data(), y.data(), n) == k.max_abs_slope(x.data(), y.data(), n));

            const double d1 = ref.dot(a.data(), b.data(), n);
            const double d2 = k.dot(a.data(), b.data(), n);
            CHECK(std::fabs(d1 - d2) <= 1e-13 * (1.0 + double(n)));

            const std::size_t m = 1 + n % 7;
            std::vector<double> off(m), rows(m * n);
            for (auto& v : off) v = nd(rng);
            for (auto& v : rows) v = nd(rng);
            std::size_t i1 = 99, i2 = 99;
            const double v1 = ref.affine_max(off.data(), rows.data(), m, n, a.data(), &i1);
            const double v2 = k.affine_max(off.data(), rows.data(), m, n, a.data(), &i2);
            CHECK(std::fabs(v1 - v2) <= 1e-13 * (1.0 + double(n)));
            CHECK(i1 == i2);

            auto p1 = z, q1 = z, p2 = z, q2 = z;
            for (auto& v : q1) v *= std::complex<double>(0.3, -1.1);
            q2 = q1;
            const std::complex<double> u11(0.6, 0.1), u12(-0.7, 0.2), u21(0.7, 0.2), u22(0.6, -0.1);
            ref.rotate_pair(p1.data(), q1.data(), n, u11, u12, u21, u22);
            k.rotate_pair(p2.data(), q2.data(), n, u11, u12, u21, u22);
            CHECK(p1 == p2);
            CHECK(q1 == q2);
        }
    });
}

TEST_CASE("affine_max breaks ties toward the lowest index") {
    const std::vector<double> off{1.0, 2.0, 2.0};
    const std::vector<double> rows{0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    const std::vector<double> d{5.0, -3.0};
    for_each_variant([&](const KernelTable& k) {
        std::size_t arg = 9;
        CHECK(k.affine_max(off.data(), rows.data(), 3, 2, d.data(), &arg) == 2.0);
        CHECK(arg == 1);
    });
}

TEST_CASE("span helpers use the active table") {
    const std::vector<double> a{1.0, 2.0, 3.0};
    const std::vector<double> b{4.0, 5.0, 6.0};
    CHECK(dot(a, b) == 32.0);
    const std::vector<double> x{0.0, 1.0, 3.0};
    const std::vector<double> y{0.0, 2.0, 1.0};
    CHECK(max_abs_slope(x, y) == 2.0);
}
