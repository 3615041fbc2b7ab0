#include "hinf/linalg.hpp"

#include "hinf/errors.hpp"
#include "hinf/simd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hinf {

CMat::CMat(std::size_t rows, std::size_t cols, CVec data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) throw InvalidInput("CMat: data size does not match shape");
}

CMat CMat::identity(std::size_t n) {
    CMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

CMat CMat::diag(const CVec& d) {
    CMat m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

CMat CMat::adjoint() const {
    CMat r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) r(j, i) = std::conj((*this)(i, j));
    return r;
}

CMat CMat::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) throw InvalidInput("CMat::block out of range");
    CMat r(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t j = 0; j < nc; ++j) r(i, j) = (*this)(r0 + i, c0 + j);
    return r;
}

void CMat::set_block(std::size_t r0, std::size_t c0, const CMat& b) {
    if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_)
        throw InvalidInput("CMat::set_block out of range");
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

double CMat::norm_fro() const {
    double s = 0.0;
    for (const cplx& z : data_) s += std::norm(z);
    return std::sqrt(s);
}

double CMat::norm_inf() const {
    double best = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
        best = std::max(best, s);
    }
    return best;
}

bool CMat::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const cplx& z) {
        return std::isfinite(z.real()) && std::isfinite(z.imag());
    });
}

CMat& CMat::operator+=(const CMat& b) {
    if (rows_ != b.rows_ || cols_ != b.cols_) throw InvalidInput("CMat +: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += b.data_[i];
    return *this;
}

CMat& CMat::operator-=(const CMat& b) {
    if (rows_ != b.rows_ || cols_ != b.cols_) throw InvalidInput("CMat -: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= b.data_[i];
    return *this;
}

CMat& CMat::operator*=(cplx s) {
    for (cplx& z : data_) z *= s;
    return *this;
}

CMat operator+(CMat a, const CMat& b) { return a += b; }
CMat operator-(CMat a, const CMat& b) { return a -= b; }
CMat operator*(cplx s, CMat a) { return a *= s; }

CMat operator*(const CMat& a, const CMat& b) {
    if (a.cols() != b.rows()) throw InvalidInput("CMat *: shape mismatch");
    CMat r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx{}) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
        }
    return r;
}

CVec operator*(const CMat& a, const CVec& v) {
    if (a.cols() != v.size()) throw InvalidInput("CMat * vector: shape mismatch");
    CVec r(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        cplx s{};
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * v[j];
        r[i] = s;
    }
    return r;
}

double norm2(const CVec& v) {
    double s = 0.0;
    for (const cplx& z : v) s += std::norm(z);
    return std::sqrt(s);
}

cplx dot_conj(const CVec& a, const CVec& b) {
    cplx s{};
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

void phase_normalize(CVec& w) {
    for (const cplx& z : w) {
        const double r = std::abs(z);
        if (r > 1e-14) {
            const cplx ph = std::conj(z) / r;
            for (cplx& e : w) e *= ph;
            return;
        }
    }
}

namespace {

double off_diag_norm(const CMat& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
}

void check_hermitian(const CMat& m) {
    if (m.rows() != m.cols() || m.empty()) throw InvalidInput("hermitian_eig: matrix must be square and nonempty");
    if (!m.all_finite()) throw InvalidInput("hermitian_eig: non-finite entry");
    double asym = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i; j < m.cols(); ++j) asym += std::norm(m(i, j) - std::conj(m(j, i)));
    if (std::sqrt(asym) > 1e-12 * m.norm_fro()) throw InvalidInput("hermitian_eig: matrix is not Hermitian");
}

bool lex_greater(const CVec& a, const CVec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].real() != b[i].real()) return a[i].real() > b[i].real();
        if (a[i].imag() != b[i].imag()) return a[i].imag() > b[i].imag();
    }
    return false;
}

} // namespace

std::vector<EigPair> hermitian_eig(const CMat& m) {
    check_hermitian(m);
    const std::size_t n = m.rows();
    const auto& k = simd::active();

    // Work on the Hermitian part so the diagonal is exactly real.
    CMat a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));
    // Rows of vt are the eigenvectors.
    CMat vt = CMat::identity(n);

    const double tol = std::max(1e-12, 1e-15 * a.norm_fro());
    int sweep = 0;
    while (off_diag_norm(a) > tol) {
        if (++sweep > 100) throw NumericalFailure("hermitian_eig: Jacobi sweeps did not converge");
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double r = std::abs(a(p, q));
                if (r < 1e-300) continue;
                const cplx ph = a(p, q) / r; // e^{i alpha}
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (aqq - app) / (2.0 * r);
                const double t = (tau >= 0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                // A <- U^H A U with U = diag(1, e^{-i alpha}) [[c, s], [-s, c]] on (p, q).
                k.rotate_pair(a.row(p), a.row(q), n, c, -s * ph, s, c * ph);
                const cplx phc = std::conj(ph);
                for (std::size_t i = 0; i < n; ++i) {
                    const cplx xp = a(i, p), xq = a(i, q);
                    a(i, p) = c * xp - s * phc * xq;
                    a(i, q) = s * xp + c * phc * xq;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = app - t * r;
                a(q, q) = aqq + t * r;
                k.rotate_pair(vt.row(p), vt.row(q), n, c, -s * phc, s, c * phc);
            }
    }

    std::vector<EigPair> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].lambda = a(i, i).real();
        out[i].w.assign(vt.row(i), vt.row(i) + n);
        const double nw = norm2(out[i].w);
        for (cplx& z : out[i].w) z /= nw;
        phase_normalize(out[i].w);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const EigPair& x, const EigPair& y) { return x.lambda > y.lambda; });
    return out;
}

EigPair hermitian_eig_max(const CMat& m) {
    std::vector<EigPair> all = hermitian_eig(m);
    const double tie = 1e-10 * std::max(1.0, m.norm_fro());
    std::size_t best = 0;
    for (std::size_t i = 1; i < all.size() && all[0].lambda - all[i].lambda <= tie; ++i)
        if (lex_greater(all[i].w, all[best].w)) best = i;
    EigPair r = all[best];
    r.lambda = all[0].lambda;
    return r;
}

SvdTriplet max_svd(const CMat& m) {
    if (m.empty()) throw InvalidInput("max_svd: empty matrix");
    if (!m.all_finite()) throw InvalidInput("max_svd: non-finite entry");
    SvdTriplet out;
    const CMat g = m.adjoint() * m;
    if (g.norm_fro() == 0.0) {
        out.v.assign(m.cols(), cplx{});
        out.v[0] = 1.0;
        out.u.assign(m.rows(), cplx{});
        out.u[0] = 1.0;
        return out;
    }
    EigPair top = hermitian_eig_max(g);
    out.v = std::move(top.w);
    out.u = m * out.v;
    out.sigma = norm2(out.u);
    if (out.sigma > 0.0) {
        for (cplx& z : out.u) z /= out.sigma;
    } else {
        out.u.assign(m.rows(), cplx{});
        out.u[0] = 1.0;
    }
    return out;
}

CMat solve(const CMat& a, const CMat& b, std::optional<double> omega) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw InvalidInput("solve: matrix not square");
    if (b.rows() != n) throw InvalidInput("solve: right-hand side row mismatch");
    const double anorm = a.norm_inf();
    const double tiny = 1e-14 * anorm;
    CMat lu = a;
    CMat x = b;
    const std::size_t m = b.cols();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(lu(col, col));
        for (std::size_t i = col + 1; i < n; ++i) {
            const double v = std::abs(lu(i, col));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (!(best > tiny) || anorm == 0.0) throw SingularMatrix("solve: singular matrix", omega);
        if (piv != col) {
            std::swap_ranges(lu.row(col), lu.row(col) + n, lu.row(piv));
            std::swap_ranges(x.row(col), x.row(col) + m, x.row(piv));
        }
        const cplx d = lu(col, col);
        for (std::size_t i = col + 1; i < n; ++i) {
            const cplx f = lu(i, col) / d;
            if (f == cplx{}) continue;
            lu(i, col) = 0.0;
            for (std::size_t j = col + 1; j < n; ++j) lu(i, j) -= f * lu(col, j);
            for (std::size_t j = 0; j < m; ++j) x(i, j) -= f * x(col, j);
        }
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t j = 0; j < m; ++j) {
            cplx s = x(ii, j);
            for (std::size_t k = ii + 1; k < n; ++k) s -= lu(ii, k) * x(k, j);
            x(ii, j) = s / lu(ii, ii);
        }
    }
    return x;
}

cplx det(const CMat& a) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw InvalidInput("det: matrix not square");
    CMat lu = a;
    cplx d = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t i = col + 1; i < n; ++i)
            if (std::abs(lu(i, col)) > std::abs(lu(piv, col))) piv = i;
        if (lu(piv, col) == cplx{}) return 0.0;
        if (piv != col) {
            std::swap_ranges(lu.row(col), lu.row(col) + n, lu.row(piv));
            d = -d;
        }
        d *= lu(col, col);
        for (std::size_t i = col + 1; i < n; ++i) {
            const cplx f = lu(i, col) / lu(col, col);
            for (std::size_t j = col + 1; j < n; ++j) lu(i, j) -= f * lu(col, j);
        }
    }
    return d;
}

CMat inverse(const CMat& a, std::optional<double> omega) {
    return solve(a, CMat::identity(a.rows()), omega);
}

std::optional<std::vector<double>> solve_real(std::vector<double> a, std::size_t n,
                                              std::vector<double> b, double rel_tol) {
    double anorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += std::fabs(a[i * n + j]);
        anorm = std::max(anorm, s);
    }
    const double tiny = rel_tol * anorm;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::fabs(a[col * n + col]);
        for (std::size_t i = col + 1; i < n; ++i)
            if (std::fabs(a[i * n + col]) > best) {
                best = std::fabs(a[i * n + col]);
                piv = i;
            }
        if (!(best > tiny)) return std::nullopt;
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[piv * n + j]);
            std::swap(b[col], b[piv]);
        }
        for (std::size_t i = col + 1; i < n; ++i) {
            const double f = a[i * n + col] / a[col * n + col];
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a[i * n + j] -= f * a[col * n + j];
            b[i] -= f * b[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    return b;
}

} // namespace hinf
