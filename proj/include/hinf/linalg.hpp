#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

namespace hinf {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

// Dense complex matrix, row-major.
class CMat {
public:
    CMat() = default;
    CMat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
    CMat(std::size_t rows, std::size_t cols, CVec data);

    static CMat identity(std::size_t n);
    static CMat diag(const CVec& d);

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] bool empty() const { return data_.empty(); }

    cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    cplx* row(std::size_t i) { return data_.data() + i * cols_; }
    const cplx* row(std::size_t i) const { return data_.data() + i * cols_; }

    [[nodiscard]] const CVec& data() const { return data_; }
    CVec& data() { return data_; }

    [[nodiscard]] CMat adjoint() const;
    [[nodiscard]] CMat block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
    void set_block(std::size_t r0, std::size_t c0, const CMat& b);

    [[nodiscard]] double norm_fro() const;
    [[nodiscard]] double norm_inf() const;
    [[nodiscard]] bool all_finite() const;

    CMat& operator+=(const CMat& b);
    CMat& operator-=(const CMat& b);
    CMat& operator*=(cplx s);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    CVec data_;
};

CMat operator+(CMat a, const CMat& b);
CMat operator-(CMat a, const CMat& b);
CMat operator*(const CMat& a, const CMat& b);
CMat operator*(cplx s, CMat a);
CVec operator*(const CMat& a, const CVec& v);

double norm2(const CVec& v);
cplx dot_conj(const CVec& a, const CVec& b); // a^H b

struct SvdTriplet {
    double sigma = 0.0;
    CVec u;
    CVec v;
};

struct EigPair {
    double lambda = 0.0;
    CVec w;
};

// All eigenpairs of a Hermitian matrix, eigenvalues in descending order.
// Throws InvalidInput when M is not Hermitian within 1e-12 relative.
std::vector<EigPair> hermitian_eig(const CMat& m);

// Largest eigenpair. A degenerate top eigenvalue resolves to the
// lexicographically largest phase-normalized basis vector.
EigPair hermitian_eig_max(const CMat& m);

SvdTriplet max_svd(const CMat& m);

// Solve A X = B by LU with partial pivoting. omega is attached to the
// SingularMatrix error when supplied.
CMat solve(const CMat& a, const CMat& b, std::optional<double> omega = std::nullopt);

cplx det(const CMat& a);

CMat inverse(const CMat& a, std::optional<double> omega = std::nullopt);

// Real dense solve for an n x n row-major system; returns nullopt when a
// pivot falls below rel_tol times the matrix norm.
std::optional<std::vector<double>> solve_real(std::vector<double> a, std::size_t n,
                                              std::vector<double> b, double rel_tol = 1e-14);

// Scale w so its first entry of magnitude above 1e-14 is real positive.
void phase_normalize(CVec& w);

} // namespace hinf
