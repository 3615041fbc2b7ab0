#pragma once

// Max-of-smooth-branches functions used to exercise the bundle solver.

#include "hinf/bundle.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hinf {

struct Branch {
    // Returns f_i(x) and writes its gradient to grad (sized n).
    std::function<double(const Vec& x, Vec& grad)> eval;
};

enum class BranchModel {
    Linearized, // phi(y, x) = max_i f_i(x) + grad f_i(x)^T (y - x)
    Convex      // phi(y, x) = f(y); valid for convex f only
};

class MaxFunctionOracle : public Oracle {
public:
    MaxFunctionOracle(std::size_t n, std::vector<Branch> branches, BranchModel model = BranchModel::Linearized);

    std::size_t dim() const override { return n_; }
    double value(const Vec& x) override;
    double model_value(const Vec& y, const Vec& x) override;
    Plane plane_at(const Vec& z, const Vec& x) override;

    // f(x) and one subgradient (gradient of the lowest-index active branch).
    double eval(const Vec& x, Vec& grad) const;

private:
    struct Lin {
        Vec values;
        std::vector<Vec> grads;
    };
    const Lin& linearize(const Vec& x);

    std::size_t n_;
    std::vector<Branch> branches_;
    BranchModel model_;
    Vec cachedX_;
    Lin cached_;
};

struct TestProblem {
    std::string name;
    std::size_t n = 0;
    Vec x0;
    std::optional<Vec> xStar;
    double fStar = 0.0;
    std::vector<Branch> branches;
};

TestProblem l1_norm_2d();          // |x1| + |x2| as a max of 4 affine branches
TestProblem max_quadratics_2d();   // max(x1^2 + x2^2, (2 - x1)^2 + x2^2)
TestProblem maxq(std::size_t n);   // max_i x_i^2 from all ones
TestProblem maxquad();             // five convex quadratics in R^10
TestProblem cb2();
TestProblem rosen_suzuki();

std::vector<TestProblem> solver_test_suite();

} // namespace hinf
