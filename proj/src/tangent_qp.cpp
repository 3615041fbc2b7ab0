#include "hinf/tangent_qp.hpp"

#include "hinf/errors.hpp"
#include "hinf/linalg.hpp"
#include "hinf/simd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace hinf {

namespace {

constexpr double kReg = 1e-12;
constexpr std::size_t kMaxPivots = 10000;
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

enum class BoundState { Free, Lower, Upper };

struct Eqp {
    Vec d;
    double t = 0.0;
    Vec lambda; // aligned with the working plane list
};

// Primal point and plane multipliers; everything else is derived.
struct Raw {
    Vec d;
    Vec lambda; // one per plane
    std::vector<BoundState> bound;
    std::optional<Vec> box; // explicit box multipliers, when the method has them
};

struct Context {
    const TangentProblem& prob;
    std::size_t n;
    std::size_t m;
    double R;
    Vec Q; // regularized

    double plane_val(std::size_t i, const Vec& d) const { return prob.planes[i].a + simd::dot(prob.planes[i].g, d); }

    Vec qmul(const Vec& d) const {
        Vec r(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) r[i] = simd::dot({Q.data() + i * n, n}, d);
        return r;
    }
};

class ActiveSet {
public:
    ActiveSet(const Context& c, std::size_t budget) : c_(c), budget_(budget) {}

    // nullopt when the pivot budget runs out or the working set degenerates.
    std::optional<Raw> solve(std::size_t& pivots);

private:
    std::optional<Eqp> solve_eqp() const;
    Vec lagrangian_gradient(const Vec& d, const Vec& lam) const;
    bool in_work(std::size_t i) const { return std::find(work_.begin(), work_.end(), i) != work_.end(); }

    const Context& c_;
    std::size_t budget_;
    std::vector<std::size_t> work_;
    std::vector<BoundState> bound_;
};

std::optional<Eqp> ActiveSet::solve_eqp() const {
    const std::size_t n = c_.n;
    const double R = c_.R;
    std::vector<std::size_t> freev;
    for (std::size_t j = 0; j < n; ++j)
        if (bound_[j] == BoundState::Free) freev.push_back(j);
    const std::size_t nf = freev.size();
    const std::size_t nw = work_.size();
    const std::size_t dim = nf + 1 + nw;
    Vec K(dim * dim, 0.0);
    Vec rhs(dim, 0.0);
    Vec dfix(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        if (bound_[j] == BoundState::Lower) dfix[j] = -R;
        else if (bound_[j] == BoundState::Upper) dfix[j] = R;
    // (Q d)_F + G_F^T lambda = 0
    for (std::size_t r = 0; r < nf; ++r) {
        const std::size_t jr = freev[r];
        for (std::size_t col = 0; col < nf; ++col) K[r * dim + col] = c_.Q[jr * n + freev[col]];
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (bound_[j] != BoundState::Free) s += c_.Q[jr * n + j] * dfix[j];
        rhs[r] = -s;
        for (std::size_t w = 0; w < nw; ++w) K[r * dim + nf + 1 + w] = c_.prob.planes[work_[w]].g[jr];
    }
    // 1 - sum lambda = 0
    for (std::size_t w = 0; w < nw; ++w) K[nf * dim + nf + 1 + w] = -1.0;
    rhs[nf] = -1.0;
    // g_F^T d_F - t = -a - g_B^T d_B on every working plane
    for (std::size_t w = 0; w < nw; ++w) {
        const Plane& p = c_.prob.planes[work_[w]];
        const std::size_t r = nf + 1 + w;
        for (std::size_t col = 0; col < nf; ++col) K[r * dim + col] = p.g[freev[col]];
        K[r * dim + nf] = -1.0;
        double s = p.a;
        for (std::size_t j = 0; j < n; ++j)
            if (bound_[j] != BoundState::Free) s += p.g[j] * dfix[j];
        rhs[r] = -s;
    }
    auto sol = solve_real(std::move(K), dim, std::move(rhs), 1e-300);
    if (!sol) return std::nullopt;
    Eqp e;
    e.d = dfix;
    for (std::size_t col = 0; col < nf; ++col) e.d[freev[col]] = (*sol)[col];
    e.t = (*sol)[nf];
    e.lambda.assign(sol->begin() + static_cast<std::ptrdiff_t>(nf + 1), sol->end());
    return e;
}

Vec ActiveSet::lagrangian_gradient(const Vec& d, const Vec& lam) const {
    Vec gr = c_.qmul(d);
    for (std::size_t w = 0; w < work_.size(); ++w)
        for (std::size_t j = 0; j < c_.n; ++j) gr[j] += lam[w] * c_.prob.planes[work_[w]].g[j];
    return gr;
}

std::optional<Raw> ActiveSet::solve(std::size_t& pivots) {
    const std::size_t n = c_.n;
    const std::size_t m = c_.m;
    const double R = c_.R;
    const auto& planes = c_.prob.planes;

    // Identical slopes: only the highest offset (lowest index on ties) can be active.
    std::vector<bool> shadowed(m, false);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < m && !shadowed[i]; ++k) {
            if (k == i || planes[k].g != planes[i].g) continue;
            if (planes[k].a > planes[i].a || (planes[k].a == planes[i].a && k < i)) shadowed[i] = true;
        }

    std::size_t first = 0;
    for (std::size_t i = 1; i < m; ++i)
        if (planes[i].a > planes[first].a) first = i;
    Vec d(n, 0.0);
    double t = planes[first].a;
    work_ = {first};
    bound_.assign(n, BoundState::Free);

    // Constraints barred from re-entering until the iterate moves.
    std::vector<bool> excluded(m, false);
    std::vector<bool> boundExcluded(n, false);
    double gscale = 0.0;
    for (const Plane& pl : planes)
        for (double v : pl.g) gscale = std::max(gscale, std::fabs(v));

    std::size_t lastAdded = kNone; // plane i, or m + j for bound j
    Eqp eqp;
    for (;;) {
        if (++pivots > budget_) return std::nullopt;
        std::optional<Eqp> trial = solve_eqp();
        if (!trial) {
            if (lastAdded == kNone || (lastAdded < m && work_.size() <= 1)) return std::nullopt;
            if (lastAdded < m) {
                work_.erase(std::find(work_.begin(), work_.end(), lastAdded));
                excluded[lastAdded] = true;
            } else {
                bound_[lastAdded - m] = BoundState::Free;
                boundExcluded[lastAdded - m] = true;
            }
            lastAdded = kNone;
            continue;
        }
        eqp = std::move(*trial);
        Vec pd(n);
        for (std::size_t j = 0; j < n; ++j) pd[j] = eqp.d[j] - d[j];
        const double pt = eqp.t - t;

        double pnorm = 0.0;
        for (double v : pd) pnorm = std::max(pnorm, std::fabs(v));
        const double slopeTol = 1e-13 * (gscale * pnorm + std::fabs(pt));

        double alpha = 1.0;
        enum class Kind { None, Plane, Bound } kind = Kind::None;
        std::size_t block = 0;
        for (std::size_t i = 0; i < m; ++i) {
            if (shadowed[i] || excluded[i] || in_work(i)) continue;
            const double slope = simd::dot(planes[i].g, pd) - pt;
            if (slope <= slopeTol) continue;
            const double ai = std::max(0.0, t - c_.plane_val(i, d)) / slope;
            if (ai < alpha) {
                alpha = ai;
                kind = Kind::Plane;
                block = i;
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (bound_[j] != BoundState::Free || boundExcluded[j] || pd[j] == 0.0) continue;
            const double aj = pd[j] > 0.0 ? std::max(0.0, R - d[j]) / pd[j] : std::max(0.0, R + d[j]) / -pd[j];
            if (aj < alpha) {
                alpha = aj;
                kind = Kind::Bound;
                block = j;
            }
        }

        if (kind == Kind::None) {
            d = eqp.d;
            t = eqp.t;
            const Vec gr = lagrangian_gradient(d, eqp.lambda);
            double worst = -1e-12;
            bool dropPlane = false;
            std::size_t drop = 0;
            for (std::size_t w = 0; w < work_.size(); ++w)
                if (eqp.lambda[w] < worst) {
                    worst = eqp.lambda[w];
                    dropPlane = true;
                    drop = w;
                }
            for (std::size_t j = 0; j < n; ++j) {
                if (bound_[j] == BoundState::Free) continue;
                const double mu = bound_[j] == BoundState::Upper ? -gr[j] : gr[j];
                if (mu < worst) {
                    worst = mu;
                    dropPlane = false;
                    drop = j;
                }
            }
            lastAdded = kNone;
            if (worst >= -1e-12) {
                // Constraints skipped while degenerate may have been crossed; re-enter the worst one.
                double viol = 1e-12 * (1.0 + std::fabs(t));
                std::size_t vi = m;
                for (std::size_t i = 0; i < m; ++i) {
                    if (shadowed[i] || in_work(i)) continue;
                    const double cv = c_.plane_val(i, d) - t;
                    if (cv > viol) {
                        viol = cv;
                        vi = i;
                    }
                }
                if (vi == m) {
                    std::size_t vb = n;
                    double bviol = 1e-12 * R;
                    for (std::size_t j = 0; j < n; ++j)
                        if (std::fabs(d[j]) - R > bviol) {
                            bviol = std::fabs(d[j]) - R;
                            vb = j;
                        }
                    if (vb == n) break;
                    std::fill(excluded.begin(), excluded.end(), false);
                    std::fill(boundExcluded.begin(), boundExcluded.end(), false);
                    bound_[vb] = d[vb] > 0.0 ? BoundState::Upper : BoundState::Lower;
                    d[vb] = d[vb] > 0.0 ? R : -R;
                    lastAdded = m + vb;
                    continue;
                }
                std::fill(excluded.begin(), excluded.end(), false);
                std::fill(boundExcluded.begin(), boundExcluded.end(), false);
                work_.insert(std::upper_bound(work_.begin(), work_.end(), vi), vi);
                lastAdded = vi;
                continue;
            }
            if (dropPlane) {
                excluded[work_[drop]] = true;
                work_.erase(work_.begin() + static_cast<std::ptrdiff_t>(drop));
            } else {
                bound_[drop] = BoundState::Free;
                boundExcluded[drop] = true;
            }
            continue;
        }

        for (std::size_t j = 0; j < n; ++j) d[j] += alpha * pd[j];
        t += alpha * pt;
        if (alpha > 0.0) {
            std::fill(excluded.begin(), excluded.end(), false);
            std::fill(boundExcluded.begin(), boundExcluded.end(), false);
        }
        if (kind == Kind::Plane) {
            work_.insert(std::upper_bound(work_.begin(), work_.end(), block), block);
            lastAdded = block;
        } else {
            bound_[block] = pd[block] > 0.0 ? BoundState::Upper : BoundState::Lower;
            d[block] = pd[block] > 0.0 ? R : -R;
            lastAdded = m + block;
        }
    }

    Raw raw;
    raw.d = d;
    raw.lambda.assign(m, 0.0);
    for (std::size_t w = 0; w < work_.size(); ++w) raw.lambda[work_[w]] = std::max(0.0, eqp.lambda[w]);
    raw.bound = bound_;
    return raw;
}

// Mehrotra predictor-corrector on  min 1/2 d'Qd + t  s.t.  A (d, t) <= b.
// Rows: m planes, then n upper and n lower box bounds.
std::optional<Raw> interior_point(const Context& c, std::size_t& iterations) {
    const std::size_t n = c.n;
    const std::size_t m = c.m;
    const std::size_t nv = n + 1;
    const std::size_t nc = m + 2 * n;
    const auto& planes = c.prob.planes;

    auto row_dot = [&](std::size_t r, const Vec& z) {
        if (r < m) return simd::dot(planes[r].g, {z.data(), n}) - z[n];
        if (r < m + n) return z[r - m];
        return -z[r - m - n];
    };
    auto add_row = [&](std::size_t r, double s, Vec& out) {
        if (r < m) {
            for (std::size_t j = 0; j < n; ++j) out[j] += s * planes[r].g[j];
            out[n] -= s;
        } else if (r < m + n) {
            out[r - m] += s;
        } else {
            out[r - m - n] -= s;
        }
    };
    Vec b(nc);
    for (std::size_t i = 0; i < m; ++i) b[i] = -planes[i].a;
    for (std::size_t j = 0; j < 2 * n; ++j) b[m + j] = c.R;

    double scale = 1.0;
    for (const Plane& p : planes) {
        scale = std::max(scale, std::fabs(p.a));
        for (double v : p.g) scale = std::max(scale, std::fabs(v) * c.R);
    }

    Vec z(nv, 0.0);
    double amax = -std::numeric_limits<double>::infinity();
    for (const Plane& p : planes) amax = std::max(amax, p.a);
    z[n] = amax + 1.0;
    Vec s(nc), y(nc, 1.0);
    for (std::size_t r = 0; r < nc; ++r) s[r] = std::max(b[r] - row_dot(r, z), 1.0);

    for (std::size_t it = 0; it < 200; ++it) {
        ++iterations;
        // Residuals.
        Vec rd = c.qmul({z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n)});
        rd.push_back(1.0);
        for (std::size_t r = 0; r < nc; ++r) add_row(r, y[r], rd);
        Vec rp(nc);
        for (std::size_t r = 0; r < nc; ++r) rp[r] = row_dot(r, z) + s[r] - b[r];
        double mu = 0.0;
        for (std::size_t r = 0; r < nc; ++r) mu += s[r] * y[r];
        mu /= double(nc);
        double rdn = 0.0, rpn = 0.0;
        for (double v : rd) rdn = std::max(rdn, std::fabs(v));
        for (double v : rp) rpn = std::max(rpn, std::fabs(v));
            if (rdn <= 1e-11 * scale && rpn <= 1e-11 * scale && mu <= 1e-15 * scale) break;

        // Normal matrix H + A' D A.
        Vec N(nv * nv, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) N[i * nv + j] = c.Q[i * n + j];
        Vec arow(nv);
        for (std::size_t r = 0; r < nc; ++r) {
            std::fill(arow.begin(), arow.end(), 0.0);
            add_row(r, 1.0, arow);
            const double dr = y[r] / s[r];
            for (std::size_t i = 0; i < nv; ++i) {
                if (arow[i] == 0.0) continue;
                for (std::size_t j = 0; j < nv; ++j) N[i * nv + j] += dr * arow[i] * arow[j];
            }
        }

        auto direction = [&](const Vec& rc, Vec& dz, Vec& ds, Vec& dy) {
            // (H + A'DA) dz = -rd - A'(D rp - S^-1 rc)
            Vec rhs(nv);
            for (std::size_t i = 0; i < nv; ++i) rhs[i] = -rd[i];
            for (std::size_t r = 0; r < nc; ++r) add_row(r, -(y[r] / s[r] * rp[r] - rc[r] / s[r]), rhs);
            auto sol = solve_real(N, nv, rhs, 1e-300);
            if (!sol) return false;
            dz = *sol;
            dy.resize(nc);
            ds.resize(nc);
            for (std::size_t r = 0; r < nc; ++r) {
                dy[r] = y[r] / s[r] * (row_dot(r, dz) + rp[r]) - rc[r] / s[r];
                ds[r] = -(rc[r] + s[r] * dy[r]) / y[r];
            }
            return true;
        };
        auto max_step = [&](const Vec& ds, const Vec& dy) {
            double a = 1.0;
            for (std::size_t r = 0; r < nc; ++r) {
                if (ds[r] < 0.0) a = std::min(a, -s[r] / ds[r]);
                if (dy[r] < 0.0) a = std::min(a, -y[r] / dy[r]);
            }
            return a;
        };

        Vec rc(nc);
        for (std::size_t r = 0; r < nc; ++r) rc[r] = s[r] * y[r];
        Vec dz, ds, dy;
        // Ill-conditioned normal matrix this close to the solution: keep the iterate.
        if (!direction(rc, dz, ds, dy)) break;
        const double aAff = max_step(ds, dy);
        double muAff = 0.0;
        for (std::size_t r = 0; r < nc; ++r) muAff += (s[r] + aAff * ds[r]) * (y[r] + aAff * dy[r]);
        muAff /= double(nc);
        const double sigma = std::pow(muAff / mu, 3.0);
        for (std::size_t r = 0; r < nc; ++r) rc[r] = s[r] * y[r] + ds[r] * dy[r] - sigma * mu;
        if (!direction(rc, dz, ds, dy)) break;
        const double a = std::min(1.0, 0.995 * max_step(ds, dy));
        for (std::size_t i = 0; i < nv; ++i) z[i] += a * dz[i];
        for (std::size_t r = 0; r < nc; ++r) {
            s[r] = std::max(s[r] + a * ds[r], 1e-300);
            y[r] = std::max(y[r] + a * dy[r], 1e-300);
        }
    }

    Raw raw;
    raw.d.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n));
    for (double& v : raw.d) v = std::clamp(v, -c.R, c.R);
    raw.lambda.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(m));
    double lsum = 0.0;
    for (double v : raw.lambda) lsum += v;
    if (!(lsum > 0.0)) return std::nullopt;
    for (double& v : raw.lambda) v /= lsum;
    raw.bound.assign(n, BoundState::Free);
    raw.box = Vec(n);
    for (std::size_t j = 0; j < n; ++j) {
        (*raw.box)[j] = (y[m + j] - y[m + n + j]) / lsum;
        if ((*raw.box)[j] > 0.0) raw.bound[j] = BoundState::Upper;
        else if ((*raw.box)[j] < 0.0) raw.bound[j] = BoundState::Lower;
    }
    return raw;
}

TangentSolution finalize(const Context& c, const Raw& raw, std::size_t pivots) {
    const std::size_t n = c.n;
    const std::size_t m = c.m;
    TangentSolution sol;
    sol.pivots = pivots;
    const Vec& d = raw.d;
    sol.y.resize(n);
    for (std::size_t j = 0; j < n; ++j) sol.y[j] = c.prob.x[j] + d[j];
    sol.multipliers = raw.lambda;
    sol.aggregate.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        if (sol.multipliers[i] != 0.0)
            for (std::size_t j = 0; j < n; ++j) sol.aggregate[j] += sol.multipliers[i] * c.prob.planes[i].g[j];

    sol.t = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) sol.t = std::max(sol.t, c.plane_val(i, d));

    const Vec qd = c.qmul(d);
    sol.boxMultipliers.assign(n, 0.0);
    if (raw.box) {
        sol.boxMultipliers = *raw.box;
    } else {
        for (std::size_t j = 0; j < n; ++j)
            if (raw.bound[j] != BoundState::Free) sol.boxMultipliers[j] = -(sol.aggregate[j] + qd[j]);
    }

    KktResiduals& k = sol.kkt;
    double lsum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        lsum += sol.multipliers[i];
        const double cv = c.plane_val(i, d) - sol.t;
        k.complementarity = std::max(k.complementarity, std::fabs(sol.multipliers[i] * cv));
    }
    k.multiplier_sum = std::fabs(lsum - 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        k.stationarity = std::max(k.stationarity, std::fabs(sol.aggregate[j] + qd[j] + sol.boxMultipliers[j]));
        k.primal = std::max(k.primal, std::fabs(d[j]) - c.R);
        const double v = sol.boxMultipliers[j];
        // v_j >= 0 may only sit at d_j = R and v_j <= 0 at d_j = -R.
        const double gap = v >= 0.0 ? c.R - d[j] : c.R + d[j];
        k.complementarity = std::max(k.complementarity, std::fabs(v) * gap);
    }
    return sol;
}

double merit(const KktResiduals& k) {
    return std::max({k.stationarity, k.primal, k.complementarity, k.multiplier_sum});
}

bool acceptable(const KktResiduals& k, double scale) {
    const double tol = 1e-9 * scale;
    return k.stationarity <= tol && k.primal <= tol && k.complementarity <= tol && k.multiplier_sum <= 1e-9;
}

} // namespace

void validate(const TangentProblem& prob) {
    const std::size_t n = prob.x.size();
    if (n == 0) throw InvalidInput("tangent problem: empty center");
    if (prob.planes.empty()) throw InvalidInput("tangent problem: no planes");
    if (!(prob.R > 0.0) || !std::isfinite(prob.R)) throw InvalidInput("tangent problem: radius must be positive");
    if (prob.Q.size() != n * n) throw InvalidInput("tangent problem: Q has wrong size");
    for (double v : prob.x)
        if (!std::isfinite(v)) throw InvalidInput("tangent problem: non-finite center");
    for (const Plane& p : prob.planes) {
        if (p.g.size() != n) throw InvalidInput("tangent problem: plane dimension mismatch");
        if (!std::isfinite(p.a)) throw InvalidInput("tangent problem: non-finite plane offset");
        for (double v : p.g)
            if (!std::isfinite(v)) throw InvalidInput("tangent problem: non-finite subgradient");
    }
    double qn = 0.0;
    for (double v : prob.Q) {
        if (!std::isfinite(v)) throw InvalidInput("tangent problem: non-finite Q");
        qn = std::max(qn, std::fabs(v));
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(prob.Q[i * n + j] - prob.Q[j * n + i]) > 1e-12 * std::max(1.0, qn))
                throw InvalidInput("tangent problem: Q not symmetric");
}

double polyhedral_value(const std::vector<Plane>& planes, const Vec& x, const Vec& y) {
    const std::size_t n = x.size();
    Vec d(n);
    for (std::size_t j = 0; j < n; ++j) d[j] = y[j] - x[j];
    double best = -std::numeric_limits<double>::infinity();
    for (const Plane& p : planes) best = std::max(best, p.a + simd::dot(p.g, d));
    return best;
}

TangentSolution solve_tangent(const TangentProblem& prob) {
    validate(prob);
    Context c{prob, prob.x.size(), prob.planes.size(), prob.R, prob.Q};
    for (std::size_t j = 0; j < c.n; ++j) c.Q[j * c.n + j] += kReg;

    double scale = 1.0;
    for (const Plane& p : prob.planes)
        for (double v : p.g) scale = std::max(scale, std::fabs(v));

    std::size_t pivots = 0;
    ActiveSet as(c, std::min<std::size_t>(kMaxPivots, 50 * (c.m + c.n) + 100));
    std::optional<TangentSolution> best;
    if (std::optional<Raw> raw = as.solve(pivots)) {
        TangentSolution sol = finalize(c, *raw, pivots);
        sol.method = "active-set";
        if (acceptable(sol.kkt, scale)) return sol;
        best = std::move(sol);
    }
    // Degenerate or ill-conditioned working sets: fall back to an interior-point solve.
    std::size_t ipIter = 0;
    std::optional<Raw> raw = interior_point(c, ipIter);
    pivots += ipIter;
    if (raw) {
        TangentSolution sol = finalize(c, *raw, pivots);
        sol.method = "interior-point";
        if (acceptable(sol.kkt, scale) || !best || merit(sol.kkt) < merit(best->kkt)) best = std::move(sol);
    }
    if (!best || pivots > kMaxPivots || merit(best->kkt) > 1e-6 * scale) {
        std::ostringstream os;
        os << "tangent QP: no acceptable solution after " << pivots << " pivots";
        if (best) os << " (t = " << best->t << ", stationarity = " << best->kkt.stationarity << ")";
        throw NumericalFailure(os.str());
    }
    best->pivots = pivots;
    return *best;
}

Plane aggregate_plane(const TangentProblem& prob, const TangentSolution& sol) {
    const std::size_t n = prob.x.size();
    double gd = 0.0;
    for (std::size_t j = 0; j < n; ++j) gd += sol.aggregate[j] * (sol.y[j] - prob.x[j]);
    return Plane{sol.t - gd, sol.aggregate};
}

} // namespace hinf
