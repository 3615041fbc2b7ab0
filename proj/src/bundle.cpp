#include "hinf/bundle.hpp"

#include "hinf/errors.hpp"
#include "hinf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace hinf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm_inf(const Vec& v) {
    double s = 0.0;
    for (double e : v) s = std::max(s, std::fabs(e));
    return s;
}

double norm_2(const Vec& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
}

double quad(const Vec& Q, const Vec& d) {
    const std::size_t n = d.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        for (std::size_t j = 0; j < n; ++j) r += Q[i * n + j] * d[j];
        s += d[i] * r;
    }
    return 0.5 * s;
}

Vec diff(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

std::vector<Plane> plain(const WorkingModel& m) {
    std::vector<Plane> p;
    p.reserve(m.planes.size());
    for (const ModelPlane& mp : m.planes) p.push_back(mp.plane);
    return p;
}

// Eviction rank: lower survives longer.
int eviction_class(PlaneTag t) {
    switch (t) {
    case PlaneTag::Exactness: return 0;
    case PlaneTag::Cut:
    case PlaneTag::Aggregate: return 1;
    case PlaneTag::Recycled: return 2;
    case PlaneTag::Anticipated: return 3;
    }
    return 3;
}

// Keep exactness planes and `pinned` entries, then fill by class and recency.
void cap_planes(std::vector<ModelPlane>& planes, std::size_t N, const std::vector<std::uint64_t>& pinned) {
    if (planes.size() <= N) return;
    std::vector<ModelPlane> keep;
    std::vector<ModelPlane> rest;
    for (ModelPlane& p : planes) {
        const bool pin = p.tag == PlaneTag::Exactness ||
                         std::find(pinned.begin(), pinned.end(), p.seq) != pinned.end();
        (pin ? keep : rest).push_back(std::move(p));
    }
    std::stable_sort(rest.begin(), rest.end(), [](const ModelPlane& a, const ModelPlane& b) {
        const int ca = eviction_class(a.tag), cb = eviction_class(b.tag);
        if (ca != cb) return ca < cb;
        return a.seq > b.seq;
    });
    for (ModelPlane& p : rest) {
        if (keep.size() >= N) break;
        keep.push_back(std::move(p));
    }
    std::stable_sort(keep.begin(), keep.end(),
                     [](const ModelPlane& a, const ModelPlane& b) { return a.seq < b.seq; });
    planes = std::move(keep);
}

Vec project_q(const Vec& Q, std::size_t n, double lo, double hi) {
    CMat m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = 0.5 * (Q[i * n + j] + Q[j * n + i]);
    const std::vector<EigPair> eig = hermitian_eig(m);
    Vec out(n * n, 0.0);
    for (const EigPair& e : eig) {
        const double lam = std::clamp(e.lambda, lo, hi);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                out[i * n + j] += lam * (e.w[i] * std::conj(e.w[j])).real();
    }
    return out;
}

} // namespace

void validate(const SolverParams& p) {
    if (!(p.gamma > 0.0 && p.gamma < p.gammaTilde && p.gammaTilde < 1.0))
        throw InvalidInput("solver params: need 0 < gamma < gammaTilde < 1");
    if (!(p.gamma < p.GammaCap && p.GammaCap <= 1.0))
        throw InvalidInput("solver params: need gamma < GammaCap <= 1");
    if (!(p.theta > 0.0 && p.theta < 1.0)) throw InvalidInput("solver params: need 0 < theta < 1");
    if (!(p.M >= 1.0)) throw InvalidInput("solver params: need M >= 1");
    if (!(p.q > 0.0)) throw InvalidInput("solver params: need q > 0");
    if (!(p.epsStop > 0.0)) throw InvalidInput("solver params: need epsStop > 0");
    if (p.maxPlanes < 3) throw InvalidInput("solver params: need maxPlanes >= 3");
    if (p.maxOuter == 0 || p.maxInner == 0) throw InvalidInput("solver params: iteration caps must be positive");
    if (!(p.RSharp1 > 0.0)) throw InvalidInput("solver params: need RSharp1 > 0");
    if (!(p.Qeps > 0.0 && p.Qeps <= p.q)) throw InvalidInput("solver params: need 0 < Qeps <= q");
}

std::string to_string(StepType s) {
    switch (s) {
    case StepType::Serious: return "serious";
    case StepType::Null: return "null";
    case StepType::FallbackSerious: return "fallback-serious";
    case StepType::FallbackNull: return "fallback-null";
    case StepType::Stop: return "stop";
    }
    return "unknown";
}

std::string to_string(PlaneTag t) {
    switch (t) {
    case PlaneTag::Exactness: return "exactness";
    case PlaneTag::Cut: return "cut";
    case PlaneTag::Aggregate: return "aggregate";
    case PlaneTag::Anticipated: return "anticipated";
    case PlaneTag::Recycled: return "recycled";
    }
    return "unknown";
}

double acceptance_ratio(double fx, double fz, double modelAtZ) {
    const double den = fx - modelAtZ;
    if (!(den > 0.0)) throw InvariantViolation("acceptance ratio: model predicts no decrease");
    if (fz == kInf) return -kInf;
    return (fx - fz) / den;
}

double secondary_ratio(double fx, double phiNextAtZ, double modelAtZ) {
    const double den = fx - modelAtZ;
    if (!(den > 0.0)) throw InvariantViolation("secondary ratio: model predicts no decrease");
    return (fx - phiNextAtZ) / den;
}

double memory_radius_update(double rho, double Rk, double GammaCap) {
    return rho >= GammaCap ? 2.0 * Rk : Rk;
}

WorkingModel taper_model(WorkingModel model, ModelPlane newCut, ModelPlane aggregate, std::size_t N) {
    const std::uint64_t cutSeq = newCut.seq;
    model.planes.push_back(std::move(newCut));
    if (model.planes.size() <= N) return model;
    const std::uint64_t aggSeq = aggregate.seq;
    model.planes.push_back(std::move(aggregate));
    cap_planes(model.planes, N, {cutSeq, aggSeq});
    return model;
}

double second_order_value(const WorkingModel& model, const Vec& x, const Vec& y) {
    return polyhedral_value(plain(model), x, y) + quad(model.Q, diff(y, x));
}

TrialChoice trial_step(const Vec& y, const Vec& x, double fx, const WorkingModel& model,
                       const SolverParams& params, const Proposer& proposer) {
    if (!proposer) return {y, false};
    const std::optional<Vec> z = proposer(y, x);
    if (!z || z->size() != x.size()) return {y, false};
    for (double v : *z)
        if (!std::isfinite(v)) return {y, false};
    const double ry = norm_inf(diff(y, x));
    if (norm_inf(diff(*z, x)) > params.M * ry * (1.0 + 1e-12)) return {y, false};
    const double decY = fx - second_order_value(model, x, y);
    const double decZ = fx - second_order_value(model, x, *z);
    if (decZ < params.theta * decY) return {y, false};
    return {*z, *z != y};
}

RunResult run(Oracle& oracle, const Vec& x0, const SolverParams& params, const Proposer& proposer) {
    validate(params);
    const std::size_t n = oracle.dim();
    if (x0.size() != n) throw InvalidInput("run: x0 has wrong dimension");

    RunResult res;
    std::uint64_t seq = 0;
    std::mt19937_64 rng(params.seed);

    auto value = [&](const Vec& p) {
        if (params.maxValueCalls && res.valueCalls >= params.maxValueCalls)
            throw BudgetExceeded("run: value-call budget exhausted");
        ++res.valueCalls;
        return oracle.value(p);
    };
    auto cut = [&](const Vec& z, const Vec& x) {
        ++res.planeCalls;
        return oracle.plane_at(z, x);
    };

    Vec x = x0;
    double fx = 0.0;
    try {
        fx = value(x);
    } catch (const Error& e) {
        res.x = x;
        res.f = kInf;
        res.status = "oracle-failure";
        res.failure = e.what();
        return res;
    }
    if (!std::isfinite(fx)) throw InvalidInput("run: f(x0) is not finite");

    Vec Q(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) Q[i * n + i] = params.Qeps;
    double RSharp = params.RSharp1;
    std::vector<Vec> recycleBases;

    auto finish = [&](const std::string& status) {
        res.x = x;
        res.f = fx;
        res.status = status;
        return res;
    };

    for (std::size_t outer = 1; outer <= params.maxOuter; ++outer) {
        res.outerIterations = outer;
        WorkingModel model;
        model.Q = Q;
        Vec gExact;
        Vec xNext;
        double fNext = 0.0;
        double rhoSerious = 0.0;
        double Rk = RSharp;
        bool serious = false;

        try {
            ++res.planeCalls;
            Plane ex = oracle.exactness_plane(x);
            gExact = ex.g;
            model.planes.push_back({std::move(ex), PlaneTag::Exactness, seq++, x});
            for (const Vec& b : recycleBases) model.planes.push_back({cut(b, x), PlaneTag::Recycled, seq++, b});
            for (Plane& p : oracle.anticipated_planes(x))
                model.planes.push_back({std::move(p), PlaneTag::Anticipated, seq++, std::nullopt});
            cap_planes(model.planes, params.maxPlanes, {});

            double prevModel = -kInf;
            bool chainActive = true;
            for (std::size_t inner = 1; inner <= params.maxInner; ++inner) {
                TangentProblem tp{x, plain(model), Q, Rk};
                const TangentSolution sol = solve_tangent(tp);
                const Vec& y = sol.y;
                const Vec dy = diff(y, x);
                const double modelY = sol.t + quad(Q, dy);
                const double dec = fx - modelY;
                const double gnorm = norm_2(sol.aggregate);
                const double scale = 1.0 + std::fabs(fx);

                TraceRow row;
                row.outer = outer;
                row.inner = inner;
                row.f = fx;
                row.R = Rk;
                row.gnorm = gnorm;
                row.modelAtY = modelY;

                if (chainActive) {
                    ++res.chainChecks;
                    const double tol = 1e-10 * scale;
                    const double v = std::max(prevModel - modelY, modelY - fx);
                    if (v > tol) {
                        ++res.chainViolations;
                        res.chainWorst = std::max(res.chainWorst, v);
                    }
                }
                prevModel = modelY;

                if (inner == 1 && gnorm <= params.epsStop * scale && dec <= params.epsStop * scale) {
                    row.step = StepType::Stop;
                    res.trace.push_back(row);
                    return finish("converged");
                }
                if (dec <= 1e-15 * scale) {
                    row.step = StepType::Stop;
                    res.trace.push_back(row);
                    return finish("model-stationary");
                }

                const TrialChoice tc = trial_step(y, x, fx, model, params, proposer);
                const Vec& z = tc.z;
                row.proposed = tc.proposed;
                const double modelZ = tc.proposed ? second_order_value(model, x, z) : modelY;
                const double fz = value(z);
                row.fz = fz;
                const double rho = acceptance_ratio(fx, fz, modelZ);
                row.rho = rho;
                if (rho >= params.gamma) {
                    row.step = StepType::Serious;
                    res.trace.push_back(row);
                    serious = true;
                    xNext = z;
                    fNext = fz;
                    rhoSerious = rho;
                    break;
                }

                const Plane cz = cut(z, x);
                ModelPlane cutZ{cz, PlaneTag::Cut, seq++, z};
                const Plane agg = aggregate_plane(tp, sol);
                double rt = 0.0;
                {
                    std::vector<Plane> next = plain(model);
                    next.push_back(cz);
                    rt = secondary_ratio(fx, polyhedral_value(next, x, z), modelZ);
                }
                row.step = StepType::Null;

                if (tc.proposed && rt < params.gammaTilde && params.fallback) {
                    const double fy = value(y);
                    const double rhoY = acceptance_ratio(fx, fy, modelY);
                    if (rhoY >= params.gamma) {
                        row.step = StepType::FallbackSerious;
                        row.fz = fy;
                        row.rho = rhoY;
                        res.trace.push_back(row);
                        serious = true;
                        xNext = y;
                        fNext = fy;
                        rhoSerious = rhoY;
                        break;
                    }
                    const Plane cy = cut(y, x);
                    model.planes.push_back(std::move(cutZ));
                    model = taper_model(std::move(model), {cy, PlaneTag::Cut, seq++, y},
                                        {agg, PlaneTag::Aggregate, seq++, std::nullopt}, params.maxPlanes);
                    rt = secondary_ratio(fx, polyhedral_value(plain(model), x, y), modelY);
                    row.step = StepType::FallbackNull;
                    row.fz = fy;
                    row.rho = rhoY;
                } else {
                    model = taper_model(std::move(model), std::move(cutZ),
                                        {agg, PlaneTag::Aggregate, seq++, std::nullopt}, params.maxPlanes);
                }
                row.rhoTilde = rt;
                res.trace.push_back(row);
                // Chain (18) is only guaranteed while trial points are the tangent solutions.
                if (tc.proposed) chainActive = false;

                if (params.debugChecks) {
                    std::uniform_real_distribution<double> u(-1.0, 1.0);
                    for (int s = 0; s < 100; ++s) {
                        Vec p(n);
                        for (std::size_t i = 0; i < n; ++i) p[i] = x[i] + RSharp * u(rng);
                        const double phi = oracle.model_value(p, x);
                        for (const ModelPlane& mp : model.planes) {
                            double v = mp.plane.a;
                            for (std::size_t i = 0; i < n; ++i) v += mp.plane.g[i] * (p[i] - x[i]);
                            if (v > phi + 1e-8 * (1.0 + std::fabs(phi))) ++res.minorizationViolations;
                        }
                    }
                }

                if (rt >= params.gammaTilde) Rk *= 0.5;
                if (Rk < params.minRadius * (1.0 + norm_inf(x))) return finish("radius-collapse");
            }
        } catch (const BudgetExceeded&) {
            return finish("budget");
        } catch (const Error& e) {
            res.failure = e.what();
            return finish("oracle-failure");
        }

        if (!serious) return finish("inner-cap");

        RSharp = memory_radius_update(rhoSerious, Rk, params.GammaCap);

        recycleBases.clear();
        if (params.recycle) {
            const std::size_t cap = (params.maxPlanes - 1) / 2;
            for (auto it = model.planes.rbegin(); it != model.planes.rend() && recycleBases.size() < cap; ++it)
                if (it->tag == PlaneTag::Cut && it->base) recycleBases.push_back(*it->base);
            std::reverse(recycleBases.begin(), recycleBases.end());
        }

        if (params.bfgs) {
            ++res.planeCalls;
            const Vec gNew = oracle.exactness_plane(xNext).g;
            const Vec s = diff(xNext, x);
            const Vec yv = diff(gNew, gExact);
            double sy = 0.0;
            for (std::size_t i = 0; i < n; ++i) sy += s[i] * yv[i];
            Vec Qs(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) Qs[i] += Q[i * n + j] * s[j];
            double sQs = 0.0;
            for (std::size_t i = 0; i < n; ++i) sQs += s[i] * Qs[i];
            if (sy > 1e-12 * norm_2(s) * norm_2(yv) && sQs > 0.0) {
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        Q[i * n + j] += yv[i] * yv[j] / sy - Qs[i] * Qs[j] / sQs;
                Q = project_q(Q, n, params.Qeps, params.q);
            }
        }
        x = xNext;
        fx = fNext;
    }
    return finish("max-outer");
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
    os << "outer,inner,f,rho,rho_tilde,R,gnorm,step,fz,model_at_y,proposed\n";
    os.precision(17);
    for (const TraceRow& r : trace)
        os << r.outer << ',' << r.inner << ',' << r.f << ',' << r.rho << ',' << r.rhoTilde << ',' << r.R << ','
           << r.gnorm << ',' << to_string(r.step) << ',' << r.fz << ',' << r.modelAtY << ','
           << (r.proposed ? 1 : 0) << '\n';
}

} // namespace hinf
