#include "hinf/objective.hpp"

#include "hinf/errors.hpp"
#include "hinf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hinf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_dims(const PlantSample& p, const CMat& K) {
    if (K.rows() != p.P12.cols() || K.cols() != p.P21.rows())
        throw InvalidInput("lft: controller dimensions do not match the plant");
}

CMat return_difference(const PlantSample& p, const CMat& K) {
    CMat r = CMat::identity(p.P22.rows());
    r -= p.P22 * K;
    return r;
}

} // namespace

CMat sensitivity(const PlantSample& p, const CMat& K) {
    check_dims(p, K);
    return inverse(return_difference(p, K), p.omega);
}

CMat lft_close(const PlantSample& p, const CMat& K) {
    const CMat S = sensitivity(p, K);
    return p.P11 + p.P12 * (K * (S * p.P21));
}

std::vector<CMat> dT_dx(const PlantSample& p, const CMat& K, const std::vector<CMat>& dK) {
    const CMat S = sensitivity(p, K);
    CMat rk = CMat::identity(K.rows());
    rk -= K * p.P22;
    const CMat left = p.P12 * inverse(rk, p.omega);
    const CMat right = S * p.P21;
    std::vector<CMat> out;
    out.reserve(dK.size());
    for (const CMat& d : dK) out.push_back(left * (d * right));
    return out;
}

std::vector<CMat> dS_dx(const PlantSample& p, const CMat& K, const std::vector<CMat>& dK) {
    const CMat S = sensitivity(p, K);
    const CMat left = S * p.P22;
    std::vector<CMat> out;
    out.reserve(dK.size());
    for (const CMat& d : dK) out.push_back(left * (d * S));
    return out;
}

FrequencyValue closed_loop_values(const PlantSample& p, const ControllerStructure& s, const Vec& x, double c) {
    const CMat K = k_eval(s, x, p.omega);
    const CMat S = sensitivity(p, K);
    const CMat T = p.P11 + p.P12 * (K * (S * p.P21));
    FrequencyValue fv;
    fv.omega = p.omega;
    fv.perf = max_svd(T).sigma;
    fv.barrier = c > 0.0 ? c * max_svd(S).sigma : 0.0;
    return fv;
}

NyquistMode nyquist_mode_from_string(const std::string& s) {
    if (s == "off") return NyquistMode::Off;
    if (s == "advisory") return NyquistMode::Advisory;
    if (s == "enforce") return NyquistMode::Enforce;
    throw InvalidInput("unknown nyquist mode '" + s + "'");
}

std::string to_string(NyquistMode m) {
    switch (m) {
    case NyquistMode::Off: return "off";
    case NyquistMode::Advisory: return "advisory";
    case NyquistMode::Enforce: return "enforce";
    }
    return "unknown";
}

std::vector<Peak> local_peaks(const std::vector<FrequencyValue>& values, double relTol) {
    std::vector<Peak> out;
    const std::size_t n = values.size();
    if (n == 0) return out;
    double top = 0.0;
    for (const auto& v : values) top = std::max({top, v.perf, v.barrier});
    for (Channel ch : {Channel::Performance, Channel::Barrier}) {
        auto at = [&](std::size_t i) { return ch == Channel::Performance ? values[i].perf : values[i].barrier; };
        for (std::size_t i = 0; i < n; ++i) {
            const double v = at(i);
            if (v <= 0.0 || v < (1.0 - relTol) * top) continue;
            if (i > 0 && at(i - 1) > v) continue;
            if (i + 1 < n && at(i + 1) >= v) continue;
            out.push_back({i, ch, v});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Peak& a, const Peak& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.index != b.index) return a.index < b.index;
        return a.channel < b.channel;
    });
    return out;
}

NyquistReport nyquist_check(const FrdPlant& plant, const ControllerStructure& s, const Vec& x,
                            std::size_t plantUnstablePoles) {
    NyquistReport rep;
    rep.evaluated = true;
    const auto& smp = plant.samples;
    bool resolved = !smp.empty() && smp.front().omega > 0.0;
    if (!resolved) return rep;
    // Low-frequency tail down to 1e-10 of the first node with the plant held at
    // its first sample, so controller integrators dominate at the far end.
    std::vector<cplx> d;
    constexpr int kTail = 40;
    for (int j = kTail; j >= 1; --j) {
        PlantSample p = smp.front();
        p.omega = smp.front().omega * std::pow(10.0, -0.25 * j);
        d.push_back(det(return_difference(p, k_eval(s, x, p.omega))));
    }
    for (const auto& p : smp) d.push_back(det(return_difference(p, k_eval(s, x, p.omega))));
    double dpos = 0.0;
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
        if (d[i] == cplx{} || d[i + 1] == cplx{}) {
            resolved = false;
            continue;
        }
        const double step = std::arg(d[i + 1] / d[i]);
        if (std::fabs(step) > std::numbers::pi / 2) resolved = false;
        dpos += step;
    }
    const double dind = -std::numbers::pi * double(integrator_count(s, x));
    rep.winding = (2.0 * dpos + dind) / (2.0 * std::numbers::pi);
    const int pk = unstable_pole_count(s, x);
    if (pk < 0) resolved = false;
    const double z = double(plantUnstablePoles) + double(std::max(pk, 0)) - rep.winding;
    const double zr = std::round(z);
    if (std::fabs(z - zr) > 0.25) resolved = false;
    rep.closedLoopUnstable = int(zr);
    rep.resolved = resolved;
    return rep;
}

HinfObjective::HinfObjective(FrdPlant plant, ControllerStructure structure, ObjectiveOptions options)
    : plant_(std::move(plant)), structure_(structure), options_(options) {
    plant_.validate();
    structure_.validate();
    if (plant_.dims.ny != structure_.ny || plant_.dims.nu != structure_.nu)
        throw InvalidInput("objective: controller dimensions do not match the plant measurement/control sizes");
    if (!(options_.c >= 0.0)) throw InvalidInput("objective: barrier weight must be nonnegative");
    if (plant_.samples.front().omega <= 0.0 && structure_.kind == ControllerKind::Pi)
        throw InvalidInput("objective: grid must start above 0 for controllers with an integrator");
}

Evaluation HinfObjective::evaluate(const Vec& x) const {
    const std::size_t n = plant_.samples.size();
    Evaluation ev;
    ev.values.resize(n);
    std::vector<std::string> errors(n);
    parallel_for(n, options_.threads, [&](std::size_t i) {
        const PlantSample& p = plant_.samples[i];
        FrequencyValue& fv = ev.values[i];
        fv.omega = p.omega;
        try {
            fv = closed_loop_values(p, structure_, x, options_.c);
        } catch (const SingularMatrix& e) {
            errors[i] = e.what();
        } catch (const PoleError& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < n; ++i)
        if (!errors[i].empty()) {
            ev.feasible = false;
            ev.f = kInf;
            ev.reason = "ill-posed loop: " + errors[i];
            return ev;
        }
    ev.f = -kInf;
    for (std::size_t i = 0; i < n; ++i) {
        if (ev.values[i].perf > ev.f) {
            ev.f = ev.values[i].perf;
            ev.argmax = i;
            ev.argmaxChannel = Channel::Performance;
        }
        if (ev.values[i].barrier > ev.f) {
            ev.f = ev.values[i].barrier;
            ev.argmax = i;
            ev.argmaxChannel = Channel::Barrier;
        }
    }
    const double tol = options_.activeTol * std::max(1.0, ev.f);
    for (std::size_t i = 0; i < n; ++i)
        if (std::max(ev.values[i].perf, ev.values[i].barrier) >= ev.f - tol) ev.active.push_back(i);
    if (options_.nyquist != NyquistMode::Off) ev.nyquist = nyquist_check(plant_, structure_, x, options_.plantUnstablePoles);
    for (const auto& v : ev.values)
        if (!std::isfinite(v.perf) || !std::isfinite(v.barrier) || v.barrier > 1.0 / options_.epsBar) {
            ev.feasible = false;
            ev.reason = "barrier exceeds 1/epsBar at omega = " + std::to_string(v.omega);
        }
    if (options_.nyquist == NyquistMode::Enforce && !ev.nyquist.stable()) {
        ev.feasible = false;
        ev.reason = "Nyquist test counts " + std::to_string(ev.nyquist.closedLoopUnstable) + " unstable closed-loop poles";
    }
    if (!ev.feasible) ev.f = kInf;
    return ev;
}

double HinfObjective::value(const Vec& x) {
    if (x.size() != dim()) throw InvalidInput("objective: wrong parameter count");
    return evaluate(x).f;
}

void HinfObjective::linearize(const Vec& x) {
    if (haveLin_ && x == linX_) return;
    const std::size_t n = plant_.samples.size();
    std::vector<Node> nodes(n);
    parallel_for(n, options_.threads, [&](std::size_t i) {
        const PlantSample& p = plant_.samples[i];
        const CMat K = k_eval(structure_, x, p.omega);
        const std::vector<CMat> dK = k_jacobian(structure_, x, p.omega);
        Node& nd = nodes[i];
        nd.S = sensitivity(p, K);
        nd.T = p.P11 + p.P12 * (K * (nd.S * p.P21));
        nd.dT = dT_dx(p, K, dK);
        if (options_.c > 0.0) nd.dS = dS_dx(p, K, dK);
    });
    nodes_ = std::move(nodes);
    linX_ = x;
    haveLin_ = true;
}

CMat HinfObjective::linear_at(std::size_t i, Channel ch, const Vec& d) const {
    const Node& nd = nodes_[i];
    const bool perf = ch == Channel::Performance;
    CMat m = perf ? nd.T : nd.S;
    const auto& jac = perf ? nd.dT : nd.dS;
    for (std::size_t k = 0; k < d.size(); ++k)
        if (d[k] != 0.0) {
            CMat t = jac[k];
            t *= d[k];
            m += t;
        }
    return m;
}

HinfObjective::Branch HinfObjective::model_max(const Vec& y, std::vector<double>* perNode) {
    const std::size_t n = nodes_.size();
    Vec d(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) d[k] = y[k] - linX_[k];
    std::vector<double> perf(n), bar(n, 0.0);
    parallel_for(n, options_.threads, [&](std::size_t i) {
        perf[i] = max_svd(linear_at(i, Channel::Performance, d)).sigma;
        if (options_.c > 0.0) bar[i] = options_.c * max_svd(linear_at(i, Channel::Barrier, d)).sigma;
    });
    Branch b{-kInf, 0, Channel::Performance};
    for (std::size_t i = 0; i < n; ++i) {
        if (perf[i] > b.value) b = {perf[i], i, Channel::Performance};
        if (bar[i] > b.value) b = {bar[i], i, Channel::Barrier};
    }
    if (perNode) {
        perNode->resize(n);
        for (std::size_t i = 0; i < n; ++i) (*perNode)[i] = std::max(perf[i], bar[i]);
    }
    return b;
}

double HinfObjective::model_value(const Vec& y, const Vec& x) {
    if (y.size() != dim() || x.size() != dim()) throw InvalidInput("objective: wrong parameter count");
    linearize(x);
    return model_max(y).value;
}

Plane HinfObjective::branch_plane(std::size_t i, Channel ch, const Vec& z, const Vec& x) const {
    const std::size_t n = x.size();
    Vec d(n);
    for (std::size_t k = 0; k < n; ++k) d[k] = z[k] - x[k];
    const CMat m = linear_at(i, ch, d);
    const SvdTriplet t = max_svd(m);
    const bool perf = ch == Channel::Performance;
    const double scale = perf ? 1.0 : options_.c;
    const auto& jac = perf ? nodes_[i].dT : nodes_[i].dS;
    Plane p;
    p.g.resize(n);
    for (std::size_t k = 0; k < n; ++k) p.g[k] = scale * dot_conj(t.u, jac[k] * t.v).real();
    p.a = scale * t.sigma;
    for (std::size_t k = 0; k < n; ++k) p.a -= p.g[k] * d[k];
    return p;
}

Plane HinfObjective::plane_at(const Vec& z, const Vec& x) {
    if (z.size() != dim() || x.size() != dim()) throw InvalidInput("objective: wrong parameter count");
    linearize(x);
    const Branch b = model_max(z);
    return branch_plane(b.index, b.channel, z, x);
}

std::vector<Peak> HinfObjective::peaks(const Vec& x) {
    linearize(x);
    std::vector<FrequencyValue> vals(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        vals[i].omega = plant_.samples[i].omega;
        vals[i].perf = max_svd(nodes_[i].T).sigma;
        vals[i].barrier = options_.c > 0.0 ? options_.c * max_svd(nodes_[i].S).sigma : 0.0;
    }
    return local_peaks(vals, options_.peakRelTol);
}

std::vector<Plane> HinfObjective::anticipated_planes(const Vec& x) {
    const std::vector<Peak> pk = peaks(x);
    const Branch primary = model_max(x);
    std::vector<Plane> out;
    for (const Peak& p : pk) {
        if (p.index == primary.index && p.channel == primary.channel) continue;
        out.push_back(branch_plane(p.index, p.channel, x, x));
    }
    return out;
}

} // namespace hinf
