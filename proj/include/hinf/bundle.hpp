#pragma once

#include "hinf/tangent_qp.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hinf {

struct SolverParams {
    double gamma = 0.1;
    double gammaTilde = 0.75;
    double GammaCap = 0.6;
    double theta = 0.1;
    double M = 2.0;
    double q = 1e6;
    double epsStop = 1e-6;
    std::size_t maxOuter = 300;
    std::size_t maxInner = 50;
    std::size_t maxPlanes = 10;
    double RSharp1 = 1.0;
    double Qeps = 1e-6;      // Q_j = Qeps * I unless bfgs is set
    bool bfgs = false;       // quasi-Newton Q_j from serious-step pairs
    bool recycle = true;     // carry cuts over to the next serious iterate
    bool fallback = true;    // re-test y when a proposed z fails
    bool debugChecks = false; // sample minorization of every working plane
    double minRadius = 1e-12; // stop when R_k falls below this, relative to 1 + |x|_inf
    std::size_t maxValueCalls = 0; // 0 = unlimited
    std::uint64_t seed = 12345;
};

void validate(const SolverParams& p);

// First-order model phi(., x) of f at serious iterate x, as required by the
// solver. Planes are returned in center-relative form a + g^T (. - x).
class Oracle {
public:
    virtual ~Oracle() = default;
    virtual std::size_t dim() const = 0;
    // f(x); +infinity signals a violated hidden constraint.
    virtual double value(const Vec& x) = 0;
    virtual double model_value(const Vec& y, const Vec& x) = 0;
    virtual Plane plane_at(const Vec& z, const Vec& x) = 0;
    virtual Plane exactness_plane(const Vec& x) { return plane_at(x, x); }
    virtual std::vector<Plane> anticipated_planes(const Vec& /*x*/) { return {}; }
};

enum class PlaneTag { Exactness, Cut, Aggregate, Anticipated, Recycled };

struct ModelPlane {
    Plane plane;
    PlaneTag tag = PlaneTag::Cut;
    std::uint64_t seq = 0;       // insertion order, larger is newer
    std::optional<Vec> base;     // trial point the cut was taken at
};

struct WorkingModel {
    std::vector<ModelPlane> planes;
    Vec Q;
};

enum class StepType { Serious, Null, FallbackSerious, FallbackNull, Stop };

std::string to_string(StepType s);
std::string to_string(PlaneTag t);

struct TraceRow {
    std::size_t outer = 0;
    std::size_t inner = 0;
    double f = 0.0;         // f at the serious iterate
    double rho = 0.0;
    double rhoTilde = 0.0;
    double R = 0.0;
    double gnorm = 0.0;     // |g*|_2
    StepType step = StepType::Null;
    double fz = 0.0;
    double modelAtY = 0.0;  // Phi_k(y^k, x)
    bool proposed = false;  // trial point came from the proposer
};

struct RunResult {
    Vec x;
    double f = 0.0;
    std::vector<TraceRow> trace;
    std::string status;
    std::string failure;
    std::size_t valueCalls = 0;
    std::size_t planeCalls = 0;
    std::size_t outerIterations = 0;
    std::size_t chainChecks = 0;
    std::size_t chainViolations = 0;
    double chainWorst = 0.0;
    std::size_t minorizationViolations = 0;
};

// Optional trial-point proposer: gets (y, x) and returns a candidate z.
using Proposer = std::function<std::optional<Vec>(const Vec& y, const Vec& x)>;

RunResult run(Oracle& oracle, const Vec& x0, const SolverParams& params, const Proposer& proposer = {});

double acceptance_ratio(double fx, double fz, double modelAtZ);
double secondary_ratio(double fx, double phiNextAtZ, double modelAtZ);
double memory_radius_update(double rho, double Rk, double GammaCap);

// Insert newCut; when the model then exceeds N planes, keep the exactness
// plane, newCut and the aggregate, and fill the remaining slots newest first,
// evicting anticipated planes before recycled ones before cuts.
WorkingModel taper_model(WorkingModel model, ModelPlane newCut, ModelPlane aggregate, std::size_t N);

struct TrialChoice {
    Vec z;
    bool proposed = false;
};

// Phi_k(y, x) for the working model.
double second_order_value(const WorkingModel& model, const Vec& x, const Vec& y);

TrialChoice trial_step(const Vec& y, const Vec& x, double fx, const WorkingModel& model,
                       const SolverParams& params, const Proposer& proposer);

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace);

} // namespace hinf
