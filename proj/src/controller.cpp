#include "hinf/controller.hpp"

#include "hinf/errors.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace hinf {

std::string to_string(ControllerKind k) {
    switch (k) {
    case ControllerKind::StaticGain: return "static";
    case ControllerKind::Pi: return "pi";
    case ControllerKind::Tridiag: return "tridiag";
    }
    return "unknown";
}

ControllerKind controller_kind_from_string(const std::string& s) {
    if (s == "static") return ControllerKind::StaticGain;
    if (s == "pi") return ControllerKind::Pi;
    if (s == "tridiag") return ControllerKind::Tridiag;
    throw InvalidInput("unknown controller structure '" + s + "'");
}

ControllerStructure ControllerStructure::static_gain(std::size_t ny, std::size_t nu) {
    return {ControllerKind::StaticGain, ny, nu, 0};
}

ControllerStructure ControllerStructure::pi() { return {ControllerKind::Pi, 1, 1, 1}; }

ControllerStructure ControllerStructure::tridiag(std::size_t order, std::size_t ny, std::size_t nu) {
    return {ControllerKind::Tridiag, ny, nu, order};
}

std::size_t ControllerStructure::param_count() const {
    switch (kind) {
    case ControllerKind::StaticGain: return nu * ny;
    case ControllerKind::Pi: return 2;
    case ControllerKind::Tridiag: return (3 * order - 2) + order * ny + nu * order + nu * ny;
    }
    return 0;
}

void ControllerStructure::validate() const {
    if (ny == 0 || nu == 0) throw InvalidInput("controller: dimensions must be positive");
    if (kind == ControllerKind::Pi && (ny != 1 || nu != 1)) throw InvalidInput("controller: pi is SISO only");
    if (kind == ControllerKind::Tridiag && order == 0) throw InvalidInput("controller: tridiag order must be >= 1");
}

namespace {

void check_params(const ControllerStructure& s, const Vec& x) {
    s.validate();
    if (x.size() != s.param_count())
        throw InvalidInput("controller: expected " + std::to_string(s.param_count()) + " parameters, got " +
                           std::to_string(x.size()));
    for (double v : x)
        if (!std::isfinite(v)) throw InvalidInput("controller: non-finite parameter");
}

CMat real_block(const std::vector<double>& m, std::size_t r, std::size_t c) {
    CMat out(r, c);
    for (std::size_t i = 0; i < r * c; ++i) out.data()[i] = m[i];
    return out;
}

// (jw I - A)^-1 for the tridiagonal structure.
CMat resolvent(const StateSpace& ss, double omega) {
    CMat m(ss.n, ss.n);
    for (std::size_t i = 0; i < ss.n; ++i)
        for (std::size_t j = 0; j < ss.n; ++j) m(i, j) = -ss.A[i * ss.n + j];
    for (std::size_t i = 0; i < ss.n; ++i) m(i, i) += cplx(0.0, omega);
    return inverse(m, omega);
}

} // namespace

StateSpace unpack(const ControllerStructure& s, const Vec& x) {
    check_params(s, x);
    StateSpace ss;
    ss.ny = s.ny;
    ss.nu = s.nu;
    switch (s.kind) {
    case ControllerKind::StaticGain:
        ss.D = x;
        break;
    case ControllerKind::Pi:
        ss.n = 1;
        ss.A = {0.0};
        ss.B = {1.0};
        ss.C = {x[1]};
        ss.D = {x[0]};
        break;
    case ControllerKind::Tridiag: {
        const std::size_t n = s.order;
        ss.n = n;
        ss.A.assign(n * n, 0.0);
        std::size_t p = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) ss.A[(i + 1) * n + i] = x[p++];
        for (std::size_t i = 0; i < n; ++i) ss.A[i * n + i] = x[p++];
        for (std::size_t i = 0; i + 1 < n; ++i) ss.A[i * n + i + 1] = x[p++];
        ss.B.assign(x.begin() + p, x.begin() + p + n * s.ny);
        p += n * s.ny;
        ss.C.assign(x.begin() + p, x.begin() + p + s.nu * n);
        p += s.nu * n;
        ss.D.assign(x.begin() + p, x.end());
        break;
    }
    }
    return ss;
}

Vec pack(const ControllerStructure& s, const StateSpace& ss) {
    s.validate();
    Vec x;
    switch (s.kind) {
    case ControllerKind::StaticGain:
        x = ss.D;
        break;
    case ControllerKind::Pi:
        x = {ss.D.at(0), ss.C.at(0)};
        break;
    case ControllerKind::Tridiag: {
        const std::size_t n = s.order;
        if (ss.n != n) throw InvalidInput("pack: order mismatch");
        for (std::size_t i = 0; i + 1 < n; ++i) x.push_back(ss.A[(i + 1) * n + i]);
        for (std::size_t i = 0; i < n; ++i) x.push_back(ss.A[i * n + i]);
        for (std::size_t i = 0; i + 1 < n; ++i) x.push_back(ss.A[i * n + i + 1]);
        x.insert(x.end(), ss.B.begin(), ss.B.end());
        x.insert(x.end(), ss.C.begin(), ss.C.end());
        x.insert(x.end(), ss.D.begin(), ss.D.end());
        break;
    }
    }
    if (x.size() != s.param_count()) throw InvalidInput("pack: realization does not match structure");
    return x;
}

CMat k_eval(const ControllerStructure& s, const Vec& x, double omega) {
    check_params(s, x);
    switch (s.kind) {
    case ControllerKind::StaticGain:
        return real_block(x, s.nu, s.ny);
    case ControllerKind::Pi:
        if (omega == 0.0) throw PoleError("pi controller evaluated at the integrator pole", omega);
        return CMat(1, 1, {x[0] + x[1] / cplx(0.0, omega)});
    case ControllerKind::Tridiag: {
        const StateSpace ss = unpack(s, x);
        const CMat r = resolvent(ss, omega);
        return real_block(ss.C, ss.nu, ss.n) * r * real_block(ss.B, ss.n, ss.ny) + real_block(ss.D, ss.nu, ss.ny);
    }
    }
    return {};
}

std::vector<CMat> k_jacobian(const ControllerStructure& s, const Vec& x, double omega) {
    check_params(s, x);
    std::vector<CMat> out;
    switch (s.kind) {
    case ControllerKind::StaticGain:
        for (std::size_t i = 0; i < s.nu; ++i)
            for (std::size_t j = 0; j < s.ny; ++j) {
                CMat e(s.nu, s.ny);
                e(i, j) = 1.0;
                out.push_back(std::move(e));
            }
        break;
    case ControllerKind::Pi:
        if (omega == 0.0) throw PoleError("pi controller evaluated at the integrator pole", omega);
        out.push_back(CMat(1, 1, {1.0}));
        out.push_back(CMat(1, 1, {1.0 / cplx(0.0, omega)}));
        break;
    case ControllerKind::Tridiag: {
        const StateSpace ss = unpack(s, x);
        const std::size_t n = ss.n;
        const CMat r = resolvent(ss, omega);
        const CMat cr = real_block(ss.C, ss.nu, n) * r; // nu x n
        const CMat rb = r * real_block(ss.B, n, ss.ny); // n x ny
        // dK/dA_ab = (C R)_{:,a} (R B)_{b,:}
        auto dA = [&](std::size_t a, std::size_t b) {
            CMat m(ss.nu, ss.ny);
            for (std::size_t i = 0; i < ss.nu; ++i)
                for (std::size_t j = 0; j < ss.ny; ++j) m(i, j) = cr(i, a) * rb(b, j);
            return m;
        };
        for (std::size_t i = 0; i + 1 < n; ++i) out.push_back(dA(i + 1, i));
        for (std::size_t i = 0; i < n; ++i) out.push_back(dA(i, i));
        for (std::size_t i = 0; i + 1 < n; ++i) out.push_back(dA(i, i + 1));
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t j = 0; j < ss.ny; ++j) {
                CMat m(ss.nu, ss.ny);
                for (std::size_t i = 0; i < ss.nu; ++i) m(i, j) = cr(i, a);
                out.push_back(std::move(m));
            }
        for (std::size_t i = 0; i < ss.nu; ++i)
            for (std::size_t a = 0; a < n; ++a) {
                CMat m(ss.nu, ss.ny);
                for (std::size_t j = 0; j < ss.ny; ++j) m(i, j) = rb(a, j);
                out.push_back(std::move(m));
            }
        for (std::size_t i = 0; i < ss.nu; ++i)
            for (std::size_t j = 0; j < ss.ny; ++j) {
                CMat m(ss.nu, ss.ny);
                m(i, j) = 1.0;
                out.push_back(std::move(m));
            }
        break;
    }
    }
    return out;
}

Poly char_poly(const std::vector<double>& A, std::size_t n) {
    // Faddeev-LeVerrier.
    Poly c(n + 1, 0.0);
    c[0] = 1.0;
    std::vector<double> m(n * n, 0.0), am(n * n);
    for (std::size_t k = 1; k <= n; ++k) {
        for (std::size_t i = 0; i < n; ++i) m[i * n + i] += c[k - 1];
        double tr = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double v = 0.0;
                for (std::size_t l = 0; l < n; ++l) v += A[i * n + l] * m[l * n + j];
                am[i * n + j] = v;
            }
        for (std::size_t i = 0; i < n; ++i) tr += am[i * n + i];
        c[k] = -tr / double(k);
        m = am;
    }
    return c;
}

namespace {

std::size_t trailing_zeros(const Poly& p) {
    double scale = 0.0;
    for (double v : p) scale = std::max(scale, std::fabs(v));
    std::size_t z = 0;
    for (std::size_t i = p.size(); i-- > 1;) {
        if (std::fabs(p[i]) > 1e-14 * scale) break;
        ++z;
    }
    return z;
}

// Sign changes in the first Routh column; -1 on a zero pivot.
int routh_rhp(Poly p) {
    if (p.size() <= 1) return 0;
    if (p[0] < 0)
        for (double& v : p) v = -v;
    const std::size_t deg = p.size() - 1;
    const std::size_t w = deg / 2 + 1;
    std::vector<double> r0(w, 0.0), r1(w, 0.0);
    for (std::size_t i = 0; i <= deg; ++i) (i % 2 ? r1 : r0)[i / 2] = p[i];
    double scale = 0.0;
    for (double v : p) scale = std::max(scale, std::fabs(v));
    int changes = 0;
    double prev = r0[0];
    for (std::size_t row = 1; row <= deg; ++row) {
        if (std::fabs(r1[0]) <= 1e-13 * scale) return -1;
        if ((r1[0] > 0) != (prev > 0)) ++changes;
        prev = r1[0];
        std::vector<double> r2(w, 0.0);
        for (std::size_t i = 0; i + 1 < w; ++i) r2[i] = (r1[0] * r0[i + 1] - r0[0] * r1[i + 1]) / r1[0];
        r0 = r1;
        r1 = r2;
    }
    return changes;
}

} // namespace

std::size_t integrator_count(const ControllerStructure& s, const Vec& x) {
    check_params(s, x);
    switch (s.kind) {
    case ControllerKind::StaticGain: return 0;
    case ControllerKind::Pi: return x[1] != 0.0 ? 1 : 0;
    case ControllerKind::Tridiag: {
        const StateSpace ss = unpack(s, x);
        return trailing_zeros(char_poly(ss.A, ss.n));
    }
    }
    return 0;
}

int unstable_pole_count(const ControllerStructure& s, const Vec& x) {
    if (s.kind != ControllerKind::Tridiag) {
        check_params(s, x);
        return 0;
    }
    const StateSpace ss = unpack(s, x);
    Poly p = char_poly(ss.A, ss.n);
    p.resize(p.size() - trailing_zeros(p));
    return routh_rhp(p);
}

std::pair<Poly, Poly> transfer_function(const ControllerStructure& s, const Vec& x) {
    check_params(s, x);
    if (s.ny != 1 || s.nu != 1) throw InvalidInput("transfer_function: SISO controllers only");
    switch (s.kind) {
    case ControllerKind::StaticGain: return {{x[0]}, {1.0}};
    case ControllerKind::Pi: return {{x[0], x[1]}, {1.0, 0.0}};
    case ControllerKind::Tridiag: break;
    }
    const StateSpace ss = unpack(s, x);
    const std::size_t n = ss.n;
    const Poly den = char_poly(ss.A, n);
    std::vector<double> abc = ss.A;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) abc[i * n + j] -= ss.B[i] * ss.C[j];
    const Poly closed = char_poly(abc, n);
    Poly num(n + 1);
    for (std::size_t i = 0; i <= n; ++i) num[i] = closed[i] - den[i] + ss.D[0] * den[i];
    std::size_t lead = 0;
    while (lead + 1 < num.size() && num[lead] == 0.0) ++lead;
    num.erase(num.begin(), num.begin() + std::ptrdiff_t(lead));
    return {num, den};
}

std::string format_poly(const Poly& p, int digits) {
    std::string out;
    const std::size_t deg = p.empty() ? 0 : p.size() - 1;
    char buf[64];
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double c = p[i];
        if (c == 0.0 && p.size() > 1) continue;
        const std::size_t pw = deg - i;
        const double mag = std::fabs(c);
        if (out.empty()) {
            if (c < 0) out += "-";
        } else {
            out += c < 0 ? " - " : " + ";
        }
        const bool unit = mag == 1.0 && pw > 0;
        if (!unit) {
            std::snprintf(buf, sizeof buf, "%.*g", digits, mag);
            out += buf;
        }
        if (pw >= 1) out += "s";
        if (pw >= 2) out += "^" + std::to_string(pw);
    }
    return out.empty() ? "0" : out;
}

std::string format_transfer(const ControllerStructure& s, const Vec& x, int digits) {
    const auto [num, den] = transfer_function(s, x);
    return "(" + format_poly(num, digits) + ")/(" + format_poly(den, digits) + ")";
}

namespace {

void write_matrix(std::ostringstream& os, const char* name, const std::vector<double>& m, std::size_t r,
                  std::size_t c) {
    os << "# " << name << " =";
    char buf[64];
    for (std::size_t i = 0; i < r; ++i) {
        os << (i ? " ;" : "");
        for (std::size_t j = 0; j < c; ++j) {
            std::snprintf(buf, sizeof buf, " %.17g", m[i * c + j]);
            os << buf;
        }
    }
    os << '\n';
}

} // namespace

std::string export_controller(const ControllerStructure& s, const Vec& x) {
    check_params(s, x);
    std::ostringstream os;
    os << "structure " << to_string(s.kind) << '\n';
    os << "order " << (s.kind == ControllerKind::Tridiag ? s.order : 0) << '\n';
    os << "ny " << s.ny << '\n';
    os << "nu " << s.nu << '\n';
    os << "x";
    char buf[64];
    for (double v : x) {
        std::snprintf(buf, sizeof buf, " %.17g", v);
        os << buf;
    }
    os << '\n';
    const StateSpace ss = unpack(s, x);
    write_matrix(os, "A_K", ss.A, ss.n, ss.n);
    write_matrix(os, "B_K", ss.B, ss.n, ss.ny);
    write_matrix(os, "C_K", ss.C, ss.nu, ss.n);
    write_matrix(os, "D_K", ss.D, ss.nu, ss.ny);
    if (s.ny == 1 && s.nu == 1) os << "# K(s) = " << format_transfer(s, x) << '\n';
    return os.str();
}

std::pair<ControllerStructure, Vec> import_controller(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::size_t lineNo = 0;
    std::string kind;
    std::size_t order = 0, ny = 1, nu = 1;
    Vec x;
    bool haveX = false;
    while (std::getline(is, line)) {
        ++lineNo;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "structure") {
            if (!(ls >> kind)) throw ParseError("missing structure name", lineNo);
        } else if (key == "order" || key == "ny" || key == "nu") {
            long long v = 0;
            if (!(ls >> v) || v < 0) throw ParseError("bad value for " + key, lineNo);
            (key == "order" ? order : key == "ny" ? ny : nu) = std::size_t(v);
        } else if (key == "x") {
            std::string tok;
            while (ls >> tok) {
                try {
                    std::size_t used = 0;
                    x.push_back(std::stod(tok, &used));
                    if (used != tok.size()) throw std::invalid_argument(tok);
                } catch (const std::exception&) {
                    throw ParseError("bad number '" + tok + "'", lineNo);
                }
            }
            haveX = true;
        } else {
            throw ParseError("unknown key '" + key + "'", lineNo);
        }
    }
    if (kind.empty() || !haveX) throw ParseError("controller file needs 'structure' and 'x' lines", lineNo);
    ControllerStructure s{controller_kind_from_string(kind), ny, nu, order};
    if (s.kind == ControllerKind::Pi) s.order = 1;
    check_params(s, x);
    return {s, x};
}

} // namespace hinf
