#include <doctest.h>

#include "hinf/config.hpp"
#include "hinf/errors.hpp"
#include "hinf/frd_io.hpp"
#include "hinf/pipeline.hpp"
#include "hinf/plants.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace hinf;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("hinf_unit_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

FrdPlant random_plant(std::mt19937_64& rng, const PlantDims& d, std::size_t n) {
    std::normal_distribution<double> g(0.0, 1.0);
    auto m = [&](std::size_t r, std::size_t c) {
        CMat x(r, c);
        for (auto& v : x.data()) v = {g(rng), g(rng)};
        return x;
    };
    FrdPlant p;
    p.dims = d;
    for (std::size_t i = 0; i < n; ++i)
        p.samples.push_back({0.1 * double(i + 1) / 3.0, m(d.nz, d.nw), m(d.nz, d.nu), m(d.ny, d.nw), m(d.ny, d.nu)});
    return p;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, double(i) / double(n - 1));
    return g;
}

} // namespace

TEST_CASE("io: FRD round trip is bit exact") {
    std::mt19937_64 rng(31);
    const FrdPlant p = random_plant(rng, {3, 2, 2, 1}, 7);
    std::stringstream ss;
    frd_save(ss, p);
    const FrdPlant q = frd_parse(ss);
    CHECK(q.dims == p.dims);
    REQUIRE(q.samples.size() == p.samples.size());
    for (std::size_t i = 0; i < p.samples.size(); ++i) {
        CHECK(q.samples[i].omega == p.samples[i].omega);
        CHECK(q.samples[i].P11.data() == p.samples[i].P11.data());
        CHECK(q.samples[i].P12.data() == p.samples[i].P12.data());
        CHECK(q.samples[i].P21.data() == p.samples[i].P21.data());
        CHECK(q.samples[i].P22.data() == p.samples[i].P22.data());
    }
}

TEST_CASE("io: hand-written SISO file") {
    std::istringstream is("omega_radps,block,row,col,re,im\n"
                          "1,P11,0,0,1,0\n1,P12,0,0,2,0\n1,P21,0,0,3,0\n1,P22,0,0,0,-1\n"
                          "2,P11,0,0,1,1\n2,P12,0,0,0,0\n2,P21,0,0,0,0\n2,P22,0,0,-0.5,0\n");
    const FrdPlant p = frd_parse(is);
    CHECK(p.dims == PlantDims{1, 1, 1, 1});
    REQUIRE(p.samples.size() == 2);
    CHECK(p.samples[0].P12(0, 0) == cplx(2.0));
    CHECK(p.samples[0].P22(0, 0) == cplx(0.0, -1.0));
    CHECK(p.samples[1].omega == 2.0);
    CHECK(p.samples[1].P11(0, 0) == cplx(1.0, 1.0));
}

TEST_CASE("io: frequencies in Hz are converted") {
    std::istringstream is("freq_hz,block,row,col,re,im\n"
                          "1,P11,0,0,1,0\n1,P12,0,0,1,0\n1,P21,0,0,1,0\n1,P22,0,0,1,0\n");
    CHECK(frd_parse(is).samples[0].omega == doctest::Approx(2.0 * M_PI));
}

TEST_CASE("io: malformed FRD rows report their line") {
    auto line_of = [](const std::string& text) -> std::string {
        std::istringstream is(text);
        try {
            frd_parse(is);
        } catch (const ParseError& e) {
            return e.what();
        }
        return "";
    };
    const std::string head = "omega_radps,block,row,col,re,im\n1,P11,0,0,1,0\n";
    CHECK(line_of(head + "1,P12,0,0,x,0\n").rfind("line 3", 0) == 0);
    CHECK(line_of(head + "1,P13,0,0,1,0\n").rfind("line 3", 0) == 0);
    CHECK(line_of(head + "1,P12,0,0,1\n").rfind("line 3", 0) == 0);
    CHECK(line_of(head + "0.5,P12,0,0,1,0\n").rfind("line 3", 0) == 0);
    CHECK(line_of("omega,block\n").rfind("line 1", 0) == 0);
    std::istringstream missing(head + "1,P12,0,0,1,0\n1,P21,0,0,1,0\n");
    CHECK_THROWS_AS(frd_parse(missing), InvalidInput);
}

TEST_CASE("io: config parsing") {
    const Config c = Config::parse("# comment\na = 1.5\nname = rcd  # trailing\nlist = 1 2 3\nflag = true\n");
    CHECK(c.get_double("a") == 1.5);
    CHECK(c.get_string("name") == "rcd");
    CHECK(c.get_doubles("list") == std::vector<double>{1, 2, 3});
    CHECK(c.get_bool("flag", false));
    CHECK(c.get_double("missing", 4.0) == 4.0);
    CHECK_THROWS_AS(c.get_double("missing"), InvalidInput);
    CHECK_THROWS_AS(c.get_double("name"), ParseError);
    CHECK_THROWS_AS(Config::parse("a = 1\na = 2\n"), ParseError);
    CHECK_THROWS_AS(Config::parse("just text\n"), ParseError);
}

TEST_CASE("io: run configuration") {
    const RunConfig def = load_run_config(Config::parse("plant = rcd\n"));
    CHECK(def.structure.kind == ControllerKind::Pi);
    CHECK(def.theta == 0.01);
    CHECK(def.objective.c == 0.2);
    CHECK_THROWS_AS(load_run_config(Config::parse("plant = rcd\ngrid.thetta = 0.1\n")), InvalidInput);
    CHECK_THROWS_AS(load_run_config(Config::parse("plant = tank\n")), InvalidInput);
    CHECK_THROWS_AS(load_run_config(Config::parse("plant = rcd\ngrid.theta = -1\n")), InvalidInput);
    const RunConfig r = load_run_config(Config::parse("plant = rcd\nfilter.We.num = 0.00001 5\nfilter.We.den = 1 "
                                                      "0.25\ncontroller.x0 = 2 3\nobjective.nyquist = enforce\n"));
    CHECK(r.filters.We.num == std::vector<double>{1e-5, 5.0});
    CHECK(r.x0 == std::vector<double>{2.0, 3.0});
    CHECK(r.objective.nyquist == NyquistMode::Enforce);
}

TEST_CASE("io: grid file round trip") {
    const fs::path d = scratch_dir("grid");
    const std::vector<double> g = {1e-4, 1.0 / 3.0, 2.5, 1e4};
    {
        std::ofstream os(d / "grid.csv");
        write_grid_csv(os, g);
    }
    CHECK(read_grid_csv((d / "grid.csv").string()) == g);
    {
        std::ofstream os(d / "bad.csv");
        os << "omega_radps\n1\n0.5\n";
    }
    CHECK_THROWS_AS(read_grid_csv((d / "bad.csv").string()), ParseError);
}

TEST_CASE("pipeline: static-gain synthesis on tabulated data matches a golden-section search") {
    // G = 2/(s + 1), W_e = (s + 2)/(s + 0.1), W_n = 0.1, W_u = 0.5
    MixedSensitivityFilters w;
    w.We = {"W_e", {1.0, 2.0}, {1.0, 0.1}};
    w.Wn = RationalFilter::constant("W_n", 0.1);
    w.Wu = RationalFilter::constant("W_u", 0.5);
    const auto fine = log_grid(1e-3, 1e3, 800);
    auto G = [](double om) { return CMat(1, 1, {2.0 / cplx(1.0, om)}); };
    const FrdPlant plant = sample_plant(mixed_sensitivity_source(G, 1, 1, w, fine.front(), fine.back()), fine);
    const fs::path d = scratch_dir("pipeline");
    frd_save((d / "plant.csv").string(), plant);

    const Config cfg = Config::parse("plant = frd\nfrd.path = " + (d / "plant.csv").string() +
                                     "\ncontroller.structure = static\ncontroller.x0 = 1\n"
                                     "objective.nyquist = enforce\ngrid.theta = 0.001\nthreads = 2\n");
    std::ostringstream log;
    Pipeline pipe(load_run_config(cfg), log);
    CHECK(pipe.fine_grid() == fine);
    const Pipeline::SynthResult r = pipe.synthesize();
    REQUIRE(r.exitCode == kExitOk);
    CHECK(r.verify.pass);
    for (double om : r.grid) CHECK(std::binary_search(fine.begin(), fine.end(), om));

    auto f = [&](double k) { return pipe.evaluate({k}, r.grid).f; };
    double a = 0.0, b = 20.0;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
        const double c1 = b - phi * (b - a), c2 = a + phi * (b - a);
        if (f(c1) < f(c2)) b = c2;
        else a = c1;
    }
    const double fgs = f(0.5 * (a + b));
    CHECK(std::fabs(r.f - fgs) <= 1e-4 * (1.0 + fgs));

    // same inputs, same result
    std::ostringstream log2;
    const Pipeline::SynthResult r2 = Pipeline(load_run_config(cfg), log2).synthesize();
    CHECK(r2.x == r.x);
    CHECK(r2.grid == r.grid);
}

TEST_CASE("pipeline: non-admissible initial controller is rejected") {
    MixedSensitivityFilters w;
    const auto fine = log_grid(1e-2, 1e2, 50);
    auto G = [](double) { return CMat(1, 1, {2.0}); };
    const FrdPlant plant = sample_plant(mixed_sensitivity_source(G, 1, 1, w, fine.front(), fine.back()), fine);
    const fs::path d = scratch_dir("reject");
    frd_save((d / "plant.csv").string(), plant);
    const Config cfg = Config::parse("plant = frd\nfrd.path = " + (d / "plant.csv").string() +
                                     "\ncontroller.structure = static\ncontroller.x0 = -0.5\n");
    std::ostringstream log;
    const Pipeline::SynthResult r = Pipeline(load_run_config(cfg), log).synthesize();
    CHECK(r.exitCode == kExitNotStabilizing);
    CHECK(r.message.find("not admissible") != std::string::npos);
}
