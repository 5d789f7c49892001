#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "kpzlab/core/errors.hpp"
#include "kpzlab/harness/run.hpp"

using namespace kpzlab;
namespace fs = std::filesystem;

namespace {
ExperimentConfig cfg(const std::string& text) { return parse_config(text); }

double cell_num(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return *d;
    return double(std::get<long long>(c));
}

std::size_t column(const Table& t, const std::string& name) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        if (t.columns[i] == name) return i;
    FAIL("no column " << name);
    return 0;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / ("kpzlab_test_" + name);
    fs::remove_all(d);
    return d;
}
}  // namespace

TEST_CASE("config parse, defaults and round trip") {
    const auto c = resolve(cfg("# comment\n[run]\nexperiment = scaling\nseed = 5\n[scaling]\nT = 0.2\n"));
    CHECK(c.uint("run", "seed") == 5);
    CHECK(c.num("scaling", "T") == 0.2);
    CHECK(c.num("scaling", "dt") == 0.02);
    CHECK(c.nums("run", "n") == std::vector<double>{16, 64});
    CHECK(c.tags("model", "potentials").size() == 2);
    CHECK(resolve(parse_config(serialize(c))) == c);
    CHECK(resolve(c) == c);
}

TEST_CASE("config errors are raised before compute") {
    CHECK_THROWS_AS(resolve(cfg("[run]\nexperiment = thermo\n[thermo]\nbogus = 1\n")), ConfigError);
    CHECK_THROWS_AS(resolve(cfg("[run]\nexperiment = scaling\nn = 64, 16\n")), ConfigError);
    CHECK_THROWS_AS(resolve(cfg("[run]\nexperiment = scaling\nreplicas = -3\n")), ConfigError);
    CHECK_THROWS_AS(resolve(cfg("[run]\nexperiment = nothing\n")), ConfigError);
    CHECK_THROWS_AS(resolve(cfg("[run]\nseed = 1\n")), ConfigError);
    CHECK_THROWS_AS(resolve(cfg("[run]\nexperiment = thermo\nreplicas = 10\n")), ConfigError);
    CHECK_THROWS_AS(run(cfg("[run]\nexperiment = thermo\n[model]\npotentials = cubic(a=1)\n")), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/x.ini"), ConfigError);
}

TEST_CASE("thermo run on the quadratic potential: rho_prime equals lambda") {
    const auto a = run(cfg("[run]\nexperiment = thermo\n[model]\npotentials = quadratic(a=1)\n"
                           "[thermo]\nlambdas = -1, 0, 0.5, 2\n"));
    REQUIRE(a.tables.size() == 1);
    const auto& t = a.tables[0];
    REQUIRE(t.rows.size() == 4);
    for (const auto& r : t.rows) CHECK(std::abs(cell_num(r[column(t, "rho_prime")]) - cell_num(r[column(t, "lambda")])) < 1e-10);
    CHECK(a.all_pass());
    CHECK(exit_code(a) == 0);

    // the CSV carries the same values
    std::istringstream csv(t.csv());
    std::string header, line;
    std::getline(csv, header);
    CHECK(header.rfind("potential,lambda,rho,rho_prime", 0) == 0);
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 4);
}

TEST_CASE("same config and seed give byte-identical artifacts") {
    const std::string text =
        "[run]\nexperiment = scaling\nseed = 3\nreplicas = 12\nn = 16\n[model]\npotentials = perturbed(a=1,b=0.3,sine)\n"
        "[scaling]\nT = 0.02\nrecords = 8\netas = gaussian(c=0,w=0.25)\nmin_replicas = 12\n";
    const auto d1 = scratch("det1"), d2 = scratch("det2");
    const auto a = run(cfg(text));
    const auto b = run(cfg(text));
    write_artifact(a, d1.string());
    write_artifact(b, d2.string());
    for (const auto& t : a.tables) CHECK(slurp(d1 / (t.name + ".csv")) == slurp(d2 / (t.name + ".csv")));
    CHECK(slurp(d1 / "config.ini") == slurp(d2 / "config.ini"));
    CHECK(fs::exists(d1 / "summary.json"));

    auto other = cfg(text);
    other.set("run", "seed", "4");
    CHECK(run(other).tables[0].csv() != a.tables[0].csv());
}

TEST_CASE("atomic write leaves no temp file and never half-writes the target") {
    const auto d = scratch("atomic");
    fs::create_directories(d);
    const auto p = (d / "x.csv").string();
    write_atomic(p, "a,b\n1,2\n");
    CHECK(slurp(p) == "a,b\n1,2\n");
    CHECK_FALSE(fs::exists(p + ".tmp"));
    write_atomic(p, "c\n");
    CHECK(slurp(p) == "c\n");
    // the temp name is a directory, so the write fails and the old file stays
    fs::create_directories(p + ".tmp");
    CHECK_THROWS_AS(write_atomic(p, "zzz\n"), ConfigError);
    CHECK(slurp(p) == "c\n");
}

TEST_CASE("csv fields") {
    CHECK(csv_field(Cell{0.1}) == "0.10000000000000001");
    CHECK(csv_field(Cell{7LL}) == "7");
    CHECK(csv_field(Cell{std::string("gaussian(c=0,w=1)")}) == "\"gaussian(c=0,w=1)\"");
    CHECK(csv_field(Cell{std::string("say \"hi\", ok")}) == "\"say \"\"hi\"\", ok\"");
    Table t("t", {"a", "b"});
    CHECK_THROWS_AS(t.add({1.0}), UsageError);
}

TEST_CASE("summarize: slopes and standard errors") {
    Table c("c", {"x", "y"});
    for (double x : {1.0, 2.0, 4.0, 8.0})
        for (int r = 0; r < 3; ++r) c.add({x, 3.0});
    auto s = summarize(c, "x", {"y"});
    CHECK(s["slopes"]["y"]["verdict"] == "ok");
    CHECK(std::abs(s["slopes"]["y"]["slope"].get<double>()) < 1e-12);
    CHECK(s["slopes"]["y"]["slope_se"].get<double>() < 1e-12);

    Table p("p", {"x", "y"});
    for (double x : {2.0, 4.0, 8.0, 16.0, 32.0}) p.add({x, std::pow(x, -1.5)});
    s = summarize(p, "x", {"y"});
    CHECK(s["slopes"]["y"]["slope"].get<double>() == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(s["slopes"]["y"]["slope_se"].get<double>() < 1e-10);

    Table two("two", {"x", "y"});
    two.add({1.0, 1.0});
    two.add({2.0, 0.5});
    CHECK(summarize(two, "x", {"y"})["slopes"]["y"]["verdict"] == "insufficient");

    // injected replica variance: SE should be sd/sqrt(R)
    const double sd = 2.5;
    const int R = 4000;
    std::mt19937_64 gen(42);
    std::normal_distribution<double> nd(1.0, sd);
    Table v("v", {"x", "y"});
    for (int r = 0; r < R; ++r) v.add({1.0, nd(gen)});
    s = summarize(v, "x", {"y"});
    const double se = s["groups"][0]["y"]["se"].get<double>();
    CHECK(std::abs(se / (sd / std::sqrt(double(R))) - 1) < 0.10);
    CHECK(s["groups"][0]["replicas"] == R);
}

TEST_CASE("numeric blow-up yields a partial artifact with a failure record") {
    // one-sided mollifier with b delta sup|u| above nu
    const auto a = run(cfg("[run]\nexperiment = sbe\nreplicas = 2\n[sbe]\nnu = 0.4\nb = 3\nL = 4\nK = 16\n"
                           "delta = 0.25\ndt = 1e-4\nsamples = 200\nsample_every = 50\n"));
    REQUIRE(a.failure.has_value());
    CHECK(a.failure->kind == "blow_up");
    CHECK(exit_code(a) == 1);
    const auto j = summary_json(a);
    CHECK(j["failure"]["kind"] == "blow_up");
    CHECK(j["schema_version"] == kSummarySchemaVersion);
}

TEST_CASE("failing verdict maps to exit code 2") {
    const auto a = run(cfg("[run]\nexperiment = thermo\n[model]\npotentials = perturbed(a=1,b=0.3,sine)\n"
                           "[thermo]\ndphi_tol = 1e-14\n"));
    CHECK_FALSE(a.verdict("legendre_round_trip").pass);
    CHECK(exit_code(a) == 2);
}

TEST_CASE("scaling smoke: summary carries variance ratios and slopes with finite errors") {
    const auto a = run(cfg("[run]\nexperiment = scaling\nreplicas = 200\nn = 16, 32, 64\n"
                           "[model]\npotentials = perturbed(a=1,b=0.3,sine)\n"
                           "[scaling]\nT = 0.05\netas = gaussian(c=0,w=0.25)\nmin_replicas = 200\n"));
    const auto j = summary_json(a);
    const auto& e = j["estimates"]["scaling"]["perturbed(a=1,b=0.3,sine)"];
    for (const char* n : {"n=16", "n=32", "n=64"}) {
        const auto& r = e[n]["gaussian(c=0,w=0.25)"]["variance_ratio"];
        CHECK(std::isfinite(r["value"].get<double>()));
        CHECK(std::isfinite(r["se"].get<double>()));
        CHECK(r["se"].get<double>() > 0);
    }
    CHECK(e["qv_relative_error_slope"]["verdict"] == "ok");
    CHECK(std::isfinite(e["qv_relative_error_slope"]["slope"].get<double>()));
    CHECK(j["tables"].size() == 4);
}
