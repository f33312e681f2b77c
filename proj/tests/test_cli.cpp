#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_app.hpp"

namespace fs = std::filesystem;
using Catch::Approx;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args) {
    args.insert(args.begin(), "coxsn");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    int code = coxsn::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const fs::path& dir) {
    auto p = dir / "cfg.json";
    std::ofstream(p) << R"({
        "measure": {"type": "poisson", "rate": 10},
        "payment": {"type": "exponential_decay"},
        "horizon": 5,
        "grid": {"points": 50},
        "seed": 7,
        "outputs": {"path": "m.csv", "arrivals": "arrivals.csv", "measure": "eta.csv", "cox": "cox.csv"}
    })";
    return p;
}

}  // namespace

TEST_CASE("simulate is byte-identical across runs and seed-sensitive") {
    TempDir tmp("coxsn_cli_sim");
    auto cfg = write_config(tmp.path).string();
    auto a = tmp.path / "a", b = tmp.path / "b", c = tmp.path / "c";
    REQUIRE(call({"simulate", "--config", cfg, "--out-dir", a.string()}).code == 0);
    REQUIRE(call({"simulate", "--config", cfg, "--out-dir", b.string()}).code == 0);
    REQUIRE(call({"simulate", "--config", cfg, "--seed", "8", "--out-dir", c.string()}).code == 0);
    for (const char* f : {"m.csv", "arrivals.csv", "eta.csv", "cox.csv"}) {
        INFO(f);
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(slurp(a / "m.csv") != slurp(c / "m.csv"));
    CHECK(slurp(a / "m.csv").rfind("time,M\n", 0) == 0);
    CHECK(slurp(a / "arrivals.csv").rfind("T_j,payment_jump_times\n", 0) == 0);
}

TEST_CASE("law prints JSON records") {
    auto r = call({"law", "--model", "gamma:1,1", "--n", "1", "--t1", "0.5", "--t", "1"});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string first;
    std::getline(lines, first);
    auto rec = coxsn::json::parse(first);
    CHECK(rec["query"]["quantity"] == "conditional_cdf");
    CHECK(rec["value"].get<double>() == Approx(0.5).margin(1e-14));
    CHECK(rec.contains("method"));

    auto two = call({"law", "--model", "gamma:1,1", "--n", "2", "--thresholds", "1,2", "--t", "2"});
    REQUIRE(two.code == 0);
    CHECK(coxsn::json::parse(two.out.substr(0, two.out.find('\n')))["value"].get<double>() == 0.5);

    CHECK(call({"law", "--model", "gamma:1,1", "--n", "2", "--t1", "0.5", "--t", "1"}).code == 1);
    CHECK(call({"law", "--model", "gamma:1,1", "--n", "1", "--t1", "2", "--t", "1"}).code == 1);
    CHECK(call({"law", "--model", "mixed_poisson:1,2", "--n", "1", "--t1", "0.5", "--t", "1"}).code == 1);
}

TEST_CASE("predict from a history file") {
    TempDir tmp("coxsn_cli_pred");
    auto cfg = write_config(tmp.path).string();
    auto empty = tmp.path / "empty.csv";
    std::ofstream(empty) << "T_j,payment_jump_times\n";
    auto r = call({"predict", "--config", cfg, "--history", empty.string(), "--s", "0.5", "--t", "2"});
    REQUIRE(r.code == 0);
    auto o = coxsn::json::parse(r.out);
    CHECK(o["prediction"].get<double>() == Approx(50.0 * (2.0 - 1.0 + std::exp(-2.0))).epsilon(1e-12));
    CHECK(o["predictive_sd"].get<double>() > 0.0);
    CHECK_FALSE(o.contains("unconditional_mse"));

    auto one = tmp.path / "one.csv";
    std::ofstream(one) << "T_j,payment_jump_times\n0.2,0.3,0.4\n";
    auto d = call({"predict", "--config", cfg, "--history", one.string(), "--s", "0.5", "--t", "2", "--debug-mse"});
    REQUIRE(d.code == 0);
    auto od = coxsn::json::parse(d.out);
    CHECK(od["prediction"].get<double>() > o["prediction"].get<double>());
    CHECK(od["unconditional_mse_literal_domain"].get<double>() > od["unconditional_mse"].get<double>());

    auto bad = tmp.path / "bad.csv";
    std::ofstream(bad) << "T_j\n0.3,0.1\n";
    CHECK(call({"predict", "--config", cfg, "--history", bad.string(), "--s", "0.5", "--t", "2"}).code == 1);
}

TEST_CASE("verify writes a report with the resolved options") {
    TempDir tmp("coxsn_cli_verify");
    auto out = (tmp.path / "report.json").string();
    auto r = call({"verify", "--suite", "gamma", "--reps", "2000", "--seed", "3", "--knots", "64", "--out", out});
    REQUIRE(r.code == 0);
    auto rep = coxsn::json::parse(slurp(out));
    CHECK(rep["passed"] == true);
    CHECK(rep["config"]["knots_per_unit"] == 64);
    CHECK(rep["config"]["seed"] == 3);
    CHECK(rep["tests"].size() == 3);
    auto again = (tmp.path / "again.json").string();
    REQUIRE(call({"verify", "--suite", "gamma", "--reps", "2000", "--seed", "3", "--knots", "64", "--out", again}).code ==
            0);
    CHECK(slurp(out) == slurp(again));
}

TEST_CASE("figure1-right writes the tables") {
    TempDir tmp("coxsn_cli_fig");
    auto r = call({"figure1-right", "--seed", "7", "--paths", "100", "--out-dir", tmp.path.string()});
    REQUIRE(r.code == 0);
    for (const char* f : {"observed.csv", "predictions.csv", "arrivals.csv", "backtest.csv"}) CHECK(fs::exists(tmp.path / f));
    CHECK(slurp(tmp.path / "predictions.csv").rfind("s,time,prediction\n", 0) == 0);
    CHECK(coxsn::json::parse(r.out)["lead_origins"].size() == 4);
}

TEST_CASE("exit codes and help") {
    auto help = call({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("figure1-right --seed 7") != std::string::npos);
    CHECK(call({}).code == 1);
    CHECK(call({"bogus"}).code == 1);
    CHECK(call({"simulate", "--config", "/nonexistent.json"}).code == 1);
    CHECK(call({"verify", "--suite", "nope"}).code == 1);
    CHECK(call({"verify", "--reps", "5"}).code == 1);
}
