#pragma once

// Command-line front end: simulate / law / predict / verify / figure1-right.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coxsn/arrival_law.hpp"
#include "coxsn/config.hpp"
#include "coxsn/cox_process.hpp"
#include "coxsn/predictor.hpp"
#include "coxsn/shot_noise.hpp"
#include "coxsn/stat_verify.hpp"

namespace coxsn::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kSuiteFailed = 2 };

inline constexpr const char* kRecipe = R"(Reproducing the prediction figure:
  The reference configuration is a Poisson(10) counting directing measure
  with payment streams that are non-homogeneous Poisson with mean measure
  5(1 - e^{-t}), observed on [0, 5].

    coxsn simulate --config configs/fig1.json --seed 7
        writes the observed M path (time,M), the per-arrival table
        (T_j,payment_jump_times) for the left panel, and the directing path.
    coxsn figure1-right --seed 7 --out-dir fig1
        writes fig1/observed.csv, fig1/predictions.csv (s,time,prediction for
        s = 1,2,3,4), fig1/arrivals.csv and fig1/backtest.csv (MSE of the
        terminal prediction over 500 independent paths).

  Plot predictions.csv against observed.csv with any external tool.

Exit codes: 0 success, 1 validation error, 2 verification suite failure.)";

inline void write_file(const std::string& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + file + "'");
    out << text;
}

inline std::string join_path(const std::string& dir, const std::string& file) {
    if (dir.empty()) return file;
    return (std::filesystem::path(dir) / file).string();
}

template <class Writer>
std::string to_string_with(Writer&& w) {
    std::ostringstream os;
    w(os);
    return os.str();
}

inline json report_json(const TestReport& r) {
    json d = json::object();
    for (const auto& [k, v] : r.details) d[k] = std::isfinite(v) ? json(v) : json(nullptr);
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    std::string verdict = r.null_rejected ? "FAIL" : "PASS";
    return {{"name", r.name},
            {"method", r.method},
            {"statistic", num(r.statistic)},
            {"p_value", num(r.p_value)},
            {"alpha", r.alpha},
            {"reps", r.reps},
            {"seed", r.seed},
            {"attempts", r.attempts},
            {"verdict", verdict},
            {"expected_verdict", r.expect_rejection ? "FAIL" : "PASS"},
            {"as_expected", r.ok()},
            {"details", d}};
}

/// History CSV: header line, then one row per arrival "T_j[,payment jump times...]"
/// with absolute payment times.
inline ObservedHistory read_history(const std::string& file, double s, const PaymentModel& payment) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open '" + file + "'");
    ObservedHistory h;
    h.s = s;
    h.payment = payment;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("T_j", 0) == 0) continue;
        }
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> row;
        while (std::getline(ss, tok, ',')) {
            try {
                row.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw ConfigError("history: bad number '" + tok + "'");
            }
        }
        if (row.empty()) continue;
        double tj = row[0];
        if (tj > s) continue;  // not yet observed
        PaymentPath p;
        for (std::size_t i = 1; i < row.size(); ++i) {
            if (row[i] < tj) throw ConfigError("history: payment time before its arrival");
            if (row[i] <= s) p.jumps.push_back(row[i] - tj);
        }
        std::sort(p.jumps.begin(), p.jumps.end());
        h.arrivals.push_back(tj);
        h.payments.push_back(std::move(p));
    }
    std::vector<std::size_t> order(h.arrivals.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return h.arrivals[a] < h.arrivals[b]; });
    ObservedHistory sorted{h.s, {}, {}, h.payment};
    for (auto i : order) {
        sorted.arrivals.push_back(h.arrivals[i]);
        sorted.payments.push_back(h.payments[i]);
    }
    try {
        sorted.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("history: ") + e.what());
    }
    return sorted;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Cox process and shot-noise simulation, exact laws, prediction and verification"};
    app.footer(kRecipe);
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Simulate M, N and the directing path from a config file");
    std::string sim_config, sim_out_dir;
    std::uint64_t sim_seed = 0;
    bool sim_seed_set = false;
    sim->add_option("--config", sim_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sim->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { sim_seed = v, sim_seed_set = true; }, "Override the config seed");
    sim->add_option("--out-dir", sim_out_dir, "Directory for CSV outputs named in the config");

    // law
    auto* law = app.add_subcommand("law", "Exact joint laws of arrival points and counts (JSON records)");
    std::string law_model;
    std::size_t law_n = 0;
    double law_t = 0.0;
    std::vector<double> law_thresholds;
    double law_t1 = NAN, law_t2 = NAN;
    law->add_option("--model", law_model,
                    "gamma:SHAPE,RATE | poisson:RATE | deterministic:SLOPE | compound_poisson:RATE,EXP_RATE | "
                    "mixed_poisson:V1,V2,...")
        ->required();
    law->add_option("--n", law_n, "Number of points")->required();
    law->add_option("--t", law_t, "Horizon t")->required();
    law->add_option("--t1", law_t1, "First threshold");
    law->add_option("--t2", law_t2, "Second threshold");
    law->add_option("--thresholds", law_thresholds, "All thresholds t_1 <= ... <= t_n")->delimiter(',');

    // predict
    auto* pred = app.add_subcommand("predict", "Predict M(s, s+t] from an observed history");
    std::string pred_config, pred_history;
    double pred_s = 0.0, pred_t = 0.0;
    bool pred_debug_mse = false;
    pred->add_option("--config", pred_config, "Experiment config (measure and payment)")
        ->required()
        ->check(CLI::ExistingFile);
    pred->add_option("--history", pred_history, "History CSV: T_j[,payment jump times]")
        ->required()
        ->check(CLI::ExistingFile);
    pred->add_option("--s", pred_s, "Observation time s")->required();
    pred->add_option("--t", pred_t, "Lead time t")->required();
    pred->add_flag("--debug-mse", pred_debug_mse, "Also print the unconditional MSE under both integration domains");

    // verify
    auto* ver = app.add_subcommand("verify", "Run a seeded verification suite");
    std::string ver_suite = "all", ver_out;
    std::size_t ver_reps = 100000;
    std::uint64_t ver_seed = 1;
    unsigned ver_workers = 0;
    int ver_knots = SampleOptions{}.knots_per_unit;
    ver->add_option("--suite", ver_suite, "Suite")
        ->check(CLI::IsMember({"counts", "points", "gamma", "subordination", "prediction", "all"}));
    ver->add_option("--reps", ver_reps, "Replications per test")->check(CLI::Range(std::size_t{100}, std::size_t{100000000}));
    ver->add_option("--seed", ver_seed, "Seed");
    ver->add_option("--out", ver_out, "Report file (JSON)");
    ver->add_option("--workers", ver_workers, "Worker threads (0 = all cores)");
    ver->add_option("--knots", ver_knots, "Grid knots per unit time for Gamma paths")->check(CLI::PositiveNumber);

    // figure1-right
    auto* fig = app.add_subcommand("figure1-right", "Observed path and predictors from s = 1..4 (CSV tables)");
    std::uint64_t fig_seed = 7;
    std::size_t fig_paths = 500;
    std::string fig_out_dir;
    fig->add_option("--seed", fig_seed, "Seed");
    fig->add_option("--paths", fig_paths, "Backtest paths")->check(CLI::PositiveNumber);
    fig->add_option("--out-dir", fig_out_dir, "Directory for the CSV tables (stdout summary only if empty)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kValidation;
    }

    try {
        if (*sim) {
            auto cfg = load_experiment(sim_config);
            if (sim_seed_set) cfg.seed = sim_seed;
            auto rng = make_stream(cfg.seed, 0x51, 0);
            auto path = simulate_M(cfg.measure, cfg.payment, cfg.horizon, cfg.grid, rng, cfg.sampling());
            if (!sim_out_dir.empty()) std::filesystem::create_directories(sim_out_dir);
            bool any = false;
            auto emit = [&](const std::string& name, const std::string& text) {
                if (name.empty()) return;
                write_file(join_path(sim_out_dir, name), text);
                any = true;
            };
            emit(cfg.outputs.path, to_string_with([&](std::ostream& os) { write_csv(os, path); }));
            emit(cfg.outputs.arrivals, to_string_with([&](std::ostream& os) { write_arrival_table(os, path); }));
            emit(cfg.outputs.measure, to_string_with([&](std::ostream& os) { write_csv(os, path.cox().path()); }));
            emit(cfg.outputs.cox, to_string_with([&](std::ostream& os) { write_csv(os, path.cox()); }));
            if (!any) write_csv(out, path);
            return kOk;
        }
        if (*law) {
            auto spec = measure_json_from_shorthand(law_model);
            auto model = parse_measure(spec);
            std::vector<double> t = law_thresholds;
            if (t.empty()) {
                if (!std::isnan(law_t1)) t.push_back(law_t1);
                if (!std::isnan(law_t2)) t.push_back(law_t2);
            }
            if (t.size() != law_n) {
                throw ConfigError("expected " + std::to_string(law_n) + " thresholds, got " + std::to_string(t.size()));
            }
            JointQuery q{t, law_t};
            try {
                q.validate();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
            json query = {{"model", spec}, {"n", law_n}, {"thresholds", t}, {"t", law_t}};
            auto record = [&](const std::string& what, double value, const std::string& method) {
                json q2 = query;
                q2["quantity"] = what;
                out << json{{"query", q2}, {"value", value}, {"method", method}}.dump() << '\n';
            };
            model.require_additive("law");
            double joint = joint_prob(model, q);
            double count = count_pmf(model, {0.0, law_t}, static_cast<int>(law_n));
            if (const auto* g = std::get_if<GammaProcess>(&model.variant())) {
                record("conditional_cdf", gamma_conditional_cdf(g->shape, q), "gamma closed form");
                record("joint_prob", gamma_joint_prob(g->shape, g->rate, q), "gamma closed form");
            } else {
                record("conditional_cdf", count > 0.0 ? joint / count : 0.0, "expansion / count pmf");
            }
            record("joint_prob", joint, "expansion");
            record("count_pmf", count, "Leibniz recursion");
            return kOk;
        }
        if (*pred) {
            auto cfg = load_experiment(pred_config);
            auto h = read_history(pred_history, pred_s, cfg.payment);
            double p = predict(h, cfg.measure, pred_t);
            double v = predictive_variance(h, cfg.measure, pred_t);
            json o = {{"s", pred_s}, {"t", pred_t}, {"prediction", p}, {"predictive_sd", std::sqrt(std::max(v, 0.0))}};
            if (pred_debug_mse) {
                o["unconditional_mse"] = unconditional_mse(cfg.measure, cfg.payment, pred_s, pred_t, MseForm::tower);
                o["unconditional_mse_literal_domain"] =
                    unconditional_mse(cfg.measure, cfg.payment, pred_s, pred_t, MseForm::literal);
            }
            out << o.dump(2) << '\n';
            return kOk;
        }
        if (*ver) {
            VerifyOptions opt;
            opt.workers = ver_workers;
            opt.sampling.knots_per_unit = ver_knots;
            auto result = run_suite(ver_suite, ver_reps, ver_seed, opt, 2, [&](const TestReport& r) {
                err << (r.ok() ? "ok   " : "MISS ") << r.name << "  (" << r.method << ", stat " << r.statistic
                    << ", p " << r.p_value << ", attempt " << r.attempts << ")\n";
            });
            json tests = json::array();
            for (const auto& r : result.reports) tests.push_back(report_json(r));
            json report = {{"config",
                            {{"suite", ver_suite},
                             {"reps", ver_reps},
                             {"seed", ver_seed},
                             {"knots_per_unit", ver_knots},
                             {"alpha", 0.01},
                             {"retry_policy", "at most 2 misses re-run once at 10x replications"}}},
                           {"initial_misses", result.initial_failures},
                           {"passed", result.passed()},
                           {"tests", tests}};
            if (ver_out.empty()) {
                out << report.dump(2) << '\n';
            } else {
                write_file(ver_out, report.dump(2) + "\n");
            }
            return result.passed() ? kOk : kSuiteFailed;
        }
        if (*fig) {
            auto f = run_figure1_experiment(fig_seed, fig_paths);
            if (!fig_out_dir.empty()) {
                std::filesystem::create_directories(fig_out_dir);
                write_file(join_path(fig_out_dir, "observed.csv"),
                           to_string_with([&](std::ostream& os) { write_csv(os, f.observed); }));
                write_file(join_path(fig_out_dir, "arrivals.csv"),
                           to_string_with([&](std::ostream& os) { write_arrival_table(os, f.observed); }));
                write_file(join_path(fig_out_dir, "predictions.csv"),
                           to_string_with([&](std::ostream& os) { write_prediction_table(os, f); }));
                write_file(join_path(fig_out_dir, "backtest.csv"),
                           to_string_with([&](std::ostream& os) { write_backtest_table(os, f); }));
            }
            json summary = {{"seed", fig_seed},
                            {"lead_origins", f.lead_origins},
                            {"backtest_paths", f.backtest_paths},
                            {"backtest_mse", f.backtest_mse},
                            {"monotone_improving", f.monotone_improving},
                            {"observed_M_at_horizon", f.observed.values().back()}};
            out << summary.dump(2) << '\n';
            return kOk;
        }
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }
    return kValidation;
}

}  // namespace coxsn::cli
