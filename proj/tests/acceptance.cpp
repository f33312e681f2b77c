// Acceptance suite: one PASS/FAIL line per criterion, pinned tolerances.
//
// Exit status is 0 when every criterion passes except the documented known
// failure 6a (the stated constant contradicts criterion 7; see README).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "coxsn/arrival_law.hpp"
#include "coxsn/predictor.hpp"
#include "coxsn/shot_noise.hpp"
#include "coxsn/stat_verify.hpp"
#include "test_support.hpp"

using namespace coxsn;

namespace {

constexpr std::uint64_t kSeed = 20240601;

std::ofstream report;  // optional copy of every line (--report FILE)

void emit(const std::string& line) {
    std::cout << line << std::endl;
    if (report) report << line << std::endl;
}

struct Outcome {
    std::string id;
    std::string what;
    bool pass = false;
    bool known_failure = false;
    double seconds = 0.0;
    double limit = 0.0;  // 0: no runtime bound
    std::string note{};
    std::vector<double> fingerprint{};
};

using Criterion = std::function<Outcome()>;

Outcome timed(const Criterion& c) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o = c();
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.limit > 0.0 && o.seconds > o.limit) {
        o.pass = false;
        o.note += " runtime over limit;";
    }
    return o;
}

void print(const Outcome& o) {
    std::ostringstream line;
    line << "criterion " << o.id << ": " << (o.pass ? "PASS" : (o.known_failure ? "FAIL (known)" : "FAIL")) << "  "
         << o.what << "  [" << std::fixed;
    line.precision(2);
    line << o.seconds << " s";
    if (o.limit > 0.0) line << " / limit " << o.limit << " s";
    line << "]";
    if (!o.note.empty()) line << "  " << o.note;
    emit(line.str());
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void absorb(Outcome& o, const TestReport& r) {
    o.fingerprint.push_back(r.statistic);
    o.fingerprint.push_back(r.p_value);
    if (!r.ok()) o.note += " unexpected verdict: " + r.name + " (stat " + fmt(r.statistic) + ");";
}

// 1. Laplace derivatives against Richardson finite differences.
Outcome c1() {
    Outcome o{"1", "laplace_derivative vs finite differences, rel 1e-5, l <= 4"};
    o.limit = 1.0;
    const std::vector<MeasureModel> models{GammaProcess{1.0, 1.0}, GammaProcess{2.5, 0.7}, PoissonCounting{3.0},
                                           CompoundPoisson{2.0, ExponentialJump{1.5}},
                                           CompoundPoisson{1.0, GammaJump{2.0, 3.0}}};
    const Interval iv{0.5, 1.7};
    double worst = 0.0;
    for (const auto& m : models) {
        auto phi = [&](double u) { return laplace(m, iv, u); };
        for (double u : {0.25, 1.0, 2.0}) {
            for (int l = 1; l <= 4; ++l) {
                double exact = laplace_derivative(m, iv, l, u);
                double fd = testing::richardson_derivative(phi, u, l, 0.08);
                double rel = std::abs(exact - fd) / std::max(std::abs(fd), 1e-300);
                worst = std::max(worst, rel);
                o.fingerprint.push_back(exact);
            }
        }
    }
    o.pass = worst <= 1e-5;
    o.note = "max rel error " + fmt(worst) + ";";
    return o;
}

// 2. Gamma closed form vs expansion.
Outcome c2() {
    Outcome o{"2", "gamma_joint_prob == joint_prob(Gamma), rel 1e-8, n <= 6, 100 queries"};
    o.limit = 10.0;
    auto r = test_gamma_closed_form(100, kSeed, 1e-8);
    o.pass = r.ok();
    o.note = "max rel error " + fmt(r.statistic) + ";";
    o.fingerprint = {r.statistic};
    return o;
}

// 3. Conditional CDF for gamma=1, (t1,t2,t)=(1,2,2).
Outcome c3() {
    Outcome o{"3", "gamma conditional CDF (1,2,2) = 0.5 exactly; MC over 1e5 within 4 SE"};
    o.limit = 60.0;
    JointQuery q{{1.0, 2.0}, 2.0};
    double exact = gamma_conditional_cdf(1.0, q);
    double via_expansion = joint_prob(GammaProcess{1.0, 1.0}, q) / count_pmf(GammaProcess{1.0, 1.0}, {0.0, 2.0}, 2);
    auto r = test_conditional_cdf("gamma conditional CDF", model_sampler(GammaProcess{1.0, 1.0}), q, exact, 100000,
                                  kSeed);
    bool exact_ok = exact == 0.5 && std::abs(via_expansion - 0.5) <= 1e-12;
    o.pass = exact_ok && r.ok();
    o.note = "closed form " + fmt(exact) + ", expansion " + fmt(via_expansion) + ", |z| " + fmt(r.statistic) + ";";
    o.fingerprint = {exact, via_expansion, r.statistic};
    return o;
}

Outcome run_suite_criterion(const std::string& id, const std::string& what, const std::string& suite,
                            std::size_t reps, double limit) {
    Outcome o{id, what};
    o.limit = limit;
    // suite retry policy: at most 2 misses, re-run once at the same size with seed + 1
    auto res = run_suite(suite, reps, kSeed, {}, 2, {}, 1);
    o.pass = res.passed();
    std::size_t expected_fail = 0;
    for (const auto& r : res.reports) {
        absorb(o, r);
        expected_fail += r.expect_rejection;
        if (r.attempts > 1) o.note += " retried: " + r.name + " (p " + fmt(r.p_value) + ");";
    }
    o.note += " " + std::to_string(res.reports.size()) + " tests, " + std::to_string(expected_fail) +
              " required to reject, " + std::to_string(res.initial_failures) + " initial misses;";
    return o;
}

// 4. Counts: factorization and stationarity.
Outcome c4() {
    return run_suite_criterion("4",
                               "count factorization/stationarity chi-square at alpha 0.01, 1e5 reps "
                               "(mixed Poisson and inhomogeneous must reject)",
                               "counts", 100000, 300.0);
}

// 5. Subordination.
Outcome c5() {
    return run_suite_criterion("5", "subordinated Poisson(1) o Gamma(1,1) independent stationary increments", "subordination",
                               100000, 0.0);
}

double closed_future(double t) { return 50.0 * (t - 1.0 + std::exp(-t)); }

// 6a as stated: 10 (t - 1 + e^{-t}).
Outcome c6a() {
    Outcome o{"6a", "predictor with N(s)=0 equals 10(t-1+e^{-t}) to 1e-12"};
    o.known_failure = true;
    double worst = 0.0;
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
        ObservedHistory h;
        h.payment = reference_payment();
        double p = predict(h, reference_measure(), t);
        worst = std::max(worst, std::abs(p - 10.0 * (t - 1.0 + std::exp(-t))));
        o.fingerprint.push_back(p);
    }
    o.pass = worst <= 1e-12;
    o.note = "max deviation " + fmt(worst) +
             "; the stated constant is inconsistent with mean_M(1) = 50e^{-1} (criterion 7);";
    return o;
}

// 6a with the constant implied by the configuration.
Outcome c6a_consistent() {
    Outcome o{"6a'", "predictor with N(s)=0 equals 50(t-1+e^{-t}) to 1e-12 (consistent constant)"};
    double worst = 0.0;
    for (double t : {0.5, 1.0, 2.0, 4.0}) {
        ObservedHistory h;
        h.payment = reference_payment();
        double p = predict(h, reference_measure(), t);
        worst = std::max(worst, std::abs(p - closed_future(t)) / std::max(1.0, closed_future(t)));
        o.fingerprint.push_back(p);
    }
    o.pass = worst <= 1e-12;
    o.note = "max deviation " + fmt(worst) + ";";
    return o;
}

Outcome c6b() {
    Outcome o{"6b", "mean of M(s,s+t] - predict within 4 SE of 0 over 1e5 histories (s=t=1)"};
    auto r = test_prediction_unbiased("unbiased", reference_measure(), reference_payment(), 1.0, 1.0, 100000, kSeed);
    o.pass = r.ok();
    o.note = "|z| " + fmt(r.statistic) + ";";
    o.fingerprint = {r.statistic};
    return o;
}

Outcome c6c() {
    Outcome o{"6c", "empirical MSE vs unconditional_mse within 5% at 1e6 paths (s=t=1)"};
    o.limit = 600.0;
    auto r = test_prediction_mse("mse", reference_measure(), reference_payment(), 1.0, 1.0, 1000000, kSeed, 0.05);
    o.pass = r.ok();
    double emp = 0.0, exact = 0.0;
    for (const auto& [k, v] : r.details) {
        if (k == "empirical_mse") emp = v;
        if (k == "unconditional_mse") exact = v;
    }
    o.note = "empirical " + fmt(emp) + ", exact " + fmt(exact) + ", rel " + fmt(r.statistic) + ";";
    o.fingerprint = {r.statistic, emp};
    return o;
}

// 7. mean_M(1) = 50 e^{-1}.
Outcome c7() {
    Outcome o{"7", "mean_M(1) = 50e^{-1} by quadrature (rel 1e-10) and within 3 SE by MC (1e5 paths)"};
    double q = mean_M(reference_measure(), reference_payment(), 1.0);
    double target = 50.0 * std::exp(-1.0);
    const std::size_t reps = 100000;
    std::vector<double> m(reps);
    for_each_replication(reps, [&](std::size_t r) {
        auto rng = make_stream(kSeed, 0x1700, r);
        m[r] = simulate_M(reference_measure(), reference_payment(), 1.0, {1.0}, rng).values()[0];
    });
    auto s = testing::summarize(m);
    double z = (s.mean - target) / s.se;
    o.pass = std::abs(q - target) <= 1e-10 * target && std::abs(z) <= 3.0;
    o.note = "quadrature " + fmt(q) + ", MC " + fmt(s.mean) + " +/- " + fmt(s.se) + ", z " + fmt(z) + ";";
    o.fingerprint = {q, s.mean, s.se};
    return o;
}

// 8. Figure-style experiment.
Outcome c8() {
    Outcome o{"8", "observed path + four predictor tables; MSE monotone over s in {1,2,3,4} on 500 paths"};
    auto f = run_figure1_experiment(7, 500);
    std::ostringstream a, b, c;
    write_csv(a, f.observed);
    write_prediction_table(b, f);
    write_backtest_table(c, f);
    bool tables = f.lead_origins.size() == 4 && f.predictions.size() == 4 && a.str().rfind("time,M\n", 0) == 0 &&
                  b.str().rfind("s,time,prediction\n", 0) == 0;
    o.pass = tables && f.monotone_improving;
    o.note = "backtest MSE";
    for (double v : f.backtest_mse) o.note += " " + fmt(v);
    o.note += ";";
    o.fingerprint = f.backtest_mse;
    for (double v : f.observed.values()) o.fingerprint.push_back(v);
    return o;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

int main(int argc, char** argv) {
    bool skip_rerun = false;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--no-rerun") {
            skip_rerun = true;
        } else if (a == "--report" && i + 1 < argc) {
            report.open(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--no-rerun] [--report FILE]\n";
            return 2;
        }
    }
    std::vector<std::pair<std::string, Criterion>> all{{"1", c1},   {"2", c2},   {"3", c3},  {"4", c4},
                                                       {"5", c5},   {"6a", c6a}, {"6a'", c6a_consistent},
                                                       {"6b", c6b}, {"6c", c6c}, {"7", c7},  {"8", c8}};
    std::vector<Outcome> first;
    bool ok = true;
    for (const auto& [id, c] : all) {
        first.push_back(timed(c));
        print(first.back());
        if (!first.back().pass && !first.back().known_failure) ok = false;
    }

    Outcome nine{"9", "every criterion bit-reproducible under the fixed seed (full rerun)"};
    if (skip_rerun) {
        nine.note = "skipped (--no-rerun);";
        nine.pass = false;
        ok = false;
    } else {
        auto t0 = std::chrono::steady_clock::now();
        nine.pass = true;
        for (std::size_t i = 0; i < all.size(); ++i) {
            Outcome again = all[i].second();
            if (!same_bits(first[i].fingerprint, again.fingerprint) || first[i].pass != again.pass) {
                nine.pass = false;
                nine.note += " criterion " + all[i].first + " differs;";
            }
        }
        nine.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (nine.pass) nine.note = std::to_string(all.size()) + " fingerprints identical;";
        if (!nine.pass) ok = false;
    }
    print(nine);
    emit(ok ? "ACCEPTANCE: all criteria pass except the documented known failure 6a" : "ACCEPTANCE: unexpected failure");
    return ok ? 0 : 1;
}
