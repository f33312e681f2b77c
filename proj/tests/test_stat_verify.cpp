#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "coxsn/stat_verify.hpp"

using namespace coxsn;
using Catch::Approx;

namespace {

VerifyOptions fast() {
    VerifyOptions o;
    o.sampling.knots_per_unit = 64;
    o.bootstrap_resamples = 50;
    return o;
}

}  // namespace

TEST_CASE("count factorization verdicts") {
    auto det = test_count_factorization("det", Deterministic{2.0}, {{0, 1}, {1, 2}, {2, 3}}, 20000, 1, fast());
    auto gam = test_count_factorization("gamma", GammaProcess{1.0, 1.0}, {{0, 1}, {1, 2}}, 20000, 1, fast());
    auto mix = test_count_factorization("mixed", MixedPoisson{{5, 15}, {0.5, 0.5}}, {{0, 1}, {1, 2}}, 20000, 1, fast());
    CHECK(det.ok());
    CHECK(gam.ok());
    CHECK(mix.ok());
    CHECK(mix.expect_rejection);
    CHECK(mix.p_value < 1e-6);
    CHECK_THROWS_AS(test_count_factorization("one", Deterministic{1.0}, {{0, 1}}, 100, 1), std::invalid_argument);
}

TEST_CASE("count stationarity verdicts") {
    CHECK(test_count_stationarity("gamma", GammaProcess{1, 1}, 1.0, {0, 1, 2}, 20000, 2, fast()).ok());
    auto inhom = test_count_stationarity("inhom", GeneralAdditive{{LinearRate{0.0, 1.0}, DegenerateJump{1.0}}}, 1.0,
                                         {0, 1, 2}, 20000, 2, fast());
    CHECK(inhom.expect_rejection);
    CHECK(inhom.null_rejected);
}

TEST_CASE("reports are reproducible from the seed") {
    auto a = test_count_factorization("gamma", GammaProcess{1.0, 1.0}, {{0, 1}, {1, 2}}, 10000, 9, fast());
    auto b = test_count_factorization("gamma", GammaProcess{1.0, 1.0}, {{0, 1}, {1, 2}}, 10000, 9, fast());
    CHECK(a.statistic == b.statistic);
    CHECK(a.details == b.details);
    VerifyOptions two = fast();
    two.workers = 2;
    auto c = test_count_factorization("gamma", GammaProcess{1.0, 1.0}, {{0, 1}, {1, 2}}, 10000, 9, two);
    CHECK(c.statistic == a.statistic);
}

TEST_CASE("point law verdicts") {
    auto opt = fast();
    auto cdf = test_conditional_cdf("gamma", model_sampler(GammaProcess{1, 1}, opt.sampling), {{1.0, 2.0}, 2.0}, 0.5,
                                    20000, 3, opt);
    CHECK(cdf.ok());
    auto wrong = test_conditional_cdf("gamma", model_sampler(GammaProcess{1, 1}, opt.sampling), {{1.0, 2.0}, 2.0}, 0.7,
                                      20000, 3, opt);
    CHECK(wrong.null_rejected);
    MeasureModel mixed = MixedPoisson{{5, 15}, {0.5, 0.5}};
    CHECK(test_point_factorization("mixed", model_sampler(mixed), {0, 1}, {1, 2}, 20000, 4, true, false, opt).ok());
    CHECK(test_point_factorization("mixed|counts", model_sampler(mixed), {0, 1}, {1, 2}, 20000, 4, false, true, opt).ok());
    CHECK(test_point_shift("gamma", model_sampler(GammaProcess{2, 1}, opt.sampling), 1.0, 1.5, 20000, 5, false, opt).ok());
}

TEST_CASE("gamma verdicts") {
    CHECK(test_beta_ratios(1.5, 2.0, {0.5, 1.0, 2.0}, 10000, 6, fast()).ok());
    auto closed = test_gamma_closed_form(100, 7);
    CHECK(closed.ok());
    CHECK(closed.statistic < 1e-8);
}

TEST_CASE("prediction verdicts") {
    auto opt = fast();
    CHECK(test_prediction_unbiased("ref", reference_measure(), reference_payment(), 1.0, 1.0, 20000, 8, opt).ok());
    CHECK(test_prediction_tower("ref", reference_measure(), reference_payment(), 1.0, 1.0, 20000, 8, opt).ok());
    CHECK(test_prediction_information("ref", reference_measure(), reference_payment(), 1.0, 1.0, 20000, 8, opt).ok());
    auto mse = test_prediction_mse("ref", reference_measure(), reference_payment(), 1.0, 1.0, 20000, 8, 0.05, opt);
    CHECK(mse.ok());
}

TEST_CASE("figure experiment tables") {
    auto f = run_figure1_experiment(11, 500);
    REQUIRE(f.predictions.size() == 4);
    CHECK(f.backtest_mse.size() == 4);
    CHECK(f.monotone_improving);
    for (std::size_t i = 0; i < 4; ++i) {
        double s = f.lead_origins[i];
        auto h = observe(f.observed, reference_payment(), s);
        if (h.count() == 0) {
            double lead = 5.0 - s;
            CHECK(f.predictions[i].back().second - f.observed.value_at(s) ==
                  Approx(50.0 * (lead - 1 + std::exp(-lead))).epsilon(1e-12));
        }
        for (const auto& [u, v] : f.predictions[i]) CHECK(u > s);
    }
    std::ostringstream a, b;
    write_prediction_table(a, f);
    write_backtest_table(b, f);
    CHECK(a.str().rfind("s,time,prediction\n", 0) == 0);
    CHECK(b.str().rfind("s,mse,paths\n", 0) == 0);
    auto g = run_figure1_experiment(11, 500);
    CHECK(g.backtest_mse == f.backtest_mse);
    CHECK(g.observed.values() == f.observed.values());
}

TEST_CASE("suite runner covers every suite") {
    for (const char* s : {"counts", "points", "gamma", "subordination", "prediction"}) {
        CHECK_FALSE(suite_cases(s).empty());
    }
    CHECK(suite_cases("all").size() <= 40);
    CHECK_THROWS_AS(suite_cases("nope"), std::invalid_argument);
    auto res = run_suite("gamma", 10000, 12, fast());
    CHECK(res.passed());
}
