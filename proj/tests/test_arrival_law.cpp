#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include <boost/math/distributions/poisson.hpp>
#include <boost/math/special_functions/factorials.hpp>

#include "coxsn/arrival_law.hpp"
#include "coxsn/cox_process.hpp"
#include "coxsn/errors.hpp"
#include "test_support.hpp"

using namespace coxsn;
using Catch::Approx;

namespace {

// prod_j (D_1 + ... + D_j) expanded by repeated polynomial multiplication.
std::map<std::vector<int>, std::uint64_t> brute_expansion(std::size_t n) {
    std::map<std::vector<int>, std::uint64_t> poly{{std::vector<int>(n, 0), 1}};
    for (std::size_t j = 0; j < n; ++j) {
        std::map<std::vector<int>, std::uint64_t> next;
        for (const auto& [k, c] : poly) {
            for (std::size_t i = 0; i <= j; ++i) {
                auto kk = k;
                ++kk[i];
                next[kk] += c;
            }
        }
        poly = std::move(next);
    }
    return poly;
}

std::vector<double> random_thresholds(Rng& rng, std::size_t n, double horizon, double step = 0.0) {
    std::vector<double> t(n);
    for (auto& v : t) {
        v = horizon * uniform_open(rng);
        if (step > 0.0) v = std::max(step, std::ceil(v / step) * step);
    }
    std::sort(t.begin(), t.end());
    return t;
}

}  // namespace

TEST_CASE("expansion coefficients match a symbolic product") {
    const std::uint64_t catalan[] = {1, 1, 2, 5, 14, 42, 132, 429, 1430};
    for (std::size_t n = 1; n <= 8; ++n) {
        std::vector<double> t(n);
        for (std::size_t j = 0; j < n; ++j) t[j] = static_cast<double>(j + 1);
        auto terms = expansion_terms(t);
        auto brute = brute_expansion(n);
        CHECK(terms.size() == catalan[n]);
        CHECK(brute.size() == terms.size());
        std::uint64_t sum = 0;
        for (const auto& term : terms) {
            REQUIRE(brute.count(term.exponents) == 1);
            CHECK(brute[term.exponents] == term.coefficient);
            sum += term.coefficient;
        }
        CHECK(static_cast<double>(sum) == boost::math::factorial<double>(static_cast<unsigned>(n)));
    }
}

TEST_CASE("repeated thresholds prune empty increments") {
    auto terms = expansion_terms({0.5, 0.5, 1.0});
    for (const auto& t : terms) CHECK(t.exponents[1] == 0);
    std::uint64_t sum = 0;
    for (const auto& t : terms) sum += t.coefficient;
    CHECK(sum < 6);
}

TEST_CASE("joint_prob boundary cases") {
    CHECK(joint_prob(GammaProcess{1.5, 2.0}, {{}, 1.3}) == laplace(GammaProcess{1.5, 2.0}, {0.0, 1.3}, 1.0));
    CHECK(joint_prob(Deterministic{1.0}, {{1.0}, 1.0}) == Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK_THROWS_AS(joint_prob(MixedPoisson{{5, 15}, {0.5, 0.5}}, {{0.5}, 1.0}), NonAdditiveModel);
    std::vector<double> many(13, 0.5);
    CHECK_THROWS_AS(joint_prob(PoissonCounting{1.0}, {many, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(joint_prob(PoissonCounting{1.0}, {{0.7, 0.3}, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(joint_prob(PoissonCounting{1.0}, {{1.5}, 1.0}), std::invalid_argument);
}

TEST_CASE("joint_prob with all thresholds at the horizon equals count_pmf") {
    std::vector<MeasureModel> models{GammaProcess{1.5, 2.0}, PoissonCounting{10.0},
                                     CompoundPoisson{2.0, GammaJump{2.0, 1.0}}, Deterministic{2.5}};
    for (const auto& m : models) {
        for (std::size_t n = 0; n <= 8; ++n) {
            std::vector<double> t(n, 1.4);
            CHECK(joint_prob(m, {t, 1.4}) == Approx(count_pmf(m, {0.0, 1.4}, static_cast<int>(n))).epsilon(1e-12));
        }
    }
}

TEST_CASE("joint_prob is non-decreasing in each threshold") {
    auto rng = make_stream(41, 0, 0);
    MeasureModel m = CompoundPoisson{3.0, ExponentialJump{1.5}};
    for (int rep = 0; rep < 200; ++rep) {
        std::size_t n = 1 + static_cast<std::size_t>(uniform_open(rng) * 5);
        auto t = random_thresholds(rng, n, 2.0);
        double base = joint_prob(m, {t, 2.0});
        REQUIRE(base >= 0.0);
        REQUIRE(base <= 1.0);
        for (std::size_t j = 0; j < n; ++j) {
            auto up = t;
            double cap = j + 1 < n ? t[j + 1] : 2.0;
            up[j] = t[j] + (cap - t[j]) * uniform_open(rng);
            REQUIRE(joint_prob(m, {up, 2.0}) >= base * (1 - 1e-12));
        }
    }
}

TEST_CASE("count_pmf reference values") {
    boost::math::poisson_distribution<double> pois(2.5 * 0.8);
    for (int l = 0; l <= 10; ++l) {
        CHECK(count_pmf(Deterministic{2.5}, {0.2, 1.0}, l) == Approx(boost::math::pdf(pois, l)).epsilon(1e-12));
    }
    CHECK(count_pmf(PoissonCounting{10}, {0.0, 1.0}, 0) == Approx(std::exp(10 * (std::exp(-1.0) - 1))).epsilon(1e-14));
    auto table = count_pmf_table(PoissonCounting{10}, {0.0, 1.0});
    double sum = 0.0;
    for (double p : table) sum += p;
    CHECK(sum >= 1 - 1e-8);
    CHECK(sum <= 1 + 1e-12);
}

TEST_CASE("gamma count pmf matches the mixture integral") {
    const double shape = 2.0, rate = 1.5, len = 0.8;
    const double a = shape * len;
    for (int l = 0; l <= 12; ++l) {
        double oracle = testing::kronrod(
            [&](double x) {
                if (x <= 0.0) return 0.0;
                return std::exp(l * std::log(x) - x - std::lgamma(l + 1.0) + a * std::log(rate) + (a - 1) * std::log(x) -
                                rate * x - std::lgamma(a));
            },
            0.0, 100.0);
        double closed = std::exp(std::lgamma(a + l) - std::lgamma(a) - std::lgamma(l + 1.0) + a * std::log(rate) -
                                 (a + l) * std::log1p(rate));
        CHECK(count_pmf(GammaProcess{shape, rate}, {0.5, 1.3}, l) == Approx(oracle).epsilon(1e-8));
        CHECK(closed == Approx(oracle).epsilon(1e-8));
    }
}

TEST_CASE("gamma closed form reference values") {
    CHECK(gamma_conditional_cdf(1.3, {{1.0}, 1.0}) == 1.0);
    CHECK(gamma_conditional_cdf(1.0, {{1.0, 2.0}, 2.0}) == 0.5);
    CHECK(gamma_conditional_cdf(1.0, {{0.5}, 1.0}) == Approx(0.5));
    CHECK(gamma_joint_prob(1.0, 1.0, {{0.5}, 1.0}) == Approx(0.125).epsilon(1e-14));
    // E eta e^{-eta} for Gamma(1,1) by the mixture integral
    double oracle = testing::kronrod([](double x) { return x * std::exp(-2 * x); }, 0.0, 100.0);
    CHECK(0.5 * oracle == Approx(0.125).epsilon(1e-12));
    // tied thresholds: both points below 0.5 with probability E[R^2]
    CHECK(gamma_conditional_cdf(1.0, {{0.5, 0.5}, 1.0}) == Approx(0.5 * 1.5 / 2.0).epsilon(1e-14));
}

TEST_CASE("gamma closed form agrees with the expansion") {
    auto rng = make_stream(42, 0, 0);
    for (int rep = 0; rep < 200; ++rep) {
        double shape = 0.2 + 3 * uniform_open(rng);
        double rate = 0.2 + 3 * uniform_open(rng);
        double horizon = 0.5 + 2 * uniform_open(rng);
        std::size_t n = static_cast<std::size_t>(uniform_open(rng) * 7);
        auto t = random_thresholds(rng, n, horizon, rep % 3 == 0 ? horizon / 4 : 0.0);
        JointQuery q{t, horizon};
        INFO("rep " << rep);
        CHECK(gamma_joint_prob(shape, rate, q) == Approx(joint_prob(GammaProcess{shape, rate}, q)).epsilon(1e-8));
    }
}

TEST_CASE("expansion equals the path average of prod eta(t_j) e^{-eta(t)} / n!") {
    auto qrng = make_stream(43, 0, 0);
    std::vector<MeasureModel> models{PoissonCounting{4.0}, CompoundPoisson{2.0, ExponentialJump{1.0}},
                                     GammaProcess{2.0, 1.0}};
    const int reps = 1000000;
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        const auto& m = models[mi];
        bool gamma = std::holds_alternative<GammaProcess>(m.variant());
        for (std::size_t n = 1; n <= 4; ++n) {
            auto t = random_thresholds(qrng, n, 1.0, gamma ? 1.0 / 16 : 0.0);
            double nf = boost::math::factorial<double>(static_cast<unsigned>(n));
            std::vector<double> x(gamma ? reps / 10 : reps);
            for (std::size_t r = 0; r < x.size(); ++r) {
                auto rng = make_stream(44, static_cast<std::uint32_t>(mi * 8 + n), r);
                auto p = sample_path(m, 1.0, rng, {16});
                double prod = std::exp(-p.total()) / nf;
                for (double tj : t) prod *= p.value(tj);
                x[r] = prod;
            }
            auto s = testing::summarize(x);
            INFO(m.name() << " n " << n);
            CHECK(std::abs(s.mean - joint_prob(m, {t, 1.0})) < 4 * s.se);
        }
    }
}

TEST_CASE("Poisson-directed joint law by resampling non-ordered points") {
    const int reps = 400000;
    std::vector<double> hits(reps);
    for (int r = 0; r < reps; ++r) {
        auto rng = make_stream(45, 0, static_cast<std::uint64_t>(r));
        auto cox = sample_cox(sample_path(PoissonCounting{10.0}, 1.0, rng), rng);
        double h = 0.0;
        if (cox.count(1.0) == 2) {
            auto pts = cox.arrivals();
            if (uniform_open(rng) < 0.5) std::swap(pts[0], pts[1]);
            h = (pts[0] <= 0.3 && pts[1] <= 0.7) ? 1.0 : 0.0;
        }
        hits[static_cast<std::size_t>(r)] = h;
    }
    auto s = testing::summarize(hits);
    CHECK(std::abs(s.mean - joint_prob(PoissonCounting{10.0}, {{0.3, 0.7}, 1.0})) < 4 * s.se);
}
