#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "coxsn/quadrature.hpp"

using Catch::Matchers::WithinRel;

TEST_CASE("adaptive simpson integrates smooth and kinked functions", "[quadrature]") {
    auto smooth = [](double x) { return std::exp(-x) * std::sin(3 * x); };
    double exact = (3.0 - std::exp(-2.0) * (std::sin(6.0) + 3 * std::cos(6.0))) / 10.0;
    CHECK_THAT(coxsn::quad::adaptive_simpson(smooth, 0.0, 2.0, 1e-12), WithinRel(exact, 1e-9));

    auto kink = [](double x) { return std::abs(x - 0.3); };
    CHECK_THAT(coxsn::quad::adaptive_simpson(kink, 0.0, 1.0, 1e-12), WithinRel(0.045 + 0.245, 1e-9));
    CHECK(coxsn::quad::adaptive_simpson(kink, 1.0, 1.0) == 0.0);
}

TEST_CASE("32-point Gauss-Laguerre reproduces gamma moments", "[quadrature]") {
    const auto& rule = coxsn::quad::laguerre32();
    double total_weight = 0.0;
    for (double w : rule.weights) total_weight += w;
    CHECK_THAT(total_weight, WithinRel(1.0, 1e-12));
    // \int x^k e^{-x} dx = k!
    double fact = 1.0;
    for (int k = 1; k <= 20; ++k) {
        fact *= k;
        double s = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * std::pow(rule.nodes[i], k);
        CHECK_THAT(s, WithinRel(fact, 1e-10));
    }
}
