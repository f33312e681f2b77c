// Simulate the reference shot-noise model, observe it at s, and compare the
// conditional predictor with the unconditional mean and the realized value.

#include <cmath>
#include <cstdio>

#include "coxsn/coxsn.hpp"

int main() {
    using namespace coxsn;
    const auto& measure = reference_measure();
    const auto& payment = reference_payment();
    const double horizon = 5.0;

    auto rng = make_stream(7, 0xD0, 0);
    auto path = simulate_M(measure, payment, horizon, uniform_grid(horizon, 5), rng);
    std::printf("arrivals on (0, 5]: %zu, M(5) = %g\n", path.cox().arrivals().size(), path.values().back());

    std::printf("%4s %12s %12s %12s %12s\n", "s", "predict", "prior mean", "realized", "pred sd");
    for (double s : {1.0, 2.0, 3.0, 4.0}) {
        auto h = observe(path, payment, s);
        double t = horizon - s;
        double pred = predict(h, measure, t);
        double prior = mean_M(measure, payment, horizon) - mean_M(measure, payment, s);
        double sd = std::sqrt(predictive_variance(h, measure, t));
        std::printf("%4g %12.4f %12.4f %12.4f %12.4f\n", s, pred, prior, path.increment(s, horizon), sd);
    }

    // Exact joint law of the arrival points for a Gamma directing measure.
    JointQuery q{{1.0, 2.0}, 2.0};
    std::printf("gamma(1,1): P(T'_1 <= 1, T'_2 <= 2 | N(2) = 2) = %g\n", gamma_conditional_cdf(1.0, q));
    return 0;
}
