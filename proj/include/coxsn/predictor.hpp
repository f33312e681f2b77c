#pragma once

// Prediction of M(s, s+t] from the observed history G_s.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "coxsn/random_measure.hpp"
#include "coxsn/shot_noise.hpp"

namespace coxsn {

/// The information G_s: arrivals up to s and each payment stream up to s.
struct ObservedHistory {
    double s = 0.0;
    std::vector<double> arrivals;         // T_1 <= ... <= T_{N(s)} <= s
    std::vector<PaymentPath> payments;    // jumps of L_j on [0, s - T_j]
    PaymentModel payment = ZeroPayment{};

    std::size_t count() const { return arrivals.size(); }

    void validate() const {
        if (!(s >= 0.0)) throw std::invalid_argument("observation time must be non-negative");
        if (!payments.empty() && payments.size() != arrivals.size())
            throw std::invalid_argument("payment histories must match arrivals");
        double prev = 0.0;
        for (std::size_t j = 0; j < arrivals.size(); ++j) {
            if (arrivals[j] < prev || arrivals[j] > s) throw std::invalid_argument("arrivals must be sorted and <= s");
            prev = arrivals[j];
            if (!payments.empty() && !payments[j].jumps.empty() && payments[j].jumps.back() > s - arrivals[j])
                throw std::invalid_argument("payment history extends beyond s");
        }
    }
};

/// Restrict a simulated path to what is known at time s.
inline ObservedHistory observe(const ShotNoisePath& path, const PaymentModel& payment, double s) {
    if (!(s >= 0.0) || s > path.horizon()) throw std::out_of_range("observation time outside [0, horizon]");
    ObservedHistory h;
    h.s = s;
    h.payment = payment;
    const auto& arr = path.cox().arrivals();
    for (std::size_t j = 0; j < arr.size() && arr[j] <= s; ++j) {
        h.arrivals.push_back(arr[j]);
        PaymentPath seen;
        for (double r : path.payments()[j].jumps) {
            if (r <= s - arr[j]) seen.jumps.push_back(r);
        }
        h.payments.push_back(std::move(seen));
    }
    return h;
}

/// E \int_{(s,s+t]} mu(s+t-x) eta(dx).
inline double future_mean(const MeasureModel& measure, const PaymentModel& payment, double s, double t) {
    return integrate_time(measure, [&](double u) { return payment.mean(s + t - u) * measure.mean_density(u); }, s,
                          s + t);
}

/// Var \int_{(s,s+t]} mu(s+t-x) eta(dx) + E \int_{(s,s+t]} (mu^2 + sigma^2)(s+t-x) eta(dx).
inline double future_variance(const MeasureModel& measure, const PaymentModel& payment, double s, double t) {
    auto f = [&](double u) {
        double r = s + t - u;
        double m = payment.mean(r);
        return m * m * measure.second_moment_density(u) + payment.second_moment(r) * measure.mean_density(u);
    };
    return integrate_time(measure, f, s, s + t);
}

/// E[M(s,s+t] | G_s].
inline double predict(const ObservedHistory& h, const MeasureModel& measure, double t) {
    measure.require_additive("predict");
    h.validate();
    if (!(t >= 0.0)) throw std::invalid_argument("lead time must be non-negative");
    if (t == 0.0) return 0.0;
    double past = 0.0;
    for (double tj : h.arrivals) past += h.payment.mean(h.s - tj, h.s + t - tj);
    return past + future_mean(measure, h.payment, h.s, t);
}

/// Var(M(s,s+t] | G_s).
inline double predictive_variance(const ObservedHistory& h, const MeasureModel& measure, double t) {
    measure.require_additive("predictive_variance");
    h.validate();
    if (!(t >= 0.0)) throw std::invalid_argument("lead time must be non-negative");
    if (t == 0.0) return 0.0;
    double past = 0.0;
    for (double tj : h.arrivals) past += h.payment.variance(h.s - tj, h.s + t - tj);
    return past + future_variance(measure, h.payment, h.s, t);
}

/// How the history term of the unconditional MSE is integrated.
enum class MseForm {
    /// \int_{(0,s]} sigma^2(s-u, s+t-u] x rho: expectation of predictive_variance.
    tower,
    /// \int_{(0,s+t]} sigma^2(s-u, s+t-u] x rho, the domain as literally displayed.
    literal,
};

/// E (M(s,s+t] - E[M(s,s+t] | G_s])^2.
inline double unconditional_mse(const MeasureModel& measure, const PaymentModel& payment, double s, double t,
                                MseForm form = MseForm::tower) {
    measure.require_additive("unconditional_mse");
    if (!(s >= 0.0) || !(t >= 0.0)) throw std::invalid_argument("times must be non-negative");
    if (t == 0.0) return 0.0;
    double upper = form == MseForm::tower ? s : s + t;
    double past = integrate_time(
        measure, [&](double u) { return payment.variance(s - u, s + t - u) * measure.mean_density(u); }, 0.0, upper);
    return past + future_variance(measure, payment, s, t);
}

}  // namespace coxsn
