#pragma once

// Shot-noise cluster process M(u) = sum_{j <= N(u)} L_j(u - T_j).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "coxsn/cox_process.hpp"
#include "coxsn/quadrature.hpp"
#include "coxsn/random_measure.hpp"
#include "coxsn/rng.hpp"

namespace coxsn {

/// L = 0.
struct ZeroPayment {};

/// L(u) = 1 for u >= 0: every arrival contributes one unit at once, so M = N.
struct UnitIndicator {};

/// Non-homogeneous Poisson with mean measure total * (1 - e^{-decay t}).
struct ExponentialDecayPoisson {
    double total = 5.0;
    double decay = 1.0;
};

/// Non-homogeneous Poisson with a general intensity, sampled by thinning.
struct ThinnedPoisson {
    RateFunction intensity;
};

/// Counting path of one payment stream; jump times are relative to its
/// arrival and L(u) = 0 for u < 0.
struct PaymentPath {
    std::vector<double> jumps;

    double value(double u) const {
        if (u < 0.0) return 0.0;
        return static_cast<double>(std::upper_bound(jumps.begin(), jumps.end(), u) - jumps.begin());
    }
    /// L(a, b].
    double increment(double a, double b) const { return value(b) - value(a); }
};

class PaymentModel {
  public:
    using Variant = std::variant<ZeroPayment, UnitIndicator, ExponentialDecayPoisson, ThinnedPoisson>;

    template <class T, class = std::enable_if_t<std::is_constructible_v<Variant, T>>>
    PaymentModel(T v) : v_(std::move(v)) {
        validate();
    }

    const Variant& variant() const { return v_; }

    /// mu(t) = E L(t); zero for t < 0.
    double mean(double t) const {
        if (t < 0.0) return 0.0;
        return std::visit(overloaded{
                              [](const ZeroPayment&) { return 0.0; },
                              [](const UnitIndicator&) { return 1.0; },
                              [&](const ExponentialDecayPoisson& e) { return -e.total * std::expm1(-e.decay * t); },
                              [&](const ThinnedPoisson& p) { return rate_integral(p.intensity, 0.0, t); },
                          },
                          v_);
    }

    /// mu(s,t] = mu(t) - mu(s).
    double mean(double s, double t) const {
        if (const auto* e = std::get_if<ExponentialDecayPoisson>(&v_); e && s >= 0.0) {
            // e^{-ds} - e^{-dt} without cancellation
            return e->total * std::exp(-e->decay * s) * -std::expm1(-e->decay * (t - s));
        }
        return mean(t) - mean(s);
    }

    /// sigma^2(t) = Var L(t).
    double variance(double t) const { return variance(-1.0, t); }

    /// sigma^2(s,t] = Var L(s,t].
    double variance(double s, double t) const {
        return std::visit(overloaded{
                              [](const ZeroPayment&) { return 0.0; },
                              [](const UnitIndicator&) { return 0.0; },
                              // Poisson increments: variance equals mean
                              [&](const ExponentialDecayPoisson&) { return mean(s, t); },
                              [&](const ThinnedPoisson&) { return mean(s, t); },
                          },
                          v_);
    }

    /// E L(t)^2.
    double second_moment(double t) const {
        double m = mean(t);
        return m * m + variance(t);
    }

    PaymentPath sample(double horizon, Rng& rng) const {
        PaymentPath out;
        std::visit(overloaded{
                       [](const ZeroPayment&) {},
                       [&](const UnitIndicator&) { out.jumps.push_back(0.0); },
                       [&](const ExponentialDecayPoisson& e) {
                           // inversion of the mean measure along unit-rate arrivals
                           double cap = mean(horizon);
                           double level = 0.0;
                           while (true) {
                               level += exponential(rng, 1.0);
                               if (level >= cap || level >= e.total) break;
                               out.jumps.push_back(-std::log1p(-level / e.total) / e.decay);
                           }
                       },
                       [&](const ThinnedPoisson& p) {
                           double bound = rate_bound(p.intensity, horizon);
                           if (!(bound > 0.0)) return;
                           double t = 0.0;
                           while (true) {
                               t += exponential(rng, bound);
                               if (t > horizon) break;
                               double accept = rate_at(p.intensity, t) / bound;
                               if (accept > 1.0 + 1e-12)
                                   throw std::invalid_argument("intensity exceeds its declared bound");
                               if (uniform_open(rng) <= accept) out.jumps.push_back(t);
                           }
                       },
                   },
                   v_);
        return out;
    }

  private:
    void validate() const {
        if (const auto* e = std::get_if<ExponentialDecayPoisson>(&v_)) {
            if (!(e->total > 0.0) || !(e->decay > 0.0))
                throw std::invalid_argument("exponential-decay payment needs positive total and decay");
        }
        if (const auto* p = std::get_if<ThinnedPoisson>(&v_)) coxsn::validate(p->intensity);
    }

    Variant v_;
};

/// Realized shot-noise path with its Cox realization and payment streams.
class ShotNoisePath {
  public:
    ShotNoisePath(CoxRealization cox, std::vector<PaymentPath> payments, std::vector<double> grid)
        : cox_(std::move(cox)), payments_(std::move(payments)), grid_(std::move(grid)) {
        if (payments_.size() != cox_.arrivals().size())
            throw std::invalid_argument("one payment stream per arrival is required");
        values_.reserve(grid_.size());
        for (double u : grid_) values_.push_back(value_at(u));
    }

    const CoxRealization& cox() const { return cox_; }
    const std::vector<PaymentPath>& payments() const { return payments_; }
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double horizon() const { return cox_.horizon(); }

    /// M(u), evaluated on demand.
    double value_at(double u) const {
        if (u < 0.0 || u > horizon()) throw std::out_of_range("time outside [0, horizon]");
        const auto& arr = cox_.arrivals();
        double m = 0.0;
        for (std::size_t j = 0; j < arr.size() && arr[j] <= u; ++j) m += payments_[j].value(u - arr[j]);
        return m;
    }

    /// M(s,t].
    double increment(double s, double t) const { return value_at(t) - value_at(s); }

  private:
    CoxRealization cox_;
    std::vector<PaymentPath> payments_;
    std::vector<double> grid_;
    std::vector<double> values_;
};

inline void check_grid(const std::vector<double>& grid, double horizon) {
    if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("grid must be sorted");
    for (double u : grid) {
        if (!(u > 0.0) || u > horizon) throw std::invalid_argument("grid must lie in (0, horizon]");
    }
}

/// Evenly spaced grid step, 2*step, ..., horizon.
inline std::vector<double> uniform_grid(double horizon, std::size_t points) {
    if (points == 0) throw std::invalid_argument("grid needs at least one point");
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i) g[i] = horizon * static_cast<double>(i + 1) / static_cast<double>(points);
    return g;
}

inline ShotNoisePath simulate_M(const MeasureModel& measure, const PaymentModel& payment, double horizon,
                                std::vector<double> grid, Rng& rng, const SampleOptions& opt = {}) {
    check_grid(grid, horizon);
    auto cox = sample_cox(sample_path(measure, horizon, rng, opt), rng);
    std::vector<PaymentPath> payments;
    payments.reserve(cox.arrivals().size());
    for (double tj : cox.arrivals()) payments.push_back(payment.sample(horizon - tj, rng));
    return ShotNoisePath(std::move(cox), std::move(payments), std::move(grid));
}

/// \int_a^b f(u) du split at the model's rate breakpoints.
template <class F>
double integrate_time(const MeasureModel& measure, const F& f, double a, double b) {
    if (!(b > a)) return 0.0;
    std::vector<double> cuts{a};
    for (double k : measure.rate_breakpoints()) {
        if (k > a && k < b) cuts.push_back(k);
    }
    cuts.push_back(b);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += quad::adaptive_simpson(f, cuts[i], cuts[i + 1], 1e-10);
    return total;
}

/// E M(t) = \int_{(0,t]} mu(t-u) x rho(d(u,x)) (drift included in x).
inline double mean_M(const MeasureModel& measure, const PaymentModel& payment, double t) {
    measure.require_additive("mean_M");
    if (!(t >= 0.0)) throw std::invalid_argument("time must be non-negative");
    return integrate_time(measure, [&](double u) { return payment.mean(t - u) * measure.mean_density(u); }, 0.0, t);
}

/// Cov(M(s), M(s+lag)).
inline double cov_M(const MeasureModel& measure, const PaymentModel& payment, double s, double lag) {
    measure.require_additive("cov_M");
    if (!(s >= 0.0) || !(lag >= 0.0)) throw std::invalid_argument("times must be non-negative");
    auto f = [&](double u) {
        double m1 = measure.mean_density(u);
        double m2 = measure.second_moment_density(u);
        double a = payment.mean(s - u);
        double b = payment.mean(s + lag - u);
        return payment.variance(s - u) * m1 + a * b * (m1 + m2);
    };
    return integrate_time(measure, f, 0.0, s);
}

inline void write_csv(std::ostream& os, const ShotNoisePath& p) {
    auto old = os.precision(17);
    os << "time,M\n";
    for (std::size_t i = 0; i < p.grid().size(); ++i) os << p.grid()[i] << ',' << p.values()[i] << '\n';
    os.precision(old);
}

/// One row per arrival: T_j followed by the absolute payment jump times.
inline void write_arrival_table(std::ostream& os, const ShotNoisePath& p) {
    auto old = os.precision(17);
    os << "T_j,payment_jump_times\n";
    const auto& arr = p.cox().arrivals();
    for (std::size_t j = 0; j < arr.size(); ++j) {
        os << arr[j];
        for (double r : p.payments()[j].jumps) {
            double abs_t = arr[j] + r;
            if (abs_t <= p.horizon()) os << ',' << abs_t;
        }
        os << '\n';
    }
    os.precision(old);
}

}  // namespace coxsn
