#pragma once

// Directing random measures: parametric models, realized paths, and the
// exact Laplace-transform calculus of their increments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "coxsn/errors.hpp"
#include "coxsn/quadrature.hpp"
#include "coxsn/rng.hpp"

namespace coxsn {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

/// Half-open time interval (lo, hi].
struct Interval {
    double lo;
    double hi;
    double length() const { return hi - lo; }
};

inline void check_interval(const Interval& iv) {
    if (!(iv.lo >= 0.0) || !(iv.hi > iv.lo) || !std::isfinite(iv.hi)) {
        throw std::invalid_argument("interval must satisfy 0 <= s < t < inf");
    }
}

// ---------------------------------------------------------------------------
// Jump-size distributions on (0, inf)
// ---------------------------------------------------------------------------

struct DegenerateJump {
    double value = 1.0;
};

struct ExponentialJump {
    double rate = 1.0;
};

struct GammaJump {
    double shape = 1.0;
    double rate = 1.0;
};

// User-supplied density. Tilted moments are computed by 32-point
// Gauss–Laguerre on y = scale * x. Moments of order above `max_moment` are
// treated as divergent when no exponential tilt is applied.
struct DensityJump {
    std::function<double(double)> pdf;
    std::function<double(Rng&)> sampler;
    double scale = 1.0;
    int max_moment = 64;
};

using JumpDistribution = std::variant<DegenerateJump, ExponentialJump, GammaJump, DensityJump>;

inline void validate(const JumpDistribution& jd) {
    std::visit(overloaded{
                   [](const DegenerateJump& j) {
                       if (!(j.value > 0.0) || !std::isfinite(j.value))
                           throw std::invalid_argument("degenerate jump size must be positive");
                   },
                   [](const ExponentialJump& j) {
                       if (!(j.rate > 0.0) || !std::isfinite(j.rate))
                           throw std::invalid_argument("exponential jump rate must be positive");
                   },
                   [](const GammaJump& j) {
                       if (!(j.shape > 0.0) || !(j.rate > 0.0))
                           throw std::invalid_argument("gamma jump shape and rate must be positive");
                   },
                   [](const DensityJump& j) {
                       if (!j.pdf || !j.sampler)
                           throw std::invalid_argument("density jump needs a pdf and a sampler");
                       if (!(j.scale > 0.0))
                           throw std::invalid_argument("density jump scale must be positive");
                   },
               },
               jd);
}

/// E[J^order e^{-u J}].
inline double tilted_moment(const JumpDistribution& jd, int order, double u) {
    return std::visit(
        overloaded{
            [&](const DegenerateJump& j) { return std::pow(j.value, order) * std::exp(-u * j.value); },
            [&](const ExponentialJump& j) {
                return boost::math::tgamma(order + 1.0) * j.rate / std::pow(j.rate + u, order + 1.0);
            },
            [&](const GammaJump& j) {
                double log_v = boost::math::lgamma(j.shape + order) - boost::math::lgamma(j.shape) +
                               j.shape * std::log(j.rate) - (j.shape + order) * std::log(j.rate + u);
                return std::exp(log_v);
            },
            [&](const DensityJump& j) {
                if (u == 0.0 && order > j.max_moment) {
                    throw MomentDivergence("jump distribution has no moment of order " +
                                           std::to_string(order));
                }
                const auto& rule = quad::laguerre32();
                double sum = 0.0;
                for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
                    double y = j.scale * rule.nodes[k];
                    double g = std::pow(y, order) * std::exp(-u * y + rule.nodes[k]) * j.pdf(y);
                    sum += rule.weights[k] * g;
                }
                return j.scale * sum;
            },
        },
        jd);
}

/// E[e^{-u J}].
inline double jump_laplace(const JumpDistribution& jd, double u) { return tilted_moment(jd, 0, u); }

inline double sample_jump(const JumpDistribution& jd, Rng& rng) {
    return std::visit(overloaded{
                          [&](const DegenerateJump& j) { return j.value; },
                          [&](const ExponentialJump& j) { return exponential(rng, j.rate); },
                          [&](const GammaJump& j) {
                              boost::random::gamma_distribution<double> g(j.shape, 1.0 / j.rate);
                              return g(rng);
                          },
                          [&](const DensityJump& j) { return j.sampler(rng); },
                      },
                      jd);
}

// ---------------------------------------------------------------------------
// Time-varying jump rates for general additive measures
// ---------------------------------------------------------------------------

struct ConstantRate {
    double value = 1.0;
};

/// intercept + slope * u, required non-negative on the horizon used.
struct LinearRate {
    double intercept = 0.0;
    double slope = 1.0;
};

/// values[i] on [knots[i], knots[i+1]); the last value extends to infinity.
struct PiecewiseConstantRate {
    std::vector<double> knots;
    std::vector<double> values;
};

/// Arbitrary non-negative rate with a dominating bound for thinning.
struct CustomRate {
    std::function<double(double)> rate;
    double bound = 0.0;
};

using RateFunction = std::variant<ConstantRate, LinearRate, PiecewiseConstantRate, CustomRate>;

inline double rate_at(const RateFunction& r, double u) {
    return std::visit(overloaded{
                          [&](const ConstantRate& c) { return c.value; },
                          [&](const LinearRate& l) { return l.intercept + l.slope * u; },
                          [&](const PiecewiseConstantRate& p) {
                              auto it = std::upper_bound(p.knots.begin(), p.knots.end(), u);
                              if (it == p.knots.begin()) return 0.0;
                              return p.values[static_cast<std::size_t>(it - p.knots.begin()) - 1];
                          },
                          [&](const CustomRate& c) { return c.rate(u); },
                      },
                      r);
}

/// \int_s^t rate(u) du; adaptive Simpson for custom rates.
inline double rate_integral(const RateFunction& r, double s, double t) {
    return std::visit(
        overloaded{
            [&](const ConstantRate& c) { return c.value * (t - s); },
            [&](const LinearRate& l) { return l.intercept * (t - s) + 0.5 * l.slope * (t * t - s * s); },
            [&](const PiecewiseConstantRate& p) {
                double total = 0.0;
                for (std::size_t i = 0; i < p.knots.size(); ++i) {
                    double a = std::max(s, p.knots[i]);
                    double b = (i + 1 < p.knots.size()) ? std::min(t, p.knots[i + 1]) : t;
                    if (b > a) total += p.values[i] * (b - a);
                }
                return total;
            },
            [&](const CustomRate& c) { return quad::adaptive_simpson(c.rate, s, t, 1e-9); },
        },
        r);
}

/// An upper bound of the rate on [0, horizon].
inline double rate_bound(const RateFunction& r, double horizon) {
    return std::visit(overloaded{
                          [&](const ConstantRate& c) { return c.value; },
                          [&](const LinearRate& l) {
                              return std::max(l.intercept, l.intercept + l.slope * horizon);
                          },
                          [&](const PiecewiseConstantRate& p) {
                              return p.values.empty() ? 0.0
                                                      : *std::max_element(p.values.begin(), p.values.end());
                          },
                          [&](const CustomRate& c) { return c.bound; },
                      },
                      r);
}

inline void validate(const RateFunction& r) {
    std::visit(overloaded{
                   [](const ConstantRate& c) {
                       if (!(c.value >= 0.0)) throw std::invalid_argument("rate must be non-negative");
                   },
                   [](const LinearRate& l) {
                       if (!(l.intercept >= 0.0) || !(l.slope >= 0.0))
                           throw std::invalid_argument("linear rate needs non-negative intercept and slope");
                   },
                   [](const PiecewiseConstantRate& p) {
                       if (p.knots.size() != p.values.size() || p.knots.empty())
                           throw std::invalid_argument("piecewise rate needs matching knots and values");
                       if (!std::is_sorted(p.knots.begin(), p.knots.end()))
                           throw std::invalid_argument("piecewise rate knots must be sorted");
                       for (double v : p.values)
                           if (!(v >= 0.0)) throw std::invalid_argument("rate must be non-negative");
                   },
                   [](const CustomRate& c) {
                       if (!c.rate || !(c.bound > 0.0))
                           throw std::invalid_argument("custom rate needs a function and positive bound");
                   },
               },
               r);
}

// ---------------------------------------------------------------------------
// Model descriptions
// ---------------------------------------------------------------------------

/// Jump measure rate(u) du x jumps(dv) on (0,inf) x (0,inf).
struct AdditiveSpec {
    RateFunction rate = ConstantRate{1.0};
    JumpDistribution jumps = DegenerateJump{1.0};
};

/// eta(t) ~ Gamma(shape * t, rate); Levy measure shape * v^{-1} e^{-rate v} dv.
struct GammaProcess {
    double shape = 1.0;
    double rate = 1.0;
};

/// Unit jumps at the points of a homogeneous Poisson process.
struct PoissonCounting {
    double rate = 1.0;
};

struct CompoundPoisson {
    double rate = 1.0;
    JumpDistribution jumps = DegenerateJump{1.0};
};

struct Deterministic {
    double slope = 1.0;
};

/// eta(t) = Lambda * t with Lambda drawn once per path. Not additive.
struct MixedPoisson {
    std::vector<double> values;
    std::vector<double> probabilities;
};

struct GeneralAdditive {
    AdditiveSpec spec;
};

class MeasureModel {
  public:
    using Variant =
        std::variant<GammaProcess, PoissonCounting, CompoundPoisson, Deterministic, MixedPoisson, GeneralAdditive>;

    template <class T, class = std::enable_if_t<std::is_constructible_v<Variant, T>>>
    MeasureModel(T v) : v_(std::move(v)) {
        validate();
    }

    const Variant& variant() const { return v_; }

    bool is_additive() const { return !std::holds_alternative<MixedPoisson>(v_); }

    /// Stationary as well as independent increments.
    bool is_subordinator() const {
        if (std::holds_alternative<MixedPoisson>(v_)) return false;
        if (const auto* g = std::get_if<GeneralAdditive>(&v_)) {
            return std::holds_alternative<ConstantRate>(g->spec.rate);
        }
        return true;
    }

    std::string name() const {
        return std::visit(overloaded{
                              [](const GammaProcess&) { return std::string("gamma"); },
                              [](const PoissonCounting&) { return std::string("poisson"); },
                              [](const CompoundPoisson&) { return std::string("compound_poisson"); },
                              [](const Deterministic&) { return std::string("deterministic"); },
                              [](const MixedPoisson&) { return std::string("mixed_poisson"); },
                              [](const GeneralAdditive&) { return std::string("general_additive"); },
                          },
                          v_);
    }

    void require_additive(const char* what) const {
        if (!is_additive()) {
            throw NonAdditiveModel(std::string(what) + " requires an additive directing measure, got " + name());
        }
    }

    /// Deterministic part of eta(s,t].
    double drift_mass(const Interval& iv) const {
        if (const auto* d = std::get_if<Deterministic>(&v_)) return d->slope * iv.length();
        return 0.0;
    }

    /// \int_{(s,t] x R+} y^order e^{-u y} rho(d(x,y)), order >= 1.
    double jump_moment(const Interval& iv, int order, double u) const {
        require_additive("jump_moment");
        if (order < 1) throw std::invalid_argument("jump moment order must be >= 1");
        double len = iv.length();
        return std::visit(
            overloaded{
                [&](const GammaProcess& g) {
                    return g.shape * len * std::exp(boost::math::lgamma(static_cast<double>(order)) -
                                                    order * std::log(g.rate + u));
                },
                [&](const PoissonCounting& p) { return p.rate * len * std::exp(-u); },
                [&](const CompoundPoisson& c) { return c.rate * len * tilted_moment(c.jumps, order, u); },
                [&](const Deterministic&) { return 0.0; },
                [&](const MixedPoisson&) -> double { throw NonAdditiveModel("mixed Poisson"); },
                [&](const GeneralAdditive& g) {
                    return rate_integral(g.spec.rate, iv.lo, iv.hi) * tilted_moment(g.spec.jumps, order, u);
                },
            },
            v_);
    }

    /// Mean mass per unit time at u: drift + \int x rho_u(dx).
    double mean_density(double u) const {
        require_additive("mean_density");
        return std::visit(overloaded{
                              [&](const GammaProcess& g) { return g.shape / g.rate; },
                              [&](const PoissonCounting& p) { return p.rate; },
                              [&](const CompoundPoisson& c) { return c.rate * tilted_moment(c.jumps, 1, 0.0); },
                              [&](const Deterministic& d) { return d.slope; },
                              [&](const MixedPoisson&) -> double { throw NonAdditiveModel("mixed Poisson"); },
                              [&](const GeneralAdditive& g) {
                                  return rate_at(g.spec.rate, u) * tilted_moment(g.spec.jumps, 1, 0.0);
                              },
                          },
                          v_);
    }

    /// Variance of mass per unit time at u: \int x^2 rho_u(dx).
    double second_moment_density(double u) const {
        require_additive("second_moment_density");
        return std::visit(
            overloaded{
                [&](const GammaProcess& g) { return g.shape / (g.rate * g.rate); },
                [&](const PoissonCounting& p) { return p.rate; },
                [&](const CompoundPoisson& c) { return c.rate * tilted_moment(c.jumps, 2, 0.0); },
                [&](const Deterministic&) { return 0.0; },
                [&](const MixedPoisson&) -> double { throw NonAdditiveModel("mixed Poisson"); },
                [&](const GeneralAdditive& g) {
                    return rate_at(g.spec.rate, u) * tilted_moment(g.spec.jumps, 2, 0.0);
                },
            },
            v_);
    }

    /// Times where the moment densities may be discontinuous.
    std::vector<double> rate_breakpoints() const {
        if (const auto* g = std::get_if<GeneralAdditive>(&v_)) {
            if (const auto* p = std::get_if<PiecewiseConstantRate>(&g->spec.rate)) return p->knots;
        }
        return {};
    }

  private:
    void validate() const {
        auto positive = [](double v, const char* what) {
            if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
        };
        std::visit(overloaded{
                       [&](const GammaProcess& g) {
                           positive(g.shape, "gamma shape");
                           positive(g.rate, "gamma rate");
                       },
                       [&](const PoissonCounting& p) { positive(p.rate, "poisson rate"); },
                       [&](const CompoundPoisson& c) {
                           positive(c.rate, "compound poisson rate");
                           coxsn::validate(c.jumps);
                       },
                       [&](const Deterministic& d) {
                           if (!(d.slope >= 0.0) || !std::isfinite(d.slope))
                               throw std::invalid_argument("deterministic slope must be non-negative");
                       },
                       [&](const MixedPoisson& m) {
                           if (m.values.empty() || m.values.size() != m.probabilities.size())
                               throw std::invalid_argument("mixed Poisson needs matching values and probabilities");
                           double total = 0.0;
                           for (std::size_t i = 0; i < m.values.size(); ++i) {
                               positive(m.values[i], "mixed Poisson rate value");
                               if (!(m.probabilities[i] >= 0.0))
                                   throw std::invalid_argument("probabilities must be non-negative");
                               total += m.probabilities[i];
                           }
                           if (std::abs(total - 1.0) > 1e-9)
                               throw std::invalid_argument("mixed Poisson probabilities must sum to 1");
                       },
                       [&](const GeneralAdditive& g) {
                           coxsn::validate(g.spec.rate);
                           coxsn::validate(g.spec.jumps);
                       },
                   },
                   v_);
    }

    Variant v_;
};

// ---------------------------------------------------------------------------
// Realized paths
// ---------------------------------------------------------------------------

/// A knot of a path: eta(time-) = before, eta(time) = after.
struct PathNode {
    double time;
    double before;
    double after;
};

/// Non-decreasing cadlag path on [0, horizon], linear between knots with
/// jumps (atoms) allowed at knots.
class MeasurePath {
  public:
    MeasurePath(double horizon, std::vector<PathNode> nodes) : horizon_(horizon), nodes_(std::move(nodes)) {
        check();
    }

    /// Pure drift path.
    static MeasurePath linear(double horizon, double slope) {
        if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
        return MeasurePath(horizon, {{0.0, 0.0, 0.0}, {horizon, slope * horizon, slope * horizon}});
    }

    /// Drift plus atoms (time, mass); atoms at equal times are merged.
    static MeasurePath from_jumps(double horizon, double slope, std::vector<std::pair<double, double>> jumps) {
        if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
        std::sort(jumps.begin(), jumps.end());
        std::vector<PathNode> nodes;
        nodes.reserve(jumps.size() + 2);
        nodes.push_back({0.0, 0.0, 0.0});
        double level = 0.0;
        double last_t = 0.0;
        for (const auto& [t, m] : jumps) {
            if (!(t > 0.0) || t > horizon) throw std::invalid_argument("jump time outside (0, horizon]");
            if (!(m > 0.0)) throw std::invalid_argument("jump mass must be positive");
            level += slope * (t - last_t);
            last_t = t;
            if (nodes.back().time == t) {
                nodes.back().after += m;
                level = nodes.back().after;
                continue;
            }
            nodes.push_back({t, level, level + m});
            level += m;
        }
        if (nodes.back().time < horizon) {
            level += slope * (horizon - last_t);
            nodes.push_back({horizon, level, level});
        }
        return MeasurePath(horizon, std::move(nodes));
    }

    double horizon() const { return horizon_; }
    const std::vector<PathNode>& nodes() const { return nodes_; }
    double total() const { return nodes_.back().after; }

    /// eta(t).
    double value(double t) const {
        check_time(t);
        auto i = segment(t);
        const auto& a = nodes_[i];
        if (a.time == t || i + 1 == nodes_.size()) return a.after;
        const auto& b = nodes_[i + 1];
        return a.after + (b.before - a.after) * (t - a.time) / (b.time - a.time);
    }

    /// eta(t-).
    double left_limit(double t) const {
        check_time(t);
        if (t == 0.0) return 0.0;
        auto i = segment(t);
        if (nodes_[i].time == t) return nodes_[i].before;
        return value(t);
    }

    /// eta({y}).
    double atom(double y) const { return value(y) - left_limit(y); }

    /// eta(s,t].
    double mass(double s, double t) const {
        if (!(t >= s)) throw std::invalid_argument("mass requires s <= t");
        return std::max(0.0, value(t) - value(s));
    }
    double mass(const Interval& iv) const { return mass(iv.lo, iv.hi); }

    /// inf{t : eta(t) >= level}, for level in (0, total()].
    double inverse(double level) const {
        if (level <= 0.0) return 0.0;
        if (level > total()) throw std::invalid_argument("inverse level exceeds total mass");
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), level,
                                   [](const PathNode& n, double v) { return n.after < v; });
        const auto& b = *it;
        if (level > b.before || it == nodes_.begin()) return b.time;
        const auto& a = *(it - 1);
        double frac = (level - a.after) / (b.before - a.after);
        return std::min(b.time, a.time + frac * (b.time - a.time));
    }

    /// All atoms (time, mass) in increasing time order.
    std::vector<std::pair<double, double>> atoms() const {
        std::vector<std::pair<double, double>> out;
        for (const auto& n : nodes_) {
            if (n.after > n.before) out.emplace_back(n.time, n.after - n.before);
        }
        return out;
    }

    MeasurePath with_added_drift(double slope) const {
        if (!(slope >= 0.0)) throw std::invalid_argument("drift must be non-negative");
        auto nodes = nodes_;
        for (auto& n : nodes) {
            n.before += slope * n.time;
            n.after += slope * n.time;
        }
        return MeasurePath(horizon_, std::move(nodes));
    }

  private:
    void check() const {
        if (!(horizon_ > 0.0)) throw std::invalid_argument("horizon must be positive");
        if (nodes_.size() < 2) throw std::invalid_argument("path needs at least two knots");
        if (nodes_.front().time != 0.0 || nodes_.front().before != 0.0 || nodes_.front().after != 0.0)
            throw std::invalid_argument("path must start at eta(0) = 0");
        if (nodes_.back().time != horizon_) throw std::invalid_argument("last knot must sit at the horizon");
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const auto& n = nodes_[i];
            if (!(n.after >= n.before)) throw std::invalid_argument("path must be non-decreasing at knots");
            if (i > 0) {
                const auto& p = nodes_[i - 1];
                if (!(n.time > p.time)) throw std::invalid_argument("knot times must increase");
                if (!(n.before >= p.after)) throw std::invalid_argument("path must be non-decreasing");
            }
        }
    }

    void check_time(double t) const {
        if (!(t >= 0.0) || t > horizon_) throw std::out_of_range("time outside [0, horizon]");
    }

    std::size_t segment(double t) const {
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t,
                                   [](double v, const PathNode& n) { return v < n.time; });
        return static_cast<std::size_t>(it - nodes_.begin()) - 1;
    }

    double horizon_;
    std::vector<PathNode> nodes_;
};

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

struct SampleOptions {
    /// Grid resolution for infinite-activity (Gamma) paths.
    int knots_per_unit = 1024;
};

inline unsigned long sample_poisson(Rng& rng, double mean) {
    if (!(mean > 0.0)) return 0;
    boost::random::poisson_distribution<unsigned long, double> dist(mean);
    return dist(rng);
}

namespace detail {

inline std::vector<std::pair<double, double>> thinned_jumps(const AdditiveSpec& spec, double horizon, Rng& rng) {
    double bound = rate_bound(spec.rate, horizon);
    std::vector<std::pair<double, double>> jumps;
    if (!(bound > 0.0)) return jumps;
    double t = 0.0;
    while (true) {
        t += exponential(rng, bound);
        if (t > horizon) break;
        double accept = rate_at(spec.rate, t) / bound;
        if (accept > 1.0 + 1e-12) throw std::invalid_argument("rate exceeds its declared bound");
        if (uniform_open(rng) <= accept) jumps.emplace_back(t, sample_jump(spec.jumps, rng));
    }
    return jumps;
}

inline std::vector<std::pair<double, double>> compound_jumps(double rate, const JumpDistribution& jd,
                                                            double horizon, Rng& rng) {
    auto count = sample_poisson(rng, rate * horizon);
    std::vector<std::pair<double, double>> jumps;
    jumps.reserve(count);
    for (unsigned long k = 0; k < count; ++k) {
        double t = horizon * uniform_open(rng);
        jumps.emplace_back(t, sample_jump(jd, rng));
    }
    return jumps;
}

}  // namespace detail

inline MeasurePath sample_path(const MeasureModel& model, double horizon, Rng& rng, const SampleOptions& opt = {}) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be positive");
    return std::visit(
        overloaded{
            [&](const GammaProcess& g) {
                if (opt.knots_per_unit < 1) throw std::invalid_argument("knots_per_unit must be >= 1");
                auto cells = static_cast<std::size_t>(std::ceil(horizon * opt.knots_per_unit - 1e-9));
                cells = std::max<std::size_t>(cells, 1);
                double dt = horizon / static_cast<double>(cells);
                boost::random::gamma_distribution<double> inc(g.shape * dt, 1.0 / g.rate);
                std::vector<PathNode> nodes;
                nodes.reserve(cells + 1);
                nodes.push_back({0.0, 0.0, 0.0});
                double level = 0.0;
                for (std::size_t k = 1; k <= cells; ++k) {
                    level += inc(rng);
                    double t = (k == cells) ? horizon : dt * static_cast<double>(k);
                    nodes.push_back({t, level, level});
                }
                return MeasurePath(horizon, std::move(nodes));
            },
            [&](const PoissonCounting& p) {
                return MeasurePath::from_jumps(horizon, 0.0,
                                               detail::compound_jumps(p.rate, DegenerateJump{1.0}, horizon, rng));
            },
            [&](const CompoundPoisson& c) {
                return MeasurePath::from_jumps(horizon, 0.0, detail::compound_jumps(c.rate, c.jumps, horizon, rng));
            },
            [&](const Deterministic& d) { return MeasurePath::linear(horizon, d.slope); },
            [&](const MixedPoisson& m) {
                double u = uniform_open(rng);
                std::size_t k = 0;
                double acc = m.probabilities[0];
                while (u > acc && k + 1 < m.values.size()) acc += m.probabilities[++k];
                return MeasurePath::linear(horizon, m.values[k]);
            },
            [&](const GeneralAdditive& g) {
                return MeasurePath::from_jumps(horizon, 0.0, detail::thinned_jumps(g.spec, horizon, rng));
            },
        },
        model.variant());
}

// ---------------------------------------------------------------------------
// Laplace calculus
// ---------------------------------------------------------------------------

/// E exp(-u eta(s,t]).
inline double laplace(const MeasureModel& model, const Interval& iv, double u) {
    check_interval(iv);
    if (!(u >= 0.0)) throw std::invalid_argument("laplace argument must be non-negative");
    model.require_additive("laplace");
    double len = iv.length();
    return std::visit(overloaded{
                          [&](const GammaProcess& g) { return std::pow(g.rate / (g.rate + u), g.shape * len); },
                          [&](const PoissonCounting& p) { return std::exp(p.rate * len * std::expm1(-u)); },
                          [&](const CompoundPoisson& c) {
                              return std::exp(c.rate * len * (jump_laplace(c.jumps, u) - 1.0));
                          },
                          [&](const Deterministic& d) { return std::exp(-u * d.slope * len); },
                          [&](const MixedPoisson&) -> double { throw NonAdditiveModel("mixed Poisson"); },
                          [&](const GeneralAdditive& g) {
                              double intensity = rate_integral(g.spec.rate, iv.lo, iv.hi);
                              return std::exp(intensity * (jump_laplace(g.spec.jumps, u) - 1.0));
                          },
                      },
                      model.variant());
}

/// E[eta(s,t]^k e^{-u eta(s,t]}] for k = 0..max_order.
///
/// Uses a_l = sum_{i=1}^{l} C(l-1,i-1) kappa_i a_{l-i}, where kappa_1 adds the
/// drift mass and kappa_i are the tilted jump moments. All terms are
/// non-negative.
inline std::vector<double> tilted_moments(const MeasureModel& model, const Interval& iv, int max_order, double u) {
    if (max_order < 0) throw std::invalid_argument("order must be non-negative");
    std::vector<double> a(static_cast<std::size_t>(max_order) + 1);
    a[0] = laplace(model, iv, u);
    std::vector<double> kappa(a.size(), 0.0);
    for (int i = 1; i <= max_order; ++i) {
        kappa[i] = model.jump_moment(iv, i, u) + (i == 1 ? model.drift_mass(iv) : 0.0);
    }
    for (int l = 1; l <= max_order; ++l) {
        double sum = 0.0;
        double binom = 1.0;  // C(l-1, i-1)
        for (int i = 1; i <= l; ++i) {
            sum += binom * kappa[i] * a[l - i];
            binom = binom * (l - i) / i;
        }
        a[l] = sum;
    }
    return a;
}

/// E[eta^k e^{-u eta}] / k! for k = 0..max_order, computed without factorials.
inline std::vector<double> scaled_tilted_moments(const MeasureModel& model, const Interval& iv, int max_order,
                                                 double u) {
    if (max_order < 0) throw std::invalid_argument("order must be non-negative");
    std::vector<double> b(static_cast<std::size_t>(max_order) + 1);
    b[0] = laplace(model, iv, u);
    // kappa_i / (i-1)!
    std::vector<double> c(b.size(), 0.0);
    double fact = 1.0;
    for (int i = 1; i <= max_order; ++i) {
        if (i > 1) fact *= (i - 1);
        c[i] = (model.jump_moment(iv, i, u) + (i == 1 ? model.drift_mass(iv) : 0.0)) / fact;
    }
    for (int l = 1; l <= max_order; ++l) {
        double sum = 0.0;
        for (int i = 1; i <= l; ++i) sum += c[i] * b[l - i];
        b[l] = sum / l;
    }
    return b;
}

/// l-th derivative of u -> E exp(-u eta(s,t]).
inline double laplace_derivative(const MeasureModel& model, const Interval& iv, int order, double u) {
    auto a = tilted_moments(model, iv, order, u);
    return (order % 2 == 0) ? a.back() : -a.back();
}

// ---------------------------------------------------------------------------
// Outer subordinators for time changes
// ---------------------------------------------------------------------------

struct FiniteActivity {
    double rate = 1.0;
    JumpDistribution jumps = DegenerateJump{1.0};
};

struct GammaType {
    double shape = 1.0;
    double rate = 1.0;
};

/// Drift plus an optional Levy measure of one of the supported forms.
struct LevySubordinatorSpec {
    double drift = 0.0;
    std::optional<std::variant<FiniteActivity, GammaType>> levy;

    void validate() const {
        if (!(drift >= 0.0)) throw std::invalid_argument("subordinator drift must be non-negative");
        if (levy) to_model();
        if (!levy && drift == 0.0) throw std::invalid_argument("subordinator is identically zero");
    }

    /// The pure-jump part as a measure model, if any.
    std::optional<MeasureModel> to_model() const {
        if (!levy) return std::nullopt;
        return std::visit(overloaded{
                              [](const FiniteActivity& f) -> MeasureModel {
                                  if (const auto* d = std::get_if<DegenerateJump>(&f.jumps); d && d->value == 1.0)
                                      return PoissonCounting{f.rate};
                                  return CompoundPoisson{f.rate, f.jumps};
                              },
                              [](const GammaType& g) -> MeasureModel { return GammaProcess{g.shape, g.rate}; },
                          },
                          *levy);
    }

    /// -log E exp(-u L(1)).
    double laplace_exponent(double u) const {
        double e = drift * u;
        if (auto m = to_model()) e -= std::log(laplace(*m, {0.0, 1.0}, u));
        return e;
    }

    MeasurePath sample(double horizon, Rng& rng, const SampleOptions& opt = {}) const {
        auto m = to_model();
        MeasurePath base = m ? sample_path(*m, horizon, rng, opt) : MeasurePath::linear(horizon, 0.0);
        return drift > 0.0 ? base.with_added_drift(drift) : base;
    }
};

}  // namespace coxsn
