#pragma once

// Cox processes directed by a realized measure path: conditional Poisson
// sampling, order statistics under atoms, and time changes N(t) = L(eta(t)).

#include <algorithm>
#include <cstddef>
#include <memory>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "coxsn/errors.hpp"
#include "coxsn/random_measure.hpp"
#include "coxsn/rng.hpp"

namespace coxsn {

/// Auxiliary uniforms used to order points that land on the same atom.
struct TieBreakRecord {
    std::vector<double> uniforms;
};

struct ConditionalPoints {
    std::vector<double> times;  // order statistics
    TieBreakRecord tie_break;   // uniforms aligned with `times`
};

/// Rank key of a point y in (lo, hi] with auxiliary uniform x:
///   (eta(y-) - eta(lo)) / eta(lo,hi] + x * eta({y}) / eta(lo,hi].
inline double tie_break_key(const MeasurePath& path, const Interval& iv, double x, double y) {
    double total = path.mass(iv);
    double base = path.value(iv.lo);
    return (path.left_limit(y) - base + x * path.atom(y)) / total;
}

/// n iid draws from eta(dx) / eta(lo,hi], returned as order statistics.
///
/// Points are drawn by inverse transform through the path, so each atom of
/// eta receives tied points. Points are ranked by tie_break_key with fresh
/// uniforms; among tied points the order follows ascending uniforms.
inline ConditionalPoints conditional_points(const MeasurePath& path, const Interval& iv, std::size_t n, Rng& rng) {
    check_interval(iv);
    if (iv.hi > path.horizon()) throw std::out_of_range("interval exceeds the path horizon");
    if (n == 0) return {};
    double total = path.mass(iv);
    if (!(total > 0.0)) {
        throw ImpossibleConditioning("cannot place points in an interval with zero mass");
    }
    double base = path.value(iv.lo);
    struct Draw {
        double key;
        double time;
        double u;
    };
    std::vector<Draw> draws;
    draws.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        double level = base + uniform_open(rng) * total;
        double y = std::clamp(path.inverse(level), std::nextafter(iv.lo, iv.hi), iv.hi);
        double u = uniform_open(rng);
        draws.push_back({tie_break_key(path, iv, u, y), y, u});
    }
    std::sort(draws.begin(), draws.end(), [](const Draw& a, const Draw& b) {
        return a.key < b.key || (a.key == b.key && a.time < b.time);
    });
    ConditionalPoints out;
    out.times.reserve(n);
    out.tie_break.uniforms.reserve(n);
    for (const auto& d : draws) {
        out.times.push_back(d.time);
        out.tie_break.uniforms.push_back(d.u);
    }
    return out;
}

class CoxRealization {
  public:
    CoxRealization(std::shared_ptr<const MeasurePath> path, std::vector<double> arrivals, TieBreakRecord tie_break = {})
        : path_(std::move(path)), arrivals_(std::move(arrivals)), tie_break_(std::move(tie_break)) {
        if (!path_) throw std::invalid_argument("realization needs a path");
        if (!std::is_sorted(arrivals_.begin(), arrivals_.end()))
            throw std::invalid_argument("arrivals must be sorted");
        if (!arrivals_.empty() && (!(arrivals_.front() > 0.0) || arrivals_.back() > path_->horizon()))
            throw std::invalid_argument("arrivals must lie in (0, horizon]");
    }

    const MeasurePath& path() const { return *path_; }
    std::shared_ptr<const MeasurePath> shared_path() const { return path_; }
    const std::vector<double>& arrivals() const { return arrivals_; }
    const TieBreakRecord& tie_break() const { return tie_break_; }
    double horizon() const { return path_->horizon(); }

    /// N(t).
    std::size_t count(double t) const {
        return static_cast<std::size_t>(std::upper_bound(arrivals_.begin(), arrivals_.end(), t) - arrivals_.begin());
    }

    /// N(s,t].
    std::size_t count(const Interval& iv) const { return count(iv.hi) - count(iv.lo); }

    /// Arrivals in (lo, hi], in order.
    std::vector<double> arrivals_in(const Interval& iv) const {
        auto first = std::upper_bound(arrivals_.begin(), arrivals_.end(), iv.lo);
        auto last = std::upper_bound(arrivals_.begin(), arrivals_.end(), iv.hi);
        return {first, last};
    }

    /// Distinct arrival times with their multiplicities.
    std::vector<std::pair<double, std::size_t>> multiplicities() const {
        std::vector<std::pair<double, std::size_t>> out;
        for (double t : arrivals_) {
            if (!out.empty() && out.back().first == t) {
                ++out.back().second;
            } else {
                out.emplace_back(t, 1);
            }
        }
        return out;
    }

  private:
    std::shared_ptr<const MeasurePath> path_;
    std::vector<double> arrivals_;
    TieBreakRecord tie_break_;
};

/// Cox process on (0, horizon] given the directing path.
inline CoxRealization sample_cox(std::shared_ptr<const MeasurePath> path, Rng& rng) {
    if (!path) throw std::invalid_argument("sample_cox needs a path");
    double total = path->total();
    auto n = sample_poisson(rng, total);
    if (n == 0) return CoxRealization(std::move(path), {});
    auto pts = conditional_points(*path, {0.0, path->horizon()}, n, rng);
    return CoxRealization(std::move(path), std::move(pts.times), std::move(pts.tie_break));
}

inline CoxRealization sample_cox(MeasurePath path, Rng& rng) {
    return sample_cox(std::make_shared<const MeasurePath>(std::move(path)), rng);
}

/// Composed path t -> L(eta(t)) for an independent outer subordinator L.
inline MeasurePath compose(const MeasurePath& outer, const MeasurePath& inner) {
    double top = inner.total();
    if (top > outer.horizon() * (1.0 + 1e-12)) throw std::invalid_argument("outer path too short for composition");
    auto outer_at = [&](double x) { return outer.value(std::min(x, outer.horizon())); };
    auto outer_left = [&](double x) { return outer.left_limit(std::min(x, outer.horizon())); };

    // both sources are already time-ordered (the inverse is monotone): merge
    const auto& in = inner.nodes();
    std::vector<double> from_outer;
    for (const auto& n : outer.nodes()) {
        if (n.time > 0.0 && n.time <= top) from_outer.push_back(inner.inverse(n.time));
    }
    std::vector<double> times;
    times.reserve(in.size() + from_outer.size());
    auto it = from_outer.begin();
    for (const auto& n : in) {
        for (; it != from_outer.end() && *it < n.time; ++it) times.push_back(*it);
        times.push_back(n.time);
    }
    times.insert(times.end(), it, from_outer.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    // inner value / left limit by a forward cursor, same arithmetic as MeasurePath::value
    std::size_t j = 0;
    auto seek = [&](double t) {
        while (j + 1 < in.size() && in[j + 1].time <= t) ++j;
    };
    auto between = [&](double t) {
        const auto& a = in[j];
        if (a.time == t || j + 1 == in.size()) return a.after;
        const auto& b = in[j + 1];
        return a.after + (b.before - a.after) * (t - a.time) / (b.time - a.time);
    };

    std::vector<PathNode> nodes;
    nodes.reserve(times.size());
    nodes.push_back({0.0, 0.0, outer_at(0.0)});
    if (nodes.back().after != 0.0) throw std::invalid_argument("outer path must start at zero");
    double level_prev = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i) {
        double t = times[i];
        seek(t);
        double level = between(t);
        double level_before = in[j].time == t ? in[j].before : level;
        double after = outer_at(level);
        double before = level_before > level_prev ? outer_left(level_before) : nodes.back().after;
        before = std::max(before, nodes.back().after);
        nodes.push_back({t, before, std::max(after, before)});
        level_prev = level;
    }
    return MeasurePath(inner.horizon(), std::move(nodes));
}

/// Time change of `path` by an independently sampled subordinator.
inline MeasurePath subordinate(const LevySubordinatorSpec& outer, const MeasurePath& path, Rng& rng,
                               const SampleOptions& opt = {}) {
    outer.validate();
    double top = path.total();
    if (!(top > 0.0)) return MeasurePath::linear(path.horizon(), 0.0);
    MeasurePath l = outer.sample(top, rng, opt);
    return compose(l, path);
}

inline void write_csv(std::ostream& os, const CoxRealization& r) {
    auto old = os.precision(17);
    os << "arrival_time,multiplicity\n";
    for (const auto& [t, m] : r.multiplicities()) os << t << ',' << m << '\n';
    os.precision(old);
}

inline void write_csv(std::ostream& os, const MeasurePath& p) {
    auto old = os.precision(17);
    os << "time,mass_increment\n";
    const auto& nodes = p.nodes();
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        os << nodes[i].time << ',' << (nodes[i].after - nodes[i - 1].after) << '\n';
    }
    os.precision(old);
}

}  // namespace coxsn
