#pragma once

// Seeded Monte Carlo campaigns with declared pass/fail rules.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/poisson.hpp>

#include "coxsn/arrival_law.hpp"
#include "coxsn/cox_process.hpp"
#include "coxsn/parallel.hpp"
#include "coxsn/predictor.hpp"
#include "coxsn/random_measure.hpp"
#include "coxsn/shot_noise.hpp"
#include "coxsn/stats.hpp"

namespace coxsn {

/// Outcome of one hypothesis test.
struct TestReport {
    std::string name;
    std::string method;      // e.g. "chi-square independence", "4-SE band"
    double statistic = 0.0;
    double p_value = 1.0;
    double alpha = 0.01;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    bool null_rejected = false;
    bool expect_rejection = false;
    int attempts = 1;
    std::vector<std::pair<std::string, double>> details;

    bool ok() const { return null_rejected == expect_rejection; }
};

struct VerifyOptions {
    SampleOptions sampling{};
    unsigned workers = 0;
    int bootstrap_resamples = 200;
};

namespace detail {

inline double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

/// Band verdict: reject when |z| exceeds `band` standard errors.
inline void band_verdict(TestReport& r, double estimate, double target, double se, double band = 4.0) {
    double z = se > 0.0 ? (estimate - target) / se : (estimate == target ? 0.0 : INFINITY);
    r.method = std::to_string(static_cast<int>(band)) + "-SE band";
    r.statistic = z;
    r.p_value = two_sided_normal_p(z);
    r.null_rejected = std::abs(z) > band;
    r.details.emplace_back("estimate", estimate);
    r.details.emplace_back("target", target);
    r.details.emplace_back("se", se);
}

inline void chi_verdict(TestReport& r, const stats::ChiSquareResult& c, const std::string& method) {
    r.method = method;
    r.statistic = c.statistic;
    r.p_value = c.p_value;
    r.null_rejected = c.p_value < r.alpha;
    r.details.emplace_back("df", c.df);
    r.details.emplace_back("cells", static_cast<double>(c.cells));
}

inline double horizon_of(const std::vector<Interval>& intervals) {
    double h = 0.0;
    for (const auto& iv : intervals) {
        check_interval(iv);
        h = std::max(h, iv.hi);
    }
    return h;
}

}  // namespace detail

using PathSampler = std::function<MeasurePath(double horizon, Rng&)>;

inline PathSampler model_sampler(const MeasureModel& model, const SampleOptions& opt = {}) {
    return [model, opt](double horizon, Rng& rng) { return sample_path(model, horizon, rng, opt); };
}

/// Directing path t -> L(eta(t)) with L and eta sampled independently.
inline PathSampler subordinated_sampler(const LevySubordinatorSpec& outer, const MeasureModel& inner,
                                        const SampleOptions& opt = {}) {
    outer.validate();
    return [outer, inner, opt](double horizon, Rng& rng) {
        auto eta = sample_path(inner, horizon, rng, opt);
        return subordinate(outer, eta, rng, opt);
    };
}

/// One Cox realization per replication; row r holds N over each interval.
inline std::vector<std::vector<long>> simulate_interval_counts(const PathSampler& sampler,
                                                               const std::vector<Interval>& intervals,
                                                               std::size_t reps, std::uint64_t seed,
                                                               std::uint32_t tag, unsigned workers = 0) {
    double horizon = detail::horizon_of(intervals);
    std::vector<std::vector<long>> rows(reps, std::vector<long>(intervals.size()));
    for_each_replication(
        reps,
        [&](std::size_t r) {
            auto rng = make_stream(seed, tag, r);
            auto cox = sample_cox(sampler(horizon, rng), rng);
            for (std::size_t j = 0; j < intervals.size(); ++j) rows[r][j] = static_cast<long>(cox.count(intervals[j]));
        },
        workers);
    return rows;
}

/// Chi-square independence of counts over disjoint intervals, plus the
/// factorization total-variation distance with a bootstrap standard error.
inline TestReport test_count_factorization(const std::string& name, const PathSampler& sampler,
                                           const std::vector<Interval>& intervals, std::size_t reps,
                                           std::uint64_t seed, bool expect_rejection,
                                           const VerifyOptions& opt = {}) {
    if (intervals.size() < 2) throw std::invalid_argument("factorization needs at least two intervals");
    auto rows = simulate_interval_counts(sampler, intervals, reps, seed, 0x100, opt.workers);
    TestReport r;
    r.name = name;
    r.reps = reps;
    r.seed = seed;
    r.expect_rejection = expect_rejection;
    detail::chi_verdict(r, stats::independence_test(rows), "chi-square independence");
    auto tv = stats::bootstrap_factorization_tv(rows, opt.bootstrap_resamples, seed);
    r.details.emplace_back("tv", tv.tv);
    r.details.emplace_back("tv_bootstrap_se", tv.se);
    return r;
}

inline TestReport test_count_factorization(const std::string& name, const MeasureModel& model,
                                           const std::vector<Interval>& intervals, std::size_t reps,
                                           std::uint64_t seed, const VerifyOptions& opt = {}) {
    return test_count_factorization(name, model_sampler(model, opt.sampling), intervals, reps, seed,
                                    !model.is_additive(), opt);
}

/// Homogeneity of N(s, s+delta] across shifts, each shift on its own streams.
inline TestReport test_count_stationarity(const std::string& name, const PathSampler& sampler, double delta,
                                          const std::vector<double>& shifts, std::size_t reps, std::uint64_t seed,
                                          bool expect_rejection, const VerifyOptions& opt = {}) {
    if (shifts.size() < 2) throw std::invalid_argument("stationarity needs at least two shifts");
    std::vector<std::vector<long>> groups;
    for (std::size_t k = 0; k < shifts.size(); ++k) {
        auto rows = simulate_interval_counts(sampler, {{shifts[k], shifts[k] + delta}}, reps, seed,
                                             0x200 + static_cast<std::uint32_t>(k), opt.workers);
        std::vector<long> g;
        g.reserve(reps);
        for (const auto& row : rows) g.push_back(row[0]);
        groups.push_back(std::move(g));
    }
    TestReport r;
    r.name = name;
    r.reps = reps;
    r.seed = seed;
    r.expect_rejection = expect_rejection;
    detail::chi_verdict(r, stats::homogeneity_test(groups), "chi-square homogeneity");
    for (std::size_t k = 0; k < groups.size(); ++k) {
        double m = 0.0;
        for (long v : groups[k]) m += static_cast<double>(v);
        r.details.emplace_back("mean_shift_" + std::to_string(k), m / static_cast<double>(reps));
    }
    return r;
}

inline TestReport test_count_stationarity(const std::string& name, const MeasureModel& model, double delta,
                                          const std::vector<double>& shifts, std::size_t reps, std::uint64_t seed,
                                          const VerifyOptions& opt = {}) {
    return test_count_stationarity(name, model_sampler(model, opt.sampling), delta, shifts, reps, seed,
                                   !model.is_subordinator(), opt);
}

/// Chi-square fit of N(iv) against an exact pmf.
inline TestReport test_count_pmf(const std::string& name, const PathSampler& sampler, const Interval& iv,
                                 const std::vector<double>& pmf, std::size_t reps, std::uint64_t seed,
                                 const VerifyOptions& opt = {}) {
    auto rows = simulate_interval_counts(sampler, {iv}, reps, seed, 0x300, opt.workers);
    std::vector<long> counts;
    counts.reserve(reps);
    for (const auto& row : rows) counts.push_back(row[0]);
    TestReport r;
    r.name = name;
    r.reps = reps;
    r.seed = seed;
    detail::chi_verdict(r, stats::goodness_of_fit(counts, pmf), "chi-square goodness of fit");
    return r;
}

// ---------------------------------------------------------------------------
// Conditional laws of points
// ---------------------------------------------------------------------------

/// Non-ordered points: the order statistics in random order.
inline std::vector<double> shuffle_points(std::vector<double> pts, Rng& rng) {
    for (std::size_t i = pts.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(i));
        std::swap(pts[i - 1], pts[std::min(j, i - 1)]);
    }
    return pts;
}

struct ConditionalSample {
    std::size_t realizations = 0;
    std::vector<std::vector<double>> points;  // non-ordered points of realizations with N(t) = n
};

inline ConditionalSample sample_given_count(const PathSampler& sampler, double horizon, std::size_t n,
                                            std::size_t reps, std::uint64_t seed, std::uint32_t tag,
                                            unsigned workers = 0) {
    std::vector<std::vector<double>> slots(reps);
    std::vector<char> hit(reps, 0);
    for_each_replication(
        reps,
        [&](std::size_t r) {
            auto rng = make_stream(seed, tag, r);
            auto cox = sample_cox(sampler(horizon, rng), rng);
            if (cox.count(horizon) != n) return;
            hit[r] = 1;
            slots[r] = shuffle_points(cox.arrivals(), rng);
        },
        workers);
    ConditionalSample out;
    out.realizations = reps;
    for (std::size_t r = 0; r < reps; ++r) {
        if (hit[r]) out.points.push_back(std::move(slots[r]));
    }
    return out;
}

/// MC estimate of P(T'_1 <= t_1, ..., T'_n <= t_n | N(t) = n) against `exact`.
inline TestReport test_conditional_cdf(const std::string& name, const PathSampler& sampler, const JointQuery& q,
                                       double exact, std::size_t reps, std::uint64_t seed,
                                       const VerifyOptions& opt = {}) {
    q.validate();
    auto sample = sample_given_count(sampler, q.horizon, q.n(), reps, seed, 0x400, opt.workers);
    TestReport r;
    r.name = name;
    r.reps = reps;
    r.seed = seed;
    double m = static_cast<double>(sample.points.size());
    if (m < 2) throw std::runtime_error("too few realizations with the conditioning count");
    double hits = 0.0;
    for (const auto& pts : sample.points) {
        bool all = true;
        for (std::size_t j = 0; j < q.n(); ++j) all = all && pts[j] <= q.thresholds[j];
        hits += all ? 1.0 : 0.0;
    }
    double p = hits / m;
    detail::band_verdict(r, p, exact, std::sqrt(std::max(p * (1 - p), 1e-300) / m));
    r.details.emplace_back("conditioned_realizations", m);
    return r;
}

/// KS of the first non-ordered point given N(t) = n against its exact CDF.
inline TestReport test_conditional_ks(const std::string& name, const PathSampler& sampler, double horizon,
                                      std::size_t n, const std::function<double(double)>& cdf, std::size_t reps,
                                      std::uint64_t seed, const VerifyOptions& opt = {}) {
    if (n == 0) throw std::invalid_argument("conditional KS needs n >= 1");
    auto sample = sample_given_count(sampler, horizon, n, reps, seed, 0x500, opt.workers);
    std::vector<double> first;
    first.reserve(sample.points.size());
    for (const auto& pts : sample.points) first.push_back(pts[0]);
    TestReport r;
    r.name = name;
    r.reps = reps;
    r.seed = seed;
    auto ks = stats::ks_test(first, cdf);
    r.method = "Kolmogorov-Smirnov";
    r.statistic = ks.statistic;
    r.p_value = ks.p_value;
    r.null_rejected = ks.p_value < r.alpha;
    r.details.emplace_back("conditioned_realizations", static_cast<double>(first.size()));
    return r;
}

/// Probe events over a window (lo, hi]:
///   count probe  1{N(lo, lo + p (hi-lo)] <= k}, k the empirical median;
///   point probe  1{first point in (lo, hi] lies in (lo, lo + p (hi-lo)]}.
struct WindowDraw {
    long count = 0;
    std::vector<long> partial;  // N(lo, lo + p_i (hi-lo)]
    double first = -1.0;        // offset fraction of the first point, -1 if none
};

inline WindowDraw window_draw(const CoxRealization& cox, const Interval& w, const std::vector<double>& probes) {
    WindowDraw d;
    d.count = static_cast<long>(cox.count(w));
    for (double p : probes) d.partial.push_back(static_cast<long>(cox.count({w.lo, w.lo + p * w.length()})));
    auto pts = cox.arrivals_in(w);
    if (!pts.empty()) d.first = (pts.front() - w.lo) / w.length();
    return d;
}

namespace detail {

inline long median_of(std::vector<long> v) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2];
}

/// Largest |z| of the covariance between paired indicator columns.
inline double max_cov_z(const std::vector<std::vector<double>>& xs, const std::vector<std::vector<double>>& ys,
                        double& worst_cov) {
    double worst = 0.0;
    worst_cov = 0.0;
    for (const auto& x : xs) {
        for (const auto& y : ys) {
            double n = static_cast<double>(x.size());
            double mx = 0.0, my = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                mx += x[i];
                my += y[i];
            }
            mx /= n;
            my /= n;
            std::vector<double> prod(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mx) * (y[i] - my);
            auto est = stats::mean_and_se(prod);
            if (!(est.se > 0.0)) continue;
            double z = est.mean / est.se;
            if (std::abs(z) > std::abs(worst)) {
                worst = z;
                worst_cov = est.mean;
            }
        }
    }
    return worst;
}

}  // namespace detail

/// Factorization of the joint law of (points, counts) over two disjoint
/// windows: every probe pair must be uncorrelated within 4 SE. With
/// `given_counts`, replications are restricted to the modal count pair and
/// only point probes are used.
inline TestReport test_point_factorization(const std::string& name, const PathSampler& sampler, const Interval& w1,
                                           const Interval& w2, std::size_t reps, std::uint64_t seed,
                                           bool expect_rejection, bool given_counts = false,
                                           const VerifyOptions& opt = {}) {
    const std::vector<double> probes{0.25, 0.5, 0.75};
    double horizon = std::max(w1.hi, w2.hi);
    std::vector<WindowDraw> a(reps), b(reps);
    for_each_replication(
        reps,
        [&](std::size_t r) {
            auto rng = make_stream(seed, 0x600, r);
            auto cox = sample_cox(sampler(horizon, rng), rng);
            a[r] = window_draw(cox, w1, probes);
            b[r] = window_draw(cox, w2, probes);
        },
        opt.workers);

    std::vector<std::size_t> keep;
    if (given_counts) {
        auto mode = [&](const std::vector<WindowDraw>& d) {
            std::vector<std::size_t> freq(64, 0);
            for (const auto& x : d) {
                if (x.count >= 1 && x.count < 64) ++freq[static_cast<std::size_t>(x.count)];
            }
            return static_cast<long>(std::max_element(freq.begin(), freq.end()) - freq.begin());
        };
        long k1 = mode(a), k2 = mode(b);
        for (std::size_t r = 0; r < reps; ++r) {
            if (a[r].count == k1 && b[r].count == k2) keep.push_back(r);
        }
    } else {
        for (std::size_t r = 0; r < reps; ++r) keep.push_back(r);
    }
    if (keep.size() < 100) throw std::runtime_error("too few replications for the point probes");

    auto columns = [&](const std::vector<WindowDraw>& d) {
        std::vector<std::vector<double>> cols;
        for (std::size_t i = 0; i < probes.size(); ++i) {
            std::vector<double> pt(keep.size());
            for (std::size_t k = 0; k < keep.size(); ++k) {
                double f = d[keep[k]].first;
                pt[k] = (f >= 0.0 && f <= probes[i]) ? 1.0 : 0.0;
            }
            cols.push_back(std::move(pt));
            if (!given_counts) {
                std::vector<long> part(keep.size());
                for (std::size_t k = 0; k < keep.size(); ++k) part[k] = d[keep[k]].partial[i];
                long med = detail::median_of(part);
                std::vector<double> ct(keep.size());
                for (std::size_t k = 0; k < keep.size(); ++k) ct[k] = part[k] <= med ? 1.0 : 0.0;
                cols.push_back(std::move(ct));
            }
        }
        return cols;
    };
    double cov = 0.0;
    double z = detail::max_cov_z(columns(a), columns(b), cov);
    TestReport r;
    r.name = name;
    r.reps = reps;
    r.seed = seed;
    r.expect_rejection = expect_rejection;
    r.method = "probe covariance, 4-SE band";
    r.statistic = z;
    r.p_value = detail::two_sided_normal_p(z);
    r.null_rejected = std::abs(z) > 4.0;
    r.details.emplace_back("worst_covariance", cov);
    r.details.emplace_back("used_replications", static_cast<double>(keep.size()));
    return r;
}

/// Shift invariance of the joint law of (points, counts) in a window: each
/// probe probability must agree across two shifts within 4 SE.
inline TestReport test_point_shift(const std::string& name, const PathSampler& sampler, double delta,
                                   double shift, std::size_t reps, std::uint64_t seed, bool expect_rejection,
                                   const VerifyOptions& opt = {}) {
    const std::vector<double> probes{0.25, 0.5, 0.75};
    std::vector<std::vector<WindowDraw>> draws(2, std::vector<WindowDraw>(reps));
    const Interval windows[2] = {{0.0, delta}, {shift, shift + delta}};
    for (int k = 0; k < 2; ++k) {
        for_each_replication(
            reps,
            [&](std::size_t r) {
                auto rng = make_stream(seed, 0x700 + static_cast<std::uint32_t>(k), r);
                auto cox = sample_cox(sampler(windows[k].hi, rng), rng);
                draws[static_cast<std::size_t>(k)][r] = window_draw(cox, windows[k], probes);
            },
            opt.workers);
    }
    std::vector<long> pooled;
    for (const auto& d : draws) {
        for (const auto& x : d) pooled.push_back(x.count);
    }
    long med = detail::median_of(pooled);
    double worst = 0.0;
    auto n = static_cast<double>(reps);
    for (std::size_t i = 0; i < probes.size(); ++i) {
        // joint probe of count and point location
        auto event = [&](const WindowDraw& x) { return x.count <= med && x.first >= 0.0 && x.first <= probes[i]; };
        double p[2] = {0.0, 0.0};
        for (int k = 0; k < 2; ++k) {
            for (const auto& x : draws[static_cast<std::size_t>(k)]) p[k] += event(x) ? 1.0 : 0.0;
            p[k] /= n;
        }
        double se = std::sqrt((p[0] * (1 - p[0]) + p[1] * (1 - p[1])) / n);
        if (se > 0.0) {
            double z = (p[1] - p[0]) / se;
            if (std::abs(z) > std::abs(worst)) worst = z;
        }
    }
    TestReport r;
    r.name = name;
    r.reps = reps;
    r.seed = seed;
    r.expect_rejection = expect_rejection;
    r.method = "two-sample probe, 4-SE band";
    r.statistic = worst;
    r.p_value = detail::two_sided_normal_p(worst);
    r.null_rejected = std::abs(worst) > 4.0;
    r.details.emplace_back("count_median", static_cast<double>(med));
    return r;
}

// ---------------------------------------------------------------------------
// Gamma ratios
// ---------------------------------------------------------------------------

/// eta(t_k)/eta(t_{k+1}) ~ Beta(shape t_k, shape (t_{k+1}-t_k)) and distinct
/// ratios are uncorrelated.
inline TestReport test_beta_ratios(double shape, double rate, const std::vector<double>& grid, std::size_t reps,
                                   std::uint64_t seed, const VerifyOptions& opt = {}) {
    if (grid.size() < 2 || !std::is_sorted(grid.begin(), grid.end()) || !(grid.front() > 0.0))
        throw std::invalid_argument("beta ratio grid must be increasing and positive");
    const std::size_t k = grid.size() - 1;
    std::vector<std::vector<double>> ratios(k, std::vector<double>(reps));
    MeasureModel model = GammaProcess{shape, rate};
    for_each_replication(
        reps,
        [&](std::size_t r) {
            auto rng = make_stream(seed, 0x800, r);
            auto path = sample_path(model, grid.back(), rng, opt.sampling);
            for (std::size_t i = 0; i < k; ++i) ratios[i][r] = path.value(grid[i]) / path.value(grid[i + 1]);
        },
        opt.workers);
    TestReport r;
    r.name = "gamma ratios: Beta laws and independence";
    r.reps = reps;
    r.seed = seed;
    r.method = "KS per ratio (Bonferroni) + 4-SE correlation band";
    double min_p = 1.0, worst_ks = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        boost::math::beta_distribution<double> beta(shape * grid[i], shape * (grid[i + 1] - grid[i]));
        auto ks = stats::ks_test(ratios[i], [&](double x) { return boost::math::cdf(beta, std::clamp(x, 0.0, 1.0)); });
        r.details.emplace_back("ks_p_" + std::to_string(i), ks.p_value);
        if (ks.p_value < min_p) {
            min_p = ks.p_value;
            worst_ks = ks.statistic;
        }
    }
    double worst_rho = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            double rho = stats::correlation(ratios[i], ratios[j]);
            if (std::abs(rho) > std::abs(worst_rho)) worst_rho = rho;
        }
    }
    double rho_band = 4.0 / std::sqrt(static_cast<double>(reps));
    r.statistic = worst_ks;
    r.p_value = std::min(1.0, min_p * static_cast<double>(k));
    r.null_rejected = r.p_value < r.alpha || std::abs(worst_rho) > rho_band;
    r.details.emplace_back("max_abs_correlation", std::abs(worst_rho));
    r.details.emplace_back("correlation_band", rho_band);
    return r;
}

/// Deterministic comparison of the Gamma closed form with the expansion.
inline TestReport test_gamma_closed_form(std::size_t queries, std::uint64_t seed, double rel_tol = 1e-8) {
    auto rng = make_stream(seed, 0x900, 0);
    double worst = 0.0;
    for (std::size_t i = 0; i < queries; ++i) {
        double shape = 0.2 + 3.0 * uniform_open(rng);
        double rate = 0.2 + 3.0 * uniform_open(rng);
        double horizon = 0.5 + 2.5 * uniform_open(rng);
        auto n = static_cast<std::size_t>(uniform_open(rng) * 7.0);
        std::vector<double> t(n);
        for (auto& v : t) v = horizon * uniform_open(rng);
        if (i % 4 == 0 && n > 1) t[1] = t[0];  // exercise repeated thresholds
        std::sort(t.begin(), t.end());
        JointQuery q{t, horizon};
        double a = gamma_joint_prob(shape, rate, q);
        double b = joint_prob(GammaProcess{shape, rate}, q);
        worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-300));
    }
    TestReport r;
    r.name = "gamma closed form vs expansion";
    r.method = "max relative error";
    r.reps = queries;
    r.seed = seed;
    r.statistic = worst;
    r.p_value = worst <= rel_tol ? 1.0 : 0.0;
    r.null_rejected = worst > rel_tol;
    r.details.emplace_back("tolerance", rel_tol);
    return r;
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

struct PredictionSample {
    std::vector<double> error;     // M(s,s+t] - E[M(s,s+t] | G_s]
    std::vector<double> cond_var;  // Var(M(s,s+t] | G_s)
    std::vector<double> naive;     // M(s,s+t] - E M(s,s+t]
};

inline PredictionSample sample_predictions(const MeasureModel& measure, const PaymentModel& payment, double s,
                                           double t, std::size_t reps, std::uint64_t seed, std::uint32_t tag,
                                           const VerifyOptions& opt = {}) {
    PredictionSample out;
    out.error.resize(reps);
    out.cond_var.resize(reps);
    out.naive.resize(reps);
    double prior = mean_M(measure, payment, s + t) - mean_M(measure, payment, s);
    // the future terms do not depend on the history
    double fut_mean = future_mean(measure, payment, s, t);
    double fut_var = future_variance(measure, payment, s, t);
    for_each_replication(
        reps,
        [&](std::size_t r) {
            auto rng = make_stream(seed, tag, r);
            auto path = simulate_M(measure, payment, s + t, {s, s + t}, rng, opt.sampling);
            auto h = observe(path, payment, s);
            double past_mean = 0.0, past_var = 0.0;
            for (double tj : h.arrivals) {
                past_mean += payment.mean(s - tj, s + t - tj);
                past_var += payment.variance(s - tj, s + t - tj);
            }
            double actual = path.values()[1] - path.values()[0];
            out.error[r] = actual - (past_mean + fut_mean);
            out.cond_var[r] = past_var + fut_var;
            out.naive[r] = actual - prior;
        },
        opt.workers);
    return out;
}

inline TestReport test_prediction_unbiased(const std::string& name, const MeasureModel& measure,
                                           const PaymentModel& payment, double s, double t, std::size_t reps,
                                           std::uint64_t seed, const VerifyOptions& opt = {}) {
    auto sample = sample_predictions(measure, payment, s, t, reps, seed, 0xA00, opt);
    auto e = stats::mean_and_se(sample.error);
    TestReport r;
    r.name = name;
    r.reps = reps;
    r.seed = seed;
    detail::band_verdict(r, e.mean, 0.0, e.se);
    return r;
}

/// Empirical MSE of the conditional predictor against unconditional_mse,
/// accepted within `rel_tol` relative error.
inline TestReport test_prediction_mse(const std::string& name, const MeasureModel& measure,
                                      const PaymentModel& payment, double s, double t, std::size_t reps,
                                      std::uint64_t seed, double rel_tol = 0.05, const VerifyOptions& opt = {}) {
    auto sample = sample_predictions(measure, payment, s, t, reps, seed, 0xB00, opt);
    std::vector<double> sq(reps);
    for (std::size_t i = 0; i < reps; ++i) sq[i] = sample.error[i] * sample.error[i];
    auto m = stats::mean_and_se(sq);
    double exact = unconditional_mse(measure, payment, s, t);
    TestReport r;
    r.name = name;
    r.reps = reps;
    r.seed = seed;
    r.method = "relative error within " + std::to_string(rel_tol);
    r.statistic = std::abs(m.mean - exact) / exact;
    r.p_value = detail::two_sided_normal_p((m.mean - exact) / m.se);
    r.null_rejected = r.statistic > rel_tol;
    r.details.emplace_back("empirical_mse", m.mean);
    r.details.emplace_back("empirical_se", m.se);
    r.details.emplace_back("unconditional_mse", exact);
    r.details.emplace_back("literal_domain_mse", unconditional_mse(measure, payment, s, t, MseForm::literal));
    return r;
}

/// Sample mean of predictive_variance against unconditional_mse.
inline TestReport test_prediction_tower(const std::string& name, const MeasureModel& measure,
                                        const PaymentModel& payment, double s, double t, std::size_t reps,
                                        std::uint64_t seed, const VerifyOptions& opt = {}) {
    auto sample = sample_predictions(measure, payment, s, t, reps, seed, 0xC00, opt);
    auto v = stats::mean_and_se(sample.cond_var);
    TestReport r;
    r.name = name;
    r.reps = reps;
    r.seed = seed;
    double exact = unconditional_mse(measure, payment, s, t);
    detail::band_verdict(r, v.mean, exact, std::max(v.se, 1e-12 * exact));
    return r;
}

/// The conditional predictor beats the unconditional mean: paired 4-SE test
/// that E[(naive error)^2 - (conditional error)^2] > 0.
inline TestReport test_prediction_information(const std::string& name, const MeasureModel& measure,
                                              const PaymentModel& payment, double s, double t, std::size_t reps,
                                              std::uint64_t seed, const VerifyOptions& opt = {}) {
    auto sample = sample_predictions(measure, payment, s, t, reps, seed, 0xD00, opt);
    std::vector<double> gain(reps);
    for (std::size_t i = 0; i < reps; ++i)
        gain[i] = sample.naive[i] * sample.naive[i] - sample.error[i] * sample.error[i];
    auto g = stats::mean_and_se(gain);
    TestReport r;
    r.name = name;
    r.reps = reps;
    r.seed = seed;
    r.method = "paired MSE gain > 4 SE";
    r.statistic = g.se > 0.0 ? g.mean / g.se : 0.0;
    r.p_value = 0.5 * std::erfc(r.statistic / std::sqrt(2.0));
    // the null here is "no gain"; it must be rejected
    r.expect_rejection = true;
    r.null_rejected = r.statistic > 4.0;
    r.details.emplace_back("mse_gain", g.mean);
    return r;
}

// ---------------------------------------------------------------------------
// Figure-style experiment
// ---------------------------------------------------------------------------

struct Figure1Result {
    ShotNoisePath observed;
    std::vector<double> lead_origins;  // s = 1, 2, 3, 4
    // predictions[i][k]: M(s_i) + E[M(s_i, grid_k] | G_{s_i}] for grid_k > s_i
    std::vector<std::vector<std::pair<double, double>>> predictions;
    // terminal-value backtest over independent paths
    std::size_t backtest_paths = 0;
    std::vector<double> backtest_mse;
    bool monotone_improving = false;
};

inline const MeasureModel& reference_measure() {
    static const MeasureModel m = PoissonCounting{10.0};
    return m;
}

inline const PaymentModel& reference_payment() {
    static const PaymentModel p = ExponentialDecayPoisson{5.0, 1.0};
    return p;
}

/// Observed path on [0, horizon], predictors from s = 1..4, and the MSE of
/// the terminal prediction M(s) + E[M(s, horizon] | G_s] over `paths` runs.
inline Figure1Result run_figure1_experiment(std::uint64_t seed, std::size_t paths = 500, double horizon = 5.0,
                                            std::size_t grid_points = 100,
                                            const MeasureModel& measure = reference_measure(),
                                            const PaymentModel& payment = reference_payment()) {
    auto observed_rng = make_stream(seed, 0xF00, 0);
    Figure1Result out{simulate_M(measure, payment, horizon, uniform_grid(horizon, grid_points), observed_rng), {}, {},
                      0, {}, false};
    out.lead_origins = {1.0, 2.0, 3.0, 4.0};
    for (double s : out.lead_origins) {
        auto h = observe(out.observed, payment, s);
        double base = out.observed.value_at(s);
        std::vector<std::pair<double, double>> row;
        for (double u : out.observed.grid()) {
            if (u <= s) continue;
            row.emplace_back(u, base + predict(h, measure, u - s));
        }
        out.predictions.push_back(std::move(row));
    }
    out.backtest_paths = paths;
    std::vector<std::vector<double>> sq(out.lead_origins.size(), std::vector<double>(paths));
    std::vector<double> fut(out.lead_origins.size());
    for (std::size_t i = 0; i < fut.size(); ++i)
        fut[i] = future_mean(measure, payment, out.lead_origins[i], horizon - out.lead_origins[i]);
    for_each_replication(paths, [&](std::size_t r) {
        auto rng = make_stream(seed, 0xF01, r);
        auto path = simulate_M(measure, payment, horizon, {horizon}, rng);
        double final_value = path.values()[0];
        for (std::size_t i = 0; i < out.lead_origins.size(); ++i) {
            double s = out.lead_origins[i];
            double pred = fut[i];
            const auto& arr = path.cox().arrivals();
            for (std::size_t j = 0; j < arr.size() && arr[j] <= s; ++j) pred += payment.mean(s - arr[j], horizon - arr[j]);
            double err = final_value - (path.value_at(s) + pred);
            sq[i][r] = err * err;
        }
    });
    out.monotone_improving = true;
    for (std::size_t i = 0; i < sq.size(); ++i) {
        double m = 0.0;
        for (double v : sq[i]) m += v;
        out.backtest_mse.push_back(m / static_cast<double>(paths));
        if (i > 0 && !(out.backtest_mse[i] < out.backtest_mse[i - 1])) out.monotone_improving = false;
    }
    return out;
}

inline void write_prediction_table(std::ostream& os, const Figure1Result& f) {
    auto old = os.precision(17);
    os << "s,time,prediction\n";
    for (std::size_t i = 0; i < f.lead_origins.size(); ++i) {
        for (const auto& [u, v] : f.predictions[i]) os << f.lead_origins[i] << ',' << u << ',' << v << '\n';
    }
    os.precision(old);
}

inline void write_backtest_table(std::ostream& os, const Figure1Result& f) {
    auto old = os.precision(17);
    os << "s,mse,paths\n";
    for (std::size_t i = 0; i < f.lead_origins.size(); ++i)
        os << f.lead_origins[i] << ',' << f.backtest_mse[i] << ',' << f.backtest_paths << '\n';
    os.precision(old);
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

using TestCase = std::function<TestReport(std::size_t reps, std::uint64_t seed)>;

struct NamedCase {
    std::string suite;
    TestCase run;
};

inline std::vector<NamedCase> suite_cases(const std::string& suite, const VerifyOptions& opt = {}) {
    const std::vector<Interval> unit3{{0.0, 1.0}, {1.0, 2.0}, {2.0, 3.0}};
    const std::vector<double> shifts{0.0, 1.0, 2.0};
    const MeasureModel det = Deterministic{2.0};
    const MeasureModel pois = PoissonCounting{10.0};
    const MeasureModel gam = GammaProcess{1.0, 1.0};
    const MeasureModel mixed = MixedPoisson{{5.0, 15.0}, {0.5, 0.5}};
    const MeasureModel inhom = GeneralAdditive{{LinearRate{0.0, 1.0}, DegenerateJump{1.0}}};
    const LevySubordinatorSpec pois1{0.0, FiniteActivity{1.0, DegenerateJump{1.0}}};

    std::vector<NamedCase> cases;
    auto add = [&](const std::string& s, TestCase c) {
        if (suite == "all" || suite == s) cases.push_back({s, std::move(c)});
    };

    for (const auto* m : {&det, &pois, &gam, &mixed}) {
        MeasureModel model = *m;
        add("counts", [model, unit3, opt](std::size_t reps, std::uint64_t seed) {
            return test_count_factorization("count factorization: " + model.name(), model, unit3, reps, seed, opt);
        });
    }
    for (const auto* m : {&det, &pois, &gam, &inhom}) {
        MeasureModel model = *m;
        add("counts", [model, shifts, opt](std::size_t reps, std::uint64_t seed) {
            return test_count_stationarity("count stationarity: " + model.name(), model, 1.0, shifts, reps, seed, opt);
        });
    }

    add("points", [opt](std::size_t reps, std::uint64_t seed) {
        return test_conditional_cdf("gamma conditional CDF n=2 (1,2,2)", model_sampler(GammaProcess{1.0, 1.0}, opt.sampling),
                                    {{1.0, 2.0}, 2.0}, gamma_conditional_cdf(1.0, {{1.0, 2.0}, 2.0}), reps, seed, opt);
    });
    add("points", [opt](std::size_t reps, std::uint64_t seed) {
        JointQuery q{{0.5, 1.5}, 2.0};
        return test_conditional_cdf("poisson conditional CDF n=2 (0.5,1.5,2)", model_sampler(PoissonCounting{3.0}, opt.sampling),
                                    q, joint_prob(PoissonCounting{3.0}, q) / count_pmf(PoissonCounting{3.0}, {0.0, 2.0}, 2),
                                    reps, seed, opt);
    });
    add("points", [opt](std::size_t reps, std::uint64_t seed) {
        return test_conditional_ks("deterministic n=1 uniform point", model_sampler(Deterministic{1.0}, opt.sampling), 2.0, 1,
                                   [](double x) { return std::clamp(x / 2.0, 0.0, 1.0); }, reps, seed, opt);
    });
    add("points", [opt](std::size_t reps, std::uint64_t seed) {
        const double shape = 1.0, horizon = 2.0;
        return test_conditional_ks("gamma n=2 non-ordered point KS", model_sampler(GammaProcess{shape, 1.0}, opt.sampling),
                                   horizon, 2,
                                   [=](double x) {
                                       x = std::clamp(x, 0.0, horizon);
                                       if (x == 0.0) return 0.0;
                                       return gamma_conditional_cdf(shape, {{x, horizon}, horizon});
                                   },
                                   reps, seed, opt);
    });
    add("points", [opt](std::size_t reps, std::uint64_t seed) {
        return test_point_factorization("point factorization: poisson", model_sampler(PoissonCounting{3.0}, opt.sampling),
                                        {0.0, 1.0}, {1.0, 2.0}, reps, seed, false, false, opt);
    });
    add("points", [opt](std::size_t reps, std::uint64_t seed) {
        return test_point_factorization("point factorization: gamma", model_sampler(GammaProcess{2.0, 1.0}, opt.sampling),
                                        {0.0, 1.0}, {1.0, 2.0}, reps, seed, false, false, opt);
    });
    add("points", [opt, mixed](std::size_t reps, std::uint64_t seed) {
        return test_point_factorization("point factorization: mixed_poisson", model_sampler(mixed, opt.sampling),
                                        {0.0, 1.0}, {1.0, 2.0}, reps, seed, true, false, opt);
    });
    add("points", [opt, mixed](std::size_t reps, std::uint64_t seed) {
        return test_point_factorization("points given counts: mixed_poisson", model_sampler(mixed, opt.sampling),
                                        {0.0, 1.0}, {1.0, 2.0}, reps, seed, false, true, opt);
    });
    add("points", [opt](std::size_t reps, std::uint64_t seed) {
        return test_point_shift("point shift invariance: gamma", model_sampler(GammaProcess{2.0, 1.0}, opt.sampling), 1.0,
                                1.5, reps, seed, false, opt);
    });
    add("points", [opt, inhom](std::size_t reps, std::uint64_t seed) {
        return test_point_shift("point shift invariance: general_additive", model_sampler(inhom, opt.sampling), 1.0, 1.5,
                                reps, seed, true, opt);
    });

    add("gamma", [opt](std::size_t reps, std::uint64_t seed) {
        return test_beta_ratios(1.5, 2.0, {0.5, 1.0, 2.0, 3.0}, reps, seed, opt);
    });
    add("gamma", [](std::size_t, std::uint64_t seed) { return test_gamma_closed_form(100, seed); });
    add("gamma", [opt](std::size_t reps, std::uint64_t seed) {
        MeasureModel g = GammaProcess{2.0, 1.5};
        return test_count_pmf("gamma count pmf", model_sampler(g, opt.sampling), {0.5, 1.5},
                              count_pmf_table(g, {0.5, 1.5}), reps, seed, opt);
    });

    add("subordination", [opt, pois1, unit3](std::size_t reps, std::uint64_t seed) {
        return test_count_factorization("subordinated factorization: poisson(1) o gamma(1,1)",
                                        subordinated_sampler(pois1, GammaProcess{1.0, 1.0}, opt.sampling), unit3, reps,
                                        seed, false, opt);
    });
    add("subordination", [opt, pois1, shifts](std::size_t reps, std::uint64_t seed) {
        return test_count_stationarity("subordinated stationarity: poisson(1) o gamma(1,1)",
                                       subordinated_sampler(pois1, GammaProcess{1.0, 1.0}, opt.sampling), 1.0, shifts,
                                       reps, seed, false, opt);
    });
    add("subordination", [opt, pois1](std::size_t reps, std::uint64_t seed) {
        // counts of a Cox process directed by a Poisson(c) counting path
        return test_count_pmf("subordinated pmf: poisson(1) o deterministic(3)",
                              subordinated_sampler(pois1, Deterministic{3.0}, opt.sampling), {0.0, 1.0},
                              count_pmf_table(PoissonCounting{3.0}, {0.0, 1.0}), reps, seed, opt);
    });
    add("subordination", [opt, unit3](std::size_t reps, std::uint64_t seed) {
        LevySubordinatorSpec outer{0.5, GammaType{1.0, 1.0}};
        return test_count_factorization("subordinated factorization: gamma o compound_poisson",
                                        subordinated_sampler(outer, CompoundPoisson{2.0, ExponentialJump{1.0}}, opt.sampling),
                                        unit3, reps, seed, false, opt);
    });

    struct PredCfg {
        std::string name;
        MeasureModel measure;
        PaymentModel payment;
    };
    std::vector<PredCfg> pred{
        {"reference", reference_measure(), reference_payment()},
        {"gamma", GammaProcess{4.0, 0.5}, ExponentialDecayPoisson{2.0, 0.5}},
        {"additive", GeneralAdditive{{LinearRate{2.0, 1.0}, ExponentialJump{0.5}}}, ThinnedPoisson{ConstantRate{1.5}}},
    };
    for (const auto& c : pred) {
        add("prediction", [c, opt](std::size_t reps, std::uint64_t seed) {
            return test_prediction_unbiased("prediction unbiased: " + c.name, c.measure, c.payment, 1.0, 1.0, reps, seed, opt);
        });
    }
    add("prediction", [opt](std::size_t reps, std::uint64_t seed) {
        return test_prediction_mse("prediction MSE: reference", reference_measure(), reference_payment(), 1.0, 1.0, reps,
                                   seed, 0.05, opt);
    });
    add("prediction", [opt](std::size_t reps, std::uint64_t seed) {
        return test_prediction_tower("prediction tower: reference", reference_measure(), reference_payment(), 1.0, 1.0,
                                     reps, seed, opt);
    });
    add("prediction", [opt](std::size_t reps, std::uint64_t seed) {
        return test_prediction_information("prediction information gain: reference", reference_measure(),
                                           reference_payment(), 1.0, 1.0, reps, seed, opt);
    });
    if (cases.empty()) throw std::invalid_argument("unknown suite: " + suite);
    return cases;
}

struct SuiteResult {
    std::vector<TestReport> reports;
    std::size_t initial_failures = 0;
    bool passed() const {
        for (const auto& r : reports) {
            if (!r.ok()) return false;
        }
        return true;
    }
};

/// Runs a suite; when at most `max_retries` tests miss their expectation,
/// those are re-run once at `retry_scale` x replications with a fresh seed.
inline SuiteResult run_suite(const std::string& suite, std::size_t reps, std::uint64_t seed,
                             const VerifyOptions& opt = {}, std::size_t max_retries = 2,
                             const std::function<void(const TestReport&)>& progress = {},
                             std::size_t retry_scale = 10) {
    auto cases = suite_cases(suite, opt);
    SuiteResult out;
    std::vector<std::size_t> failed;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        auto rep = cases[i].run(reps, seed);
        if (progress) progress(rep);
        if (!rep.ok()) failed.push_back(i);
        out.reports.push_back(std::move(rep));
    }
    out.initial_failures = failed.size();
    if (!failed.empty() && failed.size() <= max_retries) {
        for (std::size_t i : failed) {
            auto rep = cases[i].run(reps * retry_scale, seed + 1);
            rep.attempts = 2;
            if (progress) progress(rep);
            out.reports[i] = std::move(rep);
        }
    }
    return out;
}

}  // namespace coxsn
