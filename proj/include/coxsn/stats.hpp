#pragma once

// Test statistics used by the verification campaigns.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "coxsn/rng.hpp"

namespace coxsn::stats {

struct ChiSquareResult {
    double statistic = 0.0;
    double df = 0.0;
    double p_value = 1.0;
    std::size_t cells = 0;
};

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

struct MeanEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

inline double chi_square_sf(double statistic, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("chi-square needs positive degrees of freedom");
    boost::math::chi_squared dist(df);
    return boost::math::cdf(boost::math::complement(dist, std::max(statistic, 0.0)));
}

inline MeanEstimate mean_and_se(const std::vector<double>& x) {
    MeanEstimate out;
    out.n = x.size();
    if (x.empty()) return out;
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m += (x[i] - m) / static_cast<double>(i + 1);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    out.mean = m;
    out.se = x.size() > 1 ? std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size())) : 0.0;
    return out;
}

/// Maps counts 0..cap to bins of adjacent values; counts >= cap share the tail
/// bucket. Bins are merged left to right until each holds at least
/// `min_fraction` of the observations.
class CountBinning {
  public:
    CountBinning(const std::vector<std::vector<long>>& samples, double min_fraction, long cap = 15) : cap_(cap) {
        std::vector<double> freq(static_cast<std::size_t>(cap) + 1, 0.0);
        std::size_t total = 0;
        for (const auto& s : samples) {
            for (long v : s) {
                freq[static_cast<std::size_t>(std::clamp(v, 0L, cap))] += 1.0;
                ++total;
            }
        }
        if (total == 0) throw std::invalid_argument("binning needs observations");
        bin_of_.assign(freq.size(), 0);
        int bin = 0;
        double acc = 0.0;
        for (std::size_t v = 0; v < freq.size(); ++v) {
            bin_of_[v] = bin;
            acc += freq[v] / static_cast<double>(total);
            if (acc >= min_fraction && v + 1 < freq.size()) {
                ++bin;
                acc = 0.0;
            }
        }
        // a light final bin joins its neighbour
        if (acc < min_fraction && bin > 0) {
            for (auto& b : bin_of_) {
                if (b == bin) b = bin - 1;
            }
        }
        bins_ = *std::max_element(bin_of_.begin(), bin_of_.end()) + 1;
    }

    int bins() const { return bins_; }
    int operator()(long v) const { return bin_of_[static_cast<std::size_t>(std::clamp(v, 0L, cap_))]; }

  private:
    long cap_;
    std::vector<int> bin_of_;
    int bins_ = 0;
};

/// Chi-square test of mutual independence for rows of k jointly observed
/// counts (one row per replication).
inline ChiSquareResult independence_test(const std::vector<std::vector<long>>& rows, long cap = 15) {
    if (rows.empty()) throw std::invalid_argument("independence test needs observations");
    const std::size_t k = rows.front().size();
    if (k < 2) throw std::invalid_argument("independence test needs at least two coordinates");
    const double n = static_cast<double>(rows.size());
    const double min_fraction = std::pow(5.0 / n, 1.0 / static_cast<double>(k));
    std::vector<CountBinning> binning;
    for (std::size_t d = 0; d < k; ++d) {
        std::vector<std::vector<long>> col(1);
        col[0].reserve(rows.size());
        for (const auto& r : rows) col[0].push_back(r[d]);
        binning.emplace_back(col, min_fraction, cap);
        if (binning.back().bins() < 2) throw std::invalid_argument("degenerate table: a coordinate is constant");
    }
    std::vector<std::vector<double>> marg(k);
    std::size_t cells = 1;
    for (std::size_t d = 0; d < k; ++d) {
        marg[d].assign(static_cast<std::size_t>(binning[d].bins()), 0.0);
        cells *= marg[d].size();
    }
    std::vector<double> joint(cells, 0.0);
    for (const auto& r : rows) {
        std::size_t idx = 0;
        for (std::size_t d = 0; d < k; ++d) {
            int b = binning[d](r[d]);
            marg[d][static_cast<std::size_t>(b)] += 1.0;
            idx = idx * marg[d].size() + static_cast<std::size_t>(b);
        }
        joint[idx] += 1.0;
    }
    ChiSquareResult out;
    out.cells = cells;
    std::vector<std::size_t> pos(k, 0);
    for (std::size_t c = 0; c < cells; ++c) {
        std::size_t rem = c;
        double expected = n;
        for (std::size_t d = k; d-- > 0;) {
            pos[d] = rem % marg[d].size();
            rem /= marg[d].size();
            expected *= marg[d][pos[d]] / n;
        }
        if (expected > 0.0) out.statistic += (joint[c] - expected) * (joint[c] - expected) / expected;
    }
    double df = static_cast<double>(cells) - 1.0;
    for (std::size_t d = 0; d < k; ++d) df -= static_cast<double>(marg[d].size()) - 1.0;
    out.df = df;
    out.p_value = chi_square_sf(out.statistic, df);
    return out;
}

/// k-sample chi-square test that all groups share one count distribution.
inline ChiSquareResult homogeneity_test(const std::vector<std::vector<long>>& groups, long cap = 15) {
    if (groups.size() < 2) throw std::invalid_argument("homogeneity test needs at least two groups");
    std::size_t total = 0;
    for (const auto& g : groups) {
        if (g.empty()) throw std::invalid_argument("homogeneity test needs non-empty groups");
        total += g.size();
    }
    std::size_t smallest = groups.front().size();
    for (const auto& g : groups) smallest = std::min(smallest, g.size());
    CountBinning binning(groups, 5.0 / static_cast<double>(smallest), cap);
    const auto r = static_cast<std::size_t>(binning.bins());
    if (r < 2) throw std::invalid_argument("degenerate table: all counts fall in one bin");
    std::vector<std::vector<double>> table(groups.size(), std::vector<double>(r, 0.0));
    std::vector<double> col(r, 0.0);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (long v : groups[g]) {
            auto b = static_cast<std::size_t>(binning(v));
            table[g][b] += 1.0;
            col[b] += 1.0;
        }
    }
    ChiSquareResult out;
    out.cells = groups.size() * r;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        double rowsum = static_cast<double>(groups[g].size());
        for (std::size_t b = 0; b < r; ++b) {
            double expected = rowsum * col[b] / static_cast<double>(total);
            if (expected > 0.0) out.statistic += (table[g][b] - expected) * (table[g][b] - expected) / expected;
        }
    }
    out.df = static_cast<double>((groups.size() - 1) * (r - 1));
    out.p_value = chi_square_sf(out.statistic, out.df);
    return out;
}

/// Chi-square goodness of fit of counts against a pmf (tail lumped).
inline ChiSquareResult goodness_of_fit(const std::vector<long>& counts, const std::vector<double>& pmf) {
    if (counts.empty() || pmf.empty()) throw std::invalid_argument("goodness of fit needs data and a pmf");
    const double n = static_cast<double>(counts.size());
    // bins of consecutive values with expected count >= 5
    std::vector<std::size_t> edges;  // first value of each bin
    double acc = 0.0;
    edges.push_back(0);
    for (std::size_t v = 0; v < pmf.size(); ++v) {
        acc += pmf[v] * n;
        if (acc >= 5.0 && v + 1 < pmf.size()) {
            edges.push_back(v + 1);
            acc = 0.0;
        }
    }
    std::vector<double> expected(edges.size(), 0.0);
    std::vector<double> observed(edges.size(), 0.0);
    double covered = 0.0;
    for (std::size_t v = 0; v < pmf.size(); ++v) {
        auto b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin()) - 1;
        expected[b] += pmf[v] * n;
        covered += pmf[v];
    }
    expected.back() += std::max(0.0, 1.0 - covered) * n;
    if (expected.size() > 1 && expected.back() < 5.0) {
        expected[expected.size() - 2] += expected.back();
        expected.pop_back();
        edges.pop_back();
        observed.pop_back();
    }
    for (long c : counts) {
        auto v = static_cast<std::size_t>(std::max(c, 0L));
        auto b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin()) - 1;
        observed[b] += 1.0;
    }
    ChiSquareResult out;
    out.cells = expected.size();
    if (expected.size() < 2) throw std::invalid_argument("degenerate table: a single bin");
    for (std::size_t b = 0; b < expected.size(); ++b) {
        out.statistic += (observed[b] - expected[b]) * (observed[b] - expected[b]) / expected[b];
    }
    out.df = static_cast<double>(expected.size() - 1);
    out.p_value = chi_square_sf(out.statistic, out.df);
    return out;
}

/// Asymptotic Kolmogorov survival function Q(x) = 2 sum (-1)^{k-1} e^{-2k^2x^2}.
inline double kolmogorov_sf(double x) {
    if (x < 0.18) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample Kolmogorov–Smirnov test with Stephens' small-sample scaling.
inline KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw std::invalid_argument("KS test needs observations");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double f = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    double sn = std::sqrt(n);
    KsResult out;
    out.statistic = d;
    out.n = sample.size();
    out.p_value = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
    return out;
}

/// Pearson correlation.
inline double correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("correlation needs paired samples");
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

/// Total-variation distance between the empirical joint law of the rows and
/// the product of its empirical marginals. Counts above `cap` are lumped.
inline double factorization_tv(const std::vector<std::vector<long>>& rows, const std::vector<std::size_t>& pick,
                               long cap = 15) {
    const std::size_t k = rows.front().size();
    const auto side = static_cast<std::size_t>(cap) + 1;
    std::size_t cells = 1;
    for (std::size_t d = 0; d < k; ++d) cells *= side;
    std::vector<double> joint(cells, 0.0);
    std::vector<std::vector<double>> marg(k, std::vector<double>(side, 0.0));
    const double w = 1.0 / static_cast<double>(pick.size());
    for (std::size_t i : pick) {
        std::size_t idx = 0;
        for (std::size_t d = 0; d < k; ++d) {
            auto v = static_cast<std::size_t>(std::clamp(rows[i][d], 0L, cap));
            marg[d][v] += w;
            idx = idx * side + v;
        }
        joint[idx] += w;
    }
    // TV = sum over cells of max(0, product - joint)
    double tv = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
        std::size_t rem = c;
        double prod = 1.0;
        for (std::size_t d = k; d-- > 0;) {
            prod *= marg[d][rem % side];
            rem /= side;
        }
        tv += std::max(0.0, prod - joint[c]);
    }
    return tv;
}

struct BootstrapTv {
    double tv = 0.0;
    double se = 0.0;
};

/// Factorization TV with a bootstrap standard error.
inline BootstrapTv bootstrap_factorization_tv(const std::vector<std::vector<long>>& rows, int resamples,
                                              std::uint64_t seed) {
    std::vector<std::size_t> all(rows.size());
    std::iota(all.begin(), all.end(), 0);
    BootstrapTv out;
    out.tv = factorization_tv(rows, all);
    std::vector<double> reps;
    reps.reserve(static_cast<std::size_t>(resamples));
    Rng rng(seed, stream_id(0xB007u, 0));
    std::vector<std::size_t> pick(rows.size());
    for (int b = 0; b < resamples; ++b) {
        for (auto& p : pick) p = static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(rows.size()));
        reps.push_back(factorization_tv(rows, pick));
    }
    auto est = mean_and_se(reps);
    out.se = est.se * std::sqrt(static_cast<double>(reps.size()));
    return out;
}

}  // namespace coxsn::stats
