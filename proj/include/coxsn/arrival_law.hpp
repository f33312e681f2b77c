#pragma once

// Exact joint laws of non-ordered arrival points and counts.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "coxsn/random_measure.hpp"

namespace coxsn {

/// Largest n accepted by the expansion in joint_prob.
inline constexpr std::size_t kMaxExpansionOrder = 12;

/// P(T'_1 <= t_1, ..., T'_n <= t_n, N(t) = n) with n = thresholds.size().
struct JointQuery {
    std::vector<double> thresholds;  // t_1 <= ... <= t_n
    double horizon = 1.0;            // t

    std::size_t n() const { return thresholds.size(); }

    void validate() const {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("query horizon must be positive");
        double prev = 0.0;
        for (double tj : thresholds) {
            if (!(tj > 0.0) || tj > horizon) throw std::invalid_argument("thresholds must lie in (0, horizon]");
            if (tj < prev) throw std::invalid_argument("thresholds must be non-decreasing");
            prev = tj;
        }
    }
};

/// One monomial of prod_j eta(0,t_j] = prod_j (D_1 + ... + D_j), D_i = eta(t_{i-1},t_i].
struct ExpansionTerm {
    std::vector<int> exponents;  // k_1..k_n
    std::uint64_t coefficient = 0;
};

namespace detail {

// Depth-first over k_n, ..., k_1 with k_j <= n+1-j-sum_{i>j} k_i. Increments
// over repeated thresholds are empty and get k_j = 0. visit(k, coefficient).
template <class Visit>
void enumerate_expansion(const std::vector<double>& thresholds, Visit&& visit) {
    const int n = static_cast<int>(thresholds.size());
    if (n == 0) {
        std::vector<int> empty;
        visit(empty, std::uint64_t{1});
        return;
    }
    std::vector<int> k(static_cast<std::size_t>(n), 0);
    auto empty_increment = [&](int j) {  // j is 1-based
        return j > 1 && thresholds[static_cast<std::size_t>(j - 1)] == thresholds[static_cast<std::size_t>(j - 2)];
    };
    auto rec = [&](auto&& self, int j, int used, std::uint64_t coef) -> void {
        int avail = n + 1 - j - used;
        if (j == 1) {
            // all remaining factors must take D_1
            k[0] = avail;
            visit(k, coef);
            return;
        }
        int hi = empty_increment(j) ? 0 : avail;
        for (int kj = 0; kj <= hi; ++kj) {
            k[static_cast<std::size_t>(j - 1)] = kj;
            auto c = static_cast<std::uint64_t>(boost::math::binomial_coefficient<double>(avail, kj) + 0.5);
            self(self, j - 1, used + kj, coef * c);
        }
        k[static_cast<std::size_t>(j - 1)] = 0;
    };
    rec(rec, n, 0, std::uint64_t{1});
}

}  // namespace detail

inline std::vector<ExpansionTerm> expansion_terms(const std::vector<double>& thresholds) {
    std::vector<ExpansionTerm> out;
    detail::enumerate_expansion(thresholds, [&](const std::vector<int>& k, std::uint64_t c) {
        out.push_back({k, c});
    });
    return out;
}

/// Joint law of non-ordered points and the count, by expanding
/// (1/n!) E prod_j eta(t_j) e^{-eta(t)} into products of
/// E[eta(t_{j-1},t_j]^k e^{-eta(t_{j-1},t_j]}] and E e^{-eta(t_n,t]}.
inline double joint_prob(const MeasureModel& model, const JointQuery& q) {
    q.validate();
    model.require_additive("joint_prob");
    const std::size_t n = q.n();
    if (n > kMaxExpansionOrder) {
        throw std::invalid_argument("joint_prob supports at most " + std::to_string(kMaxExpansionOrder) + " points");
    }
    double tail = (n == 0 || q.thresholds.back() < q.horizon)
                      ? laplace(model, {n == 0 ? 0.0 : q.thresholds.back(), q.horizon}, 1.0)
                      : 1.0;
    if (n == 0) return tail;

    // factors[j][k] = E[D_j^k e^{-D_j}], cached per increment.
    std::vector<std::vector<double>> factors(n);
    double prev = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double tj = q.thresholds[j];
        if (tj > prev) {
            factors[j] = tilted_moments(model, {prev, tj}, static_cast<int>(n + 1 - j), 1.0);
        } else {
            factors[j] = {1.0};  // empty increment, only k_j = 0 occurs
        }
        prev = tj;
    }
    double sum = 0.0;
    detail::enumerate_expansion(q.thresholds, [&](const std::vector<int>& k, std::uint64_t coef) {
        double term = static_cast<double>(coef);
        for (std::size_t j = 0; j < n; ++j) term *= factors[j][static_cast<std::size_t>(k[j])];
        sum += term;
    });
    return sum * tail / boost::math::factorial<double>(static_cast<unsigned>(n));
}

/// P(N(s,t] = count) = (-1)^l phi^{(l)}(1) / l!.
inline double count_pmf(const MeasureModel& model, const Interval& iv, int count) {
    if (count < 0) throw std::invalid_argument("count must be non-negative");
    model.require_additive("count_pmf");
    return scaled_tilted_moments(model, iv, count, 1.0).back();
}

/// pmf of N(s,t] from 0 up to the first count where the cumulative mass
/// reaches 1 - tail_tol.
inline std::vector<double> count_pmf_table(const MeasureModel& model, const Interval& iv, double tail_tol = 1e-8,
                                           int max_count = 1 << 14) {
    model.require_additive("count_pmf_table");
    for (int order = 32;; order *= 2) {
        order = std::min(order, max_count);
        auto b = scaled_tilted_moments(model, iv, order, 1.0);
        double cum = 0.0;
        for (std::size_t l = 0; l < b.size(); ++l) {
            cum += b[l];
            if (cum >= 1.0 - tail_tol) {
                b.resize(l + 1);
                return b;
            }
        }
        if (order == max_count) {
            throw std::runtime_error("count pmf did not reach the requested mass within max_count");
        }
    }
}

/// P(T'_1 <= t_1, ..., T'_n <= t_n | N(t) = n) for a Gamma(shape, .) directing
/// process: prod_k E[R_k^k] with R_k = eta(t_k)/eta(t_{k+1}) ~ Beta, t_{n+1} := t.
inline double gamma_conditional_cdf(double shape, const JointQuery& q) {
    q.validate();
    if (!(shape > 0.0)) throw std::invalid_argument("gamma shape must be positive");
    const std::size_t n = q.n();
    double p = 1.0;
    for (std::size_t k = 1; k <= n; ++k) {
        double a = shape * q.thresholds[k - 1];
        double b = shape * (k < n ? q.thresholds[k] : q.horizon);
        if (a == b) continue;
        for (std::size_t m = 0; m < k; ++m) p *= (a + static_cast<double>(m)) / (b + static_cast<double>(m));
    }
    return p;
}

/// Closed form of joint_prob for GammaProcess(shape, rate).
inline double gamma_joint_prob(double shape, double rate, const JointQuery& q) {
    if (!(rate > 0.0)) throw std::invalid_argument("gamma rate must be positive");
    double cond = gamma_conditional_cdf(shape, q);
    double a = shape * q.horizon;
    double n = static_cast<double>(q.n());
    // (1/n!) E eta(t)^n e^{-eta(t)} for eta(t) ~ Gamma(a, rate)
    double log_count = boost::math::lgamma(a + n) - boost::math::lgamma(a) - boost::math::lgamma(n + 1.0) +
                       a * std::log(rate) - (a + n) * std::log1p(rate);
    return cond * std::exp(log_count);
}

}  // namespace coxsn
