#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace coxsn::quad {

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = f(lm);
    double frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson integration of f over [a,b].
///
/// The interval is first cut into `pieces` panels so that integrands with
/// kinks at a few interior points still converge quickly. `rel_tol` is
/// relative to a coarse estimate of the integral magnitude.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double rel_tol = 1e-9, int pieces = 8,
                        int max_depth = 40) {
    if (!(b > a)) {
        return 0.0;
    }
    std::vector<double> x(pieces + 1);
    std::vector<double> fx(pieces + 1);
    for (int i = 0; i <= pieces; ++i) {
        x[i] = a + (b - a) * i / pieces;
        fx[i] = f(x[i]);
    }
    std::vector<double> fm(pieces);
    std::vector<double> whole(pieces);
    double scale = 0.0;
    for (int i = 0; i < pieces; ++i) {
        fm[i] = f(0.5 * (x[i] + x[i + 1]));
        whole[i] = (x[i + 1] - x[i]) / 6.0 * (fx[i] + 4.0 * fm[i] + fx[i + 1]);
        scale += std::abs(whole[i]);
    }
    double tol = std::max(rel_tol * scale, 1e-300);
    double total = 0.0;
    for (int i = 0; i < pieces; ++i) {
        total += detail::simpson_step(f, x[i], x[i + 1], fx[i], fm[i], fx[i + 1], whole[i],
                                      tol / pieces, max_depth);
    }
    return total;
}

/// Gauss–Laguerre rule: \int_0^\infty e^{-x} g(x) dx ≈ Σ w_i g(x_i).
template <std::size_t N>
struct GaussLaguerre {
    std::array<double, N> nodes{};
    std::array<double, N> weights{};

    GaussLaguerre() {
        // Newton iteration on L_N with the usual asymptotic starting guesses.
        const int n = static_cast<int>(N);
        double z = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i == 0) {
                z = 3.0 / (1.0 + 2.4 * n);
            } else if (i == 1) {
                z += 15.0 / (1.0 + 2.5 * n);
            } else {
                double ai = i - 1;
                z += ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - nodes[i - 2]);
            }
            double pp = 0.0;
            double p2 = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p1 = 1.0;
                p2 = 0.0;
                for (int j = 0; j < n; ++j) {
                    double p3 = p2;
                    p2 = p1;
                    p1 = ((2 * j + 1 - z) * p2 - j * p3) / (j + 1);
                }
                pp = n * (p1 - p2) / z;
                double z1 = z;
                z = z1 - p1 / pp;
                if (std::abs(z - z1) <= 1e-15 * std::abs(z)) {
                    break;
                }
            }
            nodes[i] = z;
            weights[i] = -1.0 / (pp * n * p2);
        }
    }
};

inline const GaussLaguerre<32>& laguerre32() {
    static const GaussLaguerre<32> rule;
    return rule;
}

}  // namespace coxsn::quad
