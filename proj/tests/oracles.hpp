// Test-side oracles, kept independent of the implementation paths they
// check: central finite differences for derivatives, a plain
// Barzilai-Borwein descent for penalty-method minimization, and helpers to
// build random non-degenerate configurations.
#pragma once

#include "iontrap/configuration.hpp"
#include "iontrap/ion_system.hpp"
#include "iontrap/potential.hpp"
#include "iontrap/rng.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

using iontrap::Configuration;

inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> q, double h = 1e-7) {
    std::vector<double> g(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double keep = q[i];
        q[i] = keep + h;
        const double fp = f(q);
        q[i] = keep - h;
        const double fm = f(q);
        q[i] = keep;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline Configuration random_configuration(std::size_t n, iontrap::GaussianRng& rng,
                                          double z_span = 4.0, double x_span = 0.6,
                                          double min_gap = 0.25) {
    Configuration q;
    q.z.resize(n);
    q.x.resize(n);
    for (;;) {
        for (std::size_t j = 0; j < n; ++j) {
            q.z[j] = z_span * (rng.uniform() - 0.5) * 2.0;
            q.x[j] = x_span * (rng.uniform() - 0.5) * 2.0;
        }
        if (q.min_pair_distance() > min_gap)
            return q;
    }
}

/// Gradient descent with Barzilai-Borwein steps and an Armijo safeguard.
/// Deliberately not the library minimizer.
inline std::vector<double> bb_descent(
    const std::function<double(const std::vector<double>&, std::vector<double>&)>& fg,
    std::vector<double> x, double grad_tol = 1e-8, int max_iter = 200000) {
    std::vector<double> g(x.size()), g_prev(x.size()), x_prev;
    double f = fg(x, g);
    double step = 1e-3;
    for (int it = 0; it < max_iter; ++it) {
        double gmax = 0.0;
        for (double v : g)
            gmax = std::max(gmax, std::abs(v));
        if (gmax < grad_tol)
            break;
        if (!x_prev.empty()) {
            double sy = 0.0, yy = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double s = x[i] - x_prev[i];
                const double y = g[i] - g_prev[i];
                sy += s * y;
                yy += y * y;
            }
            if (sy > 0.0 && yy > 0.0)
                step = sy / yy;
        }
        // Armijo fallback keeps the oracle from wandering on bad BB steps.
        std::vector<double> x_new(x.size()), g_new(x.size());
        double t = step;
        for (int ls = 0; ls < 50; ++ls) {
            for (std::size_t i = 0; i < x.size(); ++i)
                x_new[i] = x[i] - t * g[i];
            const double f_new = fg(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= f) {
                x_prev = x;
                g_prev = g;
                x = x_new;
                g = g_new;
                f = f_new;
                break;
            }
            t *= 0.5;
        }
    }
    return x;
}

} // namespace oracles
