#include "iontrap/minimize.hpp"

#include <cmath>
#include <deque>

namespace iontrap {

MinimizeResult lbfgs_minimize(const ObjectiveFn& fn, Eigen::VectorXd x0,
                              const MinimizeOptions& opts) {
    const Eigen::Index n = x0.size();
    Eigen::VectorXd x = std::move(x0);
    Eigen::VectorXd g(n), g_new(n), x_new(n), dir(n);
    double f = fn(x, g);

    struct Pair { Eigen::VectorXd s, y; double rho; };
    std::deque<Pair> mem;
    double gamma = 1.0;

    MinimizeResult res;
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
            res.converged = true;
            res.iterations = iter;
            break;
        }

        // two-loop recursion
        dir = -g;
        std::vector<double> alpha(mem.size());
        for (std::size_t i = mem.size(); i-- > 0;) {
            alpha[i] = mem[i].rho * mem[i].s.dot(dir);
            dir -= alpha[i] * mem[i].y;
        }
        dir *= gamma;
        for (std::size_t i = 0; i < mem.size(); ++i) {
            const double beta = mem[i].rho * mem[i].y.dot(dir);
            dir += (alpha[i] - beta) * mem[i].s;
        }
        double slope = g.dot(dir);
        if (!(slope < 0.0)) {  // not a descent direction; reset
            mem.clear();
            dir = -g;
            slope = g.dot(dir);
            gamma = 1.0;
        }

        const double dir_inf = dir.lpNorm<Eigen::Infinity>();
        double step = dir_inf > opts.max_step ? opts.max_step / dir_inf : 1.0;

        // Armijo backtracking
        bool accepted = false;
        double f_new = f;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * dir;
            f_new = fn(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            res.iterations = iter;
            break;  // line search exhausted; report current point
        }

        Pair p;
        p.s = x_new - x;
        p.y = g_new - g;
        const double sy = p.s.dot(p.y);
        if (sy > 1e-14 * p.s.norm() * p.y.norm()) {
            p.rho = 1.0 / sy;
            gamma = sy / p.y.squaredNorm();
            mem.push_back(std::move(p));
            if (static_cast<int>(mem.size()) > opts.history)
                mem.pop_front();
        }
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
        res.iterations = iter + 1;
    }

    if (!res.converged && g.lpNorm<Eigen::Infinity>() < opts.grad_tol)
        res.converged = true;
    res.x = std::move(x);
    res.value = f;
    return res;
}

} // namespace iontrap
