#include "iontrap/potential.hpp"

#include "iontrap/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace iontrap {

double energy_kernel(const double* z, const double* x, std::size_t n,
                     const double* radial, const double* axial, TrapState trap) {
    double v = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        v += 0.5 * (radial[j] * trap.alpha2 * x[j] * x[j] + axial[j] * z[j] * z[j]) -
             trap.efield * x[j];
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dz = z[j] - z[i];
            const double dx = x[j] - x[i];
            v += 1.0 / std::sqrt(dz * dz + dx * dx);
        }
    return v;
}

double force_kernel(const double* z, const double* x, std::size_t n,
                    const double* radial, const double* axial, TrapState trap,
                    double* fz, double* fx) {
    double v = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        fz[j] = -axial[j] * z[j];
        fx[j] = -radial[j] * trap.alpha2 * x[j] + trap.efield;
        v += 0.5 * (radial[j] * trap.alpha2 * x[j] * x[j] + axial[j] * z[j] * z[j]) -
             trap.efield * x[j];
    }
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dz = z[j] - z[i];
            const double dx = x[j] - x[i];
            const double r2 = dz * dz + dx * dx;
            const double inv_r = 1.0 / std::sqrt(r2);
            v += inv_r;
            const double inv_r3 = inv_r / r2;
            const double gz = dz * inv_r3;  // repulsive push on j
            const double gx = dx * inv_r3;
            fz[j] += gz;
            fx[j] += gx;
            fz[i] -= gz;
            fx[i] -= gx;
        }
    return v;
}

double potential_energy(const ScaledCoeffs& c, const Configuration& q) {
    q.require_distinct();
    return energy_kernel(q.z.data(), q.x.data(), q.size(), c.radial.data(),
                         c.axial.data(), TrapState::from(c));
}

double potential_energy(const IonSystem& sys, const Configuration& q) {
    return potential_energy(ScaledCoeffs::from(sys), q);
}

void gradient_into(const ScaledCoeffs& c, TrapState trap, const Configuration& q,
                   std::vector<double>& out) {
    const std::size_t n = q.size();
    out.resize(2 * n);
    double* gz = out.data();
    double* gx = out.data() + n;
    force_kernel(q.z.data(), q.x.data(), n, c.radial.data(), c.axial.data(), trap, gz, gx);
    for (std::size_t k = 0; k < 2 * n; ++k)
        out[k] = -out[k];
}

std::vector<double> gradient(const ScaledCoeffs& c, const Configuration& q) {
    q.require_distinct();
    std::vector<double> g;
    gradient_into(c, TrapState::from(c), q, g);
    return g;
}

std::vector<double> gradient(const IonSystem& sys, const Configuration& q) {
    return gradient(ScaledCoeffs::from(sys), q);
}

Eigen::MatrixXd hessian(const ScaledCoeffs& c, TrapState trap, const Configuration& q) {
    q.require_distinct();
    const std::size_t n = q.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (std::size_t j = 0; j < n; ++j) {
        h(j, j) = c.axial[j];
        h(n + j, n + j) = c.radial[j] * trap.alpha2;
    }
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dz = q.z[j] - q.z[i];
            const double dx = q.x[j] - q.x[i];
            const double r2 = dz * dz + dx * dx;
            const double inv_r = 1.0 / std::sqrt(r2);
            const double inv_r3 = inv_r / r2;
            const double inv_r5 = inv_r3 / r2;
            // d^2(1/r)/du_j dv_j = 3 du dv / r^5 - delta_uv / r^3
            const double hzz = 3.0 * dz * dz * inv_r5 - inv_r3;
            const double hxx = 3.0 * dx * dx * inv_r5 - inv_r3;
            const double hzx = 3.0 * dz * dx * inv_r5;
            h(j, j) += hzz;
            h(i, i) += hzz;
            h(j, i) -= hzz;
            h(i, j) -= hzz;
            h(n + j, n + j) += hxx;
            h(n + i, n + i) += hxx;
            h(n + j, n + i) -= hxx;
            h(n + i, n + j) -= hxx;
            h(j, n + j) += hzx;
            h(n + j, j) += hzx;
            h(i, n + i) += hzx;
            h(n + i, i) += hzx;
            h(j, n + i) -= hzx;
            h(n + i, j) -= hzx;
            h(i, n + j) -= hzx;
            h(n + j, i) -= hzx;
        }
    return h;
}

Eigen::MatrixXd hessian(const IonSystem& sys, const Configuration& q) {
    const ScaledCoeffs c = ScaledCoeffs::from(sys);
    return hessian(c, TrapState::from(c), q);
}

std::vector<double> normal_mode_frequencies_hz(const IonSystem& sys, const Configuration& q) {
    const ScaledCoeffs c = ScaledCoeffs::from(sys);
    const std::size_t n = q.size();
    Eigen::MatrixXd h = hessian(c, TrapState::from(c), q);
    Eigen::VectorXd inv_sqrt_m(2 * n);
    for (std::size_t j = 0; j < n; ++j)
        inv_sqrt_m(j) = inv_sqrt_m(n + j) = 1.0 / std::sqrt(c.mu[j]);
    h = inv_sqrt_m.asDiagonal() * h * inv_sqrt_m.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    std::vector<double> out(2 * n);
    for (std::size_t k = 0; k < 2 * n; ++k) {
        const double ev = solver.eigenvalues()(static_cast<Eigen::Index>(k));
        out[k] = (ev >= 0.0 ? std::sqrt(ev) : -std::sqrt(-ev)) * sys.nu_z_hz;
    }
    return out;
}

namespace {

// On-axis equilibrium of the linear chain by damped Newton iteration on the
// axial subsystem; used only by the critical-frequency scan.
std::vector<double> linear_equilibrium_z(const ScaledCoeffs& c, std::size_t n) {
    std::vector<double> z(n);
    const double half = 0.5 * static_cast<double>(n - 1);
    // Uniform seed with roughly the right extent; Newton does the rest.
    const double scale = n > 1 ? 2.0 * std::pow(static_cast<double>(n), -1.0 / 3.0) : 0.0;
    for (std::size_t j = 0; j < n; ++j)
        z[j] = scale * (static_cast<double>(j) - half);

    Eigen::VectorXd g(n);
    Eigen::MatrixXd h(n, n);
    for (int iter = 0; iter < 200; ++iter) {
        h.setZero();
        for (std::size_t j = 0; j < n; ++j) {
            g(j) = c.axial[j] * z[j];
            h(j, j) = c.axial[j];
        }
        for (std::size_t i = 0; i + 1 < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double d = z[j] - z[i];
                const double inv_d = 1.0 / std::abs(d);
                const double inv_d2 = inv_d * inv_d;
                const double sgn = d > 0 ? 1.0 : -1.0;
                g(j) -= sgn * inv_d2;
                g(i) += sgn * inv_d2;
                const double k = 2.0 * inv_d2 * inv_d;
                h(j, j) += k;
                h(i, i) += k;
                h(j, i) -= k;
                h(i, j) -= k;
            }
        if (g.lpNorm<Eigen::Infinity>() < 1e-13)
            return z;
        Eigen::VectorXd dz = h.ldlt().solve(g);
        // Plain Newton is fine here; cap the step to keep the ordering.
        double cap = 1.0;
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const double gap = z[j + 1] - z[j];
            const double closing = dz(j + 1) - dz(j);
            if (closing < 0 && -closing * cap > 0.8 * gap)
                cap = 0.8 * gap / -closing;
        }
        for (std::size_t j = 0; j < n; ++j)
            z[j] -= cap * dz(j);
    }
    throw NoConvergence("linear chain equilibrium did not converge");
}

// Lowest transverse eigenvalue of the mass-weighted Hessian for the linear
// chain at the given alpha. The z and x blocks decouple on axis.
double lowest_transverse_eigenvalue(const ScaledCoeffs& c, const std::vector<double>& z,
                                    double alpha) {
    const std::size_t n = z.size();
    Eigen::MatrixXd hx = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t j = 0; j < n; ++j)
        hx(j, j) = c.radial[j] * alpha * alpha;
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = std::abs(z[j] - z[i]);
            const double k = 1.0 / (d * d * d);
            hx(j, j) -= k;
            hx(i, i) -= k;
            hx(j, i) += k;
            hx(i, j) += k;
        }
    Eigen::VectorXd inv_sqrt_m(n);
    for (std::size_t j = 0; j < n; ++j)
        inv_sqrt_m(j) = 1.0 / std::sqrt(c.mu[j]);
    hx = inv_sqrt_m.asDiagonal() * hx * inv_sqrt_m.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hx, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(0);
}

} // namespace

double critical_nu_x_hz(const IonSystem& sys, double lo_hz, double hi_hz, double tol_hz) {
    if (!(lo_hz > 0.0) || !(hi_hz > lo_hz))
        throw std::invalid_argument("critical_nu_x_hz: need 0 < lo < hi");
    const std::size_t n = sys.size();
    auto soft = [&](double nu_x) {
        const ScaledCoeffs c = ScaledCoeffs::from(sys.with_nu_x(nu_x));
        const std::vector<double> z = linear_equilibrium_z(c, n);
        return lowest_transverse_eigenvalue(c, z, c.alpha);
    };
    double flo = soft(lo_hz);
    double fhi = soft(hi_hz);
    if (flo > 0.0 || fhi < 0.0)
        throw NoConvergence("critical nu_x not bracketed: zigzag mode does not change sign");
    while (hi_hz - lo_hz > tol_hz) {
        const double mid = 0.5 * (lo_hz + hi_hz);
        if (soft(mid) < 0.0)
            lo_hz = mid;
        else
            hi_hz = mid;
    }
    return 0.5 * (lo_hz + hi_hz);
}

} // namespace iontrap
