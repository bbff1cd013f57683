#include "iontrap/collective.hpp"

#include "iontrap/errors.hpp"
#include "iontrap/potential.hpp"

#include <algorithm>
#include <cmath>

namespace iontrap {

KinkCurveModel::KinkCurveModel(const IonSystem& sys, const PnCurve& curve) : sys_(sys) {
    if (curve.samples.size() < 4)
        throw std::invalid_argument("KinkCurveModel: need at least four curve samples");
    mu_ = ScaledCoeffs::from(sys).mu;
    const std::size_t m = 2 * mu_.size();

    sample_x_.reserve(curve.samples.size());
    for (const PnSample& s : curve.samples)
        sample_x_.push_back(s.position);
    x_min_ = sample_x_.front();
    x_max_ = sample_x_.back();

    std::vector<double> u;
    u.reserve(curve.samples.size());
    coord_.reserve(m);
    for (std::size_t a = 0; a < m; ++a) {
        std::vector<double> ya;
        ya.reserve(curve.samples.size());
        for (const PnSample& s : curve.samples) {
            const std::vector<double> packed = pack(s.config);
            ya.push_back(packed[a]);
        }
        coord_.emplace_back(sample_x_, std::move(ya));
    }
    for (const PnSample& s : curve.samples)
        u.push_back(s.energy);
    energy_ = CubicSpline(sample_x_, std::move(u));
}

Eigen::VectorXd KinkCurveModel::configuration_at(double X) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(coord_.size()));
    for (std::size_t a = 0; a < coord_.size(); ++a)
        v(static_cast<Eigen::Index>(a)) = coord_[a].value(X);
    return v;
}

Eigen::VectorXd KinkCurveModel::tangent_at(double X) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(coord_.size()));
    for (std::size_t a = 0; a < coord_.size(); ++a)
        v(static_cast<Eigen::Index>(a)) = coord_[a].derivative(X);
    return v;
}

Eigen::VectorXd KinkCurveModel::curvature_at(double X) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(coord_.size()));
    for (std::size_t a = 0; a < coord_.size(); ++a)
        v(static_cast<Eigen::Index>(a)) = coord_[a].second_derivative(X);
    return v;
}

double KinkCurveModel::pn_energy(double X) const { return energy_.value(X); }
double KinkCurveModel::pn_force(double X) const { return -energy_.derivative(X); }

double KinkCurveModel::mass_inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    const std::size_t n = mu_.size();
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        acc += mu_[j] * (a(static_cast<Eigen::Index>(j)) * b(static_cast<Eigen::Index>(j)) +
                         a(static_cast<Eigen::Index>(n + j)) *
                             b(static_cast<Eigen::Index>(n + j)));
    return acc;
}

double KinkCurveModel::effective_mass(double X) const {
    const Eigen::VectorXd fp = tangent_at(X);
    const double m = mass_inner(fp, fp);
    if (!(m > 0.0))
        throw OutOfRange("effective mass not positive at this position");
    return m;
}

double KinkCurveModel::effective_mass_literal(double X) const {
    const Eigen::VectorXd f = configuration_at(X);
    return mass_inner(f, f);
}

Eigen::MatrixXd KinkCurveModel::projector(double X) const {
    const Eigen::VectorXd fp = tangent_at(X);
    const double m = effective_mass(X);
    const std::size_t n = mu_.size();
    Eigen::VectorXd weighted = fp;
    for (std::size_t j = 0; j < n; ++j) {
        weighted(static_cast<Eigen::Index>(j)) *= mu_[j];
        weighted(static_cast<Eigen::Index>(n + j)) *= mu_[j];
    }
    return fp * weighted.transpose() / m;
}

Eigen::VectorXd KinkCurveModel::apply_projector(double X, const Eigen::VectorXd& v) const {
    const Eigen::VectorXd fp = tangent_at(X);
    return fp * (mass_inner(fp, v) / effective_mass(X));
}

ReducedTrajectory KinkCurveModel::integrate_bare_kink(double X0, double V0,
                                                      double duration, double dt) const {
    if (X0 < x_min_ || X0 > x_max_)
        throw OutOfRange("initial position outside the sampled trajectory");
    auto accel = [this](double X, double V) {
        const Eigen::VectorXd fp = tangent_at(X);
        const Eigen::VectorXd fpp = curvature_at(X);
        const double m = mass_inner(fp, fp);
        if (!(m > 0.0))
            throw OutOfRange("effective mass vanished");
        return (pn_force(X) - mass_inner(fp, fpp) * V * V) / m;
    };

    ReducedTrajectory traj;
    const long steps = std::lround(duration / dt);
    traj.t.reserve(steps + 1);
    traj.position.reserve(steps + 1);
    traj.velocity.reserve(steps + 1);
    traj.energy.reserve(steps + 1);

    double X = X0, V = V0, t = 0.0;
    auto push = [&]() {
        traj.t.push_back(t);
        traj.position.push_back(X);
        traj.velocity.push_back(V);
        traj.energy.push_back(0.5 * effective_mass(X) * V * V + pn_energy(X));
    };
    push();
    for (long k = 0; k < steps; ++k) {
        const double k1x = V, k1v = accel(X, V);
        const double k2x = V + 0.5 * dt * k1v, k2v = accel(X + 0.5 * dt * k1x, k2x);
        const double k3x = V + 0.5 * dt * k2v, k3v = accel(X + 0.5 * dt * k2x, k3x);
        const double k4x = V + dt * k3v, k4v = accel(X + dt * k3x, k4x);
        X += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        V += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        t += dt;
        if (X < x_min_ || X > x_max_)
            throw OutOfRange("reduced kink left the sampled trajectory");
        push();
    }
    return traj;
}

double KinkCurveModel::constraint_c2(double X, const Eigen::VectorXd& packed) const {
    const Eigen::VectorXd fp = tangent_at(X);
    const Eigen::VectorXd q = packed - configuration_at(X);
    return mass_inner(fp, q);
}

KinkFrame KinkCurveModel::decompose(const Configuration& q_full,
                                    std::optional<double> hint) const {
    static const std::vector<double> no_v;
    return decompose(q_full, no_v, no_v, hint);
}

KinkFrame KinkCurveModel::decompose(const Configuration& q_full,
                                    const std::vector<double>& vz,
                                    const std::vector<double>& vx,
                                    std::optional<double> hint) const {
    const std::vector<double> packed_std = pack(q_full);
    const Eigen::VectorXd packed =
        Eigen::Map<const Eigen::VectorXd>(packed_std.data(),
                                          static_cast<Eigen::Index>(packed_std.size()));

    // Bracket roots of c2(X) on the sample grid (refined 4x), then bisect.
    std::vector<double> grid;
    for (std::size_t i = 0; i + 1 < sample_x_.size(); ++i)
        for (int k = 0; k < 4; ++k)
            grid.push_back(sample_x_[i] +
                           (sample_x_[i + 1] - sample_x_[i]) * (k / 4.0));
    grid.push_back(sample_x_.back());

    struct Root { double X; double qnorm; };
    std::vector<Root> roots;
    double prev = constraint_c2(grid.front(), packed);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double cur = constraint_c2(grid[i], packed);
        if (prev == 0.0 || prev * cur < 0.0) {
            double a = grid[i - 1], b = grid[i];
            double fa = prev;
            for (int it = 0; it < 80; ++it) {
                const double m = 0.5 * (a + b);
                const double fm = constraint_c2(m, packed);
                if (fa * fm <= 0.0)
                    b = m;
                else {
                    a = m;
                    fa = fm;
                }
            }
            const double X = 0.5 * (a + b);
            const Eigen::VectorXd q = packed - configuration_at(X);
            roots.push_back({X, std::sqrt(mass_inner(q, q))});
        }
        prev = cur;
    }
    if (roots.empty())
        throw NoRoot("no kink position satisfies the tangency condition");

    const Root* pick = &roots.front();
    if (hint) {
        for (const Root& r : roots)
            if (std::abs(r.X - *hint) < std::abs(pick->X - *hint))
                pick = &r;
    } else {
        for (const Root& r : roots)
            if (r.qnorm < pick->qnorm)
                pick = &r;
    }

    KinkFrame frame;
    frame.position = pick->X;
    const Eigen::VectorXd f = configuration_at(frame.position);
    const Eigen::VectorXd fp = tangent_at(frame.position);
    frame.dressing = packed - f;
    frame.c1 = mass_inner(f, frame.dressing);
    frame.c2 = mass_inner(fp, frame.dressing);
    if (!vz.empty()) {
        Eigen::VectorXd vel(packed.size());
        const std::size_t n = mu_.size();
        for (std::size_t j = 0; j < n; ++j) {
            vel(static_cast<Eigen::Index>(j)) = vz[j];
            vel(static_cast<Eigen::Index>(n + j)) = vx[j];
        }
        frame.momentum = mass_inner(fp, vel);
    }
    return frame;
}

Eigen::VectorXd KinkCurveModel::dressing_residual(const std::vector<KinkFrame>& frames,
                                                  std::size_t i, double dt) const {
    if (i == 0 || i + 1 >= frames.size())
        throw OutOfRange("residual needs interior frames");
    const KinkFrame& a = frames[i - 1];
    const KinkFrame& b = frames[i];
    const KinkFrame& c = frames[i + 1];

    const Eigen::VectorXd qdd = (a.dressing - 2.0 * b.dressing + c.dressing) / (dt * dt);
    const double xdot = (c.position - a.position) / (2.0 * dt);

    const Eigen::VectorXd full = configuration_at(b.position) + b.dressing;
    const Configuration q_cfg = unpack(std::vector<double>(
        full.data(), full.data() + full.size()));
    const std::vector<double> grad = gradient(sys_, q_cfg);

    const std::size_t n = mu_.size();
    Eigen::VectorXd acc(full.size());
    for (std::size_t j = 0; j < n; ++j) {
        acc(static_cast<Eigen::Index>(j)) = grad[j] / mu_[j];
        acc(static_cast<Eigen::Index>(n + j)) = grad[n + j] / mu_[j];
    }
    const Eigen::VectorXd inner =
        qdd + curvature_at(b.position) * xdot * xdot + acc;
    return inner - apply_projector(b.position, inner);
}

} // namespace iontrap
