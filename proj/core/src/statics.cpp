#include "iontrap/statics.hpp"

#include "iontrap/errors.hpp"
#include "iontrap/minimize.hpp"
#include "iontrap/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace iontrap {

// ---------------------------------------------------------------- centre

CentreFunctional CentreFunctional::odd(std::size_t interface_bond) {
    CentreFunctional g;
    g.kind_ = KinkKind::odd;
    g.bond_ = interface_bond;
    return g;
}

CentreFunctional CentreFunctional::extended(std::vector<double> reference_z) {
    CentreFunctional g;
    g.kind_ = KinkKind::extended;
    std::sort(reference_z.begin(), reference_z.end());
    g.ref_z_ = std::move(reference_z);
    return g;
}

namespace {

struct SortedView {
    std::vector<std::size_t> perm;  // perm[slot] = original ion index
    std::vector<double> z, x;
};

SortedView sorted_view(const Eigen::VectorXd& packed) {
    const std::size_t n = static_cast<std::size_t>(packed.size()) / 2;
    SortedView v;
    v.perm.resize(n);
    std::iota(v.perm.begin(), v.perm.end(), std::size_t{0});
    std::stable_sort(v.perm.begin(), v.perm.end(),
                     [&](std::size_t a, std::size_t b) { return packed(a) < packed(b); });
    v.z.resize(n);
    v.x.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        v.z[k] = packed(static_cast<Eigen::Index>(v.perm[k]));
        v.x[k] = packed(static_cast<Eigen::Index>(n + v.perm[k]));
    }
    return v;
}

// Odd-kink centre in terms of the interface slots: with s = (-1)^j,
// u = s x_j, w = -s x_{j+1}, D = u - w, the centre is (u z' - w z)/D.
struct OddTerms {
    double z, zp, u, w, d;
    double sign;
};

OddTerms odd_terms(const SortedView& v, std::size_t j) {
    if (j + 1 >= v.z.size())
        throw NotAKinkInterface("interface index out of range");
    OddTerms t;
    t.sign = (j % 2 == 0) ? 1.0 : -1.0;
    t.z = v.z[j];
    t.zp = v.z[j + 1];
    t.u = t.sign * v.x[j];
    t.w = -t.sign * v.x[j + 1];
    t.d = t.u - t.w;
    return t;
}

} // namespace

double CentreFunctional::value(const Eigen::VectorXd& packed) const {
    const SortedView v = sorted_view(packed);
    const std::size_t n = v.z.size();
    if (kind_ == KinkKind::odd) {
        const OddTerms t = odd_terms(v, bond_);
        return (t.u * t.zp - t.w * t.z) / t.d;
    }
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double dj = (v.z[j + 1] - v.z[j]) - (ref_z_[j + 1] - ref_z_[j]);
        num += 0.5 * (v.z[j] + v.z[j + 1]) * dj * dj;
        den += dj * dj;
    }
    if (den <= 0.0)
        throw NoDistortion("centre functional undefined without axial distortion");
    return num / den;
}

Eigen::VectorXd CentreFunctional::gradient(const Eigen::VectorXd& packed) const {
    const SortedView v = sorted_view(packed);
    const std::size_t n = v.z.size();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(packed.size());
    if (kind_ == KinkKind::odd) {
        const OddTerms t = odd_terms(v, bond_);
        const double d2 = t.d * t.d;
        const double dz = -t.w / t.d;
        const double dzp = t.u / t.d;
        const double du = t.w * (t.z - t.zp) / d2;
        const double dw = t.u * (t.zp - t.z) / d2;
        out(static_cast<Eigen::Index>(v.perm[bond_])) = dz;
        out(static_cast<Eigen::Index>(v.perm[bond_ + 1])) = dzp;
        out(static_cast<Eigen::Index>(n + v.perm[bond_])) = t.sign * du;
        out(static_cast<Eigen::Index>(n + v.perm[bond_ + 1])) = -t.sign * dw;
        return out;
    }
    // g = A/B with per-bond a_j = s_j d_j^2, b_j = d_j^2.
    std::vector<double> grad_a(n, 0.0), grad_b(n, 0.0);
    double A = 0.0, B = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double dj = (v.z[j + 1] - v.z[j]) - (ref_z_[j + 1] - ref_z_[j]);
        const double sj = 0.5 * (v.z[j] + v.z[j + 1]);
        A += sj * dj * dj;
        B += dj * dj;
        grad_a[j] += 0.5 * dj * dj - 2.0 * sj * dj;
        grad_a[j + 1] += 0.5 * dj * dj + 2.0 * sj * dj;
        grad_b[j] += -2.0 * dj;
        grad_b[j + 1] += 2.0 * dj;
    }
    if (B <= 0.0)
        throw NoDistortion("centre functional undefined without axial distortion");
    const double g = A / B;
    for (std::size_t k = 0; k < n; ++k)
        out(static_cast<Eigen::Index>(v.perm[k])) = (grad_a[k] - g * grad_b[k]) / B;
    return out;
}

void CentreFunctional::add_scaled_hessian(const Eigen::VectorXd& packed, double coeff,
                                          Eigen::MatrixXd& out) const {
    const SortedView v = sorted_view(packed);
    const std::size_t n = v.z.size();
    if (kind_ == KinkKind::odd) {
        const OddTerms t = odd_terms(v, bond_);
        const double d2 = t.d * t.d;
        const double d3 = d2 * t.d;
        // second partials in (z, z', u, w)
        const double zu = t.w / d2;
        const double zw = -t.u / d2;
        const double zpu = -t.w / d2;
        const double zpw = t.u / d2;
        const double uu = -2.0 * t.w * (t.z - t.zp) / d3;
        const double uw = (t.z - t.zp) * (t.u + t.w) / d3;
        const double ww = 2.0 * t.u * (t.zp - t.z) / d3;
        const Eigen::Index iz = static_cast<Eigen::Index>(v.perm[bond_]);
        const Eigen::Index izp = static_cast<Eigen::Index>(v.perm[bond_ + 1]);
        const Eigen::Index ix = static_cast<Eigen::Index>(n + v.perm[bond_]);
        const Eigen::Index ixp = static_cast<Eigen::Index>(n + v.perm[bond_ + 1]);
        const double s = t.sign;
        auto add = [&](Eigen::Index a, Eigen::Index b, double val) {
            out(a, b) += coeff * val;
            if (a != b) out(b, a) += coeff * val;
        };
        add(iz, ix, s * zu);
        add(iz, ixp, -s * zw);
        add(izp, ix, s * zpu);
        add(izp, ixp, -s * zpw);
        add(ix, ix, uu);
        add(ix, ixp, -uw);
        add(ixp, ixp, ww);
        return;
    }

    std::vector<double> grad_a(n, 0.0), grad_b(n, 0.0);
    Eigen::MatrixXd ha = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd hb = Eigen::MatrixXd::Zero(n, n);
    double A = 0.0, B = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double dj = (v.z[j + 1] - v.z[j]) - (ref_z_[j + 1] - ref_z_[j]);
        const double sj = 0.5 * (v.z[j] + v.z[j + 1]);
        A += sj * dj * dj;
        B += dj * dj;
        grad_a[j] += 0.5 * dj * dj - 2.0 * sj * dj;
        grad_a[j + 1] += 0.5 * dj * dj + 2.0 * sj * dj;
        grad_b[j] += -2.0 * dj;
        grad_b[j + 1] += 2.0 * dj;
        ha(j, j) += -2.0 * dj + 2.0 * sj;
        ha(j + 1, j + 1) += 2.0 * dj + 2.0 * sj;
        ha(j, j + 1) += -2.0 * sj;
        ha(j + 1, j) += -2.0 * sj;
        hb(j, j) += 2.0;
        hb(j + 1, j + 1) += 2.0;
        hb(j, j + 1) += -2.0;
        hb(j + 1, j) += -2.0;
    }
    if (B <= 0.0)
        throw NoDistortion("centre functional undefined without axial distortion");
    const double g = A / B;
    std::vector<double> gg(n);
    for (std::size_t k = 0; k < n; ++k)
        gg[k] = (grad_a[k] - g * grad_b[k]) / B;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) {
            const double h =
                (ha(k, l) - g * hb(k, l) - gg[k] * grad_b[l] - gg[l] * grad_b[k]) / B;
            out(static_cast<Eigen::Index>(v.perm[k]), static_cast<Eigen::Index>(v.perm[l])) +=
                coeff * h;
        }
}

// ------------------------------------------------------------- relaxation

namespace {

ObjectiveFn energy_objective(const ScaledCoeffs& c) {
    const TrapState trap = TrapState::from(c);
    return [c, trap](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
        const std::size_t n = static_cast<std::size_t>(v.size()) / 2;
        grad.resize(v.size());
        double* fz = grad.data();
        double* fx = grad.data() + n;
        const double e = force_kernel(v.data(), v.data() + n, n, c.radial.data(),
                                      c.axial.data(), trap, fz, fx);
        grad = -grad;
        return e;
    };
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Configuration from_eigen(const Eigen::VectorXd& v) {
    const std::size_t n = static_cast<std::size_t>(v.size()) / 2;
    Configuration q;
    q.z.assign(v.data(), v.data() + n);
    q.x.assign(v.data() + n, v.data() + 2 * n);
    return q;
}

} // namespace

namespace {

// Modified-Newton polish: eigenvalue-floored steps handle the nearly flat
// (quartic) soft direction close to the zigzag transition, where first-order
// methods crawl.
bool newton_polish_energy(const ScaledCoeffs& c, Eigen::VectorXd& q, double tol,
                          int max_iters) {
    const ObjectiveFn fn = energy_objective(c);
    Eigen::VectorXd g(q.size()), g_try(q.size()), q_try(q.size());
    double f = fn(q, g);
    for (int it = 0; it < max_iters; ++it) {
        if (g.lpNorm<Eigen::Infinity>() < tol)
            return true;
        const Eigen::MatrixXd h = hessian(c, TrapState::from(c), from_eigen(q));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        const Eigen::VectorXd& ev = es.eigenvalues();
        const double floor = std::max(1e-9, 1e-6 * std::abs(ev(ev.size() - 1)));
        Eigen::VectorXd coeff = es.eigenvectors().transpose() * g;
        for (Eigen::Index i = 0; i < coeff.size(); ++i)
            coeff(i) /= std::max(std::abs(ev(i)), floor);
        Eigen::VectorXd step = -(es.eigenvectors() * coeff);
        const double cap = 0.1;
        const double sinf = step.lpNorm<Eigen::Infinity>();
        double t = sinf > cap ? cap / sinf : 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 30; ++bt) {
            q_try = q + t * step;
            const double f_try = fn(q_try, g_try);
            if (std::isfinite(f_try) &&
                (f_try < f || g_try.lpNorm<Eigen::Infinity>() <
                                  g.lpNorm<Eigen::Infinity>())) {
                q = q_try;
                f = f_try;
                g = g_try;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted)
            return g.lpNorm<Eigen::Infinity>() < tol;
    }
    return g.lpNorm<Eigen::Infinity>() < tol;
}

} // namespace

Configuration minimize_energy(const IonSystem& sys, const Configuration& q0, double tol) {
    q0.require_distinct();
    const ScaledCoeffs c = ScaledCoeffs::from(sys);
    MinimizeOptions mo;
    mo.grad_tol = std::max(tol, 1e-6);
    mo.max_iterations = 20000;
    MinimizeResult res = lbfgs_minimize(energy_objective(c), to_eigen(pack(q0)), mo);
    Eigen::VectorXd q = std::move(res.x);
    bool ok = res.converged && mo.grad_tol <= tol;
    if (!ok)
        ok = newton_polish_energy(c, q, tol, 300);
    if (!ok)
        throw NoConvergence("energy minimization stalled after " +
                            std::to_string(res.iterations) + " iterations");
    Configuration out = from_eigen(q);
    out.require_distinct();
    return out;
}

Configuration relax_linear_chain(const IonSystem& sys) {
    const std::size_t n = sys.size();
    Configuration q;
    q.z.resize(n);
    q.x.assign(n, 0.0);
    const double half = 0.5 * static_cast<double>(n - 1);
    const double scale = n > 1 ? 2.0 * std::pow(static_cast<double>(n), -1.0 / 3.0) : 1.0;
    for (std::size_t j = 0; j < n; ++j)
        q.z[j] = scale * (static_cast<double>(j) - half);
    if (n == 1) {
        q.z[0] = 0.0;
        return q;
    }
    // On-axis start keeps x identically zero through the minimization,
    // except for the field-induced common offset.
    return minimize_energy(sys, q);
}

Configuration relax_zigzag(const IonSystem& sys) {
    Configuration q = relax_linear_chain(sys);
    for (std::size_t j = 0; j < q.size(); ++j)
        q.x[j] += (j % 2 == 0 ? 1.0 : -1.0) * 1e-3;
    Configuration out = minimize_energy(sys, q);
    out.sort_by_z();  // equilibria do not reorder, but make the invariant explicit
    return out;
}

Configuration seed_kink(const IonSystem& sys, const Configuration& zigzag) {
    Configuration q = zigzag;
    const double mid = 0.5 * (q.z.front() + q.z.back());
    const double mean_x =
        std::accumulate(q.x.begin(), q.x.end(), 0.0) / static_cast<double>(q.size());
    for (std::size_t j = 0; j < q.size(); ++j)
        if (q.z[j] > mid)
            q.x[j] = mean_x - (q.x[j] - mean_x);
    Configuration relaxed = minimize_energy(sys, q);
    const KinkReport rep = detect(relaxed, &zigzag);
    if (rep.n_kinks() == 0)
        throw NoKinkFormed("relaxation annealed back to a kink-free structure");
    return relaxed;
}

// ------------------------------------------------------- constrained solve

namespace {

struct KktEval {
    Eigen::VectorXd grad_v;
    Eigen::VectorXd grad_g;
    double g = 0.0;
    double energy = 0.0;
};

KktEval eval_kkt(const ScaledCoeffs& c, const CentreFunctional& g,
                 const Eigen::VectorXd& q) {
    KktEval e;
    const std::size_t n = static_cast<std::size_t>(q.size()) / 2;
    e.grad_v.resize(q.size());
    double* fz = e.grad_v.data();
    double* fx = e.grad_v.data() + n;
    e.energy = force_kernel(q.data(), q.data() + n, n, c.radial.data(), c.axial.data(),
                            TrapState::from(c), fz, fx);
    e.grad_v = -e.grad_v;
    e.grad_g = g.gradient(q);
    e.g = g.value(q);
    return e;
}

double kkt_residual_inf(const KktEval& e, double lambda) {
    return (e.grad_v + lambda * e.grad_g).lpNorm<Eigen::Infinity>();
}

bool newton_kkt(const ScaledCoeffs& c, const CentreFunctional& g, double target,
                const SolveOptions& opts, Eigen::VectorXd& q, double& lambda,
                int& iterations) {
    const Eigen::Index m = q.size();
    Eigen::MatrixXd jac(m + 1, m + 1);
    Eigen::VectorXd rhs(m + 1), delta(m + 1), q_try(m);

    KktEval e = eval_kkt(c, g, q);
    for (int it = 0; it < opts.max_newton; ++it) {
        ++iterations;
        const Eigen::VectorXd r = e.grad_v + lambda * e.grad_g;
        const double cviol = e.g - target;
        if (r.lpNorm<Eigen::Infinity>() < opts.kkt_tol &&
            std::abs(cviol) < opts.constraint_tol)
            return true;

        jac.setZero();
        Eigen::MatrixXd h_lagrangian = hessian(c, TrapState::from(c), from_eigen(q));
        g.add_scaled_hessian(q, lambda, h_lagrangian);
        jac.topLeftCorner(m, m) = h_lagrangian;
        jac.topRightCorner(m, 1) = e.grad_g;
        jac.bottomLeftCorner(1, m) = e.grad_g.transpose();
        rhs.head(m) = -r;
        rhs(m) = -cviol;

        delta = jac.partialPivLu().solve(rhs);
        if (!delta.allFinite())
            return false;
        double scale = 1.0;
        const double dq_inf = delta.head(m).lpNorm<Eigen::Infinity>();
        if (dq_inf > opts.max_newton_step)
            scale = opts.max_newton_step / dq_inf;

        const double merit0 = r.squaredNorm() + cviol * cviol;
        bool accepted = false;
        for (int bt = 0; bt < 10; ++bt) {
            q_try = q + scale * delta.head(m);
            const double lambda_try = lambda + scale * delta(m);
            KktEval e_try;
            try {
                e_try = eval_kkt(c, g, q_try);
            } catch (const NoDistortion&) {
                scale *= 0.5;
                continue;
            }
            const Eigen::VectorXd r_try = e_try.grad_v + lambda_try * e_try.grad_g;
            const double merit =
                r_try.squaredNorm() + (e_try.g - target) * (e_try.g - target);
            if (std::isfinite(merit) && merit < merit0) {
                q = q_try;
                lambda = lambda_try;
                e = e_try;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted)
            return false;
    }
    const Eigen::VectorXd r = e.grad_v + lambda * e.grad_g;
    return r.lpNorm<Eigen::Infinity>() < opts.kkt_tol &&
           std::abs(e.g - target) < opts.constraint_tol;
}

} // namespace

ConstrainedResult constrained_minimize(const IonSystem& sys, const Configuration& q0,
                                       const CentreFunctional& g, double target,
                                       const SolveOptions& opts,
                                       std::optional<double> lambda0) {
    q0.require_distinct();
    const ScaledCoeffs c = ScaledCoeffs::from(sys);
    Eigen::VectorXd q = to_eigen(pack(q0));

    KktEval e0 = eval_kkt(c, g, q);
    const double gg = e0.grad_g.squaredNorm();
    if (std::sqrt(gg) < 1e-12)
        throw ConstraintSingular("centre functional is degenerate at the start");
    double lambda = lambda0 ? *lambda0 : -e0.grad_v.dot(e0.grad_g) / gg;

    ConstrainedResult result;
    result.iterations = 0;

    if (newton_kkt(c, g, target, opts, q, lambda, result.iterations)) {
        result.config = from_eigen(q);
        result.multiplier = lambda;
        return result;
    }

    // Augmented-Lagrangian fallback: minimize V + lambda (g-X) + mu/2 (g-X)^2,
    // tightening mu until the constraint holds, then re-polish.
    double mu = opts.initial_penalty;
    double prev_viol = std::abs(e0.g - target);
    for (int outer = 0; outer < opts.max_outer; ++outer) {
        const double lam = lambda;
        const double mu_now = mu;
        ObjectiveFn fn = [&c, &g, target, lam, mu_now](const Eigen::VectorXd& v,
                                                       Eigen::VectorXd& grad) {
            const std::size_t n = static_cast<std::size_t>(v.size()) / 2;
            grad.resize(v.size());
            double* fz = grad.data();
            double* fx = grad.data() + n;
            const double energy = force_kernel(v.data(), v.data() + n, n, c.radial.data(),
                                               c.axial.data(), TrapState::from(c), fz, fx);
            grad = -grad;
            const double cv = g.value(v) - target;
            grad += (lam + mu_now * cv) * g.gradient(v);
            return energy + lam * cv + 0.5 * mu_now * cv * cv;
        };
        MinimizeOptions mo;
        mo.grad_tol = std::max(opts.kkt_tol, 1e-7 / mu);
        mo.max_iterations = 20000;
        MinimizeResult inner = lbfgs_minimize(fn, q, mo);
        result.iterations += inner.iterations;
        q = inner.x;
        const double viol = g.value(q) - target;
        lambda += mu * viol;
        if (std::abs(viol) > 0.25 * prev_viol)
            mu = std::min(mu * 10.0, 1e9);
        prev_viol = std::abs(viol);

        if (newton_kkt(c, g, target, opts, q, lambda, result.iterations)) {
            result.config = from_eigen(q);
            result.multiplier = lambda;
            return result;
        }
    }
    throw NoConvergence("constrained minimization did not reach the KKT tolerance");
}

// ------------------------------------------------------------ continuation

namespace {

CentreFunctional functional_for(KinkKind kind, const Configuration& sample,
                                const Configuration& reference) {
    if (kind == KinkKind::odd) {
        const KinkReport rep = detect(sample, &reference);
        if (!rep.kinks.empty() && rep.kinks.front().interface_index >= 0)
            return CentreFunctional::odd(
                static_cast<std::size_t>(rep.kinks.front().interface_index));
        // Keep tracing with the strongest same-side bond even if the
        // detector lost confidence in the interface.
        Configuration s = sample;
        s.sort_by_z();
        std::size_t best = 0;
        double best_w = -1.0;
        for (std::size_t k = 0; k + 1 < s.size(); ++k)
            if (s.x[k] * s.x[k + 1] > 0.0) {
                const double w = std::abs(s.x[k]) + std::abs(s.x[k + 1]);
                if (w > best_w) {
                    best_w = w;
                    best = k;
                }
            }
        if (best_w < 0.0)
            throw NoKinkFormed("no interface bond available for the odd centre");
        return CentreFunctional::odd(best);
    }
    return CentreFunctional::extended(reference.z);
}

double local_axial_spacing(const Configuration& reference) {
    Configuration s = reference;
    s.sort_by_z();
    const std::size_t n = s.size();
    std::vector<double> gaps;
    for (std::size_t k = n / 3; k + 1 < n - n / 3; ++k)
        gaps.push_back(s.z[k + 1] - s.z[k]);
    std::sort(gaps.begin(), gaps.end());
    return gaps.empty() ? 0.1 : gaps[gaps.size() / 2];
}

} // namespace

const PnSample& PnCurve::nearest(double X) const {
    if (samples.empty())
        throw OutOfRange("empty curve");
    const auto it = std::lower_bound(
        samples.begin(), samples.end(), X,
        [](const PnSample& s, double v) { return s.position < v; });
    if (it == samples.begin()) return samples.front();
    if (it == samples.end()) return samples.back();
    return (it->position - X) < (X - std::prev(it)->position) ? *it : *std::prev(it);
}

PnCurve trace_adiabatic(const IonSystem& sys, const Configuration& start,
                        const Configuration& reference, double x_min, double x_max,
                        const TraceOptions& opts) {
    const ScaledCoeffs c = ScaledCoeffs::from(sys);
    PnCurve curve;
    curve.reference = reference;
    curve.reference_energy = potential_energy(c, reference);

    const KinkReport start_rep = detect(start, &reference);
    if (start_rep.n_kinks() == 0)
        throw NoKinkFormed("continuation requires a configuration with a kink");
    curve.kind = opts.kind_override.value_or(start_rep.kinks.front().kind);

    const double base_step = opts.step > 0.0 ? opts.step : local_axial_spacing(reference) / 20.0;

    // Anchor sample: re-solve at the start's own centre so every sample,
    // including the first, satisfies the same KKT system.
    CentreFunctional g0 = functional_for(curve.kind, start, reference);
    const double x0 = g0.value(to_eigen(pack(start)));
    ConstrainedResult anchor = constrained_minimize(sys, start, g0, x0, opts.solve);

    auto make_sample = [&](double X, const ConstrainedResult& r) {
        PnSample s;
        s.position = X;
        s.config = r.config;
        s.energy = potential_energy(c, r.config) - curve.reference_energy;
        s.multiplier = r.multiplier;
        return s;
    };

    auto trace_dir = [&](int dir, bool& lost_flag, std::vector<PnSample>& out) {
        Configuration q_prev = anchor.config;
        double lambda_prev = anchor.multiplier;
        double x_prev = x0;
        double step = base_step;
        int halvings = 0;
        int successes_at_reduced = 0;
        while (true) {
            const double x_next = x_prev + dir * step;
            if (x_next < x_min || x_next > x_max)
                break;
            CentreFunctional g = functional_for(curve.kind, q_prev, reference);
            bool ok = false;
            ConstrainedResult r;
            try {
                r = constrained_minimize(sys, q_prev, g, x_next, opts.solve, lambda_prev);
                ok = true;
            } catch (const NoConvergence&) {
            } catch (const NoDistortion&) {
            } catch (const NotAKinkInterface&) {
            }
            if (ok) {
                const KinkReport rep = detect(r.config, &curve.reference);
                if (opts.stop_on_kink_loss && rep.n_kinks() == 0) {
                    lost_flag = true;
                    break;
                }
                out.push_back(make_sample(x_next, r));
                q_prev = r.config;
                lambda_prev = r.multiplier;
                x_prev = x_next;
                if (halvings > 0 && ++successes_at_reduced >= 2) {
                    step *= 2.0;
                    --halvings;
                    successes_at_reduced = 0;
                }
                continue;
            }
            if (halvings < opts.max_step_halvings) {
                step *= 0.5;
                ++halvings;
                successes_at_reduced = 0;
                continue;
            }
            // Persistent failure at the smallest step: decide between kink
            // loss (no constrained stationary state beyond here) and a real
            // numerical failure by letting the system relax freely.
            Configuration probe = q_prev;
            try {
                probe = minimize_energy(sys, probe, 1e-8);
            } catch (const NoConvergence&) {
            }
            const KinkReport rep = detect(probe, &curve.reference);
            if (rep.n_kinks() == 0) {
                lost_flag = true;
                break;
            }
            throw NoConvergence("continuation stalled at X = " + std::to_string(x_next));
        }
    };

    std::vector<PnSample> right, left;
    trace_dir(+1, curve.lost_right, right);
    trace_dir(-1, curve.lost_left, left);

    curve.samples.reserve(left.size() + right.size() + 1);
    for (auto it = left.rbegin(); it != left.rend(); ++it)
        curve.samples.push_back(std::move(*it));
    curve.samples.push_back(make_sample(x0, anchor));
    for (auto& s : right)
        curve.samples.push_back(std::move(s));
    return curve;
}

// ---------------------------------------------------------------- extrema

PnExtremum refine_extremum(const IonSystem& sys, const PnCurve& curve,
                           std::size_t left_sample, double lambda_tol) {
    if (left_sample + 1 >= curve.samples.size())
        throw OutOfRange("no bracketing pair at this index");
    const PnSample* a = &curve.samples[left_sample];
    const PnSample* b = &curve.samples[left_sample + 1];
    if (!(a->multiplier * b->multiplier < 0.0))
        throw NoRoot("multiplier does not change sign over this interval");

    const bool is_min = a->multiplier > 0.0;  // lambda = -dU/dX
    double xa = a->position, xb = b->position;
    double la = a->multiplier, lb = b->multiplier;
    Configuration qa = a->config;
    double best_energy = 0.0;
    double lambda_here = la;
    Configuration q_here = qa;
    double x_here = xa;

    for (int it = 0; it < 60; ++it) {
        // secant step, safeguarded by bisection
        double x_mid = xa - la * (xb - xa) / (lb - la);
        if (!(x_mid > std::min(xa, xb) && x_mid < std::max(xa, xb)))
            x_mid = 0.5 * (xa + xb);
        CentreFunctional g = functional_for(curve.kind, q_here, curve.reference);
        ConstrainedResult r = constrained_minimize(sys, q_here, g, x_mid, {}, lambda_here);
        const ScaledCoeffs c = ScaledCoeffs::from(sys);
        best_energy = potential_energy(c, r.config) - curve.reference_energy;
        q_here = r.config;
        x_here = x_mid;
        lambda_here = r.multiplier;
        if (std::abs(r.multiplier) <= lambda_tol)
            break;
        if ((r.multiplier > 0.0) == (la > 0.0)) {
            xa = x_mid;
            la = r.multiplier;
        } else {
            xb = x_mid;
            lb = r.multiplier;
        }
    }
    PnExtremum e;
    e.position = x_here;
    e.energy = best_energy;
    e.is_minimum = is_min;
    e.config = q_here;
    return e;
}

std::vector<PnExtremum> curve_extrema(const IonSystem& sys, const PnCurve& curve,
                                      double lambda_tol) {
    std::vector<PnExtremum> out;
    for (std::size_t i = 0; i + 1 < curve.samples.size(); ++i)
        if (curve.samples[i].multiplier * curve.samples[i + 1].multiplier < 0.0)
            out.push_back(refine_extremum(sys, curve, i, lambda_tol));
    return out;
}

std::vector<PnBarrier> pn_barriers(const IonSystem& sys, const PnCurve& curve) {
    const std::vector<PnExtremum> ext = curve_extrema(sys, curve);
    if (ext.size() < 3)
        throw TooFewExtrema("need at least three interior extrema, found " +
                            std::to_string(ext.size()));
    const UnitSystem units = sys.units();
    std::vector<PnBarrier> out;
    for (std::size_t i = 0; i + 1 < ext.size(); ++i) {
        const PnExtremum& lo = ext[i].is_minimum ? ext[i] : ext[i + 1];
        const PnExtremum& hi = ext[i].is_minimum ? ext[i + 1] : ext[i];
        if (lo.is_minimum == hi.is_minimum)
            continue;  // duplicate extremum kind; skip degenerate pair
        PnBarrier b;
        b.site_position = lo.position;
        b.peak_position = hi.position;
        b.height = hi.energy - lo.energy;
        b.height_kelvin = units.energy_to_kelvin(b.height);
        out.push_back(b);
    }
    return out;
}

CurveResiduals verify(const IonSystem& sys, const PnCurve& curve) {
    const ScaledCoeffs c = ScaledCoeffs::from(sys);
    CurveResiduals res;
    for (const PnSample& s : curve.samples) {
        const CentreFunctional g = functional_for(curve.kind, s.config, curve.reference);
        const Eigen::VectorXd q = to_eigen(pack(s.config));
        const KktEval e = eval_kkt(c, g, q);
        res.max_centre_error = std::max(res.max_centre_error, std::abs(e.g - s.position));
        res.max_kkt = std::max(res.max_kkt, kkt_residual_inf(e, s.multiplier));
    }
    return res;
}

} // namespace iontrap
