#include "iontrap/kink_detect.hpp"

#include "iontrap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace iontrap {

std::string to_string(KinkKind k) {
    switch (k) {
        case KinkKind::odd: return "odd";
        case KinkKind::extended: return "extended";
        default: return "intermediate";
    }
}

std::string to_string(CrystalStructure s) {
    switch (s) {
        case CrystalStructure::linear: return "linear";
        case CrystalStructure::zigzag: return "zigzag";
        case CrystalStructure::kinked: return "kinked";
        default: return "disordered";
    }
}

double kink_centre_odd(const Configuration& q, std::size_t j) {
    if (j + 1 >= q.size())
        throw NotAKinkInterface("interface index out of range");
    const double xj = q.x[j];
    const double xj1 = q.x[j + 1];
    if (!(xj * xj1 > 0.0))
        throw NotAKinkInterface("ions at the interface must lie on the same transverse side");
    const double sign_j = (j % 2 == 0) ? 1.0 : -1.0;
    const double u = sign_j * xj;
    const double w = -sign_j * xj1;  // (-1)^(j+1) x_{j+1}
    return (u * q.z[j + 1] - w * q.z[j]) / (u - w);
}

namespace {

std::vector<double> sorted_copy(const std::vector<double>& v) {
    std::vector<double> out = v;
    std::sort(out.begin(), out.end());
    return out;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Distortion-weighted mean of bond midpoints over bonds [b0, b1).
double extended_centre_window(const std::vector<double>& z, const std::vector<double>& ref_z,
                              std::size_t b0, std::size_t b1, double eps) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = b0; j < b1; ++j) {
        const double d = (z[j + 1] - z[j]) - (ref_z[j + 1] - ref_z[j]);
        const double w = d * d;
        num += 0.5 * (z[j] + z[j + 1]) * w;
        den += w;
    }
    if (den <= eps)
        throw NoDistortion("no axial distortion relative to the reference chain");
    return num / den;
}

} // namespace

double kink_centre_extended(const Configuration& q, const Configuration& ref, double eps) {
    if (q.size() != ref.size())
        throw std::invalid_argument("configuration and reference differ in size");
    if (q.size() < 2)
        throw NoDistortion("need at least two ions");
    const std::vector<double> z = sorted_copy(q.z);
    const std::vector<double> rz = sorted_copy(ref.z);
    return extended_centre_window(z, rz, 0, z.size() - 1, eps);
}

KinkReport detect(const Configuration& q, const Configuration* ref, const DetectOptions& opts) {
    KinkReport rep;
    const std::size_t n = q.size();
    if (n < 3) {
        rep.structure = CrystalStructure::linear;
        return rep;
    }

    Configuration s = q;
    s.sort_by_z();

    // Transverse axis of the chain. A dc field displaces the whole crystal
    // and pushes a defect much farther out, so the mean is refined once with
    // far outliers removed.
    std::vector<double> xs = s.x;
    if (opts.subtract_mean_x) {
        const double mean0 = std::accumulate(xs.begin(), xs.end(), 0.0) / double(n);
        std::vector<double> dev;
        for (std::size_t k = n / 3; k < n - n / 3; ++k)
            dev.push_back(std::abs(xs[k] - mean0));
        const double band = std::max(4.0 * median_of(dev), 10.0 * opts.linear_floor);
        double acc = 0.0;
        std::size_t cnt = 0;
        for (double v : xs)
            if (std::abs(v - mean0) <= band) {
                acc += v;
                ++cnt;
            }
        const double axis = cnt >= n / 2 ? acc / double(cnt) : mean0;
        for (double& v : xs) v -= axis;
    }

    const std::size_t c0 = n / 3;
    const std::size_t c1 = n - n / 3;
    std::vector<double> central_abs_x;
    for (std::size_t k = c0; k < c1; ++k)
        central_abs_x.push_back(std::abs(xs[k]));
    const double x_thresh =
        std::max(opts.x_thresh_factor * median_of(central_abs_x), opts.linear_floor);

    // Spacings at the chain centre. b from all central neighbours; a from
    // opposite-side central pairs (the row separation).
    {
        std::vector<double> bs, as;
        for (std::size_t k = c0; k + 1 < c1; ++k) {
            bs.push_back(s.z[k + 1] - s.z[k]);
            if (xs[k] * xs[k + 1] < 0.0 && std::abs(xs[k]) > x_thresh &&
                std::abs(xs[k + 1]) > x_thresh)
                as.push_back(std::abs(xs[k] - xs[k + 1]));
        }
        rep.axial_spacing = median_of(bs);
        rep.transverse_spacing = median_of(as);
    }

    // Ions that hold a lattice site. An ion expelled far beyond the rows
    // (a field-displaced defect) leaves a vacancy; alternation must be
    // counted over the remaining chain.
    const double chain_band =
        rep.transverse_spacing > 0.0
            ? std::max(opts.outlier_band_factor * rep.transverse_spacing,
                       5.0 * opts.linear_floor)
            : std::numeric_limits<double>::infinity();
    std::vector<std::size_t> chain;  // sorted slots in the chain
    std::vector<std::size_t> rank(n, 0);
    for (std::size_t k = 0; k < n; ++k)
        if (std::abs(xs[k]) <= chain_band) {
            rank[k] = chain.size();
            chain.push_back(k);
        }

    std::vector<std::size_t> incl;  // chain ions participating in the order parameter
    for (std::size_t k : chain)
        if (std::abs(xs[k]) > x_thresh)
            incl.push_back(k);

    if (incl.size() < 2) {
        rep.structure = CrystalStructure::linear;
        return rep;
    }
    rep.zigzag_z_min = s.z[incl.front()];
    rep.zigzag_z_max = s.z[incl.back()];

    auto phi = [&](std::size_t k) { return rank[k] % 2 == 0 ? xs[k] : -xs[k]; };

    // Sign changes of phi between consecutive included ions.
    struct Change { std::size_t left, right; };
    std::vector<Change> changes;
    for (std::size_t t = 0; t + 1 < incl.size(); ++t) {
        const std::size_t k = incl[t], m = incl[t + 1];
        if (phi(k) * phi(m) < 0.0)
            changes.push_back({k, m});
    }

    // Row imbalance of the zigzag region; a lone extended kink carries an
    // excess ion in one row, which survives even when the interface ion sits
    // on the axis and drops out of the order parameter.
    int imbalance = 0;
    for (std::size_t k : incl)
        imbalance += xs[k] > 0.0 ? 1 : -1;

    KinkKind kind = KinkKind::intermediate;
    if (rep.axial_spacing > 0.0 && rep.transverse_spacing > 0.0) {
        const double rel = std::abs(rep.transverse_spacing - rep.axial_spacing) / rep.axial_spacing;
        if (rel >= opts.intermediate_band)
            kind = rep.transverse_spacing < rep.axial_spacing ? KinkKind::odd : KinkKind::extended;
    }

    // Merge nearby sign changes into clusters; one kink per cluster.
    struct Cluster { std::size_t first_slot, last_slot; };
    std::vector<Cluster> clusters;
    for (const Change& ch : changes) {
        if (!clusters.empty() &&
            rank[ch.left] <= rank[clusters.back().last_slot] +
                                 static_cast<std::size_t>(opts.cluster_gap))
            clusters.back().last_slot = ch.left;
        else
            clusters.push_back({ch.left, ch.left});
    }

    if (clusters.empty()) {
        rep.structure = CrystalStructure::zigzag;
        if (chain.size() % 2 == 0 && std::abs(imbalance) % 2 == 1 &&
            kind == KinkKind::extended && ref != nullptr) {
            try {
                const double centre = kink_centre_extended(s, *ref);
                rep.kinks.push_back({kind, centre, -1});
                rep.structure = CrystalStructure::kinked;
            } catch (const NoDistortion&) {
            }
        }
        return rep;
    }

    if (static_cast<double>(clusters.size()) >
        opts.disorder_fraction * static_cast<double>(n)) {
        rep.structure = CrystalStructure::disordered;
        return rep;
    }
    rep.structure = CrystalStructure::kinked;

    // Window boundaries between clusters, for per-kink extended centres.
    std::vector<std::size_t> win(clusters.size() + 1);
    win.front() = 0;
    win.back() = n - 1;
    for (std::size_t c = 0; c + 1 < clusters.size(); ++c)
        win[c + 1] = (clusters[c].last_slot + clusters[c + 1].first_slot + 1) / 2;

    const std::vector<double> ref_z = ref ? sorted_copy(ref->z) : std::vector<double>{};
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        // Representative interface: the strongest same-phi adjacent pair
        // inside the cluster span.
        std::size_t best = n;  // sentinel
        double best_w = -1.0;
        for (std::size_t k = clusters[c].first_slot;
             k <= clusters[c].last_slot && k + 1 < n; ++k) {
            if (phi(k) * phi(k + 1) < 0.0 && std::abs(xs[k]) > x_thresh &&
                std::abs(xs[k + 1]) > x_thresh) {
                const double w = std::abs(xs[k]) + std::abs(xs[k + 1]);
                if (w > best_w) {
                    best_w = w;
                    best = k;
                }
            }
        }
        DetectedKink kink;
        kink.kind = kind;
        kink.interface_index = -1;
        if (kind == KinkKind::odd && best < n) {
            // z-intercept of the alternation order parameter across the bond
            const double pa = phi(best), pb = phi(best + 1);
            kink.centre = s.z[best] - pa * (s.z[best + 1] - s.z[best]) / (pb - pa);
            kink.interface_index = static_cast<int>(best);
        } else if (ref && ref->size() == n) {
            try {
                kink.centre = extended_centre_window(s.z, ref_z, win[c], win[c + 1], 1e-18);
            } catch (const NoDistortion&) {
                kink.centre = best < n ? 0.5 * (s.z[best] + s.z[best + 1])
                                       : 0.5 * (s.z[clusters[c].first_slot] +
                                                s.z[clusters[c].last_slot + 1]);
            }
        } else if (best < n) {
            kink.centre = 0.5 * (s.z[best] + s.z[best + 1]);
        } else {
            kink.centre =
                0.5 * (s.z[clusters[c].first_slot] + s.z[clusters[c].last_slot + 1]);
        }
        rep.kinks.push_back(kink);
    }
    return rep;
}

} // namespace iontrap
