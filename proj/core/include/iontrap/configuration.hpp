#pragma once

#include <cstddef>
#include <vector>

namespace iontrap {

/// Planar ion coordinates in natural units: z is axial, x is transverse.
/// Index i refers to one physical ion; relaxed configurations and dynamics
/// snapshots keep indices ordered by z (ties broken arbitrarily), so that
/// index == position-from-the-left and the mass list of the owning system
/// stays aligned. Intermediate optimizer iterates may transiently violate
/// the ordering; sort_by_z restores it.
struct Configuration {
    std::vector<double> z;
    std::vector<double> x;

    Configuration() = default;
    Configuration(std::vector<double> z_, std::vector<double> x_);

    std::size_t size() const { return z.size(); }

    bool is_sorted_by_z() const;
    /// Returns the permutation p with p[k] = old index of the ion now at
    /// slot k; callers permute per-ion side data (masses, velocities) with it.
    std::vector<std::size_t> sort_by_z();

    double min_pair_distance() const;
    /// Throws CoincidentIons when two ions coincide.
    void require_distinct() const;
};

/// Flat coordinate vector (z_0..z_{N-1}, x_0..x_{N-1}) used by the
/// optimizers; the same packing as gradients and Hessians.
std::vector<double> pack(const Configuration& q);
Configuration unpack(const std::vector<double>& v);

} // namespace iontrap
