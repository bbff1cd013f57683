#pragma once

#include "iontrap/configuration.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace iontrap {

enum class KinkKind { odd, extended, intermediate };
enum class CrystalStructure { linear, zigzag, kinked, disordered };

std::string to_string(KinkKind k);
std::string to_string(CrystalStructure s);

struct DetectedKink {
    KinkKind kind;
    double centre;             // natural length units
    int interface_index = -1;  // bond index j for odd kinks, else -1
};

struct KinkReport {
    CrystalStructure structure = CrystalStructure::linear;
    std::vector<DetectedKink> kinks;
    double zigzag_z_min = 0.0;
    double zigzag_z_max = 0.0;
    double transverse_spacing = 0.0;  // a, between the two rows at the centre
    double axial_spacing = 0.0;       // b, between neighbours at the centre
    std::size_t n_kinks() const { return kinks.size(); }
};

struct DetectOptions {
    double x_thresh_factor = 0.3;      // fraction of median |x| over the central third
    double linear_floor = 0.02;        // absolute |x| floor below which the chain is linear
    double intermediate_band = 0.15;   // |a-b|/b below this -> intermediate
    int cluster_gap = 2;               // sign flips within this many bonds merge into one kink
    bool subtract_mean_x = true;       // work in the frame of the dc-field-displaced axis
    double disorder_fraction = 0.25;   // more kinks than this fraction of N -> disordered
    double outlier_band_factor = 1.2;  // ions beyond this times a are outside the chain
};

/// Kink centre from the interface bond j (ions j and j+1 on the same
/// transverse side): the z-intercept of the line through (z_j, (-1)^j x_j)
/// and (z_{j+1}, (-1)^{j+1} x_{j+1}). Expects axis-centred x (no dc offset).
/// Throws NotAKinkInterface when x_j * x_{j+1} <= 0.
double kink_centre_odd(const Configuration& q, std::size_t j);

/// Kink centre as the distortion-weighted mean of bond midpoints, where the
/// weight of bond j is the squared deviation of its length from the
/// kink-free reference. Uses only axial coordinates. Throws NoDistortion
/// when the total squared deviation is <= eps.
double kink_centre_extended(const Configuration& q, const Configuration& ref,
                            double eps = 1e-18);

/// Classifies a configuration and locates/counts kinks. `ref` (the relaxed
/// kink-free crystal of the same system) enables the extended-kink centre;
/// without it, extended centres fall back to the interface-bond midpoint.
KinkReport detect(const Configuration& q, const Configuration* ref = nullptr,
                  const DetectOptions& opts = {});

} // namespace iontrap
