#pragma once

#include <cstddef>
#include <vector>

namespace iontrap {

/// Hann-windowed periodogram of a uniformly sampled real signal at the
/// requested frequencies (Hz; dt in seconds). The mean is removed first.
std::vector<double> periodogram(const std::vector<double>& samples, double dt_s,
                                const std::vector<double>& freqs_hz);

struct SpectralPeak {
    double frequency_hz = 0.0;
    double power = 0.0;
};

/// Location of the strongest periodogram peak in [f_min, f_max], refined by
/// parabolic interpolation on the log power of the three bins around it.
SpectralPeak dominant_frequency(const std::vector<double>& samples, double dt_s,
                                double f_min_hz, double f_max_hz,
                                std::size_t n_freq = 2400);

/// Mean-period estimate from interpolated upward zero crossings of the
/// mean-removed signal; precise for clean oscillations.
double zero_crossing_frequency(const std::vector<double>& samples, double dt_s);

double rms_amplitude(const std::vector<double>& samples);

} // namespace iontrap
