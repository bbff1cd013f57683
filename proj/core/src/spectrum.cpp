#include "iontrap/spectrum.hpp"

#include "iontrap/units.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace iontrap {

namespace {

std::vector<double> windowed(const std::vector<double>& samples) {
    const std::size_t n = samples.size();
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) /
                        static_cast<double>(n);
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double hann =
            0.5 - 0.5 * std::cos(2.0 * constants::pi * static_cast<double>(k) /
                                 static_cast<double>(n - 1));
        w[k] = (samples[k] - mean) * hann;
    }
    return w;
}

} // namespace

std::vector<double> periodogram(const std::vector<double>& samples, double dt_s,
                                const std::vector<double>& freqs_hz) {
    if (samples.size() < 4)
        throw std::invalid_argument("periodogram: too few samples");
    const std::vector<double> w = windowed(samples);
    std::vector<double> power(freqs_hz.size());
    for (std::size_t i = 0; i < freqs_hz.size(); ++i) {
        const double wstep = 2.0 * constants::pi * freqs_hz[i] * dt_s;
        // recurrence-free direct sum; n is small in this code base
        double re = 0.0, im = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double ph = wstep * static_cast<double>(k);
            re += w[k] * std::cos(ph);
            im -= w[k] * std::sin(ph);
        }
        power[i] = re * re + im * im;
    }
    return power;
}

SpectralPeak dominant_frequency(const std::vector<double>& samples, double dt_s,
                                double f_min_hz, double f_max_hz, std::size_t n_freq) {
    if (!(f_max_hz > f_min_hz) || n_freq < 8)
        throw std::invalid_argument("dominant_frequency: bad frequency range");
    std::vector<double> freqs(n_freq);
    const double df = (f_max_hz - f_min_hz) / static_cast<double>(n_freq - 1);
    for (std::size_t i = 0; i < n_freq; ++i)
        freqs[i] = f_min_hz + df * static_cast<double>(i);
    const std::vector<double> p = periodogram(samples, dt_s, freqs);
    const std::size_t imax = static_cast<std::size_t>(
        std::max_element(p.begin(), p.end()) - p.begin());
    SpectralPeak peak{freqs[imax], p[imax]};
    if (imax > 0 && imax + 1 < n_freq && p[imax] > 0.0 && p[imax - 1] > 0.0 &&
        p[imax + 1] > 0.0) {
        const double la = std::log(p[imax - 1]);
        const double lb = std::log(p[imax]);
        const double lc = std::log(p[imax + 1]);
        const double denom = la - 2.0 * lb + lc;
        if (denom < 0.0)
            peak.frequency_hz += 0.5 * df * (la - lc) / denom;
    }
    return peak;
}

double zero_crossing_frequency(const std::vector<double>& samples, double dt_s) {
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) /
                        static_cast<double>(samples.size());
    std::vector<double> crossings;
    for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
        const double a = samples[k] - mean;
        const double b = samples[k + 1] - mean;
        if (a < 0.0 && b >= 0.0)
            crossings.push_back((static_cast<double>(k) + a / (a - b)) * dt_s);
    }
    if (crossings.size() < 2)
        return 0.0;
    const double span = crossings.back() - crossings.front();
    return static_cast<double>(crossings.size() - 1) / span;
}

double rms_amplitude(const std::vector<double>& samples) {
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) /
                        static_cast<double>(samples.size());
    double acc = 0.0;
    for (double v : samples)
        acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(samples.size()));
}

} // namespace iontrap
