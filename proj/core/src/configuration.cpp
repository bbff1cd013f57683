#include "iontrap/configuration.hpp"

#include "iontrap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace iontrap {

Configuration::Configuration(std::vector<double> z_, std::vector<double> x_)
    : z(std::move(z_)), x(std::move(x_)) {
    if (z.size() != x.size())
        throw std::invalid_argument("Configuration: z and x must have equal length");
}

bool Configuration::is_sorted_by_z() const {
    return std::is_sorted(z.begin(), z.end());
}

std::vector<std::size_t> Configuration::sort_by_z() {
    const std::size_t n = size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::stable_sort(perm.begin(), perm.end(),
                     [this](std::size_t a, std::size_t b) { return z[a] < z[b]; });
    std::vector<double> zs(n), xs(n);
    for (std::size_t k = 0; k < n; ++k) {
        zs[k] = z[perm[k]];
        xs[k] = x[perm[k]];
    }
    z = std::move(zs);
    x = std::move(xs);
    return perm;
}

double Configuration::min_pair_distance() const {
    const std::size_t n = size();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dz = z[j] - z[i];
            const double dx = x[j] - x[i];
            best = std::min(best, std::hypot(dz, dx));
        }
    return n > 1 ? best : std::numeric_limits<double>::infinity();
}

void Configuration::require_distinct() const {
    if (size() > 1 && min_pair_distance() == 0.0)
        throw CoincidentIons("two ions occupy the same point");
}

std::vector<double> pack(const Configuration& q) {
    const std::size_t n = q.size();
    std::vector<double> v(2 * n);
    std::copy(q.z.begin(), q.z.end(), v.begin());
    std::copy(q.x.begin(), q.x.end(), v.begin() + static_cast<std::ptrdiff_t>(n));
    return v;
}

Configuration unpack(const std::vector<double>& v) {
    const std::size_t n = v.size() / 2;
    Configuration q;
    q.z.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n));
    q.x.assign(v.begin() + static_cast<std::ptrdiff_t>(n), v.end());
    return q;
}

} // namespace iontrap
