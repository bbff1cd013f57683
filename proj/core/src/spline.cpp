#include "iontrap/spline.hpp"

#include "iontrap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iontrap {

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n != y_.size() || n < 2)
        throw std::invalid_argument("CubicSpline: need matching arrays of length >= 2");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(x_[i + 1] > x_[i]))
            throw std::invalid_argument("CubicSpline: knots must increase strictly");

    m_.assign(n, 0.0);
    if (n == 2)
        return;
    // Thomas algorithm for the natural-spline tridiagonal system.
    std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double ha = x_[i] - x_[i - 1];
        const double hb = x_[i + 1] - x_[i];
        diag[i] = 2.0 * (ha + hb);
        upper[i] = hb;
        rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / hb - (y_[i] - y_[i - 1]) / ha);
    }
    for (std::size_t i = 2; i + 1 < n; ++i) {
        const double w = (x_[i] - x_[i - 1]) / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
        if (i == 1) break;
    }
}

std::size_t CubicSpline::interval(double t) const {
    if (t < x_.front() || t > x_.back())
        throw OutOfRange("spline evaluated outside its knot range");
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    if (i > 0) --i;
    if (i + 1 >= x_.size()) i = x_.size() - 2;
    return i;
}

double CubicSpline::value(double t) const {
    const std::size_t i = interval(t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h;
    const double b = (t - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double t) const {
    const std::size_t i = interval(t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h;
    const double b = (t - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h +
           ((3.0 * b * b - 1.0) * m_[i + 1] - (3.0 * a * a - 1.0) * m_[i]) * h / 6.0;
}

double CubicSpline::second_derivative(double t) const {
    const std::size_t i = interval(t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h;
    const double b = (t - x_[i]) / h;
    return a * m_[i] + b * m_[i + 1];
}

} // namespace iontrap
