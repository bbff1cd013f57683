#pragma once

#include <vector>

namespace iontrap {

/// Natural cubic spline on a strictly increasing knot sequence.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y);

    double value(double t) const;
    double derivative(double t) const;
    double second_derivative(double t) const;

    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }
    bool empty() const { return x_.empty(); }

private:
    std::size_t interval(double t) const;
    std::vector<double> x_, y_, m_;  // m_ = second derivatives at knots
};

} // namespace iontrap
