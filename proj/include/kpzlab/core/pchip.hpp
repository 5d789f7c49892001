#pragma once

#include <span>
#include <vector>

namespace kpzlab {

// Fritsch-Carlson monotone cubic interpolant on strictly increasing knots.
class Pchip {
public:
    Pchip() = default;
    Pchip(std::vector<double> x, std::vector<double> y);
    double operator()(double t) const;
    double lo() const { return x_.front(); }
    double hi() const { return x_.back(); }

private:
    std::vector<double> x_, y_, d_;
};

}  // namespace kpzlab
