#pragma once

#include "punctual/linalg.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace punctual {

/// Bounded domain G with a 1-Lipschitz signed distance (negative inside).
class Domain {
public:
    enum class Kind { ball, interval, polygon };

    static Domain ball(Vec center, double radius);
    static Domain interval(double lo, double hi);
    /// Simple polygon in the plane, vertices in order (either orientation).
    static Domain polygon(std::vector<Vec> vertices);

    Kind kind() const { return kind_; }
    std::string kind_name() const;
    int dim() const { return dim_; }
    double signed_distance(const Vec& x) const;
    bool contains(const Vec& x) const { return signed_distance(x) < 0.0; }

    /// Deterministic, evenly spread boundary points. Balls in the plane use
    /// angles 2 pi k / n starting at angle 0.
    std::vector<Vec> boundary_grid(int n) const;
    /// Random boundary points from the (seed, 0) stream.
    std::vector<Vec> boundary_sample(int n, std::uint64_t seed) const;

    /// Diameter of the domain, used for default length scales.
    double scale() const;

    const Vec& center() const { return center_; }
    double radius() const { return radius_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    const std::vector<Vec>& vertices() const { return vertices_; }

private:
    Domain() = default;
    Vec point_on_perimeter(double s) const;
    double perimeter() const;

    Kind kind_ = Kind::ball;
    int dim_ = 1;
    Vec center_;
    double radius_ = 0.0;
    double lo_ = 0.0;
    double hi_ = 0.0;
    std::vector<Vec> vertices_;
};

}  // namespace punctual
