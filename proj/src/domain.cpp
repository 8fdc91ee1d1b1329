#include "punctual/domain.hpp"

#include "punctual/error.hpp"
#include "punctual/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace punctual {

Domain Domain::ball(Vec center, double radius) {
    if (center.size() < 1 || center.size() > kMaxDim) throw DomainError("ball center dimension out of range");
    if (!(radius > 0.0)) throw DomainError("ball radius must be positive");
    Domain d;
    d.kind_ = Kind::ball;
    d.dim_ = static_cast<int>(center.size());
    d.center_ = std::move(center);
    d.radius_ = radius;
    return d;
}

Domain Domain::interval(double lo, double hi) {
    if (!(hi > lo)) throw DomainError("interval needs lo < hi");
    Domain d;
    d.kind_ = Kind::interval;
    d.dim_ = 1;
    d.lo_ = lo;
    d.hi_ = hi;
    d.center_ = make_vec({0.5 * (lo + hi)});
    d.radius_ = 0.5 * (hi - lo);
    return d;
}

Domain Domain::polygon(std::vector<Vec> vertices) {
    if (vertices.size() < 3) throw DomainError("polygon needs at least 3 vertices");
    for (const Vec& v : vertices) {
        if (v.size() != 2) throw DimensionMismatch("polygon vertices must be 2-dimensional");
    }
    Domain d;
    d.kind_ = Kind::polygon;
    d.dim_ = 2;
    d.vertices_ = std::move(vertices);
    Vec c = Vec::Zero(2);
    for (const Vec& v : d.vertices_) c += v;
    d.center_ = c / static_cast<double>(d.vertices_.size());
    return d;
}

std::string Domain::kind_name() const {
    switch (kind_) {
        case Kind::ball: return "ball";
        case Kind::interval: return "interval";
        case Kind::polygon: return "polygon";
    }
    return "?";
}

double Domain::signed_distance(const Vec& x) const {
    if (x.size() != dim_) throw DimensionMismatch("point dimension differs from the domain");
    switch (kind_) {
        case Kind::ball: return (x - center_).norm() - radius_;
        case Kind::interval: return std::max(lo_ - x[0], x[0] - hi_);
        case Kind::polygon: {
            double best = std::numeric_limits<double>::infinity();
            bool inside = false;
            const std::size_t n = vertices_.size();
            for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
                const Vec& a = vertices_[j];
                const Vec& b = vertices_[i];
                const Vec ab = b - a;
                const double t = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
                best = std::min(best, (x - (a + t * ab)).norm());
                // even-odd ray casting along +x
                if ((b[1] > x[1]) != (a[1] > x[1]) &&
                    x[0] < (a[0] - b[0]) * (x[1] - b[1]) / (a[1] - b[1]) + b[0]) {
                    inside = !inside;
                }
            }
            return inside ? -best : best;
        }
    }
    return 0.0;
}

double Domain::perimeter() const {
    double p = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        p += (vertices_[(i + 1) % vertices_.size()] - vertices_[i]).norm();
    }
    return p;
}

Vec Domain::point_on_perimeter(double s) const {
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const Vec& a = vertices_[i];
        const Vec& b = vertices_[(i + 1) % vertices_.size()];
        const double len = (b - a).norm();
        if (s <= len || i + 1 == vertices_.size()) return a + std::min(s / len, 1.0) * (b - a);
        s -= len;
    }
    return vertices_.front();
}

std::vector<Vec> Domain::boundary_grid(int n) const {
    if (n < 1) throw PreconditionError("boundary_grid needs n >= 1");
    std::vector<Vec> out;
    if (dim_ == 1) {
        const double lo = kind_ == Kind::interval ? lo_ : center_[0] - radius_;
        const double hi = kind_ == Kind::interval ? hi_ : center_[0] + radius_;
        return {make_vec({lo}), make_vec({hi})};
    }
    if (kind_ == Kind::polygon) {
        const double p = perimeter();
        for (int k = 0; k < n; ++k) out.push_back(point_on_perimeter(p * k / n));
        return out;
    }
    if (dim_ == 2) {
        for (int k = 0; k < n; ++k) {
            const double th = 2.0 * std::numbers::pi * k / n;
            Vec z = center_;
            z[0] += radius_ * std::cos(th);
            z[1] += radius_ * std::sin(th);
            out.push_back(z);
        }
        return out;
    }
    // Fibonacci lattice on the sphere in the first three coordinates; for
    // d > 3 the remaining coordinates stay at the center.
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
        const double zc = 1.0 - 2.0 * (k + 0.5) / n;
        const double rr = std::sqrt(std::max(0.0, 1.0 - zc * zc));
        Vec z = center_;
        z[0] += radius_ * rr * std::cos(golden * k);
        z[1] += radius_ * rr * std::sin(golden * k);
        z[2] += radius_ * zc;
        out.push_back(z);
    }
    return out;
}

std::vector<Vec> Domain::boundary_sample(int n, std::uint64_t seed) const {
    if (n < 1) throw PreconditionError("boundary_sample needs n >= 1");
    RandomStream rng(seed, 0);
    std::vector<Vec> out;
    for (int k = 0; k < n; ++k) {
        if (dim_ == 1) {
            const auto ends = boundary_grid(2);
            out.push_back(rng.uniform() < 0.5 ? ends[0] : ends[1]);
        } else if (kind_ == Kind::polygon) {
            out.push_back(point_on_perimeter(perimeter() * rng.uniform()));
        } else {
            Vec g(dim_);
            for (int i = 0; i < dim_; ++i) g[i] = rng.normal();
            out.push_back(center_ + radius_ * g / g.norm());
        }
    }
    return out;
}

double Domain::scale() const {
    switch (kind_) {
        case Kind::ball: return 2.0 * radius_;
        case Kind::interval: return hi_ - lo_;
        case Kind::polygon: {
            double best = 0.0;
            for (const Vec& a : vertices_) {
                for (const Vec& b : vertices_) best = std::max(best, (a - b).norm());
            }
            return best;
        }
    }
    return 1.0;
}

}  // namespace punctual
