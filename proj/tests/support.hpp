#pragma once

#include "punctual/coeff.hpp"
#include "punctual/model.hpp"

#include <cmath>
#include <numbers>

namespace testing {

using namespace punctual;

inline const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

inline Box cube(int d, double r = 2.0) { return {Vec::Constant(d, -r), Vec::Constant(d, r)}; }

inline CoefficientField field_of(const FitnessModel& m, Backend backend = Backend::closed_form(),
                                 double s = 1.0) {
    return build_field(m, MutationKernel::gaussian_isotropic(m.dim(), s),
                       find_singularities(m, cube(m.dim()), 9), backend);
}

inline double rel_err(const Vec& got, const Vec& want) {
    return (got - want).norm() / std::max(want.norm(), 1e-300);
}

inline double rel_err(const Mat& got, const Mat& want) {
    return (got - want).norm() / std::max(want.norm(), 1e-300);
}

}  // namespace testing
