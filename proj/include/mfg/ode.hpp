#pragma once

#include <functional>

#include "mfg/grid.hpp"
#include "mfg/matrix.hpp"

namespace mfg {

// Matrix exponential (Pade-13 with scaling and squaring).
Matrix expm(const Matrix& a);

// Fixed-step RK4 for dx = f x + g(t) on a uniform grid; returns the state
// path sampled at the grid points. `g` may be null for the homogeneous case.
// Used as the high-order reference for everything Euler-integrated, and as
// the exact-expectation generator for the deterministic suites.
Path integrate_linear_ode(const Matrix& f, const std::function<Vector(double)>& g, const Vector& x0,
                          const TimeGrid& grid);

}  // namespace mfg
