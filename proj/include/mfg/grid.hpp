#pragma once

#include <cmath>
#include <cstddef>

#include "mfg/errors.hpp"
#include "mfg/matrix.hpp"

namespace mfg {

// Uniform time grid t_k = t0 + k*dt, k = 0..count-1.
struct TimeGrid {
    double t0 = 0.0;
    double dt = 0.0;
    std::size_t count = 0;

    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
    double t_end() const { return count ? time(count - 1) : t0; }

    // index of a time that must sit (near-)exactly on the grid
    std::size_t index_of(double t, const char* what = "time") const {
        const double raw = (t - t0) / dt;
        const double rounded = std::round(raw);
        if (std::abs(raw - rounded) > 1e-6 || rounded < 0.0 || rounded >= static_cast<double>(count))
            throw GridMismatchError(std::string(what) + " does not sit on the sampling grid");
        return static_cast<std::size_t>(rounded);
    }
};

inline bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.t0 == b.t0 && a.dt == b.dt && a.count == b.count;
}

// A vector-valued path sampled on a TimeGrid: `count` frames of `dim` values,
// stored frame-major.
struct Path {
    std::size_t dim = 0;
    Vector data;

    Path() = default;
    Path(std::size_t dim_, std::size_t count) : dim(dim_), data(dim_ * count, 0.0) {}

    std::size_t frames() const { return dim ? data.size() / dim : 0; }
    double* frame(std::size_t k) { return data.data() + k * dim; }
    const double* frame(std::size_t k) const { return data.data() + k * dim; }

    Vector at(std::size_t k) const {
        return Vector(frame(k), frame(k) + dim);
    }
};

}  // namespace mfg
