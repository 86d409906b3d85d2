#pragma once

#include <vector>

#include "cdfm/matrix.hpp"

namespace cdfm {

inline constexpr double kDefaultInstanceEpsilon = 1e-5;

/// Per-channel statistics of one history window.
struct InstanceStats {
    std::vector<double> mu;
    std::vector<double> sigma;  ///< population std, floored at epsilon
};

struct Normalized {
    Matrix x;
    InstanceStats stats;
};

/// Column-wise mean/std of `x`; sigma = max(std, epsilon).
InstanceStats instance_stats(const Matrix& x, double epsilon = kDefaultInstanceEpsilon);

/// (x - mu) / sigma per channel, statistics taken from `x` itself.
Normalized normalize(const Matrix& x, double epsilon = kDefaultInstanceEpsilon);

/// sigma * y + mu per channel.
Matrix denormalize(const Matrix& y_norm, const InstanceStats& stats);

}  // namespace cdfm
