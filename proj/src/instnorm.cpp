#include "cdfm/instnorm.hpp"

#include <algorithm>
#include <cmath>

#include "cdfm/error.hpp"

namespace cdfm {

InstanceStats instance_stats(const Matrix& x, double epsilon) {
    if (x.rows() < 2) throw ShapeError("instance normalization needs at least 2 rows");
    if (!(epsilon > 0.0)) throw ConfigError("instance normalization epsilon must be positive");
    const std::size_t rows = x.rows();
    const std::size_t n = x.cols();
    InstanceStats stats{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < n; ++c) stats.mu[c] += x(r, c);
    for (auto& m : stats.mu) m /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const double d = x(r, c) - stats.mu[c];
            stats.sigma[c] += d * d;
        }
    for (auto& s : stats.sigma) s = std::max(std::sqrt(s / static_cast<double>(rows)), epsilon);
    return stats;
}

Normalized normalize(const Matrix& x, double epsilon) {
    Normalized out{Matrix(x.rows(), x.cols()), instance_stats(x, epsilon)};
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c)
            out.x(r, c) = (x(r, c) - out.stats.mu[c]) / out.stats.sigma[c];
    return out;
}

Matrix denormalize(const Matrix& y_norm, const InstanceStats& stats) {
    if (stats.mu.size() != y_norm.cols() || stats.sigma.size() != y_norm.cols())
        throw ShapeError("denormalize: statistics cover " + std::to_string(stats.mu.size()) +
                         " channels, prediction has " + std::to_string(y_norm.cols()));
    Matrix y(y_norm.rows(), y_norm.cols());
    for (std::size_t r = 0; r < y.rows(); ++r)
        for (std::size_t c = 0; c < y.cols(); ++c)
            y(r, c) = stats.sigma[c] * y_norm(r, c) + stats.mu[c];
    return y;
}

}  // namespace cdfm
