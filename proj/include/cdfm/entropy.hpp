#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cdfm/dataset.hpp"

namespace cdfm {

/// Differential entropy of N(mu, sigma^2): 0.5 * ln(2 pi sigma^2).
double gaussian_entropy(double sigma);

/// Silverman's rule of thumb, 1.06 * s * n^(-1/5) with population std s.
double silverman_bandwidth(std::span<const double> samples);

/// Leave-one-out Gaussian-kernel estimate of differential entropy,
/// -(1/n) sum_i ln p_{-i}(x_i). Requires at least 8 non-constant samples.
double kde_entropy(std::span<const double> samples, std::optional<double> bandwidth = std::nullopt);

/// Pearson correlation; nullopt when either input has zero variance.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

double population_std(std::span<const double> values);

struct EntropyRow {
    std::size_t origin = 0;
    double sigma = 0.0;
    double h_gauss = 0.0;
    double h_kde = 0.0;
};

struct EntropyReport {
    std::vector<EntropyRow> per_sample;
    std::optional<double> pearson_sigma_hkde;  ///< nullopt: correlation undefined
    std::size_t skipped = 0;                   ///< degenerate (constant) windows
};

/// Per-window sigma, Gaussian entropy and KDE entropy for one channel over every
/// length-L window of the training split, plus corr(sigma, h_kde).
EntropyReport variance_entropy_report(const TimeSeriesDataset& ds, std::size_t channel,
                                      std::size_t lookback);

}  // namespace cdfm
