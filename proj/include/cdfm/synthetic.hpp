#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdfm/dataset.hpp"
#include "cdfm/train.hpp"

namespace cdfm {

/// Wraps a raw matrix as an unsplit dataset with generated names and timestamps.
TimeSeriesDataset make_dataset(Matrix values, std::vector<std::string> names = {});

struct TrendMixConfig {
    std::size_t length = 2000;
    std::size_t trend_channels = 2;
    std::size_t stationary_channels = 5;
    double slope = 0.01;      ///< trend channels: slope * t + noise
    double noise_std = 0.1;
    double ar_coef = 0.0;     ///< stationary channels: AR(1) around zero; 0 is white noise
    std::uint64_t seed = 7;
};

/// Trend channels first (named trend0, trend1, ...), then stationary channels.
TimeSeriesDataset trend_mix_series(const TrendMixConfig& config);

/// x_t = a_t * e_t with a_t = 1 + depth * sin(2 pi t / period), e_t ~ N(0, 1).
TimeSeriesDataset amplitude_modulated_series(std::size_t length, double period, double depth,
                                             std::uint64_t seed);

struct OversmoothingConfig {
    TrendMixConfig data;
    TrainConfig train;
    OversmoothingConfig();
};

/// Horizon-trajectory spread of a model on one pattern class of the test split.
struct PatternMetrics {
    double std_ratio = 0.0;        ///< mean predicted horizon std / mean true horizon std
    double slope = 0.0;            ///< mean least-squares slope of predictions, raw units per step
    double slope_rel_error = 0.0;  ///< |slope - generator slope| / generator slope (trend only)
    double mse = 0.0;
};

struct OversmoothingReport {
    PatternMetrics trend_only_stationary;   ///< stationary predictor, trend-only training
    PatternMetrics mixed_stationary_trend;  ///< stationary predictor, mixed data, trend channels
    PatternMetrics mixed_cdfm_trend;        ///< CDFM, mixed data, trend channels
    PatternMetrics mixed_stationary_flat;   ///< same models on the stationary channels
    PatternMetrics mixed_cdfm_flat;
    std::vector<std::uint8_t> cdfm_mask;
    std::string series_csv;  ///< one test sample per pattern class in raw units, for plotting
};

/// Trains a stationary-only model and CDFM on a trend/stationary mixture (and the
/// stationary model on trend channels alone) and measures how much each flattens
/// the trend forecasts.
OversmoothingReport oversmoothing_demo(const OversmoothingConfig& config);

std::string oversmoothing_report_text(const OversmoothingReport& report);

}  // namespace cdfm
