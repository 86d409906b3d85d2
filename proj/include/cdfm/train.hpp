#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdfm/dataset.hpp"
#include "cdfm/model.hpp"
#include "cdfm/selector.hpp"

namespace cdfm {

struct TrainConfig {
    std::size_t lookback = 96;
    std::size_t horizon = 96;
    double lr = 0.005;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 10;
    std::size_t patience = 3;
    double alpha = 0.7;
    double rho = 1.0;
    double tau = 0.05;
    std::uint64_t seed = 2024;
    std::size_t kernel = 25;
    double epsilon = kDefaultInstanceEpsilon;
    double lambda_init = 0.1;
    Variant variant = Variant::cdfm;
    bool individual_stationary = true;
    bool individual_nonstationary = true;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  ///< 1-based
    double train_mse = 0.0;
    double val_mse = 0.0;
    double elapsed_seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_mse = 0.0;
    bool stopped_early = false;
};

struct TrainResult {
    CdfmState state;
    TrainLog log;
    std::vector<ChannelScore> scores;
};

/// Full pipeline: score and pick top-k channels, train the fused model with Adam
/// and early stopping on validation MSE, restore the best epoch, then drop
/// candidates whose validation loss worsens under fusion.
TrainResult train(const TimeSeriesDataset& ds, const TrainConfig& config);

/// CSV: epoch,train_mse,val_mse. Timing is excluded so the file is reproducible.
std::string train_log_csv(const TrainLog& log);

struct EvalResult {
    double mse = 0.0;
    double mae = 0.0;
    std::vector<double> per_channel_mse;
    std::size_t n_samples = 0;

    friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

/// Which forecast evaluate() scores.
enum class Output { fused, stationary, nonstationary };

EvalResult evaluate(const CdfmState& state, const TimeSeriesDataset& ds, Split split,
                    Output output = Output::fused);

/// Forecast every horizon row with the last history row.
EvalResult repeat_baseline(const TimeSeriesDataset& ds, std::size_t lookback, std::size_t horizon,
                           Split split = Split::test);

/// "mse=...\nmae=...\n..." record.
std::string eval_key_values(const EvalResult& r);
std::string eval_csv_header();
std::string eval_csv_row(const EvalResult& r);

}  // namespace cdfm
