#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cdfm/dataset.hpp"

namespace cdfm {

/// Per-channel selection metrics. The validation-loss fields are filled in
/// after training; until then they are empty.
struct ChannelScore {
    std::string channel;
    double nonstat = 0.0;  ///< mean history-window std over training samples
    double sim = 0.0;      ///< mean |Pearson| against every channel, self included
    double g = 0.0;        ///< nonstat + rho * sim
    bool selected_topk = false;
    std::optional<bool> consistent;
    std::optional<double> stationary_val_loss;
    std::optional<double> fusion_val_loss;
};

/// Score g for every channel from the training split: window statistics over all
/// training samples of length lookback + horizon, similarity over the full split.
std::vector<ChannelScore> channel_scores(const TimeSeriesDataset& ds, std::size_t lookback,
                                         std::size_t horizon, double rho);

/// Builds scores from precomputed (nonstat, sim) values.
std::vector<ChannelScore> scores_from_values(const std::vector<std::string>& names,
                                             const std::vector<double>& nonstat,
                                             const std::vector<double>& sim, double rho);

/// k = floor(alpha * N) for the selection ratio.
std::size_t topk_count(double alpha, std::size_t channels);

/// Indices (ascending) of the floor(alpha * N) channels with the largest g; ties go
/// to the lower index. Marks `selected_topk` on the scores.
std::vector<std::size_t> select_topk(std::vector<ChannelScore>& scores, double alpha);

/// Keeps candidate i iff fusion_val_loss[i] <= stationary_val_loss[i] * (1 + tau).
std::vector<std::size_t> consistency_filter(const std::vector<std::size_t>& candidates,
                                            const std::vector<double>& stationary_val_loss,
                                            const std::vector<double>& fusion_val_loss,
                                            double tau = 0.05);

std::vector<std::uint8_t> mask_from_indices(const std::vector<std::size_t>& indices,
                                            std::size_t channels);

/// CSV with header channel,nonstat,sim,g,topk,stationary_val_loss,fusion_val_loss,consistent.
/// Unset validation fields are written as empty cells.
std::string channel_scores_csv(const std::vector<ChannelScore>& scores);

}  // namespace cdfm
