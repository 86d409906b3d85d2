#include "cdfm/selector.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

#include "cdfm/entropy.hpp"
#include "cdfm/error.hpp"
#include "cdfm/format.hpp"

namespace cdfm {

std::vector<ChannelScore> scores_from_values(const std::vector<std::string>& names,
                                             const std::vector<double>& nonstat,
                                             const std::vector<double>& sim, double rho) {
    if (names.size() != nonstat.size() || names.size() != sim.size())
        throw ShapeError("channel score inputs differ in length");
    std::vector<ChannelScore> out(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        out[i].channel = names[i];
        out[i].nonstat = nonstat[i];
        out[i].sim = sim[i];
        out[i].g = nonstat[i] + rho * sim[i];
    }
    return out;
}

std::vector<ChannelScore> channel_scores(const TimeSeriesDataset& ds, std::size_t lookback,
                                         std::size_t horizon, double rho) {
    const WindowSet train(ds, Split::train, lookback, horizon);
    if (train.empty()) throw DataError("training split admits no window for channel scoring");
    const std::size_t n = ds.channels();
    const auto [begin, end] = ds.split_range(Split::train);

    std::vector<std::vector<double>> columns(n);
    for (std::size_t c = 0; c < n; ++c) {
        columns[c].resize(end - begin);
        for (std::size_t r = begin; r < end; ++r) columns[c][r - begin] = ds.values(r, c);
    }

    std::vector<double> nonstat(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        double sum = 0.0;
        for (std::size_t s = 0; s < train.size(); ++s) {
            const std::size_t start = train.origin(s) - begin;
            sum += population_std(std::span<const double>(columns[c].data() + start, lookback));
        }
        nonstat[c] = sum / static_cast<double>(train.size());
    }

    std::vector<double> sim(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const auto r = pearson(columns[i], columns[j]);
            if (!r) {
                const std::size_t bad = !pearson(columns[i], columns[i]) ? i : j;
                throw DataError("channel '" + ds.channel_names[bad] +
                                "' is constant on the training split; similarity undefined");
            }
            sum += std::abs(*r);
        }
        sim[i] = sum / static_cast<double>(n);
    }
    return scores_from_values(ds.channel_names, nonstat, sim, rho);
}

std::size_t topk_count(double alpha, std::size_t channels) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
    // floor with slack for products such as 0.7 * 30 = 20.999999999999996
    return std::min(channels, static_cast<std::size_t>(std::floor(alpha * static_cast<double>(channels) + 1e-9)));
}

std::vector<std::size_t> select_topk(std::vector<ChannelScore>& scores, double alpha) {
    const std::size_t k = topk_count(alpha, scores.size());
    if (k == 0)
        std::cerr << "warning: alpha=" << format_double(alpha) << " with " << scores.size()
                  << " channels selects no channel; fusion disabled\n";
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a].g > scores[b].g; });
    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());
    for (auto& s : scores) s.selected_topk = false;
    for (std::size_t i : chosen) scores[i].selected_topk = true;
    return chosen;
}

std::vector<std::size_t> consistency_filter(const std::vector<std::size_t>& candidates,
                                            const std::vector<double>& stationary_val_loss,
                                            const std::vector<double>& fusion_val_loss, double tau) {
    if (!(tau >= 0.0)) throw ConfigError("consistency tolerance tau must be non-negative");
    if (stationary_val_loss.size() != fusion_val_loss.size())
        throw ShapeError("validation loss vectors differ in length");
    std::vector<std::size_t> kept;
    for (std::size_t i : candidates) {
        if (i >= stationary_val_loss.size()) throw ShapeError("candidate channel out of range");
        if (fusion_val_loss[i] <= stationary_val_loss[i] * (1.0 + tau)) kept.push_back(i);
    }
    return kept;
}

std::vector<std::uint8_t> mask_from_indices(const std::vector<std::size_t>& indices,
                                            std::size_t channels) {
    std::vector<std::uint8_t> mask(channels, 0);
    for (std::size_t i : indices) {
        if (i >= channels) throw ShapeError("mask index out of range");
        mask[i] = 1;
    }
    return mask;
}

std::string channel_scores_csv(const std::vector<ChannelScore>& scores) {
    std::ostringstream out;
    out << "channel,nonstat,sim,g,topk,stationary_val_loss,fusion_val_loss,consistent\n";
    for (const auto& s : scores) {
        out << s.channel << ',' << format_double(s.nonstat) << ',' << format_double(s.sim) << ','
            << format_double(s.g) << ',' << (s.selected_topk ? 1 : 0) << ',';
        if (s.stationary_val_loss) out << format_double(*s.stationary_val_loss);
        out << ',';
        if (s.fusion_val_loss) out << format_double(*s.fusion_val_loss);
        out << ',';
        if (s.consistent) out << (*s.consistent ? 1 : 0);
        out << '\n';
    }
    return out.str();
}

}  // namespace cdfm
