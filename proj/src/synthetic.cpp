#include "cdfm/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "cdfm/error.hpp"
#include "cdfm/format.hpp"
#include "cdfm/rng.hpp"

namespace cdfm {

TimeSeriesDataset make_dataset(Matrix values, std::vector<std::string> names) {
    TimeSeriesDataset ds;
    if (names.empty())
        for (std::size_t c = 0; c < values.cols(); ++c) names.push_back("ch" + std::to_string(c));
    if (names.size() != values.cols()) throw ShapeError("make_dataset: one name per column required");
    ds.channel_names = std::move(names);
    for (std::size_t t = 0; t < values.rows(); ++t) ds.timestamps.push_back(std::to_string(t));
    ds.values = std::move(values);
    return ds;
}

TimeSeriesDataset trend_mix_series(const TrendMixConfig& config) {
    const std::size_t n = config.trend_channels + config.stationary_channels;
    if (n == 0) throw ConfigError("trend mix needs at least one channel");
    Rng rng(config.seed);
    Matrix values(config.length, n);
    std::vector<std::string> names;
    for (std::size_t c = 0; c < config.trend_channels; ++c) {
        names.push_back("trend" + std::to_string(c));
        for (std::size_t t = 0; t < config.length; ++t)
            values(t, c) = config.slope * static_cast<double>(t) + rng.normal(0.0, config.noise_std);
    }
    for (std::size_t k = 0; k < config.stationary_channels; ++k) {
        const std::size_t c = config.trend_channels + k;
        names.push_back("flat" + std::to_string(k));
        double prev = 0.0;
        for (std::size_t t = 0; t < config.length; ++t) {
            prev = config.ar_coef * prev + rng.normal(0.0, config.noise_std);
            values(t, c) = prev;
        }
    }
    return make_dataset(std::move(values), std::move(names));
}

TimeSeriesDataset amplitude_modulated_series(std::size_t length, double period, double depth,
                                             std::uint64_t seed) {
    Rng rng(seed);
    Matrix values(length, 1);
    for (std::size_t t = 0; t < length; ++t) {
        const double a = 1.0 + depth * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period);
        values(t, 0) = a * rng.normal();
    }
    return make_dataset(std::move(values), {"am"});
}

OversmoothingConfig::OversmoothingConfig() {
    train.lookback = 96;
    train.horizon = 96;
    train.max_epochs = 15;
    train.patience = 3;
    train.alpha = 1.0;
    // RLinear-style stationary predictor: one map shared by every channel.
    train.individual_stationary = false;
    train.individual_nonstationary = true;
}

namespace {

double least_squares_slope(std::span<const double> y) {
    const auto n = static_cast<double>(y.size());
    const double t_mean = (n - 1.0) / 2.0;
    double y_mean = 0.0;
    for (double v : y) y_mean += v;
    y_mean /= n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double dt = static_cast<double>(i) - t_mean;
        num += dt * (y[i] - y_mean);
        den += dt * dt;
    }
    return num / den;
}

double std_of(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

/// Metrics over test windows of the channels [first, last), prediction in raw units.
PatternMetrics pattern_metrics(const CdfmState& state, const TimeSeriesDataset& ds, std::size_t first,
                               std::size_t last, double generator_slope) {
    const WindowSet test(ds, Split::test, state.lookback(), state.horizon());
    if (test.empty()) throw DataError("over-smoothing demo: test split admits no window");
    double pred_std = 0.0, true_std = 0.0, slope = 0.0, sq = 0.0;
    std::size_t count = 0;
    std::vector<double> p(state.horizon()), y(state.horizon());
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto r = forward(state, test.history(i));
        const auto truth = test.target(i);
        for (std::size_t c = first; c < last; ++c) {
            for (std::size_t h = 0; h < state.horizon(); ++h) {
                p[h] = destandardize(ds, c, r.y_hat(h, c));
                y[h] = destandardize(ds, c, truth(h, c));
                sq += (r.y_hat(h, c) - truth(h, c)) * (r.y_hat(h, c) - truth(h, c));
            }
            pred_std += std_of(p);
            true_std += std_of(y);
            slope += least_squares_slope(p);
            ++count;
        }
    }
    PatternMetrics m;
    m.std_ratio = pred_std / true_std;
    m.slope = slope / static_cast<double>(count);
    m.slope_rel_error = generator_slope != 0.0 ? std::abs(m.slope - generator_slope) / std::abs(generator_slope) : 0.0;
    m.mse = sq / static_cast<double>(count * state.horizon());
    return m;
}

}  // namespace

OversmoothingReport oversmoothing_demo(const OversmoothingConfig& config) {
    const SplitRatios ratios{0.6, 0.2, 0.2};
    const std::size_t n_trend = config.data.trend_channels;
    if (n_trend == 0 || config.data.stationary_channels == 0)
        throw ConfigError("over-smoothing demo needs both trend and stationary channels");

    OversmoothingReport report;

    TrendMixConfig trend_only = config.data;
    trend_only.stationary_channels = 0;
    const auto trend_ds = split_and_standardize(trend_mix_series(trend_only), ratios);
    TrainConfig stationary_cfg = config.train;
    stationary_cfg.variant = Variant::stationary_only;
    const auto trend_model = train(trend_ds, stationary_cfg);
    report.trend_only_stationary =
        pattern_metrics(trend_model.state, trend_ds, 0, n_trend, config.data.slope);

    const auto mixed_ds = split_and_standardize(trend_mix_series(config.data), ratios);
    const std::size_t n = mixed_ds.channels();
    const auto stationary_model = train(mixed_ds, stationary_cfg);
    TrainConfig cdfm_cfg = config.train;
    cdfm_cfg.variant = Variant::cdfm;
    const auto cdfm_model = train(mixed_ds, cdfm_cfg);
    report.cdfm_mask = cdfm_model.state.mask;

    report.mixed_stationary_trend = pattern_metrics(stationary_model.state, mixed_ds, 0, n_trend, config.data.slope);
    report.mixed_cdfm_trend = pattern_metrics(cdfm_model.state, mixed_ds, 0, n_trend, config.data.slope);
    report.mixed_stationary_flat = pattern_metrics(stationary_model.state, mixed_ds, n_trend, n, 0.0);
    report.mixed_cdfm_flat = pattern_metrics(cdfm_model.state, mixed_ds, n_trend, n, 0.0);

    // One plottable test sample: first trend channel and first stationary channel.
    const WindowSet test(mixed_ds, Split::test, config.train.lookback, config.train.horizon);
    const std::size_t pick = test.size() / 2;
    const auto x = test.history(pick);
    const auto y = test.target(pick);
    const auto rs = forward(stationary_model.state, x);
    const auto rc = forward(cdfm_model.state, x);
    std::ostringstream csv;
    csv << "pattern,step,truth,stationary_pred,cdfm_pred\n";
    for (const std::size_t c : {std::size_t{0}, n_trend}) {
        const std::string pattern = c < n_trend ? "trend" : "stationary";
        for (std::size_t l = 0; l < x.rows(); ++l)
            csv << pattern << ',' << l << ',' << format_double(destandardize(mixed_ds, c, x(l, c))) << ",,\n";
        for (std::size_t h = 0; h < y.rows(); ++h)
            csv << pattern << ',' << x.rows() + h << ','
                << format_double(destandardize(mixed_ds, c, y(h, c))) << ','
                << format_double(destandardize(mixed_ds, c, rs.y_hat(h, c))) << ','
                << format_double(destandardize(mixed_ds, c, rc.y_hat(h, c))) << '\n';
    }
    report.series_csv = csv.str();
    return report;
}

std::string oversmoothing_report_text(const OversmoothingReport& r) {
    std::ostringstream out;
    const auto line = [&](const std::string& key, const PatternMetrics& m) {
        out << key << ".std_ratio=" << format_double(m.std_ratio) << '\n'
            << key << ".slope=" << format_double(m.slope) << '\n'
            << key << ".slope_rel_error=" << format_double(m.slope_rel_error) << '\n'
            << key << ".mse=" << format_double(m.mse) << '\n';
    };
    line("trend_only.stationary.trend", r.trend_only_stationary);
    line("mixed.stationary.trend", r.mixed_stationary_trend);
    line("mixed.cdfm.trend", r.mixed_cdfm_trend);
    line("mixed.stationary.flat", r.mixed_stationary_flat);
    line("mixed.cdfm.flat", r.mixed_cdfm_flat);
    out << "mixed.cdfm.mask=";
    for (std::size_t c = 0; c < r.cdfm_mask.size(); ++c) out << (c ? ";" : "") << int{r.cdfm_mask[c]};
    out << '\n';
    return out.str();
}

}  // namespace cdfm
