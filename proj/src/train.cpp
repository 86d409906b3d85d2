#include "cdfm/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "cdfm/error.hpp"
#include "cdfm/format.hpp"
#include "cdfm/rng.hpp"

namespace cdfm {

void TrainConfig::validate() const {
    if (lookback < 2 || horizon == 0) throw ConfigError("lookback must be >= 2 and horizon > 0");
    validate_kernel(kernel, lookback);
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (max_epochs == 0) throw ConfigError("epoch count must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
    if (!(tau >= 0.0)) throw ConfigError("tau must be non-negative");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

namespace {

struct Accumulator {
    double sq = 0.0;
    double abs = 0.0;
    std::vector<double> per_channel;
    std::size_t samples = 0;

    explicit Accumulator(std::size_t n) : per_channel(n, 0.0) {}

    void add(const Matrix& pred, const Matrix& truth) {
        for (std::size_t h = 0; h < pred.rows(); ++h)
            for (std::size_t c = 0; c < pred.cols(); ++c) {
                const double d = pred(h, c) - truth(h, c);
                sq += d * d;
                abs += std::abs(d);
                per_channel[c] += d * d;
            }
        ++samples;
    }

    EvalResult finish(std::size_t horizon) const {
        EvalResult r;
        r.n_samples = samples;
        const double per_ch = static_cast<double>(samples * horizon);
        const double total = per_ch * static_cast<double>(per_channel.size());
        r.mse = sq / total;
        r.mae = abs / total;
        r.per_channel_mse.resize(per_channel.size());
        for (std::size_t c = 0; c < per_channel.size(); ++c) r.per_channel_mse[c] = per_channel[c] / per_ch;
        return r;
    }
};

void check_state_matches(const CdfmState& state, const TimeSeriesDataset& ds) {
    if (state.channels() != ds.channels())
        throw ShapeError("model has " + std::to_string(state.channels()) + " channels, dataset has " +
                         std::to_string(ds.channels()));
}

/// Validation MSE of y_s alone and of the fused output, per channel, in one pass.
std::pair<std::vector<double>, std::vector<double>> per_channel_val_losses(const CdfmState& state,
                                                                           const TimeSeriesDataset& ds) {
    const WindowSet val(ds, Split::val, state.lookback(), state.horizon());
    if (val.empty()) throw DataError("validation split admits no window");
    Accumulator stationary(ds.channels()), fused(ds.channels());
    for (std::size_t i = 0; i < val.size(); ++i) {
        const auto y = val.target(i);
        const auto r = forward(state, val.history(i));
        stationary.add(r.y_s, y);
        fused.add(r.y_hat, y);
    }
    return {stationary.finish(state.horizon()).per_channel_mse, fused.finish(state.horizon()).per_channel_mse};
}

}  // namespace

EvalResult evaluate(const CdfmState& state, const TimeSeriesDataset& ds, Split split, Output output) {
    check_state_matches(state, ds);
    const WindowSet set(ds, split, state.lookback(), state.horizon());
    if (set.empty()) throw DataError("split '" + to_string(split) + "' admits no evaluation window");
    Accumulator acc(ds.channels());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto r = forward(state, set.history(i));
        const Matrix& pred = output == Output::fused        ? r.y_hat
                             : output == Output::stationary ? r.y_s
                                                            : r.y_ns;
        acc.add(pred, set.target(i));
    }
    return acc.finish(state.horizon());
}

EvalResult repeat_baseline(const TimeSeriesDataset& ds, std::size_t lookback, std::size_t horizon,
                           Split split) {
    const WindowSet set(ds, split, lookback, horizon);
    if (set.empty()) throw DataError("split '" + to_string(split) + "' admits no evaluation window");
    Accumulator acc(ds.channels());
    Matrix pred(horizon, ds.channels());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const std::size_t last = set.origin(i) + lookback - 1;
        for (std::size_t h = 0; h < horizon; ++h)
            for (std::size_t c = 0; c < ds.channels(); ++c) pred(h, c) = ds.values(last, c);
        acc.add(pred, set.target(i));
    }
    return acc.finish(horizon);
}

TrainResult train(const TimeSeriesDataset& ds, const TrainConfig& config) {
    config.validate();
    if (!ds.split) throw DataError("dataset must be split and standardized before training");
    const std::size_t n = ds.channels();
    const WindowSet train_set(ds, Split::train, config.lookback, config.horizon);
    if (train_set.empty()) throw DataError("training split admits no window");

    TrainResult result;
    result.scores = channel_scores(ds, config.lookback, config.horizon, config.rho);
    const auto candidates = select_topk(result.scores, config.alpha);

    Rng rng(config.seed);
    ModelShape shape{config.lookback, config.horizon, n, config.kernel, config.individual_stationary,
                     config.individual_nonstationary};
    CdfmState state = CdfmState::init(shape, rng, config.lambda_init);
    state.alpha = config.alpha;
    state.rho = config.rho;
    state.epsilon = config.epsilon;
    state.variant = config.variant;
    switch (config.variant) {
        case Variant::cdfm: state.mask = mask_from_indices(candidates, n); break;
        case Variant::stationary_only: state.mask.assign(n, 0); break;
        case Variant::nonstationary_only: state.mask.assign(n, 1); break;
    }

    AdamState adam;
    adam.config.lr = config.lr;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    CdfmParams best = state.params;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_improvement = 0;
    const auto started = std::chrono::steady_clock::now();
    CdfmParams grads = state.params.zeros_like();

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const double scale = 1.0 / static_cast<double>(stop - start);
            for (auto& t : grads.tensors()) std::fill(t.values.begin(), t.values.end(), 0.0);
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t s = order[b];
                loss_sum += backward_accumulate(state, train_set.history(s), train_set.target(s), scale, grads);
            }
            adam_step(adam, state.params.tensors(), std::as_const(grads).tensors());
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_mse = loss_sum / static_cast<double>(order.size());
        rec.val_mse = evaluate(state, ds, Split::val).mse;
        rec.elapsed_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.log.epochs.push_back(rec);
        if (!std::isfinite(rec.val_mse))
            throw TrainingError("validation loss diverged at epoch " + std::to_string(epoch));

        if (rec.val_mse < best_val) {
            best_val = rec.val_mse;
            best = state.params;
            result.log.best_epoch = epoch;
            since_improvement = 0;
        } else if (++since_improvement >= std::max<std::size_t>(config.patience, 1)) {
            result.log.stopped_early = epoch < config.max_epochs;
            break;
        }
    }
    state.params = std::move(best);
    result.log.best_val_mse = best_val;

    // Post-hoc distribution-consistency check on the validation split.
    const auto [stationary_loss, fusion_loss] = per_channel_val_losses(state, ds);
    for (std::size_t c = 0; c < n; ++c) {
        result.scores[c].stationary_val_loss = stationary_loss[c];
        result.scores[c].fusion_val_loss = fusion_loss[c];
    }
    const auto all_channels = [&] {
        std::vector<std::size_t> v(n);
        std::iota(v.begin(), v.end(), std::size_t{0});
        return v;
    }();
    const auto consistent = consistency_filter(all_channels, stationary_loss, fusion_loss, config.tau);
    const auto consistent_mask = mask_from_indices(consistent, n);
    for (std::size_t c = 0; c < n; ++c) result.scores[c].consistent = consistent_mask[c] != 0;
    if (config.variant == Variant::cdfm)
        state.mask = mask_from_indices(consistency_filter(candidates, stationary_loss, fusion_loss, config.tau), n);

    result.state = std::move(state);
    return result;
}

std::string train_log_csv(const TrainLog& log) {
    std::ostringstream out;
    out << "epoch,train_mse,val_mse\n";
    for (const auto& e : log.epochs)
        out << e.epoch << ',' << format_double(e.train_mse) << ',' << format_double(e.val_mse) << '\n';
    return out.str();
}

std::string eval_key_values(const EvalResult& r) {
    std::ostringstream out;
    out << "mse=" << format_double(r.mse) << "\nmae=" << format_double(r.mae)
        << "\nn_samples=" << r.n_samples << "\nper_channel_mse=";
    for (std::size_t c = 0; c < r.per_channel_mse.size(); ++c)
        out << (c ? ";" : "") << format_double(r.per_channel_mse[c]);
    out << '\n';
    return out.str();
}

std::string eval_csv_header() { return "mse,mae,n_samples,per_channel_mse"; }

std::string eval_csv_row(const EvalResult& r) {
    std::ostringstream out;
    out << format_double(r.mse) << ',' << format_double(r.mae) << ',' << r.n_samples << ',';
    for (std::size_t c = 0; c < r.per_channel_mse.size(); ++c)
        out << (c ? ";" : "") << format_double(r.per_channel_mse[c]);
    return out.str();
}

}  // namespace cdfm
