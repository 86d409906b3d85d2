#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cdfm/error.hpp"
#include "cdfm/synthetic.hpp"
#include "cdfm/train.hpp"
#include "test_util.hpp"

using namespace cdfm;

namespace {

TimeSeriesDataset seasonal_dataset(std::size_t rows, std::size_t channels, double noise, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, channels);
    for (std::size_t t = 0; t < rows; ++t)
        for (std::size_t c = 0; c < channels; ++c)
            m(t, c) = std::sin(2.0 * std::numbers::pi * double(t) / (12.0 + 5.0 * double(c))) +
                      0.3 * std::cos(2.0 * std::numbers::pi * double(t) / 7.0) + noise * rng.normal();
    return split_and_standardize(make_dataset(std::move(m)), SplitRatios{});
}

TrainConfig small_config() {
    TrainConfig c;
    c.lookback = 24;
    c.horizon = 8;
    c.kernel = 5;
    c.max_epochs = 6;
    c.batch_size = 16;
    c.seed = 11;
    return c;
}

/// Non-stationary-only state that extrapolates a straight line exactly:
/// y[h] = (h + 2) x[L-1] - (h + 1) x[L-2].
CdfmState line_extrapolator(std::size_t L, std::size_t H, std::size_t N) {
    Rng rng(1);
    auto s = CdfmState::init(ModelShape{L, H, N, 3, true, true}, rng);
    s.variant = Variant::nonstationary_only;
    auto& p = s.params.nonstationary;
    std::fill(p.w_seasonal.begin(), p.w_seasonal.end(), 0.0);
    std::fill(p.w_trend.begin(), p.w_trend.end(), 0.0);
    // seasonal + trend = x, so identical maps on both parts act on x
    for (std::size_t c = 0; c < N; ++c)
        for (std::size_t h = 0; h < H; ++h) {
            const std::size_t row = (c * H + h) * L;
            for (auto* w : {&p.w_seasonal, &p.w_trend}) {
                (*w)[row + L - 1] = double(h + 2);
                (*w)[row + L - 2] = -double(h + 1);
            }
        }
    return s;
}

TimeSeriesDataset line_dataset(std::size_t rows) {
    Matrix m(rows, 2);
    for (std::size_t t = 0; t < rows; ++t) {
        m(t, 0) = 0.5 * double(t);
        m(t, 1) = 3.0 - 0.25 * double(t);
    }
    return split_and_standardize(make_dataset(std::move(m)), SplitRatios{});
}

/// Reorders every per-channel quantity of an individual-weights state.
CdfmState permute_state(const CdfmState& s, const std::vector<std::size_t>& perm) {
    CdfmState out = s;
    const auto move_slots = [&](const DLinearParams& src, DLinearParams& dst) {
        const std::size_t H = src.horizon, L = src.lookback;
        for (std::size_t c = 0; c < perm.size(); ++c) {
            const std::size_t from = perm[c];
            std::copy_n(src.w_seasonal.begin() + from * H * L, H * L, dst.w_seasonal.begin() + c * H * L);
            std::copy_n(src.w_trend.begin() + from * H * L, H * L, dst.w_trend.begin() + c * H * L);
            std::copy_n(src.b_seasonal.begin() + from * H, H, dst.b_seasonal.begin() + c * H);
            std::copy_n(src.b_trend.begin() + from * H, H, dst.b_trend.begin() + c * H);
        }
    };
    move_slots(s.params.stationary, out.params.stationary);
    move_slots(s.params.nonstationary, out.params.nonstationary);
    for (std::size_t c = 0; c < perm.size(); ++c) {
        out.params.lambda[c] = s.params.lambda[perm[c]];
        out.mask[c] = s.mask[perm[c]];
    }
    return out;
}

}  // namespace

TEST_CASE("evaluate: exact predictor scores zero, shifted predictor scores one") {
    const auto ds = line_dataset(200);
    auto s = line_extrapolator(8, 4, 2);
    const auto exact = evaluate(s, ds, Split::test);
    CHECK(exact.mse < 1e-20);
    CHECK(exact.mae < 1e-10);
    CHECK(exact.n_samples == 40 - 4 + 1);

    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t h = 0; h < 4; ++h) s.params.nonstationary.b_seasonal[c * 4 + h] = 1.0;
    const auto shifted = evaluate(s, ds, Split::test);
    CHECK(shifted.mse == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(shifted.mae == doctest::Approx(1.0).epsilon(1e-9));
    for (double v : shifted.per_channel_mse) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("evaluate rejects a model for another channel count") {
    const auto ds = line_dataset(200);
    CHECK_THROWS_AS(evaluate(line_extrapolator(8, 4, 3), ds, Split::test), ShapeError);
}

TEST_CASE("repeat baseline") {
    auto ds = make_dataset(Matrix(100, 2, 4.0));
    ds.split = SplitIndices{60, 80};
    const auto r = repeat_baseline(ds, 10, 5);
    CHECK(r.mse == 0.0);
    CHECK(r.mae == 0.0);
    CHECK(r.n_samples == 20 - 5 + 1);

    // line with slope 1: horizon step h is off by h + 1
    Matrix m(100, 1);
    for (std::size_t t = 0; t < 100; ++t) m(t, 0) = double(t);
    auto line = make_dataset(std::move(m));
    line.split = SplitIndices{60, 80};
    const auto l = repeat_baseline(line, 10, 3);
    CHECK(l.mae == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(l.mse == doctest::Approx(14.0 / 3.0).epsilon(1e-12));
    CHECK(repeat_baseline(line, 10, 3) == l);
    CHECK_THROWS_AS(repeat_baseline(line, 10, 30), DataError);
}

TEST_CASE("validation MSE drops over the first epochs on predictable data") {
    const auto ds = seasonal_dataset(900, 3, 0.05, 3);
    auto cfg = small_config();
    cfg.max_epochs = 4;
    cfg.patience = 10;
    const auto r = train(ds, cfg);
    REQUIRE(r.log.epochs.size() == 4);
    for (std::size_t e = 1; e < 4; ++e) CHECK(r.log.epochs[e].val_mse < r.log.epochs[e - 1].val_mse);
    const auto base = repeat_baseline(ds, cfg.lookback, cfg.horizon, Split::val);
    CHECK(r.log.best_val_mse < base.mse);
}

TEST_CASE("patience 0 stops at the first epoch that does not improve") {
    const auto ds = seasonal_dataset(600, 2, 1.0, 4);
    auto cfg = small_config();
    cfg.lr = 0.05;
    cfg.patience = 0;
    cfg.max_epochs = 40;
    const auto r = train(ds, cfg);
    REQUIRE(r.log.stopped_early);
    const auto& e = r.log.epochs;
    double best = e[0].val_mse;
    for (std::size_t i = 1; i + 1 < e.size(); ++i) {
        CHECK(e[i].val_mse < best);
        best = e[i].val_mse;
    }
    CHECK(e.back().val_mse >= best);
    CHECK(r.log.best_epoch == e.size() - 1);
}

TEST_CASE("early stopping restores the best epoch") {
    const auto ds = seasonal_dataset(600, 2, 1.0, 5);
    auto cfg = small_config();
    cfg.lr = 0.05;
    cfg.patience = 2;
    cfg.max_epochs = 40;
    cfg.tau = 1e9;  // keep every candidate so the mask is the training mask
    cfg.alpha = 1.0;
    const auto r = train(ds, cfg);
    double min_val = r.log.epochs[0].val_mse;
    for (const auto& e : r.log.epochs) min_val = std::min(min_val, e.val_mse);
    CHECK(r.log.best_val_mse == min_val);
    CHECK(r.log.epochs[r.log.best_epoch - 1].val_mse == min_val);
    CHECK(evaluate(r.state, ds, Split::val).mse == min_val);
}

TEST_CASE("training is deterministic for a fixed seed") {
    const auto ds = seasonal_dataset(600, 3, 0.2, 6);
    const auto cfg = small_config();
    const auto a = train(ds, cfg);
    const auto b = train(ds, cfg);
    CHECK(train_log_csv(a.log) == train_log_csv(b.log));
    CHECK(a.state == b.state);
    auto other = cfg;
    other.seed = 12;
    CHECK_FALSE(train(ds, other).state == a.state);
}

TEST_CASE("train fills every score and validates its config") {
    const auto ds = seasonal_dataset(600, 4, 0.2, 7);
    auto cfg = small_config();
    cfg.max_epochs = 2;
    cfg.alpha = 0.5;
    const auto r = train(ds, cfg);
    std::size_t topk = 0;
    for (std::size_t c = 0; c < 4; ++c) {
        const auto& s = r.scores[c];
        CHECK(s.stationary_val_loss.has_value());
        CHECK(s.fusion_val_loss.has_value());
        REQUIRE(s.consistent.has_value());
        topk += s.selected_topk;
        CHECK(r.state.mask[c] == (s.selected_topk && *s.consistent ? 1 : 0));
    }
    CHECK(topk == 2);
    CHECK(train_log_csv(r.log).rfind("epoch,train_mse,val_mse\n1,", 0) == 0);

    auto bad = cfg;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(train(ds, bad), ConfigError);
    bad = cfg;
    bad.kernel = 4;
    CHECK_THROWS_AS(train(ds, bad), ConfigError);
    CHECK_THROWS_AS(train(make_dataset(Matrix(100, 2, 1.0)), cfg), DataError);
}

TEST_CASE("divergence is reported") {
    const auto ds = seasonal_dataset(600, 2, 0.2, 8);
    auto cfg = small_config();
    cfg.lr = 1e300;
    CHECK_THROWS_AS(train(ds, cfg), TrainingError);
}

TEST_CASE("mask of zeros reproduces the stationary test MSE bit for bit") {
    const auto ds = seasonal_dataset(600, 3, 0.2, 9);
    auto cfg = small_config();
    cfg.alpha = 1.0;
    cfg.tau = 1e9;
    auto r = train(ds, cfg);
    r.state.mask.assign(3, 0);
    const auto fused = evaluate(r.state, ds, Split::test);
    const auto stationary = evaluate(r.state, ds, Split::test, Output::stationary);
    CHECK(fused.mse == stationary.mse);
    CHECK(fused.per_channel_mse == stationary.per_channel_mse);
}

TEST_CASE("metrics are invariant to a consistent channel permutation") {
    const auto ds = seasonal_dataset(600, 3, 0.2, 10);
    auto cfg = small_config();
    cfg.alpha = 1.0;
    cfg.max_epochs = 2;
    const auto r = train(ds, cfg);
    const std::vector<std::size_t> perm{2, 0, 1};
    auto pds = ds;
    for (std::size_t t = 0; t < ds.length(); ++t)
        for (std::size_t c = 0; c < 3; ++c) pds.values(t, c) = ds.values(t, perm[c]);
    const auto base = evaluate(r.state, ds, Split::test);
    const auto moved = evaluate(permute_state(r.state, perm), pds, Split::test);
    CHECK(moved.mse == doctest::Approx(base.mse).epsilon(1e-12));
    CHECK(moved.mae == doctest::Approx(base.mae).epsilon(1e-12));
    for (std::size_t c = 0; c < 3; ++c) CHECK(moved.per_channel_mse[c] == base.per_channel_mse[perm[c]]);
}

TEST_CASE("eval records") {
    EvalResult r{0.5, 0.25, {0.125, 1.5}, 7};
    CHECK(eval_csv_header() == "mse,mae,n_samples,per_channel_mse");
    CHECK(eval_csv_row(r) == "0.5,0.25,7,0.125;1.5");
    CHECK(eval_key_values(r) == "mse=0.5\nmae=0.25\nn_samples=7\nper_channel_mse=0.125;1.5\n");
}

TEST_CASE("over-smoothing demonstration") {
    const auto report = oversmoothing_demo(OversmoothingConfig{});
    CHECK(report.trend_only_stationary.slope_rel_error < 0.10);
    CHECK(report.mixed_stationary_trend.std_ratio < 0.8);
    CHECK(report.mixed_cdfm_trend.std_ratio > report.mixed_stationary_trend.std_ratio);
    CHECK(report.cdfm_mask.size() == 7);
    CHECK(report.series_csv.find('\n') != std::string::npos);
    CHECK(oversmoothing_report_text(report).find("std_ratio") != std::string::npos);
}
