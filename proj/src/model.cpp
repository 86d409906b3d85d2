#include "cdfm/model.hpp"

#include <algorithm>
#include <cmath>

#include "cdfm/error.hpp"
#include "cdfm/rng.hpp"

namespace cdfm {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::cdfm: return "cdfm";
        case Variant::stationary_only: return "stationary";
        case Variant::nonstationary_only: return "nonstationary";
    }
    return "?";
}

Variant parse_variant(const std::string& name) {
    if (name == "cdfm") return Variant::cdfm;
    if (name == "stationary") return Variant::stationary_only;
    if (name == "nonstationary") return Variant::nonstationary_only;
    throw ConfigError("unknown variant '" + name + "' (expected cdfm, stationary or nonstationary)");
}

CdfmParams CdfmParams::zeros_like() const {
    return {stationary.zeros_like(), nonstationary.zeros_like(), sigma_predictor.zeros_like(),
            std::vector<double>(lambda.size(), 0.0)};
}

std::vector<TensorRef> CdfmParams::tensors() {
    auto out = stationary.tensors("stationary");
    for (auto& t : nonstationary.tensors("nonstationary")) out.push_back(std::move(t));
    for (auto& t : sigma_predictor.tensors("sigma_predictor")) out.push_back(std::move(t));
    out.push_back({"lambda", {lambda.size()}, lambda});
    return out;
}

std::vector<ConstTensorRef> CdfmParams::tensors() const {
    auto out = stationary.tensors("stationary");
    for (auto& t : nonstationary.tensors("nonstationary")) out.push_back(std::move(t));
    for (auto& t : sigma_predictor.tensors("sigma_predictor")) out.push_back(std::move(t));
    out.push_back({"lambda", {lambda.size()}, lambda});
    return out;
}

CdfmState CdfmState::init(const ModelShape& shape, Rng& rng, double lambda_init) {
    CdfmState state;
    state.params.stationary = DLinearParams::init(shape.lookback, shape.horizon, shape.channels,
                                                  shape.kernel, shape.individual_stationary, rng);
    state.params.nonstationary = DLinearParams::init(
        shape.lookback, shape.horizon, shape.channels, shape.kernel, shape.individual_nonstationary, rng);
    state.params.sigma_predictor = DenseLayer::init(shape.lookback + 1, 1, rng);
    state.params.lambda.assign(shape.channels, lambda_init);
    state.mask.assign(shape.channels, 1);
    return state;
}

double predict_horizon_sigma(const DenseLayer& layer, std::span<const double> x_col, double sigma_x) {
    if (layer.out != 1 || layer.in != x_col.size() + 1)
        throw ShapeError("sigma predictor expects " + std::to_string(layer.in) +
                         " inputs and one output, window has " + std::to_string(x_col.size()) + " rows");
    double acc = layer.bias[0] + layer.weight[0] * sigma_x;
    for (std::size_t l = 0; l < x_col.size(); ++l) acc += layer.weight[l + 1] * x_col[l];
    return acc;
}

ForwardResult forward(const CdfmState& state, const Matrix& x) {
    const std::size_t n = state.channels();
    if (x.rows() != state.lookback() || x.cols() != n)
        throw ShapeError("model expects a " + std::to_string(state.lookback()) + "x" +
                         std::to_string(n) + " window, got " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()));
    if (state.mask.size() != n || state.params.lambda.size() != n)
        throw ShapeError("mask/lambda length does not match the channel count");

    ForwardResult r;
    r.normalized = normalize(x, state.epsilon);
    r.y_s_norm = dlinear_forward(state.params.stationary, r.normalized.x);
    r.y_s = denormalize(r.y_s_norm, r.normalized.stats);
    r.y_ns = dlinear_forward(state.params.nonstationary, x);
    r.sigma_x = r.normalized.stats.sigma;

    const std::size_t H = state.horizon();
    r.sigma_hat.assign(n, 0.0);
    r.w_raw.assign(n, 0.0);
    r.w.assign(n, 0.0);
    std::vector<double> column(state.lookback());
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t l = 0; l < column.size(); ++l) column[l] = x(l, c);
        r.sigma_hat[c] = predict_horizon_sigma(state.params.sigma_predictor, column, r.sigma_x[c]);
        r.w_raw[c] = state.params.lambda[c] * (r.sigma_x[c] + r.sigma_hat[c]);
        switch (state.variant) {
            case Variant::cdfm:
                r.w[c] = state.mask[c] ? std::clamp(r.w_raw[c], 0.0, 1.0) : 0.0;
                break;
            case Variant::stationary_only: r.w[c] = 0.0; break;
            case Variant::nonstationary_only: r.w[c] = 1.0; break;
        }
    }

    r.y_hat = Matrix(H, n);
    for (std::size_t c = 0; c < n; ++c) {
        const double w = r.w[c];
        for (std::size_t h = 0; h < H; ++h) {
            if (w == 0.0)
                r.y_hat(h, c) = r.y_s(h, c);
            else if (w == 1.0)
                r.y_hat(h, c) = r.y_ns(h, c);
            else
                r.y_hat(h, c) = w * r.y_ns(h, c) + (1.0 - w) * r.y_s(h, c);
        }
    }
    return r;
}

namespace {

void check_target(const CdfmState& state, const Matrix& y_true) {
    if (y_true.rows() != state.horizon() || y_true.cols() != state.channels())
        throw ShapeError("target must be " + std::to_string(state.horizon()) + "x" +
                         std::to_string(state.channels()) + ", got " + std::to_string(y_true.rows()) +
                         "x" + std::to_string(y_true.cols()));
}

}  // namespace

double fused_loss(const CdfmState& state, const Matrix& x, const Matrix& y_true) {
    check_target(state, y_true);
    const auto r = forward(state, x);
    double sum = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double d = r.y_hat.data()[i] - y_true.data()[i];
        sum += d * d;
    }
    return sum / static_cast<double>(y_true.size());
}

double backward_accumulate(const CdfmState& state, const Matrix& x, const Matrix& y_true,
                           double scale, CdfmParams& grads) {
    check_target(state, y_true);
    const auto r = forward(state, x);
    const std::size_t H = state.horizon();
    const std::size_t n = state.channels();
    const double count = static_cast<double>(H * n);

    Matrix g_hat(H, n);
    double loss = 0.0;
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t c = 0; c < n; ++c) {
            const double d = r.y_hat(h, c) - y_true(h, c);
            loss += d * d;
            g_hat(h, c) = 2.0 * d / count * scale;
        }
    loss /= count;
    if (!std::isfinite(loss)) throw TrainingError("non-finite loss in forward pass");

    Matrix g_ns(H, n), g_s_norm(H, n);
    for (std::size_t c = 0; c < n; ++c) {
        const double w = r.w[c];
        const double sigma = r.normalized.stats.sigma[c];
        double g_w = 0.0;
        for (std::size_t h = 0; h < H; ++h) {
            const double g = g_hat(h, c);
            g_ns(h, c) = w * g;
            // y_s = sigma * y_s_norm + mu, statistics held constant
            g_s_norm(h, c) = (1.0 - w) * g * sigma;
            g_w += g * (r.y_ns(h, c) - r.y_s(h, c));
        }
        const bool fusing = state.variant == Variant::cdfm && state.mask[c] != 0;
        const double z = r.w_raw[c];
        if (!fusing || !(z > 0.0 && z < 1.0)) continue;  // clamp is flat outside (0, 1)

        grads.lambda[c] += g_w * (r.sigma_x[c] + r.sigma_hat[c]);
        const double g_sigma_hat = g_w * state.params.lambda[c];
        auto& sp = grads.sigma_predictor;
        sp.bias[0] += g_sigma_hat;
        sp.weight[0] += g_sigma_hat * r.sigma_x[c];
        for (std::size_t l = 0; l < state.lookback(); ++l) sp.weight[l + 1] += g_sigma_hat * x(l, c);
    }

    if (state.variant != Variant::stationary_only)
        dlinear_backward_accumulate(state.params.nonstationary, x, g_ns, grads.nonstationary, false);
    if (state.variant != Variant::nonstationary_only)
        dlinear_backward_accumulate(state.params.stationary, r.normalized.x, g_s_norm,
                                    grads.stationary, false);
    return loss;
}

BackwardResult backward(const CdfmState& state, const Matrix& x, const Matrix& y_true) {
    BackwardResult out{0.0, state.params.zeros_like()};
    out.loss = backward_accumulate(state, x, y_true, 1.0, out.grads);
    for (const auto& t : std::as_const(out.grads).tensors())
        for (double g : t.values)
            if (!std::isfinite(g)) throw TrainingError("non-finite gradient in '" + t.name + "'");
    return out;
}

}  // namespace cdfm
