#include "cdfm/dlinear.hpp"

#include <algorithm>
#include <cmath>

#include "cdfm/error.hpp"
#include "cdfm/rng.hpp"

namespace cdfm {

void validate_kernel(std::size_t kernel, std::size_t lookback) {
    if (kernel % 2 == 0) throw ConfigError("moving-average kernel must be odd, got " + std::to_string(kernel));
    if (kernel < 3) throw ConfigError("moving-average kernel must be at least 3");
    if (kernel > lookback)
        throw ConfigError("moving-average kernel " + std::to_string(kernel) +
                          " exceeds lookback " + std::to_string(lookback));
}

Decomposition decompose(const Matrix& x, std::size_t kernel) {
    validate_kernel(kernel, x.rows());
    const auto rows = static_cast<std::ptrdiff_t>(x.rows());
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    const double inv_k = 1.0 / static_cast<double>(kernel);
    Decomposition out{Matrix(x.rows(), x.cols()), Matrix(x.rows(), x.cols())};
    for (std::size_t c = 0; c < x.cols(); ++c) {
        for (std::ptrdiff_t l = 0; l < rows; ++l) {
            double sum = 0.0;
            for (std::ptrdiff_t j = l - half; j <= l + half; ++j)
                sum += x(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, rows - 1)), c);
            const auto r = static_cast<std::size_t>(l);
            out.trend(r, c) = sum * inv_k;
            out.seasonal(r, c) = x(r, c) - out.trend(r, c);
        }
    }
    return out;
}

Matrix moving_average_adjoint(const Matrix& grad_trend, std::size_t kernel) {
    const auto rows = static_cast<std::ptrdiff_t>(grad_trend.rows());
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    const double inv_k = 1.0 / static_cast<double>(kernel);
    Matrix out(grad_trend.rows(), grad_trend.cols());
    for (std::size_t c = 0; c < grad_trend.cols(); ++c)
        for (std::ptrdiff_t l = 0; l < rows; ++l) {
            const double g = grad_trend(static_cast<std::size_t>(l), c) * inv_k;
            for (std::ptrdiff_t j = l - half; j <= l + half; ++j)
                out(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, rows - 1)), c) += g;
        }
    return out;
}

DLinearParams DLinearParams::zeros(std::size_t lookback, std::size_t horizon, std::size_t channels,
                                   std::size_t kernel, bool individual) {
    validate_kernel(kernel, lookback);
    if (horizon == 0 || channels == 0) throw ConfigError("horizon and channel count must be positive");
    DLinearParams p;
    p.lookback = lookback;
    p.horizon = horizon;
    p.channels = channels;
    p.kernel = kernel;
    p.individual = individual;
    const std::size_t wc = p.weight_channels();
    p.w_seasonal.assign(wc * horizon * lookback, 0.0);
    p.w_trend.assign(wc * horizon * lookback, 0.0);
    p.b_seasonal.assign(wc * horizon, 0.0);
    p.b_trend.assign(wc * horizon, 0.0);
    return p;
}

DLinearParams DLinearParams::init(std::size_t lookback, std::size_t horizon, std::size_t channels,
                                  std::size_t kernel, bool individual, Rng& rng) {
    auto p = zeros(lookback, horizon, channels, kernel, individual);
    const double bound = 1.0 / static_cast<double>(lookback);
    for (auto& w : p.w_seasonal) w = rng.uniform(-bound, bound);
    for (auto& w : p.w_trend) w = rng.uniform(-bound, bound);
    return p;
}

DLinearParams DLinearParams::zeros_like() const {
    return zeros(lookback, horizon, channels, kernel, individual);
}

std::vector<TensorRef> DLinearParams::tensors(const std::string& prefix) {
    const std::size_t wc = weight_channels();
    return {{prefix + ".w_seasonal", {wc, horizon, lookback}, w_seasonal},
            {prefix + ".b_seasonal", {wc, horizon}, b_seasonal},
            {prefix + ".w_trend", {wc, horizon, lookback}, w_trend},
            {prefix + ".b_trend", {wc, horizon}, b_trend}};
}

std::vector<ConstTensorRef> DLinearParams::tensors(const std::string& prefix) const {
    const std::size_t wc = weight_channels();
    return {{prefix + ".w_seasonal", {wc, horizon, lookback}, w_seasonal},
            {prefix + ".b_seasonal", {wc, horizon}, b_seasonal},
            {prefix + ".w_trend", {wc, horizon, lookback}, w_trend},
            {prefix + ".b_trend", {wc, horizon}, b_trend}};
}

namespace {

void check_input(const DLinearParams& params, const Matrix& x) {
    if (x.rows() != params.lookback || x.cols() != params.channels)
        throw ShapeError("DLinear expects a " + std::to_string(params.lookback) + "x" +
                         std::to_string(params.channels) + " input, got " +
                         std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
}

}  // namespace

Matrix dlinear_forward(const DLinearParams& params, const Matrix& x) {
    check_input(params, x);
    const std::size_t L = params.lookback;
    const std::size_t H = params.horizon;
    const auto parts = decompose(x, params.kernel);
    Matrix out(H, params.channels);
    std::vector<double> s(L), t(L);
    for (std::size_t c = 0; c < params.channels; ++c) {
        for (std::size_t l = 0; l < L; ++l) {
            s[l] = parts.seasonal(l, c);
            t[l] = parts.trend(l, c);
        }
        const std::size_t k = params.slot(c);
        const double* ws = params.w_seasonal.data() + k * H * L;
        const double* wt = params.w_trend.data() + k * H * L;
        for (std::size_t h = 0; h < H; ++h) {
            double acc_s = params.b_seasonal[k * H + h];
            double acc_t = params.b_trend[k * H + h];
            const double* ws_row = ws + h * L;
            const double* wt_row = wt + h * L;
            for (std::size_t l = 0; l < L; ++l) {
                acc_s += ws_row[l] * s[l];
                acc_t += wt_row[l] * t[l];
            }
            out(h, c) = acc_s + acc_t;
        }
    }
    return out;
}

Matrix dlinear_backward_accumulate(const DLinearParams& params, const Matrix& x,
                                   const Matrix& upstream, DLinearParams& grads,
                                   bool want_input_grad) {
    check_input(params, x);
    if (upstream.rows() != params.horizon || upstream.cols() != params.channels)
        throw ShapeError("DLinear upstream gradient must be " + std::to_string(params.horizon) +
                         "x" + std::to_string(params.channels));
    if (grads.w_seasonal.size() != params.w_seasonal.size() ||
        grads.b_seasonal.size() != params.b_seasonal.size())
        throw ShapeError("DLinear gradient accumulator has the wrong structure");

    const std::size_t L = params.lookback;
    const std::size_t H = params.horizon;
    const auto parts = decompose(x, params.kernel);
    Matrix grad_seasonal, grad_trend;
    if (want_input_grad) {
        grad_seasonal = Matrix(L, params.channels);
        grad_trend = Matrix(L, params.channels);
    }
    std::vector<double> s(L), t(L);
    for (std::size_t c = 0; c < params.channels; ++c) {
        for (std::size_t l = 0; l < L; ++l) {
            s[l] = parts.seasonal(l, c);
            t[l] = parts.trend(l, c);
        }
        const std::size_t k = params.slot(c);
        double* gws = grads.w_seasonal.data() + k * H * L;
        double* gwt = grads.w_trend.data() + k * H * L;
        const double* ws = params.w_seasonal.data() + k * H * L;
        const double* wt = params.w_trend.data() + k * H * L;
        for (std::size_t h = 0; h < H; ++h) {
            const double g = upstream(h, c);
            if (g == 0.0) continue;
            grads.b_seasonal[k * H + h] += g;
            grads.b_trend[k * H + h] += g;
            double* gws_row = gws + h * L;
            double* gwt_row = gwt + h * L;
            for (std::size_t l = 0; l < L; ++l) {
                gws_row[l] += g * s[l];
                gwt_row[l] += g * t[l];
            }
            if (want_input_grad) {
                const double* ws_row = ws + h * L;
                const double* wt_row = wt + h * L;
                for (std::size_t l = 0; l < L; ++l) {
                    grad_seasonal(l, c) += g * ws_row[l];
                    grad_trend(l, c) += g * wt_row[l];
                }
            }
        }
    }
    if (!want_input_grad) return {};

    // seasonal = (I - A) x, trend = A x  =>  dx = g_s + A^T (g_t - g_s)
    Matrix diff(L, params.channels);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t c = 0; c < params.channels; ++c)
            diff(l, c) = grad_trend(l, c) - grad_seasonal(l, c);
    Matrix dx = moving_average_adjoint(diff, params.kernel);
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t c = 0; c < params.channels; ++c) dx(l, c) += grad_seasonal(l, c);
    return dx;
}

DLinearGrads dlinear_backward(const DLinearParams& params, const Matrix& x, const Matrix& upstream) {
    DLinearGrads out{params.zeros_like(), {}};
    out.x = dlinear_backward_accumulate(params, x, upstream, out.params, true);
    return out;
}

DenseLayer DenseLayer::zeros(std::size_t in, std::size_t out) {
    if (in == 0 || out == 0) throw ConfigError("dense layer dimensions must be positive");
    return {in, out, std::vector<double>(in * out, 0.0), std::vector<double>(out, 0.0)};
}

DenseLayer DenseLayer::init(std::size_t in, std::size_t out, Rng& rng) {
    auto layer = zeros(in, out);
    const double bound = 1.0 / static_cast<double>(in);
    for (auto& w : layer.weight) w = rng.uniform(-bound, bound);
    return layer;
}

std::vector<double> DenseLayer::forward(std::span<const double> v) const {
    if (v.size() != in)
        throw ShapeError("dense layer expects " + std::to_string(in) + " inputs, got " +
                         std::to_string(v.size()));
    std::vector<double> y(bias);
    for (std::size_t o = 0; o < out; ++o)
        for (std::size_t i = 0; i < in; ++i) y[o] += weight[o * in + i] * v[i];
    return y;
}

std::vector<TensorRef> DenseLayer::tensors(const std::string& prefix) {
    return {{prefix + ".weight", {out, in}, weight}, {prefix + ".bias", {out}, bias}};
}

std::vector<ConstTensorRef> DenseLayer::tensors(const std::string& prefix) const {
    return {{prefix + ".weight", {out, in}, weight}, {prefix + ".bias", {out}, bias}};
}

void adam_step(AdamState& state, const std::vector<TensorRef>& params,
               const std::vector<ConstTensorRef>& grads) {
    if (params.size() != grads.size())
        throw ShapeError("adam_step: " + std::to_string(params.size()) + " tensors but " +
                         std::to_string(grads.size()) + " gradients");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].values.size() != grads[i].values.size())
            throw ShapeError("adam_step: gradient for '" + params[i].name + "' has the wrong size");
        for (double g : grads[i].values)
            if (!std::isfinite(g))
                throw TrainingError("non-finite gradient in parameter '" + params[i].name + "'");
    }
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(p.values.size(), 0.0);
            state.v.emplace_back(p.values.size(), 0.0);
        }
    } else if (state.m.size() != params.size()) {
        throw ShapeError("adam_step: optimizer state tracks a different parameter set");
    }

    ++state.step;
    const auto& cfg = state.config;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& m = state.m[i];
        auto& v = state.v[i];
        if (m.size() != params[i].values.size())
            throw ShapeError("adam_step: moment shape mismatch for '" + params[i].name + "'");
        const auto g = grads[i].values;
        auto p = params[i].values;
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            const double m_hat = m[j] / correction1;
            const double v_hat = v[j] / correction2;
            p[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

}  // namespace cdfm
