#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cdfm/matrix.hpp"

namespace cdfm {

class Rng;

/// Named view of one parameter tensor, row-major.
struct TensorRef {
    std::string name;
    std::vector<std::size_t> shape;
    std::span<double> values;
};

struct ConstTensorRef {
    std::string name;
    std::vector<std::size_t> shape;
    std::span<const double> values;
};

struct Decomposition {
    Matrix trend;
    Matrix seasonal;
};

/// Centered moving average with edge replication; seasonal = x - trend.
Decomposition decompose(const Matrix& x, std::size_t kernel);

/// Adjoint of the moving-average operator applied to a trend gradient.
Matrix moving_average_adjoint(const Matrix& grad_trend, std::size_t kernel);

void validate_kernel(std::size_t kernel, std::size_t lookback);

/// DLinear weights: seasonal and trend L -> H maps per channel.
///
/// With `individual` each of the N channels owns its maps (weight_channels() == N);
/// otherwise a single map is shared by all channels.
struct DLinearParams {
    std::size_t lookback = 0;
    std::size_t horizon = 0;
    std::size_t channels = 0;
    std::size_t kernel = 25;
    bool individual = true;

    std::vector<double> w_seasonal;  ///< weight_channels x H x L
    std::vector<double> b_seasonal;  ///< weight_channels x H
    std::vector<double> w_trend;
    std::vector<double> b_trend;

    static DLinearParams zeros(std::size_t lookback, std::size_t horizon, std::size_t channels,
                               std::size_t kernel, bool individual = true);

    /// Weights uniform in [-1/L, 1/L], biases zero.
    static DLinearParams init(std::size_t lookback, std::size_t horizon, std::size_t channels,
                              std::size_t kernel, bool individual, Rng& rng);

    std::size_t weight_channels() const noexcept { return individual ? channels : 1; }
    std::size_t slot(std::size_t channel) const noexcept { return individual ? channel : 0; }

    /// Same structure, all values zero (gradient accumulator).
    DLinearParams zeros_like() const;

    std::vector<TensorRef> tensors(const std::string& prefix);
    std::vector<ConstTensorRef> tensors(const std::string& prefix) const;

    friend bool operator==(const DLinearParams&, const DLinearParams&) = default;
};

/// out[:,i] = Ws_i seasonal[:,i] + bs_i + Wt_i trend[:,i] + bt_i.
Matrix dlinear_forward(const DLinearParams& params, const Matrix& x);

/// Gradient of <upstream, dlinear_forward(params, x)> w.r.t. parameters and x.
struct DLinearGrads {
    DLinearParams params;
    Matrix x;
};

/// Accumulates parameter gradients into `grads` (same structure as `params`).
/// Returns the input gradient when `want_input_grad`, otherwise an empty matrix.
Matrix dlinear_backward_accumulate(const DLinearParams& params, const Matrix& x,
                                   const Matrix& upstream, DLinearParams& grads,
                                   bool want_input_grad);

DLinearGrads dlinear_backward(const DLinearParams& params, const Matrix& x, const Matrix& upstream);

/// Generic affine layer y = W v + b.
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weight;  ///< out x in
    std::vector<double> bias;    ///< out

    static DenseLayer zeros(std::size_t in, std::size_t out);
    /// Weights uniform in [-1/in, 1/in], bias zero.
    static DenseLayer init(std::size_t in, std::size_t out, Rng& rng);

    std::vector<double> forward(std::span<const double> v) const;
    DenseLayer zeros_like() const { return zeros(in, out); }

    std::vector<TensorRef> tensors(const std::string& prefix);
    std::vector<ConstTensorRef> tensors(const std::string& prefix) const;

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct AdamConfig {
    double lr = 0.005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moments per tensor, allocated on the first step.
struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update of `params` in place. Throws TrainingError naming
/// the first tensor with a non-finite gradient, before touching any parameter.
void adam_step(AdamState& state, const std::vector<TensorRef>& params,
               const std::vector<ConstTensorRef>& grads);

}  // namespace cdfm
