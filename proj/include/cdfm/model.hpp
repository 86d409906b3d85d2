#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdfm/dlinear.hpp"
#include "cdfm/instnorm.hpp"
#include "cdfm/matrix.hpp"

namespace cdfm {

class Rng;

/// Which predictor produces the final output.
enum class Variant {
    cdfm,               ///< dynamic fusion on the masked channels
    stationary_only,    ///< W' = 0 everywhere
    nonstationary_only  ///< W' = 1 everywhere
};

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

/// Trainable parameters.
struct CdfmParams {
    DLinearParams stationary;     ///< fed instance-normalized input, output denormalized
    DLinearParams nonstationary;  ///< fed the globally standardized input directly
    DenseLayer sigma_predictor;   ///< (L+1) -> 1, shared across channels
    std::vector<double> lambda;   ///< per-channel fusion scale

    CdfmParams zeros_like() const;
    std::vector<TensorRef> tensors();
    std::vector<ConstTensorRef> tensors() const;

    friend bool operator==(const CdfmParams&, const CdfmParams&) = default;
};

struct ModelShape {
    std::size_t lookback = 96;
    std::size_t horizon = 96;
    std::size_t channels = 0;
    std::size_t kernel = 25;
    bool individual_stationary = true;
    bool individual_nonstationary = true;
};

struct CdfmState {
    CdfmParams params;
    std::vector<std::uint8_t> mask;  ///< 1 = channel may fuse non-stationary output
    double alpha = 0.7;
    double rho = 1.0;
    double epsilon = kDefaultInstanceEpsilon;
    Variant variant = Variant::cdfm;

    /// Seeded initialisation: DLinear/Dense weights uniform in [-1/fan_in, 1/fan_in],
    /// biases zero, lambda = lambda_init, mask all ones.
    static CdfmState init(const ModelShape& shape, Rng& rng, double lambda_init = 0.1);

    std::size_t lookback() const noexcept { return params.stationary.lookback; }
    std::size_t horizon() const noexcept { return params.stationary.horizon; }
    std::size_t channels() const noexcept { return params.stationary.channels; }
    std::size_t kernel() const noexcept { return params.stationary.kernel; }

    friend bool operator==(const CdfmState&, const CdfmState&) = default;
};

struct ForwardResult {
    Matrix y_hat;
    Matrix y_s;
    Matrix y_ns;
    std::vector<double> sigma_x;     ///< instance std of each input channel
    std::vector<double> sigma_hat;   ///< predicted horizon std
    std::vector<double> w_raw;       ///< lambda * (sigma_x + sigma_hat), before clamping
    std::vector<double> w;           ///< effective fusion weight W' in [0, 1]
    Normalized normalized;           ///< x_norm and its statistics
    Matrix y_s_norm;                 ///< stationary prediction before denormalization
};

/// Affine map of concat(sigma_x, x_col).
double predict_horizon_sigma(const DenseLayer& layer, std::span<const double> x_col, double sigma_x);

ForwardResult forward(const CdfmState& state, const Matrix& x);

/// Mean squared error of the fused prediction against y_true (mean over H x N).
double fused_loss(const CdfmState& state, const Matrix& x, const Matrix& y_true);

/// Adds `scale` times the gradient of the per-sample fused MSE into `grads`.
/// Returns the unscaled per-sample loss. Instance statistics are constants.
double backward_accumulate(const CdfmState& state, const Matrix& x, const Matrix& y_true,
                           double scale, CdfmParams& grads);

struct BackwardResult {
    double loss = 0.0;
    CdfmParams grads;
};

BackwardResult backward(const CdfmState& state, const Matrix& x, const Matrix& y_true);

}  // namespace cdfm
