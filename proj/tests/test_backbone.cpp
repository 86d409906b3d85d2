#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <utility>

#include "cdfm/dlinear.hpp"
#include "cdfm/error.hpp"
#include "test_util.hpp"

using namespace cdfm;

namespace {

/// Independent forward: pad explicitly, average, then plain triple loop.
Matrix naive_dlinear(const DLinearParams& p, const Matrix& x) {
    const std::size_t L = p.lookback, H = p.horizon, half = p.kernel / 2;
    Matrix out(H, p.channels);
    for (std::size_t c = 0; c < p.channels; ++c) {
        std::vector<double> padded;
        for (std::size_t i = 0; i < half; ++i) padded.push_back(x(0, c));
        for (std::size_t l = 0; l < L; ++l) padded.push_back(x(l, c));
        for (std::size_t i = 0; i < half; ++i) padded.push_back(x(L - 1, c));
        std::vector<double> trend(L), seasonal(L);
        for (std::size_t l = 0; l < L; ++l) {
            double s = 0;
            for (std::size_t k = 0; k < p.kernel; ++k) s += padded[l + k];
            trend[l] = s / double(p.kernel);
            seasonal[l] = x(l, c) - trend[l];
        }
        const std::size_t k = p.individual ? c : 0;
        for (std::size_t h = 0; h < H; ++h) {
            double v = p.b_seasonal[k * H + h] + p.b_trend[k * H + h];
            for (std::size_t l = 0; l < L; ++l)
                v += p.w_seasonal[(k * H + h) * L + l] * seasonal[l] + p.w_trend[(k * H + h) * L + l] * trend[l];
            out(h, c) = v;
        }
    }
    return out;
}

DLinearParams random_params(std::size_t L, std::size_t H, std::size_t N, std::size_t kernel, bool individual,
                            Rng& rng) {
    auto p = DLinearParams::zeros(L, H, N, kernel, individual);
    for (auto& t : p.tensors("p"))
        for (auto& v : t.values) v = rng.uniform(-1.0, 1.0);
    return p;
}

double weighted_output(const DLinearParams& p, const Matrix& x, const Matrix& up) {
    const auto y = dlinear_forward(p, x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * up.data()[i];
    return s;
}

}  // namespace

TEST_CASE("decompose: hand moving average with edge replication") {
    const Matrix x(5, 1, std::vector<double>{1, 2, 3, 4, 5});
    const auto d = decompose(x, 3);
    const double expected[5] = {4.0 / 3.0, 2.0, 3.0, 4.0, 14.0 / 3.0};
    for (std::size_t l = 0; l < 5; ++l) CHECK(d.trend(l, 0) == doctest::Approx(expected[l]).epsilon(1e-15));
}

TEST_CASE("decompose: constant column and exact partition") {
    const Matrix c(30, 2, 7.25);
    const auto dc = decompose(c, 25);
    for (std::size_t l = 0; l < 30; ++l) {
        CHECK(dc.trend(l, 0) == doctest::Approx(7.25).epsilon(1e-15));
        CHECK(std::abs(dc.seasonal(l, 1)) < 1e-12);
    }
    Rng rng(2);
    const auto x = test::random_matrix(96, 3, rng, -50, 50);
    const auto d = decompose(x, 25);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(std::abs(d.trend.data()[i] + d.seasonal.data()[i] - x.data()[i]) <= 1e-12);
}

TEST_CASE("decompose: kernel validation") {
    const Matrix x(10, 1);
    CHECK_THROWS_AS(decompose(x, 4), ConfigError);
    CHECK_THROWS_AS(decompose(x, 1), ConfigError);
    CHECK_THROWS_AS(decompose(x, 11), ConfigError);
}

TEST_CASE("dlinear_forward: zero params, identity maps, naive oracle") {
    Rng rng(3);
    const auto x = test::random_matrix(12, 3, rng);
    const auto zero = DLinearParams::zeros(12, 5, 3, 3);
    const auto y0 = dlinear_forward(zero, x);
    for (double v : y0.data()) CHECK(v == 0.0);

    auto ident = DLinearParams::zeros(12, 12, 3, 5);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t h = 0; h < 12; ++h) {
            ident.w_seasonal[(c * 12 + h) * 12 + h] = 1.0;
            ident.w_trend[(c * 12 + h) * 12 + h] = 1.0;
        }
    const auto y = dlinear_forward(ident, x);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y.data()[i] - x.data()[i]) < 1e-12);

    for (bool individual : {true, false})
        for (int trial = 0; trial < 10; ++trial) {
            const auto p = random_params(16, 7, 3, 5, individual, rng);
            const auto xi = test::random_matrix(16, 3, rng, -3, 3);
            const auto fast = dlinear_forward(p, xi);
            const auto slow = naive_dlinear(p, xi);
            for (std::size_t i = 0; i < fast.size(); ++i) CHECK(std::abs(fast.data()[i] - slow.data()[i]) < 1e-10);
        }
    CHECK_THROWS_AS(dlinear_forward(zero, test::random_matrix(11, 3, rng)), ShapeError);
}

TEST_CASE("dlinear_forward is linear in x without biases") {
    Rng rng(4);
    auto p = random_params(20, 6, 2, 5, true, rng);
    std::fill(p.b_seasonal.begin(), p.b_seasonal.end(), 0.0);
    std::fill(p.b_trend.begin(), p.b_trend.end(), 0.0);
    const auto x1 = test::random_matrix(20, 2, rng);
    const auto x2 = test::random_matrix(20, 2, rng);
    const double a = 1.7, b = -0.4;
    Matrix mix(20, 2);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.data()[i] = a * x1.data()[i] + b * x2.data()[i];
    const auto y = dlinear_forward(p, mix);
    const auto y1 = dlinear_forward(p, x1);
    const auto y2 = dlinear_forward(p, x2);
    for (std::size_t i = 0; i < y.size(); ++i)
        CHECK(std::abs(y.data()[i] - (a * y1.data()[i] + b * y2.data()[i])) < 1e-10);
}

TEST_CASE("dlinear_backward matches central differences") {
    Rng rng(5);
    for (bool individual : {true, false})
        for (int trial = 0; trial < 5; ++trial) {
            auto p = random_params(8, 4, 2, 3, individual, rng);
            auto x = test::random_matrix(8, 2, rng);
            const auto up = test::random_matrix(4, 2, rng);
            const auto g = dlinear_backward(p, x, up);
            const auto grads = g.params.tensors("p");
            auto params = p.tensors("p");
            for (std::size_t t = 0; t < params.size(); ++t)
                for (std::size_t i = 0; i < params[t].values.size(); ++i) {
                    const double fd = test::central_difference(params[t].values[i], 1e-5,
                                                               [&] { return weighted_output(p, x, up); });
                    CHECK(test::rel_error(grads[t].values[i], fd) < 1e-4);
                }
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double fd =
                    test::central_difference(x.data()[i], 1e-5, [&] { return weighted_output(p, x, up); });
                CHECK(test::rel_error(g.x.data()[i], fd) < 1e-4);
            }
        }
}

TEST_CASE("dlinear_backward: zero upstream and bias = column sums") {
    Rng rng(6);
    const auto p = random_params(10, 4, 3, 3, true, rng);
    const auto x = test::random_matrix(10, 3, rng);
    const auto zero = dlinear_backward(p, x, Matrix(4, 3));
    for (const auto& t : std::as_const(zero.params).tensors("g"))
        for (double v : t.values) CHECK(v == 0.0);
    for (double v : zero.x.data()) CHECK(v == 0.0);

    const auto up = test::random_matrix(4, 3, rng);
    const auto g = dlinear_backward(p, x, up);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t h = 0; h < 4; ++h) {
            CHECK(g.params.b_seasonal[c * 4 + h] == up(h, c));
            CHECK(g.params.b_trend[c * 4 + h] == up(h, c));
        }
    CHECK_THROWS_AS(dlinear_backward(p, x, Matrix(5, 3)), ShapeError);
}

TEST_CASE("dense layer forward") {
    Rng rng(7);
    auto layer = DenseLayer::init(6, 3, rng);
    for (auto& b : layer.bias) b = rng.uniform(-1, 1);
    std::vector<double> v(6);
    for (auto& e : v) e = rng.uniform(-2, 2);
    const auto y = layer.forward(v);
    for (std::size_t o = 0; o < 3; ++o) {
        double ref = layer.bias[o];
        for (std::size_t i = 0; i < 6; ++i) ref += layer.weight[o * 6 + i] * v[i];
        CHECK(std::abs(y[o] - ref) < 1e-12);
    }
    CHECK_THROWS_AS(layer.forward(std::vector<double>(5)), ShapeError);
}

TEST_CASE("init is seeded and fan-in bounded") {
    Rng a(9), b(9);
    const auto pa = DLinearParams::init(96, 24, 2, 25, true, a);
    const auto pb = DLinearParams::init(96, 24, 2, 25, true, b);
    CHECK(pa == pb);
    for (double w : pa.w_trend) CHECK(std::abs(w) <= 1.0 / 96.0);
    for (double bias : pa.b_seasonal) CHECK(bias == 0.0);
}

TEST_CASE("adam: zero gradient, first step, NaN") {
    std::vector<double> param{0.5, -2.0};
    std::vector<double> grad{0.0, 0.0};
    AdamState state;
    adam_step(state, {{"w", {2}, param}}, {{"w", {2}, grad}});
    CHECK(param[0] == 0.5);
    CHECK(param[1] == -2.0);
    CHECK(state.step == 1);

    std::vector<double> scalar{1.0};
    std::vector<double> one{1.0};
    AdamState s2;
    s2.config.lr = 0.1;
    adam_step(s2, {{"s", {1}, scalar}}, {{"s", {1}, one}});
    // bias-corrected m/sqrt(v) = 1 at t = 1
    CHECK(scalar[0] == doctest::Approx(0.9).epsilon(1e-7));
    adam_step(s2, {{"s", {1}, scalar}}, {{"s", {1}, one}});
    CHECK(scalar[0] == doctest::Approx(0.8).epsilon(1e-7));

    std::vector<double> bad{std::nan("")};
    CHECK_THROWS_WITH_AS(adam_step(s2, {{"s", {1}, scalar}}, {{"s", {1}, bad}}), doctest::Contains("'s'"),
                         TrainingError);
    CHECK(scalar[0] == doctest::Approx(0.8).epsilon(1e-7));
}

TEST_CASE("adam minimises a quadratic") {
    std::vector<double> x{3.0, -4.0};
    AdamState state;
    state.config.lr = 0.05;
    for (int i = 0; i < 2000; ++i) {
        std::vector<double> g{2.0 * (x[0] - 1.0), 2.0 * (x[1] + 0.5)};
        adam_step(state, {{"x", {2}, x}}, {{"x", {2}, g}});
    }
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(x[1] == doctest::Approx(-0.5).epsilon(1e-3));
}
