#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cdfm/entropy.hpp"
#include "cdfm/error.hpp"
#include "cdfm/synthetic.hpp"
#include "test_util.hpp"

using namespace cdfm;

namespace {

std::vector<double> gaussian_draws(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

}  // namespace

TEST_CASE("gaussian entropy closed form") {
    CHECK(gaussian_entropy(1.0) == doctest::Approx(0.918938533204673).epsilon(1e-12));
    for (double s : {0.01, 0.3, 1.0, 7.5, 1e3})
        CHECK(gaussian_entropy(2.0 * s) - gaussian_entropy(s) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(gaussian_entropy(0.0), DomainError);
    CHECK_THROWS_AS(gaussian_entropy(-1.0), DomainError);
}

TEST_CASE("gaussian entropy strictly increasing") {
    double prev = gaussian_entropy(1e-3);
    for (double s = 2e-3; s < 100.0; s *= 1.37) {
        const double h = gaussian_entropy(s);
        CHECK(h > prev);
        prev = h;
    }
}

TEST_CASE("KDE entropy rejects degenerate input") {
    CHECK_THROWS_AS(kde_entropy(std::vector<double>(8, 3.0)), DomainError);
    CHECK_THROWS_AS(kde_entropy(std::vector<double>{1, 2, 3, 4, 5, 6, 7}), DomainError);
    const std::vector<double> ok{1, 2, 3, 4, 5, 6, 7, 8};
    CHECK(std::isfinite(kde_entropy(ok)));
    CHECK_THROWS_AS(kde_entropy(ok, -1.0), DomainError);
}

TEST_CASE("KDE leave-one-out matches a direct double sum on a small sample") {
    const std::vector<double> x{0.1, -0.7, 1.3, 2.2, -1.9, 0.4, 0.0, 0.9, -0.3};
    const double h = 0.6;
    const double n = static_cast<double>(x.size());
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double p = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j)
            if (i != j)
                p += std::exp(-0.5 * std::pow((x[i] - x[j]) / h, 2)) / (h * std::sqrt(2.0 * std::numbers::pi));
        total += std::log(p / (n - 1.0));
    }
    CHECK(kde_entropy(x, h) == doctest::Approx(-total / n).epsilon(1e-12));
}

TEST_CASE("KDE survives underflowing kernels via log-space fallback") {
    std::vector<double> x{0, 1, 2, 3, 4, 5, 6, 1e6};
    const double h = kde_entropy(x, 0.5);
    CHECK(std::isfinite(h));
}

TEST_CASE("KDE entropy against closed forms at n = 10^4") {
    // Differential entropy of N(0, 1) is 0.5 ln(2 pi e), half a nat above gaussian_entropy(1).
    const auto g = gaussian_draws(10000, 42);
    const double true_entropy = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
    CHECK(std::abs(kde_entropy(g) - true_entropy) < 0.05);
    CHECK(std::abs(kde_entropy(g) - gaussian_entropy(1.0) - 0.5) < 0.05);

    Rng rng(43);
    std::vector<double> u(10000);
    for (auto& x : u) x = rng.uniform();
    CHECK(std::abs(kde_entropy(u) - 0.0) < 0.05);
}

TEST_CASE("KDE scale rule") {
    const auto g = gaussian_draws(10000, 7);
    std::vector<double> scaled(g);
    for (auto& v : scaled) v *= 3.0;
    CHECK(std::abs(kde_entropy(scaled) - kde_entropy(g) - std::log(3.0)) < 0.05);
}

TEST_CASE("pearson") {
    const std::vector<double> a{1, 2, 3, 4};
    const std::vector<double> b{2, 4, 6, 8};
    const std::vector<double> c{4, 3, 2, 1};
    CHECK(*pearson(a, b) == doctest::Approx(1.0));
    CHECK(*pearson(a, c) == doctest::Approx(-1.0));
    CHECK_FALSE(pearson(a, std::vector<double>(4, 2.0)).has_value());
}

TEST_CASE("variance-entropy report on an amplitude-modulated channel") {
    auto ds = split_and_standardize(amplitude_modulated_series(4000, 800.0, 0.8, 99), SplitRatios{});
    const auto report = variance_entropy_report(ds, 0, 96);
    REQUIRE(report.pearson_sigma_hkde.has_value());
    CHECK(*report.pearson_sigma_hkde > 0.8);
    CHECK(report.per_sample.size() == ds.split->train_end - 96 + 1);
    for (const auto& row : report.per_sample) CHECK(row.h_gauss == doctest::Approx(gaussian_entropy(row.sigma)));
    for (std::size_t i = 1; i < report.per_sample.size(); ++i)
        CHECK(report.per_sample[i].origin == report.per_sample[i - 1].origin + 1);
}

TEST_CASE("identical windows leave the correlation undefined") {
    // period-4 pattern: every 96-row window holds the same multiset of values
    Matrix values(600, 1);
    const double pattern[4] = {1.0, -1.0, 2.0, 0.5};
    for (std::size_t t = 0; t < 600; ++t) values(t, 0) = pattern[t % 4];
    auto ds = split_and_standardize(make_dataset(values), SplitRatios{});
    const auto report = variance_entropy_report(ds, 0, 96);
    CHECK_FALSE(report.pearson_sigma_hkde.has_value());
}

TEST_CASE("report skips constant windows") {
    Matrix values(800, 1);
    Rng rng(1);
    for (std::size_t t = 0; t < 800; ++t) values(t, 0) = t < 200 ? 0.0 : rng.normal();
    auto ds = split_and_standardize(make_dataset(values), SplitRatios{});
    const auto report = variance_entropy_report(ds, 0, 96);
    CHECK(report.skipped == 200 - 96 + 1);
    CHECK_THROWS(variance_entropy_report(ds, 3, 96));
}
