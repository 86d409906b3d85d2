#include "cdfm/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cdfm/error.hpp"

namespace cdfm {

double gaussian_entropy(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw DomainError("gaussian_entropy: sigma must be positive and finite");
    return 0.5 * std::log(2.0 * std::numbers::pi * sigma * sigma);
}

double population_std(std::span<const double> values) {
    if (values.empty()) return 0.0;
    // Exact zero for constant input; the mean can be off by an ulp otherwise.
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*lo == *hi) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    return std::sqrt(sq / static_cast<double>(values.size()));
}

double silverman_bandwidth(std::span<const double> samples) {
    return 1.06 * population_std(samples) * std::pow(static_cast<double>(samples.size()), -0.2);
}

double kde_entropy(std::span<const double> samples, std::optional<double> bandwidth) {
    const std::size_t n = samples.size();
    if (n < 8) throw DomainError("kde_entropy: need at least 8 samples, got " + std::to_string(n));
    if (!(population_std(samples) > 0.0))
        throw DomainError("kde_entropy: degenerate (constant) sample");
    const double h = bandwidth ? *bandwidth : silverman_bandwidth(samples);
    if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("kde_entropy: bandwidth must be positive");

    const double inv_h = 1.0 / h;
    // log of the normalising constant 1 / ((n-1) h sqrt(2 pi))
    const double log_norm =
        -std::log(static_cast<double>(n - 1) * h) - 0.5 * std::log(2.0 * std::numbers::pi);

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double u = (samples[i] - samples[j]) * inv_h;
            sum += std::exp(-0.5 * u * u);
        }
        double log_sum = 0.0;
        if (sum > 0.0) {
            log_sum = std::log(sum);
        } else {
            // Every kernel term underflowed; redo in log space.
            double max_e = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double u = (samples[i] - samples[j]) * inv_h;
                max_e = std::max(max_e, -0.5 * u * u);
            }
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double u = (samples[i] - samples[j]) * inv_h;
                acc += std::exp(-0.5 * u * u - max_e);
            }
            log_sum = max_e + std::log(acc);
        }
        total += log_norm + log_sum;
    }
    return -total / static_cast<double>(n);
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw ShapeError("pearson: length mismatch");
    const auto n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    // Spread at rounding level counts as constant.
    const auto flat = [](std::span<const double> v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return *hi - *lo <= 1e-12 * std::max(std::abs(*lo), std::abs(*hi));
    };
    if (!(saa > 0.0) || !(sbb > 0.0) || flat(a) || flat(b)) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

EntropyReport variance_entropy_report(const TimeSeriesDataset& ds, std::size_t channel,
                                      std::size_t lookback) {
    if (channel >= ds.channels())
        throw ConfigError("channel index " + std::to_string(channel) + " out of range");
    const auto [begin, end] = ds.split ? ds.split_range(Split::train)
                                       : std::pair<std::size_t, std::size_t>{0, ds.length()};
    if (lookback < 8) throw ConfigError("entropy analysis needs windows of at least 8 rows");
    if (end - begin < lookback + 29)
        throw DataError("entropy analysis needs at least 30 windows in the training rows");

    const std::vector<double> column = ds.values.col(channel);
    EntropyReport report;
    std::vector<double> sigmas;
    std::vector<double> hkde;
    for (std::size_t t = begin; t + lookback <= end; ++t) {
        const std::span<const double> window(column.data() + t, lookback);
        const double sigma = population_std(window);
        if (!(sigma > 0.0)) {
            ++report.skipped;
            continue;
        }
        EntropyRow row{t, sigma, gaussian_entropy(sigma), kde_entropy(window)};
        sigmas.push_back(row.sigma);
        hkde.push_back(row.h_kde);
        report.per_sample.push_back(row);
    }
    if (sigmas.size() >= 2) report.pearson_sigma_hkde = pearson(sigmas, hkde);
    return report;
}

}  // namespace cdfm
