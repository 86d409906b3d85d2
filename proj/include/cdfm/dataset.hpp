#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cdfm/matrix.hpp"

namespace cdfm {

enum class Split { train, val, test };

std::string to_string(Split split);
Split parse_split(const std::string& name);

struct SplitIndices {
    std::size_t train_end = 0;
    std::size_t val_end = 0;
};

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> std;
};

/// T x N series with channel names and, after standardization, split boundaries
/// plus the raw training statistics used for the z-score.
struct TimeSeriesDataset {
    Matrix values;
    std::vector<std::string> channel_names;
    std::vector<std::string> timestamps;
    std::optional<SplitIndices> split;
    std::optional<ChannelStats> global_stats;

    std::size_t length() const noexcept { return values.rows(); }
    std::size_t channels() const noexcept { return values.cols(); }

    /// Index of channel `name`; throws DataError when absent.
    std::size_t channel_index(const std::string& name) const;

    /// Rows [begin, end) covered by `split`, excluding borrowed history.
    std::pair<std::size_t, std::size_t> split_range(Split which) const;
};

/// One input/horizon pair. `origin` is the absolute dataset row of x's first row.
struct WindowSample {
    Matrix x;
    Matrix y;
    std::size_t origin = 0;
};

/// Lazily materialised sliding windows over one split (stride 1, no drop-last).
///
/// Val and test windows borrow their first L history rows from the preceding
/// split so the first row of the split is a forecast target.
class WindowSet {
public:
    WindowSet(const TimeSeriesDataset& ds, Split split, std::size_t lookback, std::size_t horizon);

    std::size_t size() const noexcept { return count_; }
    bool empty() const noexcept { return count_ == 0; }
    std::size_t lookback() const noexcept { return lookback_; }
    std::size_t horizon() const noexcept { return horizon_; }

    std::size_t origin(std::size_t i) const noexcept { return first_origin_ + i; }
    WindowSample operator[](std::size_t i) const;
    Matrix history(std::size_t i) const;
    Matrix target(std::size_t i) const;

private:
    const TimeSeriesDataset* ds_;
    std::size_t lookback_;
    std::size_t horizon_;
    std::size_t first_origin_ = 0;
    std::size_t count_ = 0;
};

/// Reads a comma-separated file whose first column is `date_column`.
TimeSeriesDataset load_csv(const std::filesystem::path& path, const std::string& date_column = "date");

struct SplitRatios {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
};

/// Sets split boundaries by floor(T * ratio) and z-scores every value with the
/// population mean/std of rows [0, train_end).
TimeSeriesDataset split_and_standardize(TimeSeriesDataset ds, SplitRatios ratios);

/// Same standardization with explicit boundaries (e.g. the fixed ETT month borders).
TimeSeriesDataset split_and_standardize(TimeSeriesDataset ds, SplitIndices borders);

/// Boundaries of the conventional ETT loader: 12/4/4 months of hourly
/// (rows_per_day = 24) or 15-minute (rows_per_day = 96) data.
SplitIndices ett_month_borders(std::size_t rows_per_day);

/// Inverse of the global z-score for one channel.
double destandardize(const TimeSeriesDataset& ds, std::size_t channel, double value);

std::vector<WindowSample> windows(const TimeSeriesDataset& ds, Split split, std::size_t lookback,
                                  std::size_t horizon);

}  // namespace cdfm
