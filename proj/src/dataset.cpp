#include "cdfm/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cdfm/error.hpp"
#include "cdfm/format.hpp"

namespace cdfm {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t start = 0;
    while (start < s.size() && (s[start] == ' ' || s[start] == '\t')) ++start;
    s.erase(0, start);
    // UTF-8 byte order mark
    if (s.rfind("\xEF\xBB\xBF", 0) == 0) s.erase(0, 3);
    return s;
}

}  // namespace

std::string to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split parse_split(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw ConfigError("unknown split '" + name + "' (expected train, val or test)");
}

std::size_t TimeSeriesDataset::channel_index(const std::string& name) const {
    for (std::size_t i = 0; i < channel_names.size(); ++i)
        if (channel_names[i] == name) return i;
    throw DataError("no channel named '" + name + "'");
}

std::pair<std::size_t, std::size_t> TimeSeriesDataset::split_range(Split which) const {
    if (!split) throw DataError("dataset has no train/val/test split");
    switch (which) {
        case Split::train: return {0, split->train_end};
        case Split::val: return {split->train_end, split->val_end};
        case Split::test: return {split->val_end, length()};
    }
    return {0, 0};
}

TimeSeriesDataset load_csv(const std::filesystem::path& path, const std::string& date_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path.string() + "' is empty");
    auto header = split_fields(line);
    for (auto& h : header) h = trim(h);
    if (header.size() < 2)
        throw DataError("format error: need a date column and at least one value column");
    if (header.front() != date_column)
        throw DataError("format error: first column is '" + header.front() + "', expected '" +
                        date_column + "'");

    TimeSeriesDataset ds;
    ds.channel_names.assign(header.begin() + 1, header.end());
    const std::size_t n = ds.channel_names.size();

    std::vector<double> values;
    std::size_t row = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size())
            throw DataError("malformed row " + std::to_string(row) + " (line " +
                            std::to_string(line_no) + "): expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        ds.timestamps.push_back(trim(fields[0]));
        for (std::size_t c = 0; c < n; ++c) {
            double v = 0.0;
            if (!parse_double(fields[c + 1], v) || !std::isfinite(v))
                throw DataError("non-numeric value '" + trim(fields[c + 1]) + "' at row " +
                                std::to_string(row) + ", column '" + ds.channel_names[c] + "'");
            values.push_back(v);
        }
        ++row;
    }
    ds.values = Matrix(row, n, std::move(values));
    return ds;
}

TimeSeriesDataset split_and_standardize(TimeSeriesDataset ds, SplitRatios ratios) {
    if (ratios.train <= 0.0 || ratios.val <= 0.0 || ratios.test < 0.0 ||
        std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
        throw ConfigError("split ratios must be positive and sum to 1");
    const auto t = static_cast<double>(ds.length());
    SplitIndices borders;
    borders.train_end = static_cast<std::size_t>(std::floor(t * ratios.train));
    borders.val_end = static_cast<std::size_t>(std::floor(t * (ratios.train + ratios.val)));
    return split_and_standardize(std::move(ds), borders);
}

TimeSeriesDataset split_and_standardize(TimeSeriesDataset ds, SplitIndices borders) {
    if (!(0 < borders.train_end && borders.train_end < borders.val_end &&
          borders.val_end <= ds.length()))
        throw ConfigError("invalid split borders: need 0 < train_end < val_end <= T (T=" +
                          std::to_string(ds.length()) + ")");
    if (ds.global_stats) throw DataError("dataset is already standardized");

    const std::size_t n = ds.channels();
    const std::size_t m = borders.train_end;
    ChannelStats stats{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (std::size_t c = 0; c < n; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < m; ++r) sum += ds.values(r, c);
        const double mean = sum / static_cast<double>(m);
        double sq = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            const double d = ds.values(r, c) - mean;
            sq += d * d;
        }
        const double sd = std::sqrt(sq / static_cast<double>(m));
        if (!(sd > 0.0))
            throw DataError("channel '" + ds.channel_names[c] +
                            "' is constant over the training rows");
        stats.mean[c] = mean;
        stats.std[c] = sd;
    }
    for (std::size_t r = 0; r < ds.length(); ++r)
        for (std::size_t c = 0; c < n; ++c)
            ds.values(r, c) = (ds.values(r, c) - stats.mean[c]) / stats.std[c];

    ds.split = borders;
    ds.global_stats = std::move(stats);
    return ds;
}

SplitIndices ett_month_borders(std::size_t rows_per_day) {
    const std::size_t month = 30 * rows_per_day;
    return {12 * month, 16 * month};
}

double destandardize(const TimeSeriesDataset& ds, std::size_t channel, double value) {
    if (!ds.global_stats) return value;
    return value * ds.global_stats->std[channel] + ds.global_stats->mean[channel];
}

WindowSet::WindowSet(const TimeSeriesDataset& ds, Split split, std::size_t lookback,
                     std::size_t horizon)
    : ds_(&ds), lookback_(lookback), horizon_(horizon) {
    if (lookback == 0 || horizon == 0) throw ConfigError("lookback and horizon must be positive");
    const auto [begin, end] = ds.split_range(split);
    // History borrowed from the preceding split for val/test.
    const std::size_t start = split == Split::train ? begin : (begin >= lookback ? begin - lookback : 0);
    const std::size_t need = lookback + horizon;
    first_origin_ = start;
    count_ = end - start >= need ? end - start - need + 1 : 0;
}

Matrix WindowSet::history(std::size_t i) const {
    return ds_->values.slice_rows(first_origin_ + i, lookback_);
}

Matrix WindowSet::target(std::size_t i) const {
    return ds_->values.slice_rows(first_origin_ + i + lookback_, horizon_);
}

WindowSample WindowSet::operator[](std::size_t i) const {
    return {history(i), target(i), origin(i)};
}

std::vector<WindowSample> windows(const TimeSeriesDataset& ds, Split split, std::size_t lookback,
                                  std::size_t horizon) {
    const WindowSet set(ds, split, lookback, horizon);
    std::vector<WindowSample> out;
    out.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) out.push_back(set[i]);
    return out;
}

}  // namespace cdfm
