#include "cdfm/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "cdfm/checkpoint.hpp"
#include "cdfm/dataset.hpp"
#include "cdfm/entropy.hpp"
#include "cdfm/error.hpp"
#include "cdfm/format.hpp"
#include "cdfm/selector.hpp"
#include "cdfm/synthetic.hpp"
#include "cdfm/train.hpp"

namespace cdfm::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

/// Usage problems detected after parsing (missing required flag for a command, ...).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string data;
    std::string date_column = "date";
    std::string borders = "ratio";
    std::vector<double> ratios{0.6, 0.2, 0.2};
    std::size_t lookback = 96;
    std::size_t horizon = 96;
    double alpha = 0.7;
    double rho = 1.0;
    double tau = 0.05;
    double lr = 0.005;
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    std::size_t patience = 3;
    std::uint64_t seed = 2024;
    std::size_t kernel = 25;
    double epsilon = kDefaultInstanceEpsilon;
    std::string variant = "cdfm";
    std::string out_dir = "out";
    std::string checkpoint;
    std::string split = "test";
    std::string output = "fused";
    bool zero_mask = false;
    std::string channel;
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

TimeSeriesDataset load_prepared(const Options& o) {
    if (o.data.empty()) throw UsageError("--data is required");
    auto raw = load_csv(o.data, o.date_column);
    if (o.borders == "ratio") {
        if (o.ratios.size() != 3) throw UsageError("--ratios needs three values");
        return split_and_standardize(std::move(raw), SplitRatios{o.ratios[0], o.ratios[1], o.ratios[2]});
    }
    if (o.borders == "ett-hour") return split_and_standardize(std::move(raw), ett_month_borders(24));
    if (o.borders == "ett-minute") return split_and_standardize(std::move(raw), ett_month_borders(96));
    throw UsageError("--borders must be ratio, ett-hour or ett-minute");
}

TrainConfig train_config(const Options& o) {
    TrainConfig c;
    c.lookback = o.lookback;
    c.horizon = o.horizon;
    c.lr = o.lr;
    c.batch_size = o.batch_size;
    c.max_epochs = o.epochs;
    c.patience = o.patience;
    c.alpha = o.alpha;
    c.rho = o.rho;
    c.tau = o.tau;
    c.seed = o.seed;
    c.kernel = o.kernel;
    c.epsilon = o.epsilon;
    c.variant = parse_variant(o.variant);
    return c;
}

json config_json(const Options& o) {
    json j;
    j["date-column"] = o.date_column;
    j["borders"] = o.borders;
    j["ratios"] = o.ratios;
    j["lookback"] = o.lookback;
    j["horizon"] = o.horizon;
    j["alpha"] = o.alpha;
    j["rho"] = o.rho;
    j["tau"] = o.tau;
    j["lr"] = o.lr;
    j["batch-size"] = o.batch_size;
    j["epochs"] = o.epochs;
    j["patience"] = o.patience;
    j["seed"] = o.seed;
    j["kernel"] = o.kernel;
    j["epsilon"] = o.epsilon;
    j["variant"] = o.variant;
    j["split"] = o.split;
    j["output"] = o.output;
    j["zero-mask"] = o.zero_mask;
    if (!o.channel.empty()) j["channel"] = o.channel;
    if (!o.checkpoint.empty()) j["checkpoint"] = o.checkpoint;
    return j;
}

class Manifest {
public:
    Manifest(std::string command, const Options& o)
        : command_(std::move(command)), options_(o), started_(std::chrono::steady_clock::now()) {}

    void add_output(const fs::path& p) { outputs_.push_back(p.string()); }
    void set_extra(const std::string& key, json value) { extra_[key] = std::move(value); }

    void write(const fs::path& dir) const {
        json j;
        j["command"] = command_;
        j["config"] = config_json(options_);
        j["seed"] = options_.seed;
        if (!options_.data.empty()) j["dataset"] = {{"path", options_.data}, {"sha256", sha256_file(options_.data)}};
        j["outputs"] = outputs_;
        for (const auto& [k, v] : extra_.items()) j[k] = v;
        j["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
        write_file(dir / ("manifest_" + command_ + ".json"), j.dump(2) + "\n");
    }

private:
    std::string command_;
    Options options_;
    std::chrono::steady_clock::time_point started_;
    std::vector<std::string> outputs_;
    json extra_ = json::object();
};

fs::path prepare_out_dir(const Options& o) {
    fs::path dir(o.out_dir);
    fs::create_directories(dir);
    return dir;
}

std::size_t resolve_channel(const TimeSeriesDataset& ds, const std::string& name) {
    if (name.empty()) throw UsageError("--channel is required");
    for (std::size_t i = 0; i < ds.channel_names.size(); ++i)
        if (ds.channel_names[i] == name) return i;
    std::size_t pos = 0;
    try {
        const auto idx = std::stoul(name, &pos);
        if (pos == name.size() && idx < ds.channels()) return idx;
    } catch (const std::exception&) {
    }
    throw UsageError("--channel '" + name + "' is neither a channel name nor a valid index");
}

int cmd_train(const Options& o, std::ostream& out) {
    const auto ds = load_prepared(o);
    const auto dir = prepare_out_dir(o);
    Manifest manifest("train", o);
    const auto result = train(ds, train_config(o));

    write_file(dir / "checkpoint.txt", serialize_checkpoint(result.state));
    write_file(dir / "train_log.csv", train_log_csv(result.log));
    write_file(dir / "channel_scores.csv", channel_scores_csv(result.scores));
    for (const char* f : {"checkpoint.txt", "train_log.csv", "channel_scores.csv"}) manifest.add_output(dir / f);

    json timing = json::array();
    for (const auto& e : result.log.epochs) timing.push_back(e.elapsed_seconds);
    manifest.set_extra("epoch_elapsed_seconds", timing);
    manifest.set_extra("best_epoch", result.log.best_epoch);
    manifest.write(dir);

    out << "best_epoch=" << result.log.best_epoch << "\nbest_val_mse=" << format_double(result.log.best_val_mse)
        << "\nmask=";
    for (std::size_t c = 0; c < result.state.mask.size(); ++c) out << (c ? ";" : "") << int{result.state.mask[c]};
    out << '\n';
    return kExitOk;
}

int cmd_evaluate(const Options& o, bool lookback_given, bool horizon_given, std::ostream& out) {
    if (o.checkpoint.empty()) throw UsageError("--checkpoint is required");
    if (!fs::exists(o.checkpoint)) throw UsageError("checkpoint '" + o.checkpoint + "' does not exist");
    auto state = load_checkpoint(o.checkpoint);
    if (horizon_given && o.horizon != state.horizon())
        throw ShapeError("checkpoint was trained with horizon " + std::to_string(state.horizon()) +
                         ", --horizon is " + std::to_string(o.horizon));
    if (lookback_given && o.lookback != state.lookback())
        throw ShapeError("checkpoint was trained with lookback " + std::to_string(state.lookback()) +
                         ", --lookback is " + std::to_string(o.lookback));
    if (o.zero_mask) std::fill(state.mask.begin(), state.mask.end(), 0);
    const auto ds = load_prepared(o);
    const Output which = o.output == "fused"        ? Output::fused
                         : o.output == "stationary" ? Output::stationary
                         : o.output == "nonstationary"
                             ? Output::nonstationary
                             : throw UsageError("--output must be fused, stationary or nonstationary");
    const auto result = evaluate(state, ds, parse_split(o.split), which);

    const auto dir = prepare_out_dir(o);
    Manifest manifest("evaluate", o);
    write_file(dir / "eval.csv", eval_csv_header() + "\n" + eval_csv_row(result) + "\n");
    manifest.add_output(dir / "eval.csv");
    manifest.write(dir);
    out << eval_key_values(result);
    return kExitOk;
}

int cmd_baseline(const Options& o, std::ostream& out) {
    const auto ds = load_prepared(o);
    const auto result = repeat_baseline(ds, o.lookback, o.horizon, parse_split(o.split));
    const auto dir = prepare_out_dir(o);
    Manifest manifest("baseline", o);
    write_file(dir / "baseline.csv", eval_csv_header() + "\n" + eval_csv_row(result) + "\n");
    manifest.add_output(dir / "baseline.csv");
    manifest.write(dir);
    out << eval_key_values(result);
    return kExitOk;
}

int cmd_entropy(const Options& o, std::ostream& out) {
    const auto ds = load_prepared(o);
    const auto channel = resolve_channel(ds, o.channel);
    const auto report = variance_entropy_report(ds, channel, o.lookback);
    std::ostringstream csv;
    csv << "origin,sigma,h_gauss,h_kde\n";
    for (const auto& r : report.per_sample)
        csv << r.origin << ',' << format_double(r.sigma) << ',' << format_double(r.h_gauss) << ','
            << format_double(r.h_kde) << '\n';
    const auto dir = prepare_out_dir(o);
    Manifest manifest("analyze-entropy", o);
    write_file(dir / "entropy.csv", csv.str());
    manifest.add_output(dir / "entropy.csv");
    manifest.set_extra("skipped_windows", report.skipped);
    manifest.set_extra("pearson_sigma_hkde",
                       report.pearson_sigma_hkde ? json(*report.pearson_sigma_hkde) : json(nullptr));
    manifest.write(dir);
    out << "windows=" << report.per_sample.size() << "\nskipped=" << report.skipped << "\npearson_sigma_hkde=";
    if (report.pearson_sigma_hkde)
        out << format_double(*report.pearson_sigma_hkde) << '\n';
    else
        out << "undefined\n";
    return kExitOk;
}

int cmd_select(const Options& o, std::ostream& out) {
    const auto ds = load_prepared(o);
    auto scores = channel_scores(ds, o.lookback, o.horizon, o.rho);
    const auto chosen = select_topk(scores, o.alpha);
    const auto dir = prepare_out_dir(o);
    Manifest manifest("select-channels", o);
    write_file(dir / "channel_scores.csv", channel_scores_csv(scores));
    manifest.add_output(dir / "channel_scores.csv");
    manifest.write(dir);
    out << "topk=";
    for (std::size_t i = 0; i < chosen.size(); ++i) out << (i ? ";" : "") << scores[chosen[i]].channel;
    out << '\n';
    return kExitOk;
}

int cmd_demo(const Options& o, std::ostream& out) {
    OversmoothingConfig cfg;
    cfg.data.seed = o.seed;
    cfg.train.seed = o.seed;
    cfg.train.lr = o.lr;
    cfg.train.batch_size = o.batch_size;
    cfg.train.kernel = o.kernel;
    const auto report = oversmoothing_demo(cfg);
    const auto dir = prepare_out_dir(o);
    Manifest manifest("demo-oversmoothing", o);
    write_file(dir / "oversmoothing_report.txt", oversmoothing_report_text(report));
    write_file(dir / "oversmoothing_series.csv", report.series_csv);
    manifest.add_output(dir / "oversmoothing_report.txt");
    manifest.add_output(dir / "oversmoothing_series.csv");
    manifest.write(dir);
    out << oversmoothing_report_text(report);
    return kExitOk;
}

}  // namespace

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "' for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
    return hex.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Channel-wise dynamic fusion forecasting toolkit", "cdfm"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key = value file mirroring the flag names");

    Options o;
    app.add_option("--data", o.data, "CSV time series")->check(CLI::ExistingFile);
    app.add_option("--date-column", o.date_column, "Name of the first (date) column");
    app.add_option("--borders", o.borders, "Split scheme: ratio, ett-hour or ett-minute")
        ->check(CLI::IsMember({"ratio", "ett-hour", "ett-minute"}));
    app.add_option("--ratios", o.ratios, "Train/val/test ratios")->expected(3)->delimiter(',');
    auto* lookback_opt = app.add_option("--lookback", o.lookback, "History length L")->check(CLI::PositiveNumber);
    auto* horizon_opt = app.add_option("--horizon", o.horizon, "Horizon length H")->check(CLI::PositiveNumber);
    app.add_option("--alpha", o.alpha, "Selected-channel ratio")->check(CLI::Range(0.0, 1.0));
    app.add_option("--rho", o.rho, "Similarity weight in the channel score");
    app.add_option("--tau", o.tau, "Consistency tolerance")->check(CLI::NonNegativeNumber);
    app.add_option("--lr", o.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    app.add_option("--batch-size", o.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
    app.add_option("--epochs", o.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
    app.add_option("--patience", o.patience, "Early-stopping patience");
    app.add_option("--seed", o.seed, "RNG seed");
    app.add_option("--kernel", o.kernel, "Moving-average kernel (odd)");
    app.add_option("--epsilon", o.epsilon, "Instance-normalization floor")->check(CLI::PositiveNumber);
    app.add_option("--variant", o.variant, "cdfm, stationary or nonstationary")
        ->check(CLI::IsMember({"cdfm", "stationary", "nonstationary"}));
    app.add_option("--out-dir", o.out_dir, "Directory for artifacts");
    app.add_option("--checkpoint", o.checkpoint, "Checkpoint to evaluate");
    app.add_option("--split", o.split, "Split to evaluate")->check(CLI::IsMember({"train", "val", "test"}));
    app.add_option("--output", o.output, "fused, stationary or nonstationary")
        ->check(CLI::IsMember({"fused", "stationary", "nonstationary"}));
    app.add_flag("--zero-mask", o.zero_mask, "Force every channel mask entry to 0");
    app.add_option("--channel", o.channel, "Channel name or index");

    auto* train_cmd = app.add_subcommand("train", "Train CDFM: checkpoint, log and channel scores");
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on a split");
    auto* base_cmd = app.add_subcommand("baseline", "Repeat-last-value baseline");
    auto* ent_cmd = app.add_subcommand("analyze-entropy", "Per-window variance and entropy of one channel");
    auto* sel_cmd = app.add_subcommand("select-channels", "Channel scores and top-k, no training");
    auto* demo_cmd = app.add_subcommand("demo-oversmoothing", "Synthetic over-smoothing demonstration");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "cdfm: usage error: " << e.what() << '\n';
        return kExitUsageError;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(o, out);
        if (eval_cmd->parsed()) return cmd_evaluate(o, lookback_opt->count() > 0, horizon_opt->count() > 0, out);
        if (base_cmd->parsed()) return cmd_baseline(o, out);
        if (ent_cmd->parsed()) return cmd_entropy(o, out);
        if (sel_cmd->parsed()) return cmd_select(o, out);
        if (demo_cmd->parsed()) return cmd_demo(o, out);
    } catch (const UsageError& e) {
        err << "cdfm: usage error: " << e.what() << '\n';
        return kExitUsageError;
    } catch (const ConfigError& e) {
        err << "cdfm: usage error: " << e.what() << '\n';
        return kExitUsageError;
    } catch (const std::exception& e) {
        err << "cdfm: error: " << e.what() << '\n';
        return kExitRuntimeError;
    }
    return kExitUsageError;
}

}  // namespace cdfm::cli
