#include "cdfm/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "cdfm/error.hpp"
#include "cdfm/format.hpp"

namespace cdfm {

namespace {

void write_tensor(std::ostream& out, const std::string& name, const std::vector<std::size_t>& shape,
                  std::span<const double> values) {
    out << "tensor " << name << ' ' << shape.size();
    for (auto d : shape) out << ' ' << d;
    out << '\n';
    for (std::size_t i = 0; i < values.size(); ++i) out << (i ? " " : "") << format_double(values[i]);
    out << '\n';
}

std::size_t to_size(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != value.size()) throw DataError("checkpoint: bad integer for '" + key + "'");
    return static_cast<std::size_t>(v);
}

double to_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    if (!parse_double(value, v)) throw DataError("checkpoint: bad number for '" + key + "'");
    return v;
}

}  // namespace

std::string serialize_checkpoint(const CdfmState& state) {
    std::ostringstream out;
    out << "cdfm-checkpoint\n"
        << "format_version " << kCheckpointVersion << '\n'
        << "lookback " << state.lookback() << '\n'
        << "horizon " << state.horizon() << '\n'
        << "channels " << state.channels() << '\n'
        << "kernel " << state.kernel() << '\n'
        << "individual_stationary " << (state.params.stationary.individual ? 1 : 0) << '\n'
        << "individual_nonstationary " << (state.params.nonstationary.individual ? 1 : 0) << '\n'
        << "variant " << to_string(state.variant) << '\n'
        << "alpha " << format_double(state.alpha) << '\n'
        << "rho " << format_double(state.rho) << '\n'
        << "epsilon " << format_double(state.epsilon) << '\n';
    for (const auto& t : state.params.tensors()) write_tensor(out, t.name, t.shape, t.values);
    std::vector<double> mask(state.mask.begin(), state.mask.end());
    write_tensor(out, "mask", {mask.size()}, mask);
    out << "end\n";
    return out.str();
}

CdfmState parse_checkpoint(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "cdfm-checkpoint") throw DataError("not a cdfm checkpoint");

    std::map<std::string, std::string> header;
    std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<double>>> tensors;
    bool ended = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line == "end") {
            ended = true;
            break;
        }
        std::istringstream fields(line);
        std::string key;
        fields >> key;
        if (key == "tensor") {
            std::string name;
            std::size_t rank = 0;
            if (!(fields >> name >> rank)) throw DataError("checkpoint: malformed tensor line");
            std::vector<std::size_t> shape(rank);
            std::size_t count = 1;
            for (auto& d : shape) {
                if (!(fields >> d)) throw DataError("checkpoint: malformed shape for '" + name + "'");
                count *= d;
            }
            std::string values_line;
            if (!std::getline(in, values_line)) throw DataError("checkpoint: missing values for '" + name + "'");
            std::istringstream vs(values_line);
            std::vector<double> values;
            values.reserve(count);
            std::string token;
            while (vs >> token) values.push_back(to_double(name, token));
            if (values.size() != count)
                throw DataError("checkpoint: tensor '" + name + "' has " + std::to_string(values.size()) +
                                " values, shape implies " + std::to_string(count));
            tensors[name] = {std::move(shape), std::move(values)};
        } else {
            std::string value;
            fields >> value;
            header[key] = value;
        }
    }
    if (!ended) throw DataError("checkpoint: truncated (no 'end' marker)");

    const auto need = [&](const std::string& key) -> const std::string& {
        const auto it = header.find(key);
        if (it == header.end()) throw DataError("checkpoint: missing header '" + key + "'");
        return it->second;
    };
    if (to_size("format_version", need("format_version")) != kCheckpointVersion)
        throw DataError("checkpoint: unsupported format version " + need("format_version"));

    ModelShape shape;
    shape.lookback = to_size("lookback", need("lookback"));
    shape.horizon = to_size("horizon", need("horizon"));
    shape.channels = to_size("channels", need("channels"));
    shape.kernel = to_size("kernel", need("kernel"));
    shape.individual_stationary = to_size("individual_stationary", need("individual_stationary")) != 0;
    shape.individual_nonstationary = to_size("individual_nonstationary", need("individual_nonstationary")) != 0;

    CdfmState state;
    state.params.stationary = DLinearParams::zeros(shape.lookback, shape.horizon, shape.channels,
                                                   shape.kernel, shape.individual_stationary);
    state.params.nonstationary = DLinearParams::zeros(shape.lookback, shape.horizon, shape.channels,
                                                      shape.kernel, shape.individual_nonstationary);
    state.params.sigma_predictor = DenseLayer::zeros(shape.lookback + 1, 1);
    state.params.lambda.assign(shape.channels, 0.0);
    state.variant = parse_variant(need("variant"));
    state.alpha = to_double("alpha", need("alpha"));
    state.rho = to_double("rho", need("rho"));
    state.epsilon = to_double("epsilon", need("epsilon"));

    for (auto& t : state.params.tensors()) {
        const auto it = tensors.find(t.name);
        if (it == tensors.end()) throw DataError("checkpoint: missing tensor '" + t.name + "'");
        if (it->second.first != t.shape) throw ShapeError("checkpoint: tensor '" + t.name + "' has the wrong shape");
        std::copy(it->second.second.begin(), it->second.second.end(), t.values.begin());
    }
    const auto mask = tensors.find("mask");
    if (mask == tensors.end() || mask->second.second.size() != shape.channels)
        throw DataError("checkpoint: missing or malformed mask");
    state.mask.clear();
    for (double m : mask->second.second) {
        if (m != 0.0 && m != 1.0) throw DataError("checkpoint: mask entries must be 0 or 1");
        state.mask.push_back(m == 1.0 ? 1 : 0);
    }
    return state;
}

void save_checkpoint(const CdfmState& state, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << serialize_checkpoint(state);
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

CdfmState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_checkpoint(buf.str());
}

}  // namespace cdfm
