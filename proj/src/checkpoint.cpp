#include "mmfnet/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace mmfnet::model {

namespace {

constexpr int kVersion = 1;

void write_value(std::ostream& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
}

void write_tensor(std::ostream& out, const std::string& name, const double* data, Index rows, Index cols) {
    out << "tensor " << name << ' ' << rows << ' ' << cols << '\n';
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            if (c) out << ' ';
            write_value(out, data[r * cols + c]);
        }
        out << '\n';
    }
}

std::string expect_line(std::istream& in, const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("checkpoint truncated, expected '" + key + "'");
    }
    if (line.rfind(key + ' ', 0) != 0 && line != key) {
        throw ParseError("checkpoint: expected '" + key + "', got '" + line + "'");
    }
    return line.size() > key.size() ? line.substr(key.size() + 1) : std::string{};
}

void read_tensor(std::istream& in, const std::string& name, double* data, Index rows, Index cols) {
    std::istringstream header(expect_line(in, "tensor"));
    std::string got;
    Index r = 0, c = 0;
    header >> got >> r >> c;
    if (got != name || r != rows || c != cols) {
        throw ParseError("checkpoint: expected tensor " + name + " " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + got + " " + std::to_string(r) + "x" +
                         std::to_string(c));
    }
    std::string line;
    for (Index row = 0; row < rows; ++row) {
        if (!std::getline(in, line)) {
            throw ParseError("checkpoint: tensor " + name + " truncated");
        }
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (Index col = 0; col < cols; ++col) {
            while (p < end && *p == ' ') ++p;
            double v = 0.0;
            const auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc{}) {
                throw ParseError("checkpoint: bad value in tensor " + name + " row " + std::to_string(row));
            }
            data[row * cols + col] = v;
            p = res.ptr;
        }
    }
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelParams& params) {
    param_count(params);  // shape check
    const auto& cfg = params.config;
    out << "mmfnet-checkpoint " << kVersion << '\n';
    out << "lookback " << cfg.lookback << '\n';
    out << "horizon " << cfg.horizon << '\n';
    out << "ladder";
    for (Index s : cfg.ladder.segment_lengths()) out << ' ' << s;
    out << '\n';
    out << "mask_enabled " << (cfg.mask_enabled ? 1 : 0) << '\n';
    for (std::size_t i = 0; i < params.scales.size(); ++i) {
        const auto& sp = params.scales[i];
        const std::string prefix = "scale" + std::to_string(i) + ".";
        write_tensor(out, prefix + "mask", sp.mask.data(), sp.mask.rows(), sp.mask.cols());
        write_tensor(out, prefix + "weight", sp.weight.data(), sp.weight.rows(), sp.weight.cols());
        write_tensor(out, prefix + "bias", sp.bias.data(), sp.bias.size(), 1);
    }
    out << "end\n";
}

ModelParams read_checkpoint(std::istream& in) {
    const int version = std::stoi(expect_line(in, "mmfnet-checkpoint"));
    if (version != kVersion) {
        throw ParseError("unsupported checkpoint version " + std::to_string(version));
    }
    const Index lookback = std::stol(expect_line(in, "lookback"));
    const Index horizon = std::stol(expect_line(in, "horizon"));
    std::istringstream ladder_line(expect_line(in, "ladder"));
    std::vector<Index> lengths;
    for (Index s; ladder_line >> s;) lengths.push_back(s);
    const bool mask_enabled = expect_line(in, "mask_enabled") == "1";

    ModelParams params;
    params.config = make_config(lookback, horizon, lengths, mask_enabled);
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        ScaleParams sp;
        sp.mask.resize(params.config.ladder.segment_counts()[i], lengths[i]);
        sp.weight.resize(horizon, lookback);
        sp.bias.resize(horizon);
        const std::string prefix = "scale" + std::to_string(i) + ".";
        read_tensor(in, prefix + "mask", sp.mask.data(), sp.mask.rows(), sp.mask.cols());
        read_tensor(in, prefix + "weight", sp.weight.data(), horizon, lookback);
        read_tensor(in, prefix + "bias", sp.bias.data(), horizon, 1);
        params.scales.push_back(std::move(sp));
    }
    expect_line(in, "end");
    return params;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write checkpoint " + path.string());
    }
    write_checkpoint(out, params);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open checkpoint " + path.string());
    }
    return read_checkpoint(in);
}

}  // namespace mmfnet::model
