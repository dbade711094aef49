#include "stcad/checkpoint.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace stcad {

namespace {

constexpr const char* kHeader = "STCKPT v1";

double parse_double(const std::string& tok, const std::string& name) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw CheckpointError("parameter '" + name + "': bad value '" + tok + "'");
    }
    return v;
}

std::size_t parse_count(const std::string& tok, const std::string& name) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw CheckpointError("parameter '" + name + "': bad dimension '" + tok + "'");
    }
    return v;
}

}  // namespace

const CheckpointRecord* Checkpoint::find(const std::string& name) const {
    for (const auto& r : records) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

void write_checkpoint(std::ostream& out, std::span<const tensor::Parameter> params,
                      const std::vector<std::string>& comments) {
    out << kHeader << '\n';
    for (const auto& c : comments) out << '#' << c << '\n';
    char buf[32];
    for (const auto& p : params) {
        const auto& shape = p.tensor.shape();
        out << p.name << ' ' << shape.size();
        for (auto d : shape) out << ' ' << d;
        for (double v : p.tensor.values()) {
            std::snprintf(buf, sizeof buf, " %.17g", v);
            out << buf;
        }
        out << '\n';
    }
}

Checkpoint read_checkpoint(std::istream& in) {
    std::string line;
    while (std::getline(in, line) && line.find_first_not_of(" \t\r") == std::string::npos) {
    }
    {
        std::istringstream hs(line);
        std::string magic, version;
        hs >> magic >> version;
        if (magic != "STCKPT") throw CheckpointError("not a checkpoint (missing STCKPT header)");
        if (version != "v1") throw CheckpointError("unsupported checkpoint version '" + version + "'");
    }

    Checkpoint ckpt;
    // Records may span lines, so read token-wise after peeling comment lines.
    std::string body;
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t\r");
        if (first != std::string::npos && line[first] == '#') {
            ckpt.comments.push_back(line.substr(first + 1));
            continue;
        }
        body += line;
        body += '\n';
    }

    std::istringstream ts(body);
    std::unordered_set<std::string> seen;
    std::string name;
    while (ts >> name) {
        std::string tok;
        if (!(ts >> tok)) throw CheckpointError("parameter '" + name + "': truncated record");
        CheckpointRecord rec;
        rec.name = name;
        const auto rank = parse_count(tok, name);
        for (std::size_t k = 0; k < rank; ++k) {
            if (!(ts >> tok)) throw CheckpointError("parameter '" + name + "': truncated shape");
            rec.shape.push_back(parse_count(tok, name));
        }
        const auto n = tensor::shape_size(rec.shape);
        rec.values.reserve(n);
        for (std::size_t k = 0; k < n; ++k) {
            if (!(ts >> tok)) throw CheckpointError("parameter '" + name + "': truncated values");
            rec.values.push_back(parse_double(tok, name));
        }
        if (!seen.insert(name).second) {
            throw CheckpointError("parameter '" + name + "' appears twice");
        }
        ckpt.records.push_back(std::move(rec));
    }
    return ckpt;
}

void save_checkpoint(const std::string& path, std::span<const tensor::Parameter> params,
                     const std::vector<std::string>& comments) {
    std::ofstream out(path);
    if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
    write_checkpoint(out, params, comments);
    if (!out) throw CheckpointError("error writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
    return read_checkpoint(in);
}

void restore_parameters(const Checkpoint& ckpt, std::span<tensor::Parameter> params) {
    for (auto& p : params) {
        const auto* rec = ckpt.find(p.name);
        if (!rec) throw CheckpointError("checkpoint has no parameter '" + p.name + "'");
        if (rec->shape != p.tensor.shape()) {
            throw CheckpointError("parameter '" + p.name + "': shape " +
                                  tensor::shape_string(rec->shape) + " does not match model " +
                                  tensor::shape_string(p.tensor.shape()));
        }
        auto dst = p.tensor.mutable_values();
        std::copy(rec->values.begin(), rec->values.end(), dst.begin());
    }
    if (ckpt.records.size() != params.size()) {
        throw CheckpointError("checkpoint holds " + std::to_string(ckpt.records.size()) +
                              " parameters, model expects " + std::to_string(params.size()));
    }
}

}  // namespace stcad
