#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "stcad/graph.hpp"

namespace stcad {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'T', 'C', 'G'};

static_assert(std::endian::native == std::endian::little,
              "graph serialization assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw GraphError("truncated graph file");
    }
    return value;
}

}  // namespace

void write_graph(std::ostream& out, const DynamicGraph& graph, std::size_t snapshot_size) {
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kGraphFormatVersion);
    put<std::uint64_t>(out, snapshot_size);
    put<std::uint64_t>(out, graph.node_count());
    for (const auto& label : graph.labels()) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(label.size()));
        out.write(label.data(), static_cast<std::streamsize>(label.size()));
    }
    put<std::uint64_t>(out, graph.edge_count());
    for (const auto& e : graph.edges()) {
        put<std::uint32_t>(out, e.source);
        put<std::uint32_t>(out, e.target);
        put<double>(out, e.timestamp);
    }
    put<std::uint64_t>(out, graph.self_loops_dropped());
    if (!out) throw GraphError("failed writing graph");
}

StoredGraph read_graph(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw GraphError("not an STCG graph file (bad magic)");
    }
    auto version = get<std::uint32_t>(in);
    if (version != kGraphFormatVersion) {
        throw GraphError("unsupported STCG version " + std::to_string(version));
    }
    auto snapshot_size = get<std::uint64_t>(in);
    auto n_nodes = get<std::uint64_t>(in);
    std::vector<std::string> labels;
    labels.reserve(n_nodes);
    for (std::uint64_t v = 0; v < n_nodes; ++v) {
        auto len = get<std::uint32_t>(in);
        std::string label(len, '\0');
        if (!in.read(label.data(), len)) throw GraphError("truncated graph file");
        labels.push_back(std::move(label));
    }
    auto n_edges = get<std::uint64_t>(in);
    std::vector<EdgeInstance> edges;
    edges.reserve(n_edges);
    for (std::uint64_t k = 0; k < n_edges; ++k) {
        EdgeInstance e;
        e.source = get<std::uint32_t>(in);
        e.target = get<std::uint32_t>(in);
        e.timestamp = get<double>(in);
        edges.push_back(e);
    }
    auto loops = get<std::uint64_t>(in);
    return {DynamicGraph(std::move(labels), std::move(edges), loops),
            static_cast<std::size_t>(snapshot_size)};
}

void save_graph(const std::string& path, const DynamicGraph& graph, std::size_t snapshot_size) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw GraphError("cannot open '" + path + "' for writing");
    write_graph(out, graph, snapshot_size);
}

StoredGraph load_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GraphError("cannot open graph file '" + path + "'");
    return read_graph(in);
}

StoredGraph load_any_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GraphError("cannot open '" + path + "'");
    std::array<char, 4> head{};
    in.read(head.data(), head.size());
    bool is_binary = in.gcount() == 4 && head == kMagic;
    in.clear();
    in.seekg(0);
    if (is_binary) return read_graph(in);
    return {parse_edge_stream(in), 0};
}

}  // namespace stcad
