#include "stcad/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace stcad {

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* want) {
    throw ConfigError("key '" + std::string(key) + "': expected " + want + ", got '" +
                      std::string(value) + "'");
}

template <typename T>
T parse_unsigned(std::string_view key, std::string_view v) {
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "a nonnegative integer");
    return out;
}

double parse_real(std::string_view key, std::string_view v) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, "a number");
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(key, v, "a boolean");
}

std::string fmt(double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

std::string fmt(bool b) { return b ? "true" : "false"; }

struct Field {
    std::string key;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define STCAD_STR(name, member)                                                     \
    Field {                                                                         \
        name, [](RunConfig& c, std::string_view v) { c.member = std::string(v); }, \
            [](const RunConfig& c) { return c.member; }                            \
    }
#define STCAD_SIZE(name, member)                                                              \
    Field {                                                                                   \
        name,                                                                                 \
            [](RunConfig& c, std::string_view v) { c.member = parse_unsigned<std::size_t>(name, v); }, \
            [](const RunConfig& c) { return std::to_string(c.member); }                      \
    }
#define STCAD_REAL(name, member)                                                      \
    Field {                                                                           \
        name, [](RunConfig& c, std::string_view v) { c.member = parse_real(name, v); }, \
            [](const RunConfig& c) { return fmt(c.member); }                         \
    }
#define STCAD_BOOL(name, member)                                                      \
    Field {                                                                           \
        name, [](RunConfig& c, std::string_view v) { c.member = parse_bool(name, v); }, \
            [](const RunConfig& c) { return fmt(c.member); }                         \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        STCAD_STR("graph", graph),
        STCAD_STR("out", out),
        STCAD_STR("checkpoint", checkpoint),
        STCAD_STR("candidates", candidates),
        STCAD_STR("dump_samples", dump_samples),
        STCAD_STR("dump_features", dump_features),
        STCAD_SIZE("snapshot_size", snapshot_size),
        STCAD_SIZE("top_k", top_k),
        STCAD_SIZE("dist_cap", features.dist_cap),
        STCAD_SIZE("delta_t", features.delta_t),
        STCAD_REAL("pagerank_damping", features.damping),
        STCAD_REAL("pagerank_tol", features.pagerank_tol),
        STCAD_SIZE("pagerank_max_iter", features.pagerank_max_iter),
        Field{"d",
              [](RunConfig& c, std::string_view v) {
                  c.model.d = parse_unsigned<std::size_t>("d", v);
              },
              [](const RunConfig& c) { return std::to_string(c.model.d); }},
        STCAD_SIZE("heads", model.heads),
        STCAD_SIZE("layers", model.layers),
        STCAD_SIZE("C", model.C),
        STCAD_SIZE("T", model.T),
        STCAD_SIZE("d_ff", model.d_ff),
        STCAD_BOOL("use_level1", model.use_level1),
        STCAD_BOOL("use_level2", model.use_level2),
        STCAD_BOOL("use_pe_tmp", model.use_pe_tmp),
        STCAD_BOOL("use_pe_rel", model.use_pe_rel),
        STCAD_BOOL("use_contextual_loss", model.use_contextual_loss),
        STCAD_BOOL("residual_uses_input", model.residual_uses_input),
        STCAD_SIZE("epochs", train.epochs),
        STCAD_REAL("lr", train.lr),
        STCAD_REAL("lambda", train.lambda),
        STCAD_SIZE("batch_size", train.batch_size),
        Field{"seed",
              [](RunConfig& c, std::string_view v) {
                  c.train.seed = parse_unsigned<std::uint64_t>("seed", v);
              },
              [](const RunConfig& c) { return std::to_string(c.train.seed); }},
        STCAD_REAL("inject_rate", train.inject_rate),
        STCAD_REAL("split_fraction", train.split_fraction),
        STCAD_SIZE("eval_every", train.eval_every),
        STCAD_BOOL("resample_negatives_each_epoch", train.resample_negatives_each_epoch),
    };
    return table;
}

#undef STCAD_STR
#undef STCAD_SIZE
#undef STCAD_REAL
#undef STCAD_BOOL

const Field* find_field(std::string_view key) {
    for (const auto& f : fields()) {
        if (f.key == key) return &f;
    }
    return nullptr;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
    const Field* f = find_field(key);
    if (!f) throw ConfigError("unknown config key '" + std::string(key) + "'");
    f->set(*this, trim(value));
    // d_ff follows d (4d) unless it was given explicitly
    if (key == "d_ff") d_ff_explicit_ = true;
    if (key == "d" && !d_ff_explicit_) model.d_ff = 4 * model.d;
}

std::string RunConfig::get(std::string_view key) const {
    const Field* f = find_field(key);
    if (!f) throw ConfigError("unknown config key '" + std::string(key) + "'");
    return f->get(*this);
}

bool RunConfig::has_key(std::string_view key) { return find_field(key) != nullptr; }

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> out = [] {
        std::vector<std::string> k;
        for (const auto& f : fields()) k.push_back(f.key);
        return k;
    }();
    return out;
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
    return out;
}

std::vector<std::string> RunConfig::echo() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries()) out.push_back(k + " = " + v);
    return out;
}

void RunConfig::validate() const {
    try {
        model.validate();
        train.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (snapshot_size == 0) throw ConfigError("snapshot_size must be positive");
    if (features.delta_t == 0) throw ConfigError("delta_t must be at least 1");
    if (!(features.damping > 0.0 && features.damping < 1.0)) {
        throw ConfigError("pagerank_damping must lie in (0, 1)");
    }
}

std::vector<ConfigEntry> read_config_entries(std::istream& in) {
    std::vector<ConfigEntry> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        auto key = trim(view.substr(0, eq));
        if (!RunConfig::has_key(key)) {
            throw ConfigError("line " + std::to_string(line_no) + ": unknown config key '" +
                              std::string(key) + "'");
        }
        out.push_back({std::string(key), std::string(trim(view.substr(eq + 1))), line_no});
    }
    return out;
}

std::vector<ConfigEntry> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return read_config_entries(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void apply_config_stream(RunConfig& config, std::istream& in) {
    for (const auto& e : read_config_entries(in)) {
        try {
            config.set(e.key, e.value);
        } catch (const ConfigError& err) {
            throw ConfigError("line " + std::to_string(e.line) + ": " + err.what());
        }
    }
}

void apply_config_file(RunConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    apply_config_stream(config, in);
}

RunConfig parse_config(std::string_view text) {
    RunConfig c;
    std::istringstream in{std::string(text)};
    apply_config_stream(c, in);
    return c;
}

const std::vector<std::string>& ablation_names() {
    static const std::vector<std::string> names = {
        "no-coupling-features", "no-level1-features", "no-positional-encoding",
        "no-pe-tmp",            "no-pe-rel",          "no-contextual-loss",
    };
    return names;
}

void apply_ablation(RunConfig& config, std::string_view name) {
    if (name == "no-coupling-features") {
        config.model.use_level2 = false;
    } else if (name == "no-level1-features") {
        config.model.use_level1 = false;
    } else if (name == "no-positional-encoding") {
        config.model.use_pe_tmp = false;
        config.model.use_pe_rel = false;
    } else if (name == "no-pe-tmp") {
        config.model.use_pe_tmp = false;
    } else if (name == "no-pe-rel") {
        config.model.use_pe_rel = false;
    } else if (name == "no-contextual-loss") {
        config.model.use_contextual_loss = false;
    } else {
        throw ConfigError("unknown ablation '" + std::string(name) + "'");
    }
}

}  // namespace stcad
