#pragma once

// Flat run configuration: `key = value` lines, '#' starts a comment. Unknown
// keys are rejected. The same keys double as command-line flags.

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stcad/features.hpp"
#include "stcad/model.hpp"
#include "stcad/training.hpp"

namespace stcad {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string graph;
    std::string out = "run";
    std::string checkpoint;
    std::string candidates;
    std::string dump_samples;
    std::string dump_features;
    std::size_t snapshot_size = 4000;
    std::size_t top_k = 5;

    FeatureConfig features;
    ModelConfig model;
    TrainConfig train;

    /// Sets one key from its textual value. Throws ConfigError for unknown
    /// keys and unparsable values.
    void set(std::string_view key, std::string_view value);
    std::string get(std::string_view key) const;
    static bool has_key(std::string_view key);
    static const std::vector<std::string>& keys();

    /// Every key with its current value, in a fixed order.
    std::vector<std::pair<std::string, std::string>> entries() const;
    /// entries() as `key = value` lines.
    std::vector<std::string> echo() const;

    /// Cross-field checks (model sizes, rates, fractions).
    void validate() const;

private:
    bool d_ff_explicit_ = false;
};

struct ConfigEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

/// Parses `key = value` lines. Unknown keys are rejected with their line.
std::vector<ConfigEntry> read_config_entries(std::istream& in);
std::vector<ConfigEntry> read_config_file(const std::string& path);

/// Applies `key = value` lines from a stream on top of `config`.
void apply_config_stream(RunConfig& config, std::istream& in);
void apply_config_file(RunConfig& config, const std::string& path);
RunConfig parse_config(std::string_view text);

/// Named ablation variants: no-coupling-features, no-level1-features,
/// no-positional-encoding, no-pe-tmp, no-pe-rel, no-contextual-loss.
void apply_ablation(RunConfig& config, std::string_view name);
const std::vector<std::string>& ablation_names();

}  // namespace stcad
