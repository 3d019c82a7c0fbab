#pragma once

#include "smt/training.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace smt {

/// Raised on any malformed configuration; the message names the offending
/// field and the constraint it violated.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Everything a run needs: the full training/model/environment stack, the
/// seed set, and evaluation settings. Every tunable has a documented default
/// and can be overridden by name from the JSON config file.
struct ExperimentConfig {
    // "full" (d=128, 8 heads) or "desk" (d=64, 4 heads); matches the struct
    // defaults below, which are the full-size dimensions.
    std::string profile = "full";
    TrainConfig train;
    std::vector<uint64_t> seeds{0};
    int eval_episodes_per_plan = 10;
    double eval_temperature = 0.5;
    bool pretrain = true; // capacity-1 embedding pretraining stage
    bool freeze_embeddings = true;
    // Ablation sweep grids.
    std::vector<int> capacity_sweep{50, 100, 200, 300, 400, 500};
    std::vector<double> noise_sweep{0.0, 0.25, 0.5, 0.75, 1.0};

    void validate() const;
};

/// Applies the named dimension preset on top of the current values.
void apply_profile(ExperimentConfig& cfg, const std::string& profile);

/// Parses a JSON config text. Unknown keys, type mismatches and range
/// violations raise ConfigError with a field-level message. Missing keys
/// keep their defaults.
ExperimentConfig parse_experiment_config(const std::string& json_text);

/// Reads and parses the file at `path`; a missing file raises ConfigError
/// naming the path.
ExperimentConfig load_experiment_config(const std::string& path);

/// Serializes the fully resolved config (all defaults expanded) as
/// deterministic, human-readable JSON; parse(resolve(c)) == c.
std::string resolved_config_json(const ExperimentConfig& cfg);

const char* policy_kind_name(PolicyKind k);
PolicyKind policy_kind_from_name(const std::string& s);
const char* center_kind_name(CenterKind k);
CenterKind center_kind_from_name(const std::string& s);
const char* temporal_mode_name(TemporalMode m);
TemporalMode temporal_mode_from_name(const std::string& s);

} // namespace smt
