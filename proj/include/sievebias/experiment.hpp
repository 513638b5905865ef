#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sievebias/toml.hpp"

namespace sievebias {

enum class ExperimentMode { audit, certify, simulate, rates, verify_bounds };

ExperimentMode parse_mode(const std::string& name);
std::string mode_name(ExperimentMode mode);

struct ExperimentConfig {
    ExperimentMode mode = ExperimentMode::audit;
    std::filesystem::path config_path;
    std::string config_text;
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 1;
    int threads = 0;  // 0: library default
    bool svg = true;
    TomlTable toml;
};

struct CliOverrides {
    std::string mode;  // subcommand name; empty means take the config's
    std::filesystem::path out_dir;
    bool has_out = false;
    std::uint64_t seed = 0;
    bool has_seed = false;
    int threads = 0;
    bool has_threads = false;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        const CliOverrides& overrides);

// Runs the experiment, writing CSV/SVG artifacts and a manifest under
// config.out_dir. Throws config_error for configuration problems and the
// numerical error types for runtime failures.
void run_experiment(const ExperimentConfig& config);

// FNV-1a 64-bit, used to stamp the manifest with the config identity.
std::uint64_t fnv1a64(const std::string& text);

}  // namespace sievebias
