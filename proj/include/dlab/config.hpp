#pragma once

#include <array>
#include <map>
#include <stdexcept>
#include <string>

#include "dlab/fairaudit.hpp"
#include "dlab/synthgen.hpp"
#include "dlab/trainer.hpp"

namespace dlab::config {

// Configs are flat key=value text with section prefixes, e.g.
//   gen.confound_rho=0.9
//   train.mode=disentangled
// Parsing is strict: unknown keys and malformed values are errors.

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
    synthgen::GeneratorConfig gen;
    std::array<double, 3> fractions = {0.70, 0.10, 0.20};
    trainer::TrainConfig train;
    fairaudit::BootstrapOptions audit;
    std::map<std::string, std::string> raw;  // parsed keys, for manifest echo
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace dlab::config
