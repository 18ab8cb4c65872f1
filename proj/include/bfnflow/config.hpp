#pragma once

#include <map>
#include <string>

#include "bfnflow/denoiser.hpp"
#include "bfnflow/engine.hpp"

namespace bfnflow::config {

// Flat key = value file; '#' starts a comment. Every scheduler constant and
// loss weight lives here so one file pins a full run.
struct Settings {
    engine::EngineConfig engine;
    denoise::NoisyOracleConfig noisy;
    denoise::NnMetricWeights knn;
};

/// Parse the file contents over the defaults. Unknown keys and malformed
/// lines throw std::runtime_error naming the offender.
Settings parse(const std::string& text);

Settings load_file(const std::string& path);

/// Serialize every key (the written file parses back identically).
std::string dump(const Settings& s);

}  // namespace bfnflow::config
