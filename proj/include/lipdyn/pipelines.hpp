#pragma once

// Scenario pipelines behind the CLI: each consumes a validated JSON config,
// writes artifacts under an output directory, and returns named checks.

#include <string>
#include <vector>

#include "lipdyn/io.hpp"
#include "lipdyn/models.hpp"

namespace lipdyn {

struct CheckRow {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct PipelineResult {
    std::string pipeline;
    std::vector<CheckRow> checks;
    Json summary;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

// Hash of the canonical config serialization; stamped into the manifest.
std::string config_hash(const Json& config);

// Throws ConfigInvalid with a field path when the config does not validate.
void validate_config(const Json& config);

// Dispatch on config["pipeline"]: one of split, manifold, certify, continue,
// transversal, morse-smale, stability, chafee, nemytskii.
PipelineResult run_pipeline(const Json& config, const std::string& out_dir);

}  // namespace lipdyn
