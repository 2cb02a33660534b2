#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "octarl/critics.hpp"
#include "octarl/grpo.hpp"

namespace octarl {

nlohmann::json grpo_to_json(const GrpoConfig& cfg);

// Strict parse: every key must name a GrpoConfig field; unknown keys are
// rejected. Missing keys keep their defaults.
GrpoConfig grpo_from_json(const nlohmann::json& j);

// Overlays the published preset onto an existing config: group size, clip,
// KL coefficient, learning rate, warmup, gradient clip, KL cap, Adam betas,
// weight decay, and uniform critic weights. Run-specific fields (steps, seed,
// temperature) are left alone.
void apply_paper_hparams(GrpoConfig& cfg, CriticWeights& weights);

// Builds the four critic slots from a JSON description:
//   { "weights": [wh,wv,wx,wp],
//     "physical_lambda": [l1,l2,l3],
//     "h"|"v"|"x"|"p": {"kind": "...", ...} }
// Kinds: constant(value), occupancy_band(lo,hi), seeded_hash_noise(sigma,seed),
// oracle_iou(template? else per-prompt templates), physical, external(cmd[],
// workdir). Relative paths resolve against base_dir.
CriticStack build_critic_stack(const nlohmann::json& spec, const std::string& base_dir,
                               const std::map<int, VoxelGrid>& prompt_templates);

// Whole-run training configuration. Schema-validated on load; unknown keys are
// rejected everywhere.
struct RunConfig {
    GrpoConfig grpo;
    int depth = 2;
    std::string codebook_path;
    int semantic_vocab = 64;
    int semantic_len = 8;
    int width = 32;
    int window = 8;
    nlohmann::json critics = nlohmann::json::object();
    std::vector<std::pair<int, std::string>> prompts;  // id -> template path
    std::string base_dir = ".";

    static RunConfig load(const std::string& path);
    std::string resolve(const std::string& path) const;  // against base_dir
};

}  // namespace octarl
