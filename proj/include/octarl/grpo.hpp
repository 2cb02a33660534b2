#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "octarl/codebook.hpp"
#include "octarl/critics.hpp"
#include "octarl/policy.hpp"

namespace octarl {

// Trainer hyperparameters. Defaults are desk-scale; paper_hparams() is the
// published preset (tuned for a far larger model, so its learning rate is
// documentation more than advice here).
struct GrpoConfig {
    int group_size = 4;         // rollouts per prompt per step
    double clip_epsilon = 0.1;  // importance-ratio clip
    double kl_beta = 0.01;      // KL penalty coefficient
    double lr_base = 1e-2;
    int warmup_steps = 50;
    int total_steps = 200;
    double grad_clip_norm = 1.0;
    double kl_cap_factor = 1.2;
    double kl_ema_decay = 0.99;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.98;
    double weight_decay = 0.01;
    double temperature = 1.0;
    uint64_t seed = 42;

    void validate() const;
    static GrpoConfig paper_hparams();
};

struct GroupBatch {
    int prompt_id = 0;
    std::vector<Rollout> rollouts;
    std::vector<RewardBreakdown> breakdowns;
    std::vector<double> rewards;
    std::vector<double> advantages;
};

// Adam moments plus the KL tracking state.
struct TrainState {
    int64_t adam_t = 0;
    PolicyGrad m, v;
    double kl_ema = 0.0;
    bool kl_ema_primed = false;  // seeded by the first nonzero measurement
};

struct LogRow {
    int64_t step = 0;
    double lr = 0, r_h = 0, r_v = 0, r_x = 0, r_p = 0, reward = 0, kl = 0, objective = 0;
};

// Group-standardized advantages: (R_i - mean) / population std; an (almost)
// constant group gets all zeros instead of a blow-up.
std::vector<double> advantages(const std::vector<double>& rewards);

// Per-token importance ratios exp(logp_new - logp_old).
std::vector<double> token_ratio(const std::vector<double>& logp_new,
                                const std::vector<double>& logp_old);

// Mean per-token k3 estimate exp(delta) - delta - 1 with
// delta = logp_ref - logp_new; always >= 0 and 0 at identity.
double kl_estimate(const std::vector<double>& logp_new, const std::vector<double>& logp_ref);

struct ObjectiveResult {
    double j = 0;       // clipped surrogate minus KL penalty, token-mean
    double kl = 0;      // mean k3 against the reference
    PolicyGrad grad;    // ascent direction of j
};

// Token-mean of min(r*A, clip(r)*A) - beta*k3 over the group. Tokens where the
// clipped branch wins contribute no surrogate gradient; the KL term always
// does.
ObjectiveResult grpo_objective(const GroupBatch& group, const PolicyParams& params,
                               const PolicyParams& ref, const GrpoConfig& cfg);

// Linear warmup to lr_base, then cosine decay to zero at total_steps.
double lr_schedule(int64_t step, const GrpoConfig& cfg);

// Decoupled-weight-decay Adam descent step; the gradient is pre-scaled so its
// global L2 norm is at most grad_clip_norm.
void adamw_step(PolicyParams& params, PolicyGrad grad, TrainState& state, double lr,
                const GrpoConfig& cfg);

// Turns the geometric segment of a rollout back into shape space:
// indices -> codebook features -> latent -> voxel grid.
VoxelGrid decode_rollout(const Rollout& rollout, const PolicyShape& shape, const Codebook& codebook,
                         int depth);

struct TrainResult {
    PolicyParams params;
    TrainState state;
    std::vector<LogRow> log;
};

// Full training loop: snapshot the sampling policy each step, roll out a group
// per prompt, score with the critic stack, standardize rewards, and apply one
// clipped-surrogate update per group. A group whose measured KL exceeds
// kl_cap_factor times its EMA forgoes the full-rate update and is applied at
// half the scheduled lr (the log records the rate actually used).
// Bit-reproducible for a fixed seed.
TrainResult train(const GrpoConfig& cfg, const PolicyShape& shape, const CriticStack& critics,
                  const std::vector<int>& prompt_ids, const Codebook& codebook, int depth);

void write_log_csv(const std::string& path, const std::vector<LogRow>& rows);

}  // namespace octarl
