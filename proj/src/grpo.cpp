#include "octarl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "octarl/mesh.hpp"
#include "octarl/octant_codec.hpp"

namespace octarl {

void GrpoConfig::validate() const {
    require(group_size >= 2, "group_size must be >= 2");
    require(clip_epsilon > 0.0 && clip_epsilon < 1.0, "clip_epsilon must be in (0,1)");
    require(kl_beta >= 0.0, "kl_beta must be nonnegative");
    require(lr_base > 0.0, "lr_base must be positive");
    require(warmup_steps >= 0 && total_steps >= 1, "bad step counts");
    require(grad_clip_norm > 0.0, "grad_clip_norm must be positive");
    require(kl_cap_factor >= 1.0, "kl_cap_factor must be >= 1");
    require(kl_ema_decay > 0.0 && kl_ema_decay < 1.0, "kl_ema_decay must be in (0,1)");
    require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
            "adam betas must be in [0,1)");
    require(weight_decay >= 0.0, "weight_decay must be nonnegative");
    require(temperature > 0.0, "temperature must be positive");
}

GrpoConfig GrpoConfig::paper_hparams() {
    GrpoConfig cfg;
    cfg.group_size = 4;
    cfg.clip_epsilon = 0.1;
    cfg.kl_beta = 0.01;
    cfg.lr_base = 1e-6;
    cfg.warmup_steps = 2000;
    cfg.total_steps = 40000;
    cfg.grad_clip_norm = 1.0;
    cfg.kl_cap_factor = 1.2;
    cfg.kl_ema_decay = 0.99;
    cfg.adam_beta1 = 0.9;
    cfg.adam_beta2 = 0.98;
    cfg.weight_decay = 0.01;
    cfg.temperature = 1.0;
    cfg.seed = 42;
    return cfg;
}

std::vector<double> advantages(const std::vector<double>& rewards) {
    require(rewards.size() >= 2, "advantages: need a group of at least 2");
    for (double r : rewards) require(std::isfinite(r), "advantages: non-finite reward");
    const double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= n;  // population variance
    const double sigma = std::sqrt(var);
    std::vector<double> out(rewards.size(), 0.0);
    if (sigma < 1e-8) return out;
    for (size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sigma;
    return out;
}

std::vector<double> token_ratio(const std::vector<double>& logp_new,
                                const std::vector<double>& logp_old) {
    require(logp_new.size() == logp_old.size(), "token_ratio: length mismatch");
    std::vector<double> out(logp_new.size());
    for (size_t t = 0; t < out.size(); ++t) out[t] = std::exp(logp_new[t] - logp_old[t]);
    return out;
}

double kl_estimate(const std::vector<double>& logp_new, const std::vector<double>& logp_ref) {
    require(logp_new.size() == logp_ref.size(), "kl_estimate: length mismatch");
    require(!logp_new.empty(), "kl_estimate: empty sequence");
    double total = 0.0;
    for (size_t t = 0; t < logp_new.size(); ++t) {
        const double delta = logp_ref[t] - logp_new[t];
        total += std::exp(delta) - delta - 1.0;
    }
    return total / static_cast<double>(logp_new.size());
}

ObjectiveResult grpo_objective(const GroupBatch& group, const PolicyParams& params,
                               const PolicyParams& ref, const GrpoConfig& cfg) {
    const size_t g = group.rollouts.size();
    require(g >= 2, "grpo_objective: empty or singleton group");
    require(group.advantages.size() == g, "grpo_objective: advantages not computed");

    int64_t total_tokens = 0;
    for (const auto& r : group.rollouts) {
        require(!r.tokens.empty() && r.logp_old.size() == r.tokens.size(),
                "grpo_objective: rollout missing logp_old");
        total_tokens += static_cast<int64_t>(r.tokens.size());
    }
    const double inv_tokens = 1.0 / static_cast<double>(total_tokens);

    ObjectiveResult result;
    result.grad = PolicyGrad::zeros(params.shape);
    double kl_sum = 0.0;
    std::vector<double> weights;
    for (size_t i = 0; i < g; ++i) {
        const Rollout& rollout = group.rollouts[i];
        const double adv = group.advantages[i];
        const auto logp_new = sequence_logprob(params, rollout.tokens, rollout.prompt_id);
        const auto logp_ref = sequence_logprob(ref, rollout.tokens, rollout.prompt_id);
        kl_sum += kl_estimate(logp_new, logp_ref);

        weights.assign(rollout.tokens.size(), 0.0);
        for (size_t t = 0; t < rollout.tokens.size(); ++t) {
            const double ratio = std::exp(logp_new[t] - rollout.logp_old[t]);
            const double clipped =
                std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
            const double surr_raw = ratio * adv;
            const double surr_clip = clipped * adv;
            const double delta = logp_ref[t] - logp_new[t];
            const double k3 = std::exp(delta) - delta - 1.0;
            result.j += std::min(surr_raw, surr_clip) - cfg.kl_beta * k3;
            // Surrogate gradient only when the unclipped branch is selected;
            // the k3 penalty always pulls toward the reference.
            double coeff = cfg.kl_beta * (std::exp(delta) - 1.0);
            if (surr_raw <= surr_clip) coeff += adv * ratio;
            weights[t] = coeff;
        }
        accumulate_logprob_grad(params, rollout.tokens, rollout.prompt_id, weights, inv_tokens,
                                result.grad);
    }
    result.j *= inv_tokens;
    result.kl = kl_sum / static_cast<double>(g);
    return result;
}

double lr_schedule(int64_t step, const GrpoConfig& cfg) {
    require(step >= 0 && step <= cfg.total_steps, "lr_schedule: step out of range");
    const int64_t w = cfg.warmup_steps;
    if (w > 0 && step <= w) return cfg.lr_base * static_cast<double>(step) / static_cast<double>(w);
    if (step >= cfg.total_steps) return 0.0;
    const double progress =
        static_cast<double>(step - w) / static_cast<double>(cfg.total_steps - w);
    return cfg.lr_base * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

namespace {

void adamw_table(std::vector<double>& param, const std::vector<double>& grad,
                 std::vector<double>& m, std::vector<double>& v, double lr,
                 const GrpoConfig& cfg, double bc1, double bc2) {
    constexpr double kEps = 1e-8;
    for (size_t i = 0; i < param.size(); ++i) {
        m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i];
        v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        param[i] -= lr * (mhat / (std::sqrt(vhat) + kEps) + cfg.weight_decay * param[i]);
    }
}

}  // namespace

void adamw_step(PolicyParams& params, PolicyGrad grad, TrainState& state, double lr,
                const GrpoConfig& cfg) {
    if (state.m.tok_emb.empty()) {
        state.m = PolicyGrad::zeros(params.shape);
        state.v = PolicyGrad::zeros(params.shape);
    }
    require(state.m.tok_emb.size() == params.tok_emb.size() &&
                state.m.out_w.size() == params.out_w.size(),
            "adamw_step: moment shape mismatch");
    require(grad.tok_emb.size() == params.tok_emb.size() &&
                grad.pos_emb.size() == params.pos_emb.size() &&
                grad.cond_emb.size() == params.cond_emb.size() &&
                grad.out_w.size() == params.out_w.size(),
            "adamw_step: gradient shape mismatch");
    const double norm = grad.global_norm();
    require(std::isfinite(norm), "adamw_step: non-finite gradient");
    if (norm > cfg.grad_clip_norm) grad.scale(cfg.grad_clip_norm / norm);

    state.adam_t += 1;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.adam_t));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.adam_t));
    adamw_table(params.tok_emb, grad.tok_emb, state.m.tok_emb, state.v.tok_emb, lr, cfg, bc1, bc2);
    adamw_table(params.pos_emb, grad.pos_emb, state.m.pos_emb, state.v.pos_emb, lr, cfg, bc1, bc2);
    adamw_table(params.cond_emb, grad.cond_emb, state.m.cond_emb, state.v.cond_emb, lr, cfg, bc1,
                bc2);
    adamw_table(params.out_w, grad.out_w, state.m.out_w, state.v.out_w, lr, cfg, bc1, bc2);
}

VoxelGrid decode_rollout(const Rollout& rollout, const PolicyShape& shape, const Codebook& codebook,
                         int depth) {
    const int grid_side = 1 << depth;
    const size_t m = static_cast<size_t>(grid_side) * grid_side * grid_side;
    require(static_cast<size_t>(shape.geometric_len) == m, "decode_rollout: depth/shape mismatch");
    require(rollout.tokens.size() == static_cast<size_t>(shape.seq_len()),
            "decode_rollout: bad rollout length");
    OctantSequence seq;
    seq.depth = depth;
    seq.positions = morton_enumeration(grid_side);
    seq.indices.resize(m);
    for (size_t i = 0; i < m; ++i) {
        const int id = rollout.tokens[static_cast<size_t>(shape.semantic_len) + i];
        const int index = id - shape.semantic_vocab;
        require(index >= 0 && index < codebook.k, "decode_rollout: geometric id out of range");
        seq.indices[i] = static_cast<uint16_t>(index);
    }
    return decode_latent(ungroup(dequantize(seq, codebook)));
}

TrainResult train(const GrpoConfig& cfg, const PolicyShape& shape, const CriticStack& critics,
                  const std::vector<int>& prompt_ids, const Codebook& codebook, int depth) {
    cfg.validate();
    shape.validate();
    require(!prompt_ids.empty(), "train: need at least one prompt");
    require(depth >= 1 && depth <= 4, "train: depth out of range");
    const int grid_side = 1 << depth;
    require(shape.geometric_len == grid_side * grid_side * grid_side,
            "train: shape.geometric_len must be 8^depth");
    require(shape.geometric_vocab == codebook.k,
            "train: geometric vocabulary must match codebook size");
    for (int pid : prompt_ids)
        require(pid >= 0 && pid < shape.prompts, "train: prompt id outside shape.prompts");

    TrainResult result;
    result.params = PolicyParams::init(shape, cfg.seed);
    const PolicyParams ref = result.params;
    result.state.m = PolicyGrad::zeros(shape);
    result.state.v = PolicyGrad::zeros(shape);
    Rng sampler_seeds(cfg.seed ^ 0xc0ffee5eedULL);

    for (int64_t step = 0; step < cfg.total_steps; ++step) {
        const PolicyParams snapshot = result.params;
        const double lr = lr_schedule(step, cfg);
        LogRow row;
        row.step = step;
        double lr_used_sum = 0.0;
        int rollout_count = 0;

        for (int pid : prompt_ids) {
            GroupBatch group;
            group.prompt_id = pid;
            for (int i = 0; i < cfg.group_size; ++i) {
                Rollout rollout =
                    sample_sequence(snapshot, pid, cfg.temperature, sampler_seeds.next_u64());
                const VoxelGrid grid = decode_rollout(rollout, shape, codebook, depth);
                const TriMesh mesh = extract_surface(grid);
                const Artifact artifact{&grid, &mesh, pid};
                RewardBreakdown breakdown;
                try {
                    breakdown = critics.score_all(artifact);
                } catch (const Error& e) {
                    fail("critic failure at step " + std::to_string(step) + ", prompt " +
                         std::to_string(pid) + ", rollout " + std::to_string(i) + ": " + e.what());
                }
                row.r_h += breakdown.r_h;
                row.r_v += breakdown.r_v;
                row.r_x += breakdown.r_x;
                row.r_p += breakdown.r_p;
                row.reward += breakdown.aggregate;
                ++rollout_count;
                group.rewards.push_back(breakdown.aggregate);
                group.breakdowns.push_back(breakdown);
                group.rollouts.push_back(std::move(rollout));
            }
            group.advantages = advantages(group.rewards);

            ObjectiveResult objective = grpo_objective(group, result.params, ref, cfg);
            row.kl += objective.kl;
            row.objective += objective.j;

            // Cap rule: when the measured KL runs past kl_cap_factor times its
            // EMA, the full-rate update is skipped and the group is applied at
            // half the scheduled rate instead. The EMA is primed by the first
            // nonzero measurement so step 0 (KL exactly 0) cannot trip it.
            bool capped = false;
            if (result.state.kl_ema_primed) {
                capped = objective.kl > cfg.kl_cap_factor * result.state.kl_ema;
                result.state.kl_ema = cfg.kl_ema_decay * result.state.kl_ema +
                                      (1.0 - cfg.kl_ema_decay) * objective.kl;
            } else if (objective.kl > 0.0) {
                result.state.kl_ema = objective.kl;
                result.state.kl_ema_primed = true;
            }
            const double lr_used = capped ? lr * 0.5 : lr;
            lr_used_sum += lr_used;
            objective.grad.scale(-1.0);  // ascend j with a descent optimizer
            adamw_step(result.params, std::move(objective.grad), result.state, lr_used, cfg);
        }

        const double groups = static_cast<double>(prompt_ids.size());
        row.lr = lr_used_sum / groups;
        row.r_h /= rollout_count;
        row.r_v /= rollout_count;
        row.r_x /= rollout_count;
        row.r_p /= rollout_count;
        row.reward /= rollout_count;
        row.kl /= groups;
        row.objective /= groups;
        result.log.push_back(row);
    }
    return result;
}

void write_log_csv(const std::string& path, const std::vector<LogRow>& rows) {
    std::ofstream out(path);
    require(out.good(), "cannot open for writing: " + path);
    out << "step,lr,r_h,r_v,r_x,r_p,reward,kl,objective\n";
    out.precision(10);
    for (const auto& r : rows)
        out << r.step << ',' << r.lr << ',' << r.r_h << ',' << r.r_v << ',' << r.r_x << ',' << r.r_p
            << ',' << r.reward << ',' << r.kl << ',' << r.objective << '\n';
    require(out.good(), "write failed: " + path);
}

}  // namespace octarl
