#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "octarl/common.hpp"

namespace octarl {

// Layout of the combined semantic+geometric token policy. Semantic ids occupy
// [0, semantic_vocab), geometric ids [semantic_vocab, combined_vocab), and the
// last embedding row is the begin token.
struct PolicyShape {
    int semantic_vocab = 64;
    int geometric_vocab = 256;
    int width = 32;    // embedding width d
    int window = 8;    // context window over previous tokens
    int semantic_len = 8;
    int geometric_len = 512;
    int prompts = 1;

    int combined_vocab() const { return semantic_vocab + geometric_vocab; }
    int embed_rows() const { return combined_vocab() + 1; }
    int begin_token() const { return combined_vocab(); }
    int seq_len() const { return semantic_len + geometric_len; }
    void validate() const;
};

// Autoregressive linear-softmax policy: the state at step t is the mean of the
// last min(window, t) token embeddings (begin-token embedding at t=0) plus an
// absolute position embedding and a prompt conditioning row; logits are a
// linear read-out masked to the segment that is legal at t.
struct PolicyParams {
    PolicyShape shape;
    std::vector<double> tok_emb;   // embed_rows x width
    std::vector<double> pos_emb;   // seq_len x width
    std::vector<double> cond_emb;  // prompts x width
    std::vector<double> out_w;     // width x combined_vocab, row-major

    static PolicyParams init(const PolicyShape& shape, uint64_t seed);  // U[-0.05, 0.05]
};

// Gradient (or any additive update) with the same table layout as the params.
struct PolicyGrad {
    std::vector<double> tok_emb, pos_emb, cond_emb, out_w;

    static PolicyGrad zeros(const PolicyShape& shape);
    void add_scaled(const PolicyGrad& other, double scale);
    void scale(double factor);
    double global_norm() const;
};

struct Rollout {
    std::vector<int> tokens;       // combined ids, length seq_len
    std::vector<double> logp_old;  // per-token log-probs under the sampling snapshot
    int prompt_id = 0;
};

// Logits over the combined vocabulary at step t given the tokens before it;
// entries of the illegal segment are -infinity.
std::vector<double> step_logits(const PolicyParams& params, const std::vector<int>& prefix, int t,
                                int prompt_id);

// Ancestral sampling. logp_old is recorded at temperature 1 regardless of the
// sampling temperature; identical seeds give identical rollouts.
Rollout sample_sequence(const PolicyParams& params, int prompt_id, double temperature,
                        uint64_t seed);

// Exact per-token log-probabilities of a complete sequence; the sum is the
// joint log-probability. Rejects tokens outside their segment.
std::vector<double> sequence_logprob(const PolicyParams& params, const std::vector<int>& tokens,
                                     int prompt_id);

// Accumulates scale * sum_t weights[t] * grad log pi(tokens_t | .) into grad.
// The linear-softmax structure makes this closed form.
void accumulate_logprob_grad(const PolicyParams& params, const std::vector<int>& tokens,
                             int prompt_id, const std::vector<double>& weights, double scale,
                             PolicyGrad& grad);

// Gradient of the joint log-probability (all token weights 1).
PolicyGrad grad_logprob(const PolicyParams& params, const std::vector<int>& tokens, int prompt_id);

// "CRPP" checkpoint: magic, u32 {semantic_vocab, geometric_vocab, width,
// window, semantic_len, geometric_len, prompts}, then f32 tables in
// declaration order.
void save_policy(const std::string& path, const PolicyParams& params);
PolicyParams load_policy(const std::string& path);

}  // namespace octarl
