#include "octarl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace octarl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Legal combined-id range [lo, hi) for step t.
void segment_range(const PolicyShape& shape, int t, int& lo, int& hi) {
    if (t < shape.semantic_len) {
        lo = 0;
        hi = shape.semantic_vocab;
    } else {
        lo = shape.semantic_vocab;
        hi = shape.combined_vocab();
    }
}

void check_token(const PolicyShape& shape, int token, int t) {
    int lo, hi;
    segment_range(shape, t, lo, hi);
    require(token >= lo && token < hi,
            "illegal segment token " + std::to_string(token) + " at step " + std::to_string(t));
}

// h_t = mean of the last min(window, t) token embeddings (begin embedding at
// t=0) + pos_emb[t] + cond_emb[prompt].
void hidden_state(const PolicyParams& params, const std::vector<int>& prefix, int t, int prompt_id,
                  double* h) {
    const PolicyShape& s = params.shape;
    require(t >= 0 && t < s.seq_len(), "step out of range");
    require(prompt_id >= 0 && prompt_id < s.prompts, "prompt id out of range");
    const int d = s.width;
    if (t == 0) {
        const double* row = params.tok_emb.data() + static_cast<size_t>(s.begin_token()) * d;
        std::memcpy(h, row, static_cast<size_t>(d) * sizeof(double));
    } else {
        const int count = std::min(s.window, t);
        std::fill(h, h + d, 0.0);
        for (int k = t - count; k < t; ++k) {
            const int id = prefix[static_cast<size_t>(k)];
            require(id >= 0 && id < s.combined_vocab(), "id out of vocabulary in prefix");
            const double* row = params.tok_emb.data() + static_cast<size_t>(id) * d;
            for (int i = 0; i < d; ++i) h[i] += row[i];
        }
        for (int i = 0; i < d; ++i) h[i] /= count;
    }
    const double* pos = params.pos_emb.data() + static_cast<size_t>(t) * d;
    const double* cond = params.cond_emb.data() + static_cast<size_t>(prompt_id) * d;
    for (int i = 0; i < d; ++i) h[i] += pos[i] + cond[i];
}

void logits_from_hidden(const PolicyParams& params, const double* h, int t, double* z) {
    const PolicyShape& s = params.shape;
    const int vocab = s.combined_vocab();
    int lo, hi;
    segment_range(s, t, lo, hi);
    std::fill(z, z + vocab, kNegInf);
    for (int j = lo; j < hi; ++j) z[j] = 0.0;
    for (int i = 0; i < s.width; ++i) {
        const double hi_val = h[i];
        const double* row = params.out_w.data() + static_cast<size_t>(i) * vocab;
        for (int j = lo; j < hi; ++j) z[j] += hi_val * row[j];
    }
}

// log softmax over the legal range; p (if non-null) receives the plain
// softmax over the same range.
void log_softmax(const double* z, int lo, int hi, double* logp, double* p) {
    double zmax = kNegInf;
    for (int j = lo; j < hi; ++j) zmax = std::max(zmax, z[j]);
    double sum = 0.0;
    for (int j = lo; j < hi; ++j) sum += std::exp(z[j] - zmax);
    const double log_sum = std::log(sum);
    for (int j = lo; j < hi; ++j) {
        const double l = z[j] - zmax - log_sum;
        if (logp) logp[j] = l;
        if (p) p[j] = std::exp(l);
    }
}

}  // namespace

void PolicyShape::validate() const {
    require(semantic_vocab >= 1 && geometric_vocab >= 1, "vocab sizes must be positive");
    require(width >= 1 && window >= 1, "width and window must be positive");
    require(semantic_len >= 0 && geometric_len >= 1, "bad segment lengths");
    require(prompts >= 1, "need at least one prompt slot");
    require(combined_vocab() <= 65535, "combined vocabulary too large");
}

PolicyParams PolicyParams::init(const PolicyShape& shape, uint64_t seed) {
    shape.validate();
    PolicyParams p;
    p.shape = shape;
    Rng rng(seed);
    auto fill = [&rng](std::vector<double>& v, size_t n) {
        v.resize(n);
        for (auto& x : v) x = rng.uniform(-0.05, 0.05);
    };
    const size_t d = static_cast<size_t>(shape.width);
    fill(p.tok_emb, static_cast<size_t>(shape.embed_rows()) * d);
    fill(p.pos_emb, static_cast<size_t>(shape.seq_len()) * d);
    fill(p.cond_emb, static_cast<size_t>(shape.prompts) * d);
    fill(p.out_w, d * static_cast<size_t>(shape.combined_vocab()));
    return p;
}

PolicyGrad PolicyGrad::zeros(const PolicyShape& shape) {
    PolicyGrad g;
    const size_t d = static_cast<size_t>(shape.width);
    g.tok_emb.assign(static_cast<size_t>(shape.embed_rows()) * d, 0.0);
    g.pos_emb.assign(static_cast<size_t>(shape.seq_len()) * d, 0.0);
    g.cond_emb.assign(static_cast<size_t>(shape.prompts) * d, 0.0);
    g.out_w.assign(d * static_cast<size_t>(shape.combined_vocab()), 0.0);
    return g;
}

void PolicyGrad::add_scaled(const PolicyGrad& other, double scale) {
    auto axpy = [scale](std::vector<double>& dst, const std::vector<double>& src) {
        require(dst.size() == src.size(), "gradient shape mismatch");
        for (size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
    };
    axpy(tok_emb, other.tok_emb);
    axpy(pos_emb, other.pos_emb);
    axpy(cond_emb, other.cond_emb);
    axpy(out_w, other.out_w);
}

void PolicyGrad::scale(double factor) {
    for (auto* table : {&tok_emb, &pos_emb, &cond_emb, &out_w})
        for (auto& x : *table) x *= factor;
}

double PolicyGrad::global_norm() const {
    double sq = 0.0;
    for (const auto* table : {&tok_emb, &pos_emb, &cond_emb, &out_w})
        for (double x : *table) sq += x * x;
    return std::sqrt(sq);
}

std::vector<double> step_logits(const PolicyParams& params, const std::vector<int>& prefix, int t,
                                int prompt_id) {
    require(static_cast<int>(prefix.size()) >= t, "prefix shorter than step index");
    std::vector<double> h(static_cast<size_t>(params.shape.width));
    hidden_state(params, prefix, t, prompt_id, h.data());
    std::vector<double> z(static_cast<size_t>(params.shape.combined_vocab()));
    logits_from_hidden(params, h.data(), t, z.data());
    return z;
}

Rollout sample_sequence(const PolicyParams& params, int prompt_id, double temperature,
                        uint64_t seed) {
    require(temperature > 0.0, "temperature must be positive");
    const PolicyShape& s = params.shape;
    Rng rng(seed);
    Rollout rollout;
    rollout.prompt_id = prompt_id;
    rollout.tokens.reserve(static_cast<size_t>(s.seq_len()));
    rollout.logp_old.reserve(static_cast<size_t>(s.seq_len()));

    const int vocab = s.combined_vocab();
    std::vector<double> h(static_cast<size_t>(s.width));
    std::vector<double> z(static_cast<size_t>(vocab));
    std::vector<double> logp(static_cast<size_t>(vocab));
    std::vector<double> p(static_cast<size_t>(vocab));
    for (int t = 0; t < s.seq_len(); ++t) {
        hidden_state(params, rollout.tokens, t, prompt_id, h.data());
        logits_from_hidden(params, h.data(), t, z.data());
        int lo, hi;
        segment_range(s, t, lo, hi);
        log_softmax(z.data(), lo, hi, logp.data(), nullptr);

        // Tempered distribution for the draw itself.
        double zmax = kNegInf;
        for (int j = lo; j < hi; ++j) zmax = std::max(zmax, z[j]);
        double sum = 0.0;
        for (int j = lo; j < hi; ++j) {
            p[j] = std::exp((z[j] - zmax) / temperature);
            sum += p[j];
        }
        const double target = rng.uniform() * sum;
        int chosen = hi - 1;
        double acc = 0.0;
        for (int j = lo; j < hi; ++j) {
            acc += p[j];
            if (acc >= target) {
                chosen = j;
                break;
            }
        }
        rollout.tokens.push_back(chosen);
        rollout.logp_old.push_back(logp[chosen]);
    }
    return rollout;
}

std::vector<double> sequence_logprob(const PolicyParams& params, const std::vector<int>& tokens,
                                     int prompt_id) {
    const PolicyShape& s = params.shape;
    require(static_cast<int>(tokens.size()) == s.seq_len(), "sequence length mismatch");
    const int vocab = s.combined_vocab();
    std::vector<double> out(tokens.size());
    std::vector<double> h(static_cast<size_t>(s.width));
    std::vector<double> z(static_cast<size_t>(vocab));
    std::vector<double> logp(static_cast<size_t>(vocab));
    for (int t = 0; t < s.seq_len(); ++t) {
        check_token(s, tokens[static_cast<size_t>(t)], t);
        hidden_state(params, tokens, t, prompt_id, h.data());
        logits_from_hidden(params, h.data(), t, z.data());
        int lo, hi;
        segment_range(s, t, lo, hi);
        log_softmax(z.data(), lo, hi, logp.data(), nullptr);
        out[static_cast<size_t>(t)] = logp[tokens[static_cast<size_t>(t)]];
    }
    return out;
}

void accumulate_logprob_grad(const PolicyParams& params, const std::vector<int>& tokens,
                             int prompt_id, const std::vector<double>& weights, double scale,
                             PolicyGrad& grad) {
    const PolicyShape& s = params.shape;
    require(static_cast<int>(tokens.size()) == s.seq_len(), "sequence length mismatch");
    require(weights.size() == tokens.size(), "weights length mismatch");
    const int vocab = s.combined_vocab();
    const int d = s.width;
    std::vector<double> h(static_cast<size_t>(d));
    std::vector<double> z(static_cast<size_t>(vocab));
    std::vector<double> p(static_cast<size_t>(vocab));
    std::vector<double> gh(static_cast<size_t>(d));

    for (int t = 0; t < s.seq_len(); ++t) {
        const double wt = scale * weights[static_cast<size_t>(t)];
        if (wt == 0.0) continue;
        const int y = tokens[static_cast<size_t>(t)];
        check_token(s, y, t);
        hidden_state(params, tokens, t, prompt_id, h.data());
        logits_from_hidden(params, h.data(), t, z.data());
        int lo, hi;
        segment_range(s, t, lo, hi);
        log_softmax(z.data(), lo, hi, nullptr, p.data());

        // dlogp[y]/dz_j = delta_{jy} - p_j over the legal range.
        // out_w:   g[i][j] += wt * (delta - p_j) * h_i
        // hidden:  gh_i     = wt * sum_j (delta - p_j) * out_w[i][j]
        std::fill(gh.begin(), gh.end(), 0.0);
        for (int i = 0; i < d; ++i) {
            double* grow = grad.out_w.data() + static_cast<size_t>(i) * vocab;
            const double* wrow = params.out_w.data() + static_cast<size_t>(i) * vocab;
            const double hv = h[static_cast<size_t>(i)];
            double acc = 0.0;
            for (int j = lo; j < hi; ++j) {
                const double coeff = (j == y ? 1.0 : 0.0) - p[static_cast<size_t>(j)];
                grow[j] += wt * coeff * hv;
                acc += coeff * wrow[j];
            }
            gh[static_cast<size_t>(i)] = wt * acc;
        }

        double* pos = grad.pos_emb.data() + static_cast<size_t>(t) * d;
        double* cond = grad.cond_emb.data() + static_cast<size_t>(prompt_id) * d;
        for (int i = 0; i < d; ++i) {
            pos[i] += gh[static_cast<size_t>(i)];
            cond[i] += gh[static_cast<size_t>(i)];
        }
        if (t == 0) {
            double* row = grad.tok_emb.data() + static_cast<size_t>(s.begin_token()) * d;
            for (int i = 0; i < d; ++i) row[i] += gh[static_cast<size_t>(i)];
        } else {
            const int count = std::min(s.window, t);
            const double inv = 1.0 / count;
            for (int k = t - count; k < t; ++k) {
                double* row =
                    grad.tok_emb.data() + static_cast<size_t>(tokens[static_cast<size_t>(k)]) * d;
                for (int i = 0; i < d; ++i) row[i] += gh[static_cast<size_t>(i)] * inv;
            }
        }
    }
}

PolicyGrad grad_logprob(const PolicyParams& params, const std::vector<int>& tokens,
                        int prompt_id) {
    PolicyGrad grad = PolicyGrad::zeros(params.shape);
    const std::vector<double> ones(tokens.size(), 1.0);
    accumulate_logprob_grad(params, tokens, prompt_id, ones, 1.0, grad);
    return grad;
}

namespace {

constexpr char kPolicyMagic[4] = {'C', 'R', 'P', 'P'};

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) fail(std::string("truncated-payload: reading ") + what);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_table(std::ostream& out, const std::vector<double>& table) {
    for (double v : table) {
        const float f = static_cast<float>(v);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        write_u32(out, bits);
    }
}

void read_table(std::istream& in, std::vector<double>& table, size_t n) {
    table.resize(n);
    for (auto& v : table) {
        const uint32_t bits = read_u32(in, "table entry");
        float f;
        std::memcpy(&f, &bits, 4);
        v = static_cast<double>(f);
    }
}

}  // namespace

void save_policy(const std::string& path, const PolicyParams& params) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open for writing: " + path);
    out.write(kPolicyMagic, 4);
    const PolicyShape& s = params.shape;
    for (int v : {s.semantic_vocab, s.geometric_vocab, s.width, s.window, s.semantic_len,
                  s.geometric_len, s.prompts})
        write_u32(out, static_cast<uint32_t>(v));
    write_table(out, params.tok_emb);
    write_table(out, params.pos_emb);
    write_table(out, params.cond_emb);
    write_table(out, params.out_w);
    require(out.good(), "write failed: " + path);
}

PolicyParams load_policy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kPolicyMagic, 4) != 0) fail("bad-magic: not a CRPP file: " + path);
    PolicyShape s;
    s.semantic_vocab = static_cast<int>(read_u32(in, "semantic_vocab"));
    s.geometric_vocab = static_cast<int>(read_u32(in, "geometric_vocab"));
    s.width = static_cast<int>(read_u32(in, "width"));
    s.window = static_cast<int>(read_u32(in, "window"));
    s.semantic_len = static_cast<int>(read_u32(in, "semantic_len"));
    s.geometric_len = static_cast<int>(read_u32(in, "geometric_len"));
    s.prompts = static_cast<int>(read_u32(in, "prompts"));
    s.validate();
    PolicyParams p;
    p.shape = s;
    const size_t d = static_cast<size_t>(s.width);
    read_table(in, p.tok_emb, static_cast<size_t>(s.embed_rows()) * d);
    read_table(in, p.pos_emb, static_cast<size_t>(s.seq_len()) * d);
    read_table(in, p.cond_emb, static_cast<size_t>(s.prompts) * d);
    read_table(in, p.out_w, d * static_cast<size_t>(s.combined_vocab()));
    return p;
}

}  // namespace octarl
