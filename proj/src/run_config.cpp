#include "octarl/run_config.hpp"

#include <filesystem>
#include <fstream>

#include "octarl/external_critic.hpp"

namespace octarl {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    require(j.is_object(), where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) known |= (key == a);
        require(known, "unknown key '" + key + "' in " + where);
    }
}

double get_number(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    require(j[key].is_number(), std::string("'") + key + "' must be a number");
    return j[key].get<double>();
}

int64_t get_int(const json& j, const char* key, int64_t fallback) {
    if (!j.contains(key)) return fallback;
    require(j[key].is_number_integer(), std::string("'") + key + "' must be an integer");
    return j[key].get<int64_t>();
}

}  // namespace

json grpo_to_json(const GrpoConfig& cfg) {
    return json{{"group_size", cfg.group_size},
                {"clip_epsilon", cfg.clip_epsilon},
                {"kl_beta", cfg.kl_beta},
                {"lr_base", cfg.lr_base},
                {"warmup_steps", cfg.warmup_steps},
                {"total_steps", cfg.total_steps},
                {"grad_clip_norm", cfg.grad_clip_norm},
                {"kl_cap_factor", cfg.kl_cap_factor},
                {"kl_ema_decay", cfg.kl_ema_decay},
                {"adam_beta1", cfg.adam_beta1},
                {"adam_beta2", cfg.adam_beta2},
                {"weight_decay", cfg.weight_decay},
                {"temperature", cfg.temperature},
                {"seed", cfg.seed}};
}

GrpoConfig grpo_from_json(const json& j) {
    reject_unknown_keys(j,
                        {"group_size", "clip_epsilon", "kl_beta", "lr_base", "warmup_steps",
                         "total_steps", "grad_clip_norm", "kl_cap_factor", "kl_ema_decay",
                         "adam_beta1", "adam_beta2", "weight_decay", "temperature", "seed"},
                        "grpo config");
    GrpoConfig cfg;
    cfg.group_size = static_cast<int>(get_int(j, "group_size", cfg.group_size));
    cfg.clip_epsilon = get_number(j, "clip_epsilon", cfg.clip_epsilon);
    cfg.kl_beta = get_number(j, "kl_beta", cfg.kl_beta);
    cfg.lr_base = get_number(j, "lr_base", cfg.lr_base);
    cfg.warmup_steps = static_cast<int>(get_int(j, "warmup_steps", cfg.warmup_steps));
    cfg.total_steps = static_cast<int>(get_int(j, "total_steps", cfg.total_steps));
    cfg.grad_clip_norm = get_number(j, "grad_clip_norm", cfg.grad_clip_norm);
    cfg.kl_cap_factor = get_number(j, "kl_cap_factor", cfg.kl_cap_factor);
    cfg.kl_ema_decay = get_number(j, "kl_ema_decay", cfg.kl_ema_decay);
    cfg.adam_beta1 = get_number(j, "adam_beta1", cfg.adam_beta1);
    cfg.adam_beta2 = get_number(j, "adam_beta2", cfg.adam_beta2);
    cfg.weight_decay = get_number(j, "weight_decay", cfg.weight_decay);
    cfg.temperature = get_number(j, "temperature", cfg.temperature);
    if (j.contains("seed")) {
        require(j["seed"].is_number_integer(), "'seed' must be an integer");
        cfg.seed = j["seed"].get<uint64_t>();
    }
    cfg.validate();
    return cfg;
}

void apply_paper_hparams(GrpoConfig& cfg, CriticWeights& weights) {
    const GrpoConfig preset = GrpoConfig::paper_hparams();
    cfg.group_size = preset.group_size;
    cfg.clip_epsilon = preset.clip_epsilon;
    cfg.kl_beta = preset.kl_beta;
    cfg.lr_base = preset.lr_base;
    cfg.warmup_steps = preset.warmup_steps;
    cfg.grad_clip_norm = preset.grad_clip_norm;
    cfg.kl_cap_factor = preset.kl_cap_factor;
    cfg.adam_beta1 = preset.adam_beta1;
    cfg.adam_beta2 = preset.adam_beta2;
    cfg.weight_decay = preset.weight_decay;
    weights = CriticWeights{};
}

namespace {

std::shared_ptr<Critic> build_slot(const json& spec, const std::string& base_dir,
                                   const PhysicalWeights& lambda,
                                   const std::map<int, VoxelGrid>& prompt_templates,
                                   const std::string& slot) {
    require(spec.is_object() && spec.contains("kind") && spec["kind"].is_string(),
            "critic slot '" + slot + "' needs a string 'kind'");
    const std::string kind = spec["kind"].get<std::string>();
    auto resolve = [&base_dir](const std::string& p) {
        return std::filesystem::path(p).is_absolute()
                   ? p
                   : (std::filesystem::path(base_dir) / p).string();
    };
    if (kind == "constant") {
        reject_unknown_keys(spec, {"kind", "value"}, "critic slot " + slot);
        return make_constant_critic(get_number(spec, "value", 0.5));
    }
    if (kind == "occupancy_band") {
        reject_unknown_keys(spec, {"kind", "lo", "hi"}, "critic slot " + slot);
        return make_occupancy_band_critic(get_number(spec, "lo", 0.05),
                                          get_number(spec, "hi", 0.5));
    }
    if (kind == "seeded_hash_noise") {
        reject_unknown_keys(spec, {"kind", "sigma", "seed"}, "critic slot " + slot);
        return make_seeded_hash_noise_critic(get_number(spec, "sigma", 0.1),
                                             static_cast<uint64_t>(get_int(spec, "seed", 0)));
    }
    if (kind == "oracle_iou") {
        reject_unknown_keys(spec, {"kind", "template"}, "critic slot " + slot);
        if (spec.contains("template")) {
            require(spec["template"].is_string(), "'template' must be a path string");
            return make_oracle_alignment_critic(
                load_grid(resolve(spec["template"].get<std::string>())));
        }
        require(!prompt_templates.empty(),
                "oracle_iou critic needs a 'template' or per-prompt templates");
        return make_oracle_alignment_critic(prompt_templates);
    }
    if (kind == "physical") {
        reject_unknown_keys(spec, {"kind"}, "critic slot " + slot);
        return make_physical_critic(lambda);
    }
    if (kind == "external") {
        reject_unknown_keys(spec, {"kind", "cmd", "workdir"}, "critic slot " + slot);
        require(spec.contains("cmd") && spec["cmd"].is_array() && !spec["cmd"].empty(),
                "external critic needs a nonempty 'cmd' array");
        std::vector<std::string> argv;
        for (const auto& a : spec["cmd"]) {
            require(a.is_string(), "external critic 'cmd' entries must be strings");
            argv.push_back(a.get<std::string>());
        }
        std::string workdir = base_dir;
        if (spec.contains("workdir")) workdir = resolve(spec["workdir"].get<std::string>());
        return make_external_critic(std::move(argv), std::move(workdir));
    }
    fail("unknown critic kind '" + kind + "' in slot " + slot);
}

}  // namespace

CriticStack build_critic_stack(const json& spec, const std::string& base_dir,
                               const std::map<int, VoxelGrid>& prompt_templates) {
    reject_unknown_keys(spec, {"weights", "physical_lambda", "h", "v", "x", "p"}, "critics");
    CriticStack stack;
    if (spec.contains("weights")) {
        const auto& w = spec["weights"];
        require(w.is_array() && w.size() == 4, "'weights' must be an array of 4 numbers");
        stack.weights = {w[0].get<double>(), w[1].get<double>(), w[2].get<double>(),
                         w[3].get<double>()};
    }
    stack.weights.normalize();
    PhysicalWeights lambda;
    if (spec.contains("physical_lambda")) {
        const auto& l = spec["physical_lambda"];
        require(l.is_array() && l.size() == 3, "'physical_lambda' must be an array of 3 numbers");
        lambda = {l[0].get<double>(), l[1].get<double>(), l[2].get<double>()};
    }
    lambda.normalize();

    const json defaults = {{"kind", "constant"}, {"value", 0.5}};
    auto slot = [&](const char* name, const json& fallback) {
        return build_slot(spec.contains(name) ? spec[name] : fallback, base_dir, lambda,
                          prompt_templates, name);
    };
    stack.h = slot("h", defaults);
    stack.v = slot("v", defaults);
    stack.x = slot("x", prompt_templates.empty() ? defaults : json{{"kind", "oracle_iou"}});
    stack.p = slot("p", json{{"kind", "physical"}});
    return stack;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open config: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail("malformed config JSON: " + std::string(e.what()));
    }
    reject_unknown_keys(j, {"grpo", "depth", "codebook", "policy", "critics", "prompts"},
                        "run config");
    RunConfig cfg;
    cfg.base_dir = std::filesystem::path(path).parent_path().string();
    if (cfg.base_dir.empty()) cfg.base_dir = ".";
    if (j.contains("grpo")) cfg.grpo = grpo_from_json(j["grpo"]);
    cfg.depth = static_cast<int>(get_int(j, "depth", cfg.depth));
    require(cfg.depth >= 1 && cfg.depth <= 4, "depth must be in [1,4]");
    require(j.contains("codebook") && j["codebook"].is_string(),
            "run config needs a 'codebook' path");
    cfg.codebook_path = j["codebook"].get<std::string>();
    if (j.contains("policy")) {
        const auto& p = j["policy"];
        reject_unknown_keys(p, {"semantic_vocab", "semantic_len", "width", "window"}, "policy");
        cfg.semantic_vocab = static_cast<int>(get_int(p, "semantic_vocab", cfg.semantic_vocab));
        cfg.semantic_len = static_cast<int>(get_int(p, "semantic_len", cfg.semantic_len));
        cfg.width = static_cast<int>(get_int(p, "width", cfg.width));
        cfg.window = static_cast<int>(get_int(p, "window", cfg.window));
    }
    if (j.contains("critics")) cfg.critics = j["critics"];
    require(j.contains("prompts") && j["prompts"].is_array() && !j["prompts"].empty(),
            "run config needs a nonempty 'prompts' array");
    for (const auto& p : j["prompts"]) {
        reject_unknown_keys(p, {"id", "template"}, "prompt entry");
        require(p.contains("id") && p["id"].is_number_integer(), "prompt entry needs an 'id'");
        require(p.contains("template") && p["template"].is_string(),
                "prompt entry needs a 'template' path");
        cfg.prompts.emplace_back(p["id"].get<int>(), p["template"].get<std::string>());
    }
    return cfg;
}

std::string RunConfig::resolve(const std::string& path) const {
    return std::filesystem::path(path).is_absolute()
               ? path
               : (std::filesystem::path(base_dir) / path).string();
}

}  // namespace octarl
