// octarl: octant tokenization of voxel volumes, VQ codebooks, geometric
// critics, and a group-relative policy trainer behind one command line.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "octarl/codebook.hpp"
#include "octarl/critics.hpp"
#include "octarl/external_critic.hpp"
#include "octarl/grpo.hpp"
#include "octarl/mesh.hpp"
#include "octarl/octant_codec.hpp"
#include "octarl/policy.hpp"
#include "octarl/run_config.hpp"
#include "octarl/shapes.hpp"
#include "octarl/voxel_grid.hpp"

namespace {

using nlohmann::json;
using namespace octarl;

constexpr const char* kVersion = "0.1.0";

struct Dims {
    int x = 64, y = 64, z = 64;
};

Dims parse_dims(const std::string& text) {
    Dims d;
    const auto first = text.find(',');
    if (first == std::string::npos) {
        d.x = d.y = d.z = std::stoi(text);
        return d;
    }
    const auto second = text.find(',', first + 1);
    require(second != std::string::npos, "dims must be SIDE or DX,DY,DZ");
    d.x = std::stoi(text.substr(0, first));
    d.y = std::stoi(text.substr(first + 1, second - first - 1));
    d.z = std::stoi(text.substr(second + 1));
    return d;
}

int cmd_gen_shape(const std::string& kind, const std::string& dims_text,
                  const std::vector<std::string>& params, uint64_t seed, const std::string& out) {
    ShapeSpec spec;
    spec.kind = shape_kind_from_name(kind);
    spec.seed = seed;
    for (const auto& kv : params) {
        const auto eq = kv.find('=');
        require(eq != std::string::npos, "--param expects NAME=VALUE, got '" + kv + "'");
        spec.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
    const Dims d = parse_dims(dims_text);
    const VoxelGrid grid = gen_primitive(spec, d.x, d.y, d.z);
    save_grid(out, grid);
    std::cout << json{{"kind", kind},
                      {"dims", {d.x, d.y, d.z}},
                      {"occupied", grid.occupied_count()},
                      {"out", out}}
              << '\n';
    return 0;
}

int cmd_encode(const std::string& grid_path, int depth, const std::string& out) {
    const VoxelGrid grid = load_grid(grid_path);
    const OctantSequence seq = group(encode_latent(grid), depth);
    save_tokens(out, seq, 0);
    std::cout << json{{"tokens", seq.length()}, {"width", seq.width()}, {"out", out}} << '\n';
    return 0;
}

int cmd_decode(const std::string& tokens_path, const std::string& out) {
    const OctantSequence seq = load_tokens(tokens_path);
    require(seq.has_features(), "decode needs a feature token file; use detokenize for indices");
    const VoxelGrid grid = decode_latent(ungroup(seq));
    save_grid(out, grid);
    std::cout << json{{"dims", {grid.dx(), grid.dy(), grid.dz()}},
                      {"occupied", grid.occupied_count()},
                      {"out", out}}
              << '\n';
    return 0;
}

std::vector<VoxelGrid> load_corpus_dir(const std::string& dir) {
    std::vector<std::string> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".crvx")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    require(!paths.empty(), "no .crvx files in corpus dir: " + dir);
    std::vector<VoxelGrid> grids;
    grids.reserve(paths.size());
    for (const auto& p : paths) grids.push_back(load_grid(p));
    return grids;
}

int cmd_train_codebook(const std::string& corpus, int k, int iters, uint64_t seed, int depth,
                       const std::string& out) {
    const std::vector<VoxelGrid> grids = load_corpus_dir(corpus);
    int dim = 0, count = 0;
    const std::vector<float> data = collect_features(grids, depth, &dim, &count);
    std::vector<double> history;
    const Codebook cb = train_kmeans(data, count, dim, k, iters, seed, &history);
    save_codebook(out, cb);
    std::cout << json{{"k", cb.k},
                      {"dim", cb.dim},
                      {"tokens", count},
                      {"distortion", history.empty() ? 0.0 : history.back()},
                      {"out", out}}
              << '\n';
    return 0;
}

int cmd_tokenize(const std::string& grid_path, const std::string& codebook_path, int depth,
                 const std::string& out) {
    const VoxelGrid grid = load_grid(grid_path);
    const Codebook cb = load_codebook(codebook_path);
    const OctantSequence seq = quantize(group(encode_latent(grid), depth), cb);
    save_tokens(out, seq, static_cast<uint32_t>(cb.k));
    std::cout << json{{"tokens", seq.length()},
                      {"utilization", utilization(seq.indices, cb.k)},
                      {"out", out}}
              << '\n';
    return 0;
}

int cmd_detokenize(const std::string& tokens_path, const std::string& codebook_path,
                   const std::string& out, const std::string& ref_path) {
    const OctantSequence seq = load_tokens(tokens_path);
    require(!seq.indices.empty(), "detokenize needs an index token file");
    const Codebook cb = load_codebook(codebook_path);
    const VoxelGrid grid = decode_latent(ungroup(dequantize(seq, cb)));
    save_grid(out, grid);
    json summary{{"dims", {grid.dx(), grid.dy(), grid.dz()}},
                 {"occupied", grid.occupied_count()},
                 {"out", out}};
    if (!ref_path.empty()) summary["iou"] = iou(grid, load_grid(ref_path));
    std::cout << summary << '\n';
    return 0;
}

int cmd_mesh(const std::string& grid_path, const std::string& out) {
    const TriMesh mesh = extract_surface(load_grid(grid_path));
    save_obj(out, mesh);
    std::cout << json{{"vertices", mesh.vertices.size()}, {"faces", mesh.face_count()}, {"out", out}}
              << '\n';
    return 0;
}

int cmd_score(const std::string& grid_path, const std::string& obj_path,
              const std::string& critics_path, int prompt_id) {
    require(!grid_path.empty() || !obj_path.empty(), "score needs --grid or --obj");
    json spec = json::object();
    std::string base_dir = ".";
    if (!critics_path.empty()) {
        std::ifstream in(critics_path);
        require(in.good(), "cannot open critics config: " + critics_path);
        try {
            spec = json::parse(in);
        } catch (const json::exception& e) {
            fail("malformed critics JSON: " + std::string(e.what()));
        }
        base_dir = std::filesystem::path(critics_path).parent_path().string();
        if (base_dir.empty()) base_dir = ".";
    }
    const CriticStack stack = build_critic_stack(spec, base_dir, {});

    std::unique_ptr<VoxelGrid> grid;
    TriMesh mesh;
    if (!grid_path.empty()) {
        grid = std::make_unique<VoxelGrid>(load_grid(grid_path));
        mesh = extract_surface(*grid);
    } else {
        mesh = load_obj(obj_path);
    }
    const Artifact artifact{grid.get(), &mesh, prompt_id};
    const RewardBreakdown b = stack.score_all(artifact);
    std::cout << json{{"r_h", b.r_h},
                      {"r_v", b.r_v},
                      {"r_x", b.r_x},
                      {"r_p", b.r_p},
                      {"aggregate", b.aggregate}}
              << '\n';
    return 0;
}

json dump_config_json(const GrpoConfig& grpo, const CriticWeights& weights) {
    return json{{"grpo", grpo_to_json(grpo)},
                {"critic_weights", {weights.h, weights.v, weights.x, weights.p}}};
}

int cmd_train(const std::string& config_path, const std::string& out_dir, bool paper_hparams,
              bool dump_config) {
    if (config_path.empty()) {
        require(dump_config, "train needs --config (or --dump-config for a preset snapshot)");
        GrpoConfig grpo;
        CriticWeights weights;
        if (paper_hparams) apply_paper_hparams(grpo, weights);
        std::cout << dump_config_json(grpo, weights).dump(2) << '\n';
        return 0;
    }

    RunConfig cfg = RunConfig::load(config_path);
    const Codebook codebook = load_codebook(cfg.resolve(cfg.codebook_path));

    std::map<int, VoxelGrid> templates;
    std::vector<int> prompt_ids;
    int max_prompt = 0;
    for (const auto& [pid, path] : cfg.prompts) {
        templates.emplace(pid, load_grid(cfg.resolve(path)));
        prompt_ids.push_back(pid);
        max_prompt = std::max(max_prompt, pid);
    }
    CriticStack stack = build_critic_stack(cfg.critics, cfg.base_dir, templates);
    if (paper_hparams) apply_paper_hparams(cfg.grpo, stack.weights);
    if (dump_config) {
        std::cout << dump_config_json(cfg.grpo, stack.weights).dump(2) << '\n';
        return 0;
    }

    PolicyShape shape;
    shape.semantic_vocab = cfg.semantic_vocab;
    shape.semantic_len = cfg.semantic_len;
    shape.width = cfg.width;
    shape.window = cfg.window;
    shape.geometric_vocab = codebook.k;
    const int side = 1 << cfg.depth;
    shape.geometric_len = side * side * side;
    shape.prompts = max_prompt + 1;

    const TrainResult result = train(cfg.grpo, shape, stack, prompt_ids, codebook, cfg.depth);

    std::filesystem::create_directories(out_dir);
    write_log_csv(out_dir + "/log.csv", result.log);
    save_policy(out_dir + "/policy.crpp", result.params);
    const LogRow& first = result.log.front();
    const LogRow& last = result.log.back();
    std::cout << json{{"steps", result.log.size()},
                      {"reward_first", first.reward},
                      {"reward_last", last.reward},
                      {"kl_last", last.kl},
                      {"out", out_dir}}
              << '\n';
    return 0;
}

int cmd_sample(const std::string& checkpoint, const std::string& codebook_path, int depth,
               int prompt_id, double temperature, uint64_t seed, const std::string& out_grid,
               const std::string& out_obj, const std::string& out_tokens) {
    const PolicyParams params = load_policy(checkpoint);
    const Codebook cb = load_codebook(codebook_path);
    const Rollout rollout = sample_sequence(params, prompt_id, temperature, seed);
    const VoxelGrid grid = decode_rollout(rollout, params.shape, cb, depth);
    json summary{{"tokens", rollout.tokens.size()}, {"occupied", grid.occupied_count()}};
    if (!out_grid.empty()) {
        save_grid(out_grid, grid);
        summary["grid"] = out_grid;
    }
    if (!out_obj.empty()) {
        save_obj(out_obj, extract_surface(grid));
        summary["obj"] = out_obj;
    }
    if (!out_tokens.empty()) {
        OctantSequence seq;
        seq.depth = depth;
        const int side = 1 << depth;
        seq.positions = morton_enumeration(side);
        for (int i = 0; i < params.shape.geometric_len; ++i)
            seq.indices.push_back(static_cast<uint16_t>(
                rollout.tokens[params.shape.semantic_len + i] - params.shape.semantic_vocab));
        save_tokens(out_tokens, seq, static_cast<uint32_t>(cb.k));
        summary["tokens_file"] = out_tokens;
    }
    std::cout << summary << '\n';
    return 0;
}

int cmd_morton(int side, bool check, const std::string& encode_text, int decode_code) {
    if (check) {
        const int64_t n = static_cast<int64_t>(side) * side * side;
        for (int64_t code = 0; code < n; ++code) {
            const auto [x, y, z] = morton_decode(static_cast<uint32_t>(code), side);
            require(morton_encode(x, y, z, side) == static_cast<uint32_t>(code),
                    "morton bijection failed at code " + std::to_string(code));
        }
        require(side < 2 || (morton_encode(1, 0, 0, side) == 1 && morton_encode(0, 1, 0, side) == 2 &&
                             morton_encode(0, 0, 1, side) == 4),
                "morton bit convention violated");
        std::cout << "bijection ok " << n << '\n';
        return 0;
    }
    if (!encode_text.empty()) {
        const Dims d = parse_dims(encode_text);
        std::cout << morton_encode(d.x, d.y, d.z, side) << '\n';
        return 0;
    }
    if (decode_code >= 0) {
        const auto [x, y, z] = morton_decode(static_cast<uint32_t>(decode_code), side);
        std::cout << x << ',' << y << ',' << z << '\n';
        return 0;
    }
    fail("morton needs --check, --encode, or --decode");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"octant token codec, geometric critics, and GRPO trainer"};
    app.require_subcommand(1);

    // gen-shape
    auto* gen = app.add_subcommand("gen-shape", "generate a procedural test shape");
    std::string gen_kind = "sphere", gen_dims = "64", gen_out;
    std::vector<std::string> gen_params;
    uint64_t gen_seed = 0;
    gen->add_option("--kind", gen_kind, "sphere|box|l_bracket|table|two_blobs|floating_pair|overhang");
    gen->add_option("--dims", gen_dims, "SIDE or DX,DY,DZ");
    gen->add_option("--param", gen_params, "shape parameter NAME=VALUE (repeatable)");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output .crvx path")->required();

    // encode / decode
    auto* enc = app.add_subcommand("encode", "voxel grid -> feature tokens");
    std::string enc_grid, enc_out;
    int enc_depth = 3;
    enc->add_option("--grid", enc_grid)->required();
    enc->add_option("--depth", enc_depth, "octant depth 1..4");
    enc->add_option("--out", enc_out)->required();

    auto* dec = app.add_subcommand("decode", "feature tokens -> voxel grid");
    std::string dec_tokens, dec_out;
    dec->add_option("--tokens", dec_tokens)->required();
    dec->add_option("--out", dec_out)->required();

    // train-codebook
    auto* tcb = app.add_subcommand("train-codebook", "k-means codebook from a grid corpus");
    std::string tcb_corpus, tcb_out;
    int tcb_k = 256, tcb_iters = 20, tcb_depth = 3;
    uint64_t tcb_seed = 42;
    tcb->add_option("--corpus", tcb_corpus, "directory of .crvx files")->required();
    tcb->add_option("--k", tcb_k, "codebook entries");
    tcb->add_option("--iters", tcb_iters, "Lloyd iterations");
    tcb->add_option("--seed", tcb_seed);
    tcb->add_option("--depth", tcb_depth, "octant depth 1..4");
    tcb->add_option("--out", tcb_out)->required();

    // tokenize / detokenize
    auto* tok = app.add_subcommand("tokenize", "voxel grid -> codebook indices");
    std::string tok_grid, tok_cb, tok_out;
    int tok_depth = 3;
    tok->add_option("--grid", tok_grid)->required();
    tok->add_option("--codebook", tok_cb)->required();
    tok->add_option("--depth", tok_depth);
    tok->add_option("--out", tok_out)->required();

    auto* det = app.add_subcommand("detokenize", "codebook indices -> voxel grid");
    std::string det_tokens, det_cb, det_out, det_ref;
    det->add_option("--tokens", det_tokens)->required();
    det->add_option("--codebook", det_cb)->required();
    det->add_option("--out", det_out)->required();
    det->add_option("--ref", det_ref, "reference grid; prints IoU against it");

    // mesh
    auto* msh = app.add_subcommand("mesh", "voxel grid -> OBJ surface");
    std::string msh_grid, msh_out;
    msh->add_option("--grid", msh_grid)->required();
    msh->add_option("--out", msh_out)->required();

    // score
    auto* sco = app.add_subcommand("score", "run the critic stack on an artifact");
    std::string sco_grid, sco_obj, sco_critics;
    int sco_prompt = 0;
    sco->add_option("--grid", sco_grid, "artifact .crvx");
    sco->add_option("--obj", sco_obj, "artifact .obj (no grid-based critics)");
    sco->add_option("--critics", sco_critics, "critic stack JSON");
    sco->add_option("--prompt", sco_prompt, "prompt id");

    // train
    auto* trn = app.add_subcommand("train", "group-relative policy training");
    std::string trn_config, trn_out = "runs/latest";
    bool trn_paper = false, trn_dump = false;
    trn->add_option("--config", trn_config, "run config JSON");
    trn->add_option("--out", trn_out, "output directory");
    trn->add_flag("--paper-hparams", trn_paper, "overlay the published hyperparameter preset");
    trn->add_flag("--dump-config", trn_dump, "print the resolved config and exit");

    // sample
    auto* smp = app.add_subcommand("sample", "sample a shape from a trained policy");
    std::string smp_ckpt, smp_cb, smp_grid, smp_obj, smp_tokens;
    int smp_depth = 3, smp_prompt = 0;
    double smp_temp = 1.0;
    uint64_t smp_seed = 0;
    smp->add_option("--checkpoint", smp_ckpt)->required();
    smp->add_option("--codebook", smp_cb)->required();
    smp->add_option("--depth", smp_depth);
    smp->add_option("--prompt", smp_prompt);
    smp->add_option("--temperature", smp_temp);
    smp->add_option("--seed", smp_seed);
    smp->add_option("--out", smp_grid, "output .crvx");
    smp->add_option("--obj", smp_obj, "also write the surface OBJ");
    smp->add_option("--tokens", smp_tokens, "also write the index token file");

    // morton
    auto* mor = app.add_subcommand("morton", "Z-order curve utilities");
    int mor_side = 8, mor_decode = -1;
    bool mor_check = false;
    std::string mor_encode;
    mor->add_option("--side", mor_side, "block grid side (power of two)");
    mor->add_flag("--check", mor_check, "exhaustive bijection check");
    mor->add_option("--encode", mor_encode, "X,Y,Z to encode");
    mor->add_option("--decode", mor_decode, "code to decode");

    auto* ver = app.add_subcommand("version", "print version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }

    try {
        if (gen->parsed())
            return cmd_gen_shape(gen_kind, gen_dims, gen_params, gen_seed, gen_out);
        if (enc->parsed()) return cmd_encode(enc_grid, enc_depth, enc_out);
        if (dec->parsed()) return cmd_decode(dec_tokens, dec_out);
        if (tcb->parsed())
            return cmd_train_codebook(tcb_corpus, tcb_k, tcb_iters, tcb_seed, tcb_depth, tcb_out);
        if (tok->parsed()) return cmd_tokenize(tok_grid, tok_cb, tok_depth, tok_out);
        if (det->parsed()) return cmd_detokenize(det_tokens, det_cb, det_out, det_ref);
        if (msh->parsed()) return cmd_mesh(msh_grid, msh_out);
        if (sco->parsed()) return cmd_score(sco_grid, sco_obj, sco_critics, sco_prompt);
        if (trn->parsed()) return cmd_train(trn_config, trn_out, trn_paper, trn_dump);
        if (smp->parsed())
            return cmd_sample(smp_ckpt, smp_cb, smp_depth, smp_prompt, smp_temp, smp_seed, smp_grid,
                              smp_obj, smp_tokens);
        if (mor->parsed()) return cmd_morton(mor_side, mor_check, mor_encode, mor_decode);
        if (ver->parsed()) {
            std::cout << "octarl " << kVersion << '\n';
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cerr << "unknown subcommand\n";
    return 2;
}
