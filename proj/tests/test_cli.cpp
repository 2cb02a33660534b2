#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "octarl/voxel_grid.hpp"
#include "test_support.hpp"

using octarl::test::TempDir;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run_cli(const std::string& args, const TempDir& tmp) {
    const std::string out_file = tmp.file("stdout.txt");
    const std::string cmd = std::string(OCTARL_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("full CLI pipeline: shapes, codec, codebook, scoring") {
    TempDir tmp("cli");
    auto at = [&tmp](const std::string& n) { return tmp.file(n); };

    // corpus of shapes for codebook training
    for (int i = 0; i < 6; ++i) {
        const std::string kind = (i % 2 == 0) ? "sphere" : "box";
        const std::string radius = std::to_string(10 + 3 * i);
        const std::string param =
            (i % 2 == 0) ? (" --param radius=" + radius) : (" --param ex=" + radius);
        const auto r = run_cli("gen-shape --kind " + kind + param + " --dims 64 --out " +
                                   at("c" + std::to_string(i) + ".crvx"),
                               tmp);
        REQUIRE(r.exit_code == 0);
    }

    auto gen = run_cli("gen-shape --kind sphere --param radius=20 --dims 64 --out " + at("s.crvx"),
                       tmp);
    REQUIRE(gen.exit_code == 0);
    CHECK(json::parse(gen.out)["occupied"].get<int64_t>() > 30000);

    // deterministic regeneration is byte-identical
    run_cli("gen-shape --kind sphere --param radius=20 --dims 64 --out " + at("s2.crvx"), tmp);
    CHECK(slurp(at("s.crvx")) == slurp(at("s2.crvx")));

    auto enc = run_cli("encode --grid " + at("s.crvx") + " --depth 3 --out " + at("s.crtk"), tmp);
    REQUIRE(enc.exit_code == 0);
    CHECK(json::parse(enc.out)["tokens"] == 512);

    auto dec = run_cli("decode --tokens " + at("s.crtk") + " --out " + at("dec.crvx"), tmp);
    REQUIRE(dec.exit_code == 0);

    auto tcb = run_cli("train-codebook --corpus " + tmp.path() +
                           " --k 32 --iters 5 --seed 42 --depth 3 --out " + at("cb.crcb"),
                       tmp);
    REQUIRE(tcb.exit_code == 0);
    CHECK(json::parse(tcb.out)["k"] == 32);

    auto tok = run_cli("tokenize --grid " + at("s.crvx") + " --codebook " + at("cb.crcb") +
                           " --depth 3 --out " + at("s_ix.crtk"),
                       tmp);
    REQUIRE(tok.exit_code == 0);

    auto det = run_cli("detokenize --tokens " + at("s_ix.crtk") + " --codebook " + at("cb.crcb") +
                           " --out " + at("rt.crvx") + " --ref " + at("s.crvx"),
                       tmp);
    REQUIRE(det.exit_code == 0);
    CHECK(json::parse(det.out)["iou"].get<double>() > 0.5);

    auto msh = run_cli("mesh --grid " + at("s.crvx") + " --out " + at("s.obj"), tmp);
    REQUIRE(msh.exit_code == 0);
    CHECK(json::parse(msh.out)["faces"].get<int64_t>() > 100);

    // grounded cube scores r_p = 1
    run_cli("gen-shape --kind box --param ex=24 --param ey=24 --param ez=24 --param z0=0 "
            "--dims 64 --out " +
                at("cube.crvx"),
            tmp);
    auto sco = run_cli("score --grid " + at("cube.crvx"), tmp);
    REQUIRE(sco.exit_code == 0);
    CHECK(json::parse(sco.out)["r_p"].get<double>() == doctest::Approx(1.0));

    // scoring an OBJ goes through the mesh-only path
    auto sobj = run_cli("score --obj " + at("s.obj"), tmp);
    REQUIRE(sobj.exit_code == 0);
}

TEST_CASE("CLI exit codes: usage 2, domain errors 1") {
    TempDir tmp("cli_err");
    CHECK(run_cli("definitely-not-a-subcommand", tmp).exit_code == 2);
    CHECK(run_cli("gen-shape --kind sphere", tmp).exit_code == 2);  // missing --out
    {
        std::ofstream bad(tmp.file("bad.crvx"), std::ios::binary);
        bad << "XXXX";
    }
    CHECK(run_cli("encode --grid " + tmp.file("bad.crvx") + " --out " + tmp.file("x.crtk"), tmp)
              .exit_code == 1);
    CHECK(run_cli("gen-shape --kind sphere --param radius=99 --dims 64 --out " +
                      tmp.file("n.crvx"),
                  tmp)
              .exit_code == 1);  // shape-exceeds-bounds
}

TEST_CASE("morton subcommand") {
    TempDir tmp("cli_morton");
    auto check = run_cli("morton --side 8 --check", tmp);
    CHECK(check.exit_code == 0);
    CHECK(check.out == "bijection ok 512\n");
    CHECK(run_cli("morton --side 8 --encode 1,0,0", tmp).out == "1\n");
    CHECK(run_cli("morton --side 8 --decode 4", tmp).out == "0,0,1\n");
}

TEST_CASE("train CLI: dump-config, paper preset, and a tiny run") {
    TempDir tmp("cli_train");
    auto at = [&tmp](const std::string& n) { return tmp.file(n); };

    const auto dump = run_cli("train --dump-config --paper-hparams", tmp);
    REQUIRE(dump.exit_code == 0);
    const json snapshot = json::parse(dump.out);
    CHECK(snapshot["grpo"]["group_size"] == 4);
    CHECK(snapshot["grpo"]["lr_base"].get<double>() == doctest::Approx(1e-6));
    CHECK(snapshot["critic_weights"][0].get<double>() == doctest::Approx(0.25));

    // template + codebook for a 3-step training run at depth 1
    run_cli("gen-shape --kind box --param ex=4 --param ey=4 --param ez=4 --dims 8 --out " +
                at("t.crvx"),
            tmp);
    run_cli("gen-shape --kind box --param ex=6 --param ey=6 --param ez=2 --dims 8 --out " +
                at("t2.crvx"),
            tmp);
    auto tcb = run_cli("train-codebook --corpus " + tmp.path() +
                           " --k 4 --iters 3 --seed 1 --depth 1 --out " + at("cb.crcb"),
                       tmp);
    REQUIRE(tcb.exit_code == 0);

    {
        std::ofstream cfg(at("run.json"));
        cfg << R"({
  "grpo": {"total_steps": 3, "warmup_steps": 1, "seed": 7},
  "depth": 1,
  "codebook": "cb.crcb",
  "policy": {"semantic_vocab": 8, "semantic_len": 2, "width": 8, "window": 4},
  "critics": {"weights": [0, 0, 1, 0], "x": {"kind": "oracle_iou"}},
  "prompts": [{"id": 0, "template": "t.crvx"}]
})";
    }
    const auto trn = run_cli("train --config " + at("run.json") + " --out " + at("run_out"), tmp);
    REQUIRE(trn.exit_code == 0);
    const json summary = json::parse(trn.out);
    CHECK(summary["steps"] == 3);
    CHECK(std::ifstream(at("run_out/log.csv")).good());
    CHECK(std::ifstream(at("run_out/policy.crpp")).good());

    // sample from the trained checkpoint
    const auto smp = run_cli("sample --checkpoint " + at("run_out/policy.crpp") + " --codebook " +
                                 at("cb.crcb") + " --depth 1 --seed 5 --out " + at("sampled.crvx"),
                             tmp);
    REQUIRE(smp.exit_code == 0);
    CHECK(std::ifstream(at("sampled.crvx")).good());

    // config schema: unknown keys are rejected before any work
    {
        std::ofstream cfg(at("bad.json"));
        cfg << R"({"grpo": {"totally_unknown": 1}, "codebook": "cb.crcb",
                   "prompts": [{"id": 0, "template": "t.crvx"}]})";
    }
    const auto bad = run_cli("train --config " + at("bad.json") + " --out " + at("bad_out"), tmp);
    CHECK(bad.exit_code == 1);
    CHECK(bad.out.find("unknown key") != std::string::npos);
}
