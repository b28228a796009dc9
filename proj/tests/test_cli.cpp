#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / name;
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args, const std::string& env = "") {
    static int counter = 0;
    const fs::path capture =
        fs::temp_directory_path() / ("artsim_cli_out_" + std::to_string(counter++));
    const std::string cmd =
        env + " " + std::string(ARTSIM_CLI_PATH) + " " + args + " > " + capture.string() + " 2>&1";
    const int status = std::system(cmd.c_str());

    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(capture);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    result.output = buffer.str();
    fs::remove(capture);
    return result;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Small weighted bundle shared by the pipeline tests.
void make_bundle(const std::string& dir, uint64_t seed = 9) {
    RunResult r = run_cli("synth --out " + dir +
                          " --communities 3 --community-size 8 --p-in 0.8 --p-out 0.05 "
                          "--feature-dim 4 --feature-noise 0.5 --train-ratio 0.7 "
                          "--validation-ratio 0.15 --test-ratio 0.15 --seed " +
                          std::to_string(seed));
    REQUIRE(r.exit_code == 0);
}

const std::string kTinyModel =
    " --gc-width 12 --backend-width1 12 --backend-width2 12 --output-dim 6 ";

}  // namespace

TEST_CASE("cli synth and stats round trip") {
    TempDir dir("artsim_cli_synth");
    make_bundle(dir.str() + "/bundle");
    CHECK(fs::exists(dir.path / "bundle/manifest.json"));
    CHECK(fs::exists(dir.path / "bundle/nodes.csv"));
    CHECK(fs::exists(dir.path / "bundle/edges.csv"));

    RunResult stats = run_cli("stats --dataset " + dir.str() + "/bundle --out " + dir.str() +
                              "/stats.json --seed 9");
    CHECK(stats.exit_code == 0);
    CHECK(stats.output.find("nodes 24") != std::string::npos);
    CHECK(stats.output.find("two-hop coverage") != std::string::npos);

    nlohmann::json doc = nlohmann::json::parse(slurp(dir.path / "stats.json"));
    CHECK(doc.at("stats").at("nodes").get<int>() == 24);
    CHECK(doc.at("stats").at("splits").at("train").get<int>() == 18);
    CHECK(doc.at("metadata").at("seed").get<uint64_t>() == 9);
    CHECK(doc.at("metadata").at("bundle_fingerprint").get<std::string>().size() == 16);
}

TEST_CASE("cli train evaluate embed pipeline") {
    TempDir dir("artsim_cli_pipeline");
    make_bundle(dir.str() + "/bundle");

    RunResult train = run_cli("train --dataset " + dir.str() + "/bundle --out " + dir.str() +
                              "/run --gc-layers 1" + kTinyModel +
                              "--epochs 3 --batch-size 8 --seed 9");
    REQUIRE(train.exit_code == 0);
    CHECK(train.output.find("final epoch loss") != std::string::npos);

    // the training log embeds the run metadata and one row per epoch
    const std::string log = slurp(dir.path / "run/train_log.csv");
    CHECK(log.rfind("# {", 0) == 0);
    CHECK(log.find("\"seed\":9") != std::string::npos);
    CHECK(log.find("\"bundle_fingerprint\"") != std::string::npos);
    CHECK(std::count(log.begin(), log.end(), '\n') == 5);  // meta + header + 3 epochs

    RunResult eval = run_cli("evaluate --dataset " + dir.str() + "/bundle --checkpoint " +
                             dir.str() + "/run/checkpoint.json --split test --k 50 --out " +
                             dir.str() + "/eval --seed 9");
    REQUIRE(eval.exit_code == 0);
    CHECK(eval.output.find("mean ndcg@50 = ") != std::string::npos);

    nlohmann::json report = nlohmann::json::parse(slurp(dir.path / "eval/report.json"));
    CHECK(report.at("k").get<int>() == 50);
    CHECK(report.at("eval_eval_reads").get<long>() == 0);
    CHECK(report.at("metadata").at("seed").get<uint64_t>() == 9);
    CHECK(report.at("metadata").at("checkpoint_fingerprint").get<std::string>().size() == 16);

    RunResult embed = run_cli("embed --dataset " + dir.str() + "/bundle --checkpoint " +
                              dir.str() + "/run/checkpoint.json --out " + dir.str() +
                              "/emb.csv --seed 9");
    REQUIRE(embed.exit_code == 0);
    const std::string emb = slurp(dir.path / "emb.csv");
    CHECK(emb.rfind("# {", 0) == 0);
    CHECK(emb.find("node_id,e0,e1,e2,e3,e4,e5\n") != std::string::npos);
    CHECK(std::count(emb.begin(), emb.end(), '\n') == 26);  // meta + header + 24 nodes
}

TEST_CASE("cli train baseline and random feature variants") {
    TempDir dir("artsim_cli_variants");
    make_bundle(dir.str() + "/bundle");

    RunResult dnn = run_cli("train --dataset " + dir.str() + "/bundle --out " + dir.str() +
                            "/dnn --gc-layers 0" + kTinyModel +
                            "--epochs 2 --batch-size 8 --seed 9");
    CHECK(dnn.exit_code == 0);

    RunResult random = run_cli("train --dataset " + dir.str() + "/bundle --out " + dir.str() +
                               "/rnd --gc-layers 1" + kTinyModel +
                               "--epochs 2 --batch-size 8 --features random --random-dim 5 "
                               "--seed 9");
    REQUIRE(random.exit_code == 0);

    // evaluate must regenerate the same random features from the metadata
    RunResult eval = run_cli("evaluate --dataset " + dir.str() + "/bundle --checkpoint " +
                             dir.str() + "/rnd/checkpoint.json --split validation --seed 9");
    CHECK(eval.exit_code == 0);
    CHECK(eval.output.find("mean ndcg@200 = ") != std::string::npos);
}

TEST_CASE("cli reruns are byte identical") {
    TempDir dir("artsim_cli_determinism");
    make_bundle(dir.str() + "/bundle");

    RunResult a = run_cli("train --dataset " + dir.str() + "/bundle --out " + dir.str() +
                          "/a --gc-layers 1" + kTinyModel + "--epochs 2 --batch-size 8 --seed 33");
    RunResult b = run_cli("train --dataset " + dir.str() + "/bundle --out " + dir.str() +
                          "/b --gc-layers 1" + kTinyModel + "--epochs 2 --batch-size 8 --seed 33");
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(slurp(dir.path / "a/checkpoint.json") == slurp(dir.path / "b/checkpoint.json"));
    CHECK(slurp(dir.path / "a/train_log.csv") == slurp(dir.path / "b/train_log.csv"));

    RunResult ea = run_cli("evaluate --dataset " + dir.str() + "/bundle --checkpoint " +
                           dir.str() + "/a/checkpoint.json --split test --out " + dir.str() +
                           "/ea --seed 33");
    RunResult eb = run_cli("evaluate --dataset " + dir.str() + "/bundle --checkpoint " +
                           dir.str() + "/b/checkpoint.json --split test --out " + dir.str() +
                           "/eb --seed 33");
    REQUIRE(ea.exit_code == 0);
    CHECK(ea.output == eb.output);
    CHECK(slurp(dir.path / "ea/report.json") == slurp(dir.path / "eb/report.json"));
    CHECK(slurp(dir.path / "ea/report.csv") == slurp(dir.path / "eb/report.csv"));
}

TEST_CASE("cli config file applies below command line flags") {
    TempDir dir("artsim_cli_config");
    make_bundle(dir.str() + "/bundle");

    {
        std::ofstream ini(dir.path / "run.ini");
        ini << "[train]\n"
            << "gc-layers=2\n"
            << "gc-width=12\nbackend-width1=12\nbackend-width2=12\noutput-dim=6\n"
            << "epochs=2\nbatch-size=8\nseed=9\n";
    }
    RunResult train = run_cli("train --dataset " + dir.str() + "/bundle --out " + dir.str() +
                              "/run --config " + dir.str() + "/run.ini --epochs 1");
    REQUIRE(train.exit_code == 0);

    nlohmann::json run = nlohmann::json::parse(slurp(dir.path / "run/run.json"));
    CHECK(run.at("config").at("gc_layers").get<int>() == 2);  // from the file
    CHECK(run.at("config").at("epochs").get<int>() == 1);     // flag wins
    CHECK(run.at("config").at("seed").get<uint64_t>() == 9);

    {
        std::ofstream ini(dir.path / "bad.ini");
        ini << "[train]\nno-such-option=1\n";
    }
    RunResult bad = run_cli("train --dataset " + dir.str() + "/bundle --out " + dir.str() +
                            "/bad --config " + dir.str() + "/bad.ini");
    CHECK(bad.exit_code == 1);
}

TEST_CASE("cli exit codes separate usage and runtime failures") {
    TempDir dir("artsim_cli_exits");
    make_bundle(dir.str() + "/bundle");

    CHECK(run_cli("").exit_code == 1);
    CHECK(run_cli("bogus").exit_code == 1);
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("train --help").exit_code == 0);
    CHECK(run_cli("train --dataset " + dir.str() + "/missing --out x").exit_code == 1);
    CHECK(run_cli("evaluate --dataset " + dir.str() + "/bundle --checkpoint nope.json")
              .exit_code == 1);
    CHECK(run_cli("evaluate --dataset " + dir.str() +
                  "/bundle --checkpoint x --split train")
              .exit_code == 1);
    CHECK(run_cli("synth --out " + dir.str() + "/x --p-in 1.5").exit_code == 1);

    // a mismatched checkpoint is a runtime failure that names both dimensions
    RunResult train = run_cli("train --dataset " + dir.str() + "/bundle --out " + dir.str() +
                              "/run --gc-layers 0" + kTinyModel +
                              "--epochs 1 --batch-size 8 --seed 9");
    REQUIRE(train.exit_code == 0);
    RunResult other = run_cli("synth --out " + dir.str() +
                              "/wide --communities 2 --community-size 6 --feature-dim 7 --seed 1");
    REQUIRE(other.exit_code == 0);
    RunResult mismatch = run_cli("evaluate --dataset " + dir.str() + "/wide --checkpoint " +
                                 dir.str() + "/run/checkpoint.json --split test");
    CHECK(mismatch.exit_code == 2);
    CHECK(mismatch.output.find("input dimension 4") != std::string::npos);
    CHECK(mismatch.output.find("provides 7") != std::string::npos);

    // a corrupted bundle is a runtime failure
    {
        std::ofstream tamper(dir.path / "bundle/edges.csv", std::ios::app);
        tamper << "a0,a1,2\n";
    }
    RunResult corrupt = run_cli("stats --dataset " + dir.str() + "/bundle");
    CHECK(corrupt.exit_code == 2);
    CHECK(corrupt.output.find("checksum mismatch") != std::string::npos);
}

TEST_CASE("cli honors the thread count environment variable") {
    TempDir dir("artsim_cli_threads");
    make_bundle(dir.str() + "/bundle");

    RunResult ok = run_cli("stats --dataset " + dir.str() + "/bundle", "ARTSIM_THREADS=1");
    CHECK(ok.exit_code == 0);
    RunResult bad = run_cli("stats --dataset " + dir.str() + "/bundle", "ARTSIM_THREADS=junk");
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("ARTSIM_THREADS") != std::string::npos);
}
