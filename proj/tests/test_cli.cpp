#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

// Runs the CLI with stdout captured; stderr goes to a file in the work dir.
Result run(const std::string& args, const fs::path& dir) {
    const std::string cmd = std::string(STCAD_CLI_PATH) + " " + args + " 2>" +
                            (dir / "stderr.txt").string();
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> data_lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#') out.push_back(line);
    }
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = fs::temp_directory_path() / ("stcad_cli_" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        auto gen = run("generate -o " + (dir_ / "edges.txt").string() +
                           " --nodes 60 --snapshots 10 --edges-per-snapshot 80 --seed 3",
                       dir_);
        ASSERT_EQ(gen.code, 0);
        auto ing = run("ingest " + (dir_ / "edges.txt").string() + " -o " +
                           (dir_ / "g.stcg").string() + " --snapshot-size 80",
                       dir_);
        ASSERT_EQ(ing.code, 0);
        auto tr = run("train " + (dir_ / "g.stcg").string() + " --epochs 2 --eval-every 1 --out " +
                          (dir_ / "run").string(),
                      dir_);
        ASSERT_EQ(tr.code, 0) << slurp(dir_ / "stderr.txt");
    }
    static void TearDownTestSuite() { fs::remove_all(dir_); }

    static fs::path dir_;
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, IngestReportsCounts) {
    std::ofstream(dir_ / "toy.txt") << "a b 1\nb c 2\n";
    auto r = run("ingest " + (dir_ / "toy.txt").string() + " -o " + (dir_ / "toy.stcg").string(), dir_);
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("nodes 3\n"), std::string::npos);
    EXPECT_NE(r.out.find("edges 2\n"), std::string::npos);
    EXPECT_EQ(slurp(dir_ / "toy.stcg").substr(0, 4), "STCG");
}

TEST_F(Cli, CorruptInputFails) {
    std::ofstream(dir_ / "bad.txt") << "a b 1\nc d\n";
    auto r = run("ingest " + (dir_ / "bad.txt").string() + " -o " + (dir_ / "bad.stcg").string(), dir_);
    EXPECT_NE(r.code, 0);
    const auto err = slurp(dir_ / "stderr.txt");
    EXPECT_NE(err.find("error"), std::string::npos);
    EXPECT_NE(err.find("line 2"), std::string::npos);

    std::ofstream(dir_ / "junk.stcg") << "STCG\x01";
    auto t = run("train " + (dir_ / "junk.stcg").string() + " --epochs 1", dir_);
    EXPECT_NE(t.code, 0);
}

TEST_F(Cli, TrainWritesArtifactsAndEchoesDefaults) {
    const auto run_dir = dir_ / "run";
    ASSERT_TRUE(fs::exists(run_dir / "report.json"));
    ASSERT_TRUE(fs::exists(run_dir / "best.ckpt"));
    ASSERT_TRUE(fs::exists(run_dir / "final.ckpt"));
    auto j = nlohmann::json::parse(slurp(run_dir / "report.json"));
    const auto& cfg = j["config"];
    EXPECT_EQ(cfg["C"], "5");
    EXPECT_EQ(cfg["T"], "4");
    EXPECT_EQ(cfg["d"], "32");
    EXPECT_EQ(cfg["heads"], "2");
    EXPECT_EQ(cfg["layers"], "2");
    EXPECT_EQ(cfg["lr"], "0.001");
    EXPECT_EQ(cfg["lambda"], "1");
    EXPECT_EQ(cfg["epochs"], "2");
    EXPECT_EQ(j["epochs"].size(), 2u);
    EXPECT_EQ(slurp(run_dir / "best.ckpt").substr(0, 10), "STCKPT v1\n");
    EXPECT_NE(slurp(run_dir / "best.ckpt").find("# C = 5"), std::string::npos);
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
    std::ofstream(dir_ / "run.conf") << "# test\nepochs = 1\nlambda = 0.5\nseed = 9\n";
    auto r = run("train " + (dir_ / "g.stcg").string() + " --config " + (dir_ / "run.conf").string() +
                     " --seed 4 --ablate no-coupling-features --train-ratio 0.7 --out " +
                     (dir_ / "run2").string(),
                 dir_);
    ASSERT_EQ(r.code, 0) << slurp(dir_ / "stderr.txt");
    auto cfg = nlohmann::json::parse(slurp(dir_ / "run2" / "report.json"))["config"];
    EXPECT_EQ(cfg["epochs"], "1");
    EXPECT_EQ(cfg["lambda"], "0.5");
    EXPECT_EQ(cfg["seed"], "4");
    EXPECT_EQ(cfg["use_level2"], "false");
    EXPECT_EQ(cfg["split_fraction"], "0.7");

    std::ofstream(dir_ / "bad.conf") << "epochs = 1\nwarmup = 3\n";
    auto bad = run("train " + (dir_ / "g.stcg").string() + " --config " + (dir_ / "bad.conf").string(),
                   dir_);
    EXPECT_NE(bad.code, 0);
    EXPECT_NE(slurp(dir_ / "stderr.txt").find("warmup"), std::string::npos);
}

TEST_F(Cli, EvalRatesAndErrors) {
    const auto ckpt = (dir_ / "run" / "best.ckpt").string();
    std::string first;
    for (const char* rate : {"0.01", "0.05", "0.1", "0.1"}) {
        auto r = run("eval " + (dir_ / "g.stcg").string() + " --checkpoint " + ckpt +
                         " --inject-rate " + rate + " --out " + (dir_ / "ev").string(),
                     dir_);
        ASSERT_EQ(r.code, 0) << slurp(dir_ / "stderr.txt");
        auto j = nlohmann::json::parse(slurp(dir_ / "ev" / "eval.json"));
        EXPECT_GE(j["result"]["n_pos"].get<int>(), 1);
        if (std::string(rate) == "0.1") {
            if (first.empty()) first = r.out;
            else EXPECT_EQ(r.out, first);
        }
    }
    auto zero = run("eval " + (dir_ / "g.stcg").string() + " --checkpoint " + ckpt +
                        " --inject-rate 0",
                    dir_);
    EXPECT_NE(zero.code, 0);
    EXPECT_NE(slurp(dir_ / "stderr.txt").find("no positives"), std::string::npos);

    auto missing = run("eval " + (dir_ / "g.stcg").string(), dir_);
    EXPECT_NE(missing.code, 0);
    EXPECT_NE(slurp(dir_ / "stderr.txt").find("checkpoint"), std::string::npos);
}

TEST_F(Cli, RankTopFive) {
    auto r = run("rank " + (dir_ / "g.stcg").string() + " --checkpoint " +
                     (dir_ / "run" / "best.ckpt").string() + " --out " + (dir_ / "rk").string(),
                 dir_);
    ASSERT_EQ(r.code, 0) << slurp(dir_ / "stderr.txt");
    auto lines = data_lines(dir_ / "rk" / "rank.csv");
    ASSERT_EQ(lines.size(), 6u);
    EXPECT_EQ(lines[0], "rank,source,target,score");
    double prev = 2.0;
    const auto edges = slurp(dir_ / "edges.txt");
    for (std::size_t k = 1; k < lines.size(); ++k) {
        auto f = split(lines[k], ',');
        ASSERT_EQ(f.size(), 4u);
        EXPECT_EQ(f[0], std::to_string(k));
        EXPECT_EQ(f[1][0], 'n');  // generator labels
        EXPECT_NE(edges.find(f[1] + " " + f[2] + " "), std::string::npos) << lines[k];
        const double s = std::stod(f[3]);
        EXPECT_LE(s, prev);
        prev = s;
    }

    std::ofstream(dir_ / "cand.txt") << "n0 n1\nn2,n3\n";
    auto few = run("rank " + (dir_ / "g.stcg").string() + " --checkpoint " +
                       (dir_ / "run" / "best.ckpt").string() + " --candidates " +
                       (dir_ / "cand.txt").string() + " --out " + (dir_ / "rk2").string(),
                   dir_);
    ASSERT_EQ(few.code, 0);
    EXPECT_EQ(data_lines(dir_ / "rk2" / "rank.csv").size(), 3u);
    EXPECT_NE(slurp(dir_ / "stderr.txt").find("warning"), std::string::npos);
}

TEST_F(Cli, ExportEmbeddings) {
    auto export_once = [&](const std::string& out) {
        auto r = run("export-embeddings " + (dir_ / "g.stcg").string() + " --checkpoint " +
                         (dir_ / "run" / "best.ckpt").string() + " --out " + (dir_ / out).string(),
                     dir_);
        EXPECT_EQ(r.code, 0) << slurp(dir_ / "stderr.txt");
        return data_lines(dir_ / out / "embeddings.csv");
    };
    EXPECT_EQ(export_once("emb1"), export_once("emb2"));
    auto lines = data_lines(dir_ / "emb1" / "embeddings.csv");
    ASSERT_GT(lines.size(), 1u);
    EXPECT_EQ(split(lines[0], ',').size(), 34u);
    for (std::size_t k = 1; k < lines.size(); ++k) {
        auto f = split(lines[k], ',');
        ASSERT_EQ(f.size(), 34u);
        EXPECT_TRUE(f[1] == "0" || f[1] == "1");
    }
}

TEST_F(Cli, DumpsSamplesAndFeatures) {
    auto r = run("train " + (dir_ / "g.stcg").string() + " --epochs 1 --out " + (dir_ / "run3").string() +
                     " --dump-samples " + (dir_ / "s.jsonl").string() + " --dump-features " +
                     (dir_ / "f.csv").string(),
                 dir_);
    ASSERT_EQ(r.code, 0) << slurp(dir_ / "stderr.txt");
    std::ifstream in(dir_ / "s.jsonl");
    std::string line;
    ASSERT_TRUE(std::getline(in, line));
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["split"], "train");
    EXPECT_EQ(j["window"].size(), 4u);
    EXPECT_EQ(j["window"][0].size(), 7u);
    auto rows = data_lines(dir_ / "f.csv");
    EXPECT_EQ(rows[0], "sample_id,t,node,f_glo,f_loc,f_tmp,f_dc,f_ic,f_nc");
}
