#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "dfprune/model_io.hpp"
#include "dfprune/trainer.hpp"
#include "support/fixtures.hpp"

using namespace dfprune;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(DFPRUNE_CLI_PATH) + " " + args + " 2>&1";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 512> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("dfprune_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

double reported(const std::string& out, const std::string& key) {
    const auto pos = out.find(key);
    if (pos == std::string::npos) return -1.0;
    return std::stod(out.substr(pos + key.size()));
}

}  // namespace

TEST_F(Cli, TrainSyntheticReachesHighAccuracy) {
    const auto r = run("train --synthetic --hidden 20 --seed 7 --out " + path("net.model"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(path("net.model")));
    EXPECT_GE(reported(r.out, "test accuracy: "), 95.0) << r.out;
    EXPECT_GE(reported(r.out, "train accuracy: "), 95.0) << r.out;
}

TEST_F(Cli, MissingOutIsUsageError) {
    EXPECT_EQ(run("train --synthetic").code, 2);
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("train --synthetic --activation tanh --out " + path("x.model")).code, 2);
}

TEST_F(Cli, HelpExitsZero) {
    const auto r = run("prune --help");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("--layer"), std::string::npos);
}

TEST_F(Cli, ZeroEpochsSavesInitialization) {
    ASSERT_EQ(run("train --synthetic --epochs 0 --seed 5 --out " + path("init.model")).code, 0);
    TrainConfig cfg;
    cfg.seed = 5;
    EXPECT_EQ(load_model(path("init.model")), init_network(10, 2, cfg));
}

TEST_F(Cli, SavedModelMatchesInMemoryTraining) {
    ASSERT_EQ(run("train --synthetic --generator spamlike --seed 1 --out " + path("m.model")).code, 0);
    SpamLikeConfig data;
    const auto ds = make_spam_like(data, 2024);
    TrainConfig cfg;
    cfg.seed = 1;
    const Network mem = train(ds, cfg);
    const Network disk = load_model(path("m.model"));
    EXPECT_EQ(disk, mem);
    EXPECT_EQ(evaluate(disk, ds, Split::Test).accuracy, evaluate(mem, ds, Split::Test).accuracy);
}

TEST_F(Cli, PruneZeroIsIdentity) {
    ASSERT_EQ(run("train --synthetic --out " + path("net.model")).code, 0);
    const auto r = run("prune --model " + path("net.model") + " --out " + path("same.model") + " --layer 0:0");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(slurp(path("net.model")), slurp(path("same.model")));
    EXPECT_EQ(load_model(path("same.model")), load_model(path("net.model")));
}

TEST_F(Cli, RandomPolicyIsDeterministic) {
    ASSERT_EQ(run("train --synthetic --out " + path("net.model")).code, 0);
    const std::string base = "prune --model " + path("net.model") + " --layer 0:12 --policy random --seed 3";
    ASSERT_EQ(run(base + " --out " + path("a.model") + " --trace " + path("a.csv")).code, 0);
    ASSERT_EQ(run(base + " --out " + path("b.model") + " --trace " + path("b.csv")).code, 0);
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    EXPECT_EQ(import_trace(path("a.csv")).size(), 12u);
}

TEST_F(Cli, PruneDoesNotTouchInputAndReportsCompression) {
    ASSERT_EQ(run("train --synthetic --out " + path("net.model")).code, 0);
    const auto before = slurp(path("net.model"));
    const auto r = run("prune --model " + path("net.model") + " --out " + path("p.model") + " --layer 0:5");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(slurp(path("net.model")), before);
    // 5 neurons of a 10-20-2 net: 5 * (10 + 1 + 2) of 262
    EXPECT_NEAR(reported(r.out, "compression: "), 100.0 * 65.0 / 262.0, 0.01) << r.out;
}

TEST_F(Cli, PlanValidation) {
    const auto net = dfprune::testing::random_network(1, {4, 6, 5, 2}, Activation::ReLU);
    save_model(net, path("deep.model"));
    const std::string pre = "prune --model " + path("deep.model") + " --out " + path("o.model");
    const auto out_layer = run(pre + " --layer 2:1");
    EXPECT_EQ(out_layer.code, 1);
    EXPECT_NE(out_layer.out.find("not a hidden layer"), std::string::npos) << out_layer.out;
    EXPECT_EQ(run(pre + " --layer 1:1 --layer 0:1").code, 2);
    EXPECT_EQ(run(pre + " --layer 0").code, 2);
    EXPECT_EQ(run(pre + " --layer 0:-1").code, 2);
    EXPECT_EQ(run(pre + " --layer 0:6").code, 1);
}

TEST_F(Cli, MultiLayerTracesAreSuffixed) {
    const auto net = dfprune::testing::random_network(2, {4, 6, 5, 2}, Activation::ReLU);
    save_model(net, path("deep.model"));
    const auto r = run("prune --model " + path("deep.model") + " --out " + path("o.model") + " --trace " +
                       path("t.csv") + " --layer 0:2 --layer 1:3");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(import_trace(path("t.csv.L0")).size(), 2u);
    EXPECT_EQ(import_trace(path("t.csv.L1")).size(), 3u);
    const auto pruned = load_model(path("o.model"));
    EXPECT_EQ(pruned.layer(0).n_out(), 4u);
    EXPECT_EQ(pruned.layer(1).n_out(), 2u);
}

TEST_F(Cli, CutoffModes) {
    ASSERT_EQ(run("train --synthetic --out " + path("net.model")).code, 0);
    ASSERT_EQ(run("prune --model " + path("net.model") + " --out " + path("p.model") + " --trace " + path("t.csv") +
                  " --layer 0:19")
                  .code,
              0);
    const auto free = run("cutoff --trace " + path("t.csv") + " --out " + path("free.txt"));
    ASSERT_EQ(free.code, 0) << free.out;
    EXPECT_NE(slurp(path("free.txt")).find("method = data-free\n"), std::string::npos);

    EXPECT_EQ(run("cutoff --trace " + path("t.csv") + " --method data-driven --model " + path("net.model")).code, 2);

    const auto driven = run("cutoff --trace " + path("t.csv") + " --method data-driven --synthetic --model " +
                            path("net.model") + " --budget 8 --out " + path("driven.txt"));
    ASSERT_EQ(driven.code, 0) << driven.out;
    const auto report = slurp(path("driven.txt"));
    EXPECT_NE(report.find("method = data-driven\n"), std::string::npos);
    EXPECT_NE(report.find("budget = 8\n"), std::string::npos);

    const auto mismatch = run("cutoff --trace " + path("t.csv") + " --method data-driven --synthetic --model " +
                              path("net.model") + " --policy naive");
    EXPECT_EQ(mismatch.code, 1);
}

TEST_F(Cli, EvalRejectsDimensionMismatch) {
    ASSERT_EQ(run("train --synthetic --out " + path("net.model")).code, 0);
    const auto ok = run("eval --model " + path("net.model") + " --synthetic");
    EXPECT_EQ(ok.code, 0);
    const auto bad = run("eval --model " + path("net.model") + " --synthetic --generator spamlike");
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.out.find("features"), std::string::npos) << bad.out;
}

TEST_F(Cli, EvalCsvDataset) {
    {
        std::ofstream csv(path("d.csv"));
        csv << "a,b,label\n";
        for (int k = 0; k < 40; ++k) csv << k % 7 << ',' << (k % 2 ? 3 : -3) << ',' << k % 2 << '\n';
    }
    ASSERT_EQ(run("train --data " + path("d.csv") + " --skip-header --epochs 50 --out " + path("c.model")).code, 0);
    const auto r = run("eval --model " + path("c.model") + " --data " + path("d.csv") + " --skip-header --split train");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(run("eval --model " + path("c.model") + " --data " + path("d.csv")).code, 1);
}

TEST_F(Cli, CompareWritesAlignedCurvesQuickly) {
    const auto start = std::chrono::steady_clock::now();
    const auto r = run("compare --synthetic --generator spamlike --out-dir " + dir_.string());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_LT(secs, 60.0);
    std::string grid;
    for (const char* name : {"saliency", "nosurgery", "naive", "random"}) {
        const auto text = slurp(dir_ / (std::string(name) + ".csv"));
        ASSERT_FALSE(text.empty()) << name;
        std::istringstream in(text);
        std::string line;
        std::getline(in, line);
        EXPECT_EQ(line, "step,error");
        std::string steps;
        while (std::getline(in, line)) steps += line.substr(0, line.find(',')) + ' ';
        if (grid.empty()) grid = steps;
        EXPECT_EQ(steps, grid) << name;
    }
    EXPECT_EQ(grid.substr(0, 6), "0 1 2 ");
    EXPECT_EQ(run("compare --synthetic --out-dir " + path("missing")).code, 2);
}
