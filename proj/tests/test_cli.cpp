#include "cli.hpp"

#include "fne/datagen.hpp"
#include "fne/experiment.hpp"
#include "fne/sampler.hpp"
#include "fne/trainer.hpp"

#include "oracles.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() /
                ("fne_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root_);
        fs::create_directories(root_);
        ::setenv(fne::cli::kOutputRootEnv, root_.c_str(), 1);
    }
    void TearDown() override {
        ::unsetenv(fne::cli::kOutputRootEnv);
        fs::remove_all(root_);
    }

    int run(std::vector<std::string> args) {
        out_.str("");
        err_.str("");
        return fne::cli::run(args, out_, err_);
    }

    std::string path(const std::string& rel) const { return (root_ / rel).string(); }

    static std::string slurp(const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream s;
        s << f.rdbuf();
        return s.str();
    }

    static std::vector<std::vector<std::string>> csv(const std::string& p) {
        std::vector<std::vector<std::string>> rows;
        std::istringstream in(slurp(p));
        std::string line;
        while (std::getline(in, line)) {
            std::vector<std::string> cells;
            std::istringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) {
                cells.push_back(cell);
            }
            if (!line.empty() && line.back() == ',') {
                cells.emplace_back();
            }
            rows.push_back(cells);
        }
        return rows;
    }

    fs::path root_;
    std::ostringstream out_, err_;
};

} // namespace

TEST_F(Cli, GenerateDataRoundTripsAndIsReproducible) {
    ASSERT_EQ(run({"generate-data", "--seed", "7", "-o", "a.fned"}), 0) << err_.str();
    ASSERT_EQ(run({"generate-data", "--seed", "7", "-o", "b.fned"}), 0) << err_.str();
    EXPECT_EQ(slurp(path("a.fned")), slurp(path("b.fned")));
    fne::SyntheticSpec spec;
    spec.seed = 7;
    EXPECT_EQ(fne::load_embeddings(path("a.fned")), fne::generate(spec));
    EXPECT_NE(out_.str().find("256 images"), std::string::npos) << out_.str();
}

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run({"generate-data", "--clusters", "0"}), 2);
    EXPECT_EQ(run({}), 2);
    EXPECT_EQ(run({"frobnicate"}), 2);
    EXPECT_EQ(run({"generate-data", "--clusters", "many"}), 2);
    EXPECT_EQ(run({"weights-curve"}), 2);
    EXPECT_EQ(run({"weights-curve", "--mu-pos", "0.7"}), 2);
    EXPECT_EQ(run({"sweep", "--axis", "momentum", "--values", "0.9"}), 2);
    EXPECT_EQ(run({"generate-data", "--min-center-angle", "89", "--latent-dim", "2", "--image-dim", "2",
                   "--text-dim", "2"}),
              2);
}

TEST_F(Cli, MissingFilesExitThree) {
    EXPECT_EQ(run({"train", "--data", path("nope.fned")}), 3);
    EXPECT_EQ(run({"eval", "--checkpoint", path("nope.fnec"), "--data", path("nope.fned")}), 3);
    EXPECT_EQ(run({"generate-data", "--config", path("nope.json")}), 3);
    EXPECT_EQ(run({"weights-curve", "--checkpoint", path("nope.fnec")}), 3);
}

TEST_F(Cli, HelpExitsZero) {
    EXPECT_EQ(run({"--help"}), 0);
    EXPECT_NE(out_.str().find("weights-curve"), std::string::npos);
    EXPECT_EQ(run({"train", "--help"}), 0);
    EXPECT_NE(out_.str().find("--mode"), std::string::npos);
}

TEST_F(Cli, ConfigFileBelowFlags) {
    {
        std::ofstream cfg(path("cfg.json"));
        cfg << R"({"seed": 5, "data": {"n_clusters": 3, "items_per_cluster": 4, "noise_sigma": 0.2}})";
    }
    ASSERT_EQ(run({"generate-data", "--config", path("cfg.json"), "--clusters", "2", "-o", "d.fned"}), 0)
        << err_.str();
    const auto ds = fne::load_embeddings(path("d.fned"));
    EXPECT_EQ(ds.n_images(), 2u * 4u);
    const auto resolved = fne::load_config_file(path("d.fned.config.json"));
    EXPECT_EQ(resolved.seed, 5u);
    EXPECT_EQ(resolved.data.n_clusters, 2u);
    EXPECT_EQ(resolved.data.noise_sigma, 0.2);

    std::ofstream bad(path("bad.json"));
    bad << R"({"data": {"n_clustres": 3}})";
    bad.close();
    EXPECT_EQ(run({"generate-data", "--config", path("bad.json")}), 2);
}

TEST_F(Cli, TrainModesProduceDistinctLogs) {
    ASSERT_EQ(run({"generate-data", "--seed", "1", "--clusters", "4", "--items-per-cluster", "16", "-o", "d.fned"}), 0);
    for (const std::string mode : {"fne", "hardest"}) {
        ASSERT_EQ(run({"train", "--data", path("d.fned"), "--seed", "1", "--epochs", "3", "--batch-size", "16",
                       "--min-ready", "32", "--mode", mode, "--out-dir", mode}),
                  0)
            << err_.str();
        EXPECT_TRUE(fs::exists(path(mode + "/checkpoint.fnec")));
        EXPECT_FALSE(fs::exists(path(mode + "/FAILED")));
        const auto resolved = fne::load_config_file(path(mode + "/config.json"));
        EXPECT_EQ(resolved.fne.mode, *fne::parse_mode(mode));
        EXPECT_EQ(fne::to_json(fne::load_config_file(path(mode + "/config.json"))), fne::to_json(resolved));
    }
    const auto a = csv(path("fne/train_log.csv"));
    const auto b = csv(path("hardest/train_log.csv"));
    ASSERT_EQ(a.front().back(), "fn_sample_rate");
    ASSERT_EQ(a.size(), b.size());
    std::vector<std::string> fa, fb;
    for (std::size_t i = 1; i < a.size(); ++i) {
        fa.push_back(a[i].back());
        fb.push_back(b[i].back());
    }
    EXPECT_NE(fa, fb);
}

TEST_F(Cli, ZeroEpochsWritesInitialState) {
    ASSERT_EQ(run({"generate-data", "--seed", "2", "-o", "d.fned"}), 0);
    ASSERT_EQ(run({"train", "--data", path("d.fned"), "--seed", "2", "--epochs", "0", "--out-dir", "t"}), 0)
        << err_.str();
    const auto st = fne::load_checkpoint(path("t/checkpoint.fnec"));
    fne::TrainConfig cfg;
    cfg.seed = 2;
    const auto init = fne::TrainState::initialize(32, 32, cfg);
    EXPECT_EQ(st.image_encoder, init.image_encoder);
    EXPECT_EQ(st.step, 0u);
    EXPECT_EQ(csv(path("t/train_log.csv")).size(), 1u);
}

TEST_F(Cli, EvalMatchesLibraryAndRejectsDimensionMismatch) {
    ASSERT_EQ(run({"generate-data", "--seed", "4", "-o", "d.fned"}), 0);
    ASSERT_EQ(run({"train", "--data", path("d.fned"), "--seed", "4", "--epochs", "0", "--out-dir", "t"}), 0);
    ASSERT_EQ(run({"eval", "--checkpoint", path("t/checkpoint.fnec"), "--data", path("d.fned"), "--out-dir", "e"}),
              0)
        << err_.str();
    const auto st = fne::load_checkpoint(path("t/checkpoint.fnec"));
    const auto ds = fne::load_embeddings(path("d.fned"));
    const auto img = fne::encode_images(st.image_encoder, ds);
    const auto txt = fne::encode_texts(st.text_encoder, ds);
    const auto rep = fne::evaluate_retrieval(img, txt, ds);
    std::ostringstream want;
    fne::write_report_csv(rep, want);
    EXPECT_EQ(slurp(path("e/recall.csv")), want.str());
    for (const auto& row : csv(path("e/recall.csv"))) {
        if (row[0] != "direction") {
            EXPECT_TRUE(std::isfinite(std::stod(row[2])));
        }
    }

    ASSERT_EQ(run({"generate-data", "--image-dim", "16", "-o", "narrow.fned"}), 0);
    EXPECT_EQ(run({"eval", "--checkpoint", path("t/checkpoint.fnec"), "--data", path("narrow.fned")}), 2);
}

TEST_F(Cli, EvalOnSeparableFixtureIsPerfect) {
    // Noiseless views and encoders that invert the view maps: every item maps
    // back to its own latent.
    fne::SyntheticSpec spec;
    spec.noise_sigma = 0.0;
    spec.duplicate_rate = 0.0;
    spec.seed = 6;
    const auto gen = fne::generate_with_world(spec);
    fne::save_embeddings(gen.dataset, path("d.fned"));

    auto inverse = [](const fne::Matrix& map) {
        Eigen::MatrixXd m(map.rows(), map.cols());
        for (std::size_t r = 0; r < map.rows(); ++r) {
            for (std::size_t c = 0; c < map.cols(); ++c) {
                m(r, c) = map(r, c);
            }
        }
        const Eigen::MatrixXd pinv = m.completeOrthogonalDecomposition().pseudoInverse();
        fne::Matrix out(pinv.rows(), pinv.cols());
        for (Eigen::Index r = 0; r < pinv.rows(); ++r) {
            for (Eigen::Index c = 0; c < pinv.cols(); ++c) {
                out(r, c) = pinv(r, c);
            }
        }
        return out;
    };
    fne::TrainConfig cfg;
    cfg.embed_dim = spec.latent_dim;
    auto st = fne::TrainState::initialize(spec.image_dim, spec.text_dim, cfg);
    const std::vector<double> zero(spec.latent_dim, 0.0);
    st.image_encoder = fne::Encoder::linear(inverse(gen.world.image_map), zero);
    st.text_encoder = fne::Encoder::linear(inverse(gen.world.text_map), zero);
    fne::save_checkpoint(st, path("perfect.fnec"));

    ASSERT_EQ(run({"eval", "--checkpoint", path("perfect.fnec"), "--data", path("d.fned"), "--out-dir", "e"}), 0)
        << err_.str();
    for (const auto& row : csv(path("e/recall.csv"))) {
        if (row[0] != "direction") {
            EXPECT_EQ(std::stod(row[2]), 1.0) << row[0] << " K=" << row[1];
        }
    }
}

TEST_F(Cli, WeightsCurveColumnsAndOracle) {
    ASSERT_EQ(run({"weights-curve", "--mu-pos", "0.7", "--sigma-pos", "0.1", "--mu-neg", "0.2", "--sigma-neg", "0.1",
                   "-o", "w.csv"}),
              0)
        << err_.str();
    const auto rows = csv(path("w.csv"));
    ASSERT_EQ(rows.front(), (std::vector<std::string>{"s", "posterior", "branch", "weight"}));
    ASSERT_EQ(rows.size(), 2002u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double s = std::stod(rows[i][0]);
        const double post = std::stod(rows[i][1]);
        const double w = std::stod(rows[i][3]);
        EXPECT_NEAR(s, -1.0 + 0.001 * static_cast<double>(i - 1), 1e-12);
        EXPECT_GT(w, 0.0);
        EXPECT_LE(w, 1.0);
        EXPECT_NEAR(post, oracle::bayes_posterior(s, 1e-6, 0.7, 0.1, 0.2, 0.1, 1e-4), 1e-9);
        const bool cut = post <= 0.01;
        EXPECT_EQ(rows[i][2], cut ? "cutdown" : "posterior");
        const double expect_w = cut ? std::exp(-0.5 * (s - 0.7) * (s - 0.7)) : std::exp(-post);
        EXPECT_NEAR(w, expect_w, 1e-12);
    }
}

TEST_F(Cli, WeightsCurveSymmetricEvenPrior) {
    ASSERT_EQ(run({"weights-curve", "--mu-pos", "0.3", "--sigma-pos", "0.2", "--mu-neg", "0.3", "--sigma-neg", "0.2",
                   "--prior-p", "0.5", "-o", "w.csv"}),
              0);
    const auto rows = csv(path("w.csv"));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(std::stod(rows[i][1]), 0.5);
    }
}

TEST_F(Cli, WeightsCurveFromCheckpoint) {
    ASSERT_EQ(run({"generate-data", "--seed", "1", "--clusters", "4", "--items-per-cluster", "16", "-o", "d.fned"}), 0);
    ASSERT_EQ(run({"train", "--data", path("d.fned"), "--seed", "1", "--epochs", "1", "--batch-size", "16",
                   "--min-ready", "32", "--out-dir", "t"}),
              0);
    ASSERT_EQ(run({"weights-curve", "--checkpoint", path("t/checkpoint.fnec"), "-o", "w.csv"}), 0) << err_.str();
    EXPECT_EQ(csv(path("w.csv")).size(), 2002u);
}

TEST_F(Cli, SweepRowsAndReproducibility) {
    const std::vector<std::string> args{"sweep", "--axis", "prior_p", "--values", "1e-3,1e-4,1e-5", "--epochs", "1",
                                        "--clusters", "4", "--items-per-cluster", "8", "--seed", "9"};
    auto first = args;
    first.insert(first.end(), {"--out-dir", "s1"});
    auto second = args;
    second.insert(second.end(), {"--out-dir", "s2", "--jobs", "2"});
    ASSERT_EQ(run(first), 0) << err_.str();
    ASSERT_EQ(run(second), 0) << err_.str();
    const auto rows = csv(path("s1/sweep.csv"));
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0][0], "axis");
    EXPECT_EQ(slurp(path("s1/sweep.csv")), slurp(path("s2/sweep.csv")));
}

TEST_F(Cli, DefaultTrainingRunIsQuick) {
    ASSERT_EQ(run({"generate-data", "-o", "d.fned"}), 0);
    const auto start = std::chrono::steady_clock::now();
    ASSERT_EQ(run({"train", "--data", path("d.fned"), "--out-dir", "t"}), 0) << err_.str();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_LT(secs, 120.0);
}

TEST(OutputRoot, OnlyRelativePathsAreRebased) {
    ::setenv(fne::cli::kOutputRootEnv, "/srv/runs", 1);
    EXPECT_EQ(fne::cli::output_path("a/b.csv"), fs::path("/srv/runs/a/b.csv"));
    EXPECT_EQ(fne::cli::output_path("/tmp/x.csv"), fs::path("/tmp/x.csv"));
    ::unsetenv(fne::cli::kOutputRootEnv);
    EXPECT_EQ(fne::cli::output_path("a/b.csv"), fs::path("a/b.csv"));
}
