#include "fne/datagen.hpp"
#include "fne/error.hpp"
#include "fne/eval.hpp"
#include "fne/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace fne;

namespace {

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            m(r, c) = rows[r][c];
        }
    }
    return m;
}

// Two images, three texts; texts 0,1 belong to image 0, text 2 to image 1.
// Image 0 has label 5, image 1 label 5 as well (semantic duplicates).
PairedDataset tiny_dataset() {
    PairedDataset ds;
    ds.image_dim = 1;
    ds.text_dim = 1;
    ds.images = {1.0f, 2.0f};
    ds.texts = {1.0f, 1.0f, 2.0f};
    ds.pair_of = {0, 0, 1};
    ds.cluster_of = std::vector<std::uint64_t>{5, 5};
    return ds;
}

} // namespace

TEST(Recall, SingleItemGallery) {
    const std::vector<std::size_t> ks{1};
    const auto r = recall_at_k(to_matrix({{0.3}}), {{0}}, ks);
    EXPECT_EQ(r.recall_at.at(1), 1.0);
    EXPECT_EQ(r.n_queries, 1u);
}

TEST(Recall, GroundTruthJustPastK) {
    // Ground truth always sits at rank 4 (1-based).
    const std::vector<std::vector<double>> sim{{0.9, 0.8, 0.7, 0.1, 0.6}, {0.5, 0.9, 0.8, 0.7, 0.6}};
    const std::vector<std::size_t> ks{3, 4};
    const auto r = recall_at_k(to_matrix(sim), {{4}, {4}}, ks);
    EXPECT_EQ(r.recall_at.at(3), 0.0);
    EXPECT_EQ(r.recall_at.at(4), 1.0);
}

TEST(Recall, TiesBreakToLowerIndex) {
    const std::vector<std::size_t> ks{1};
    EXPECT_EQ(recall_at_k(to_matrix({{0.5, 0.5}}), {{0}}, ks).recall_at.at(1), 1.0);
    EXPECT_EQ(recall_at_k(to_matrix({{0.5, 0.5}}), {{1}}, ks).recall_at.at(1), 0.0);
}

TEST(Recall, EmptyGroundTruthNamesQuery) {
    const std::vector<std::size_t> ks{1};
    try {
        recall_at_k(to_matrix({{0.1, 0.2}, {0.3, 0.4}}), {{0}, {}}, ks);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("query 1"), std::string::npos) << e.what();
    }
}

TEST(Recall, MatchesBruteForceOracle) {
    Rng rng(123);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::vector<std::size_t> ks{1, 2, 5, 10, 25};
    for (int fixture = 0; fixture < 30; ++fixture) {
        const std::size_t nq = 10, nc = 20;
        std::vector<std::vector<double>> sim(nq, std::vector<double>(nc));
        std::vector<std::vector<std::uint64_t>> truth(nq);
        for (std::size_t q = 0; q < nq; ++q) {
            for (auto& s : sim[q]) {
                // Coarse values force ties.
                s = std::round(u(rng) * 8.0) / 8.0;
            }
            const std::size_t n_truth = 1 + rng() % 3;
            for (std::size_t k = 0; k < n_truth; ++k) {
                truth[q].push_back(rng() % nc);
            }
        }
        const auto got = recall_at_k(to_matrix(sim), truth, ks);
        EXPECT_EQ(got.recall_at, oracle::brute_force_recall(sim, truth, ks));
    }
}

TEST(Recall, NondecreasingInKAndFullAtGallerySize) {
    Rng rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<double>> sim(15, std::vector<double>(12));
    std::vector<std::vector<std::uint64_t>> truth(15);
    for (std::size_t q = 0; q < 15; ++q) {
        for (auto& s : sim[q]) {
            s = u(rng);
        }
        truth[q] = {rng() % 12};
    }
    std::vector<std::size_t> ks(14);
    for (std::size_t k = 0; k < ks.size(); ++k) {
        ks[k] = k + 1;
    }
    const auto r = recall_at_k(to_matrix(sim), truth, ks);
    double prev = 0.0;
    for (auto [k, v] : r.recall_at) {
        EXPECT_GE(v, prev);
        prev = v;
    }
    EXPECT_EQ(r.recall_at.at(12), 1.0);
    EXPECT_EQ(r.recall_at.at(14), 1.0);
}

TEST(Recall, RankOnlyDependence) {
    Rng rng(10);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<double>> sim(8, std::vector<double>(9));
    std::vector<std::vector<std::uint64_t>> truth(8);
    for (std::size_t q = 0; q < 8; ++q) {
        for (auto& s : sim[q]) {
            s = u(rng);
        }
        truth[q] = {rng() % 9};
    }
    auto warped = sim;
    for (auto& row : warped) {
        for (auto& s : row) {
            s = std::exp(3.0 * s) - 7.0;
        }
    }
    const std::vector<std::size_t> ks{1, 3, 5};
    EXPECT_EQ(recall_at_k(to_matrix(sim), truth, ks).recall_at, recall_at_k(to_matrix(warped), truth, ks).recall_at);
}

TEST(Evaluate, ManyCaptionsCountAnyHit) {
    const auto ds = tiny_dataset();
    // Image 0 prefers text 1 (one of its two captions); image 1 prefers text 2.
    Matrix img(2, 2), txt(3, 2);
    img(0, 0) = 1;
    img(1, 1) = 1;
    txt(0, 0) = 0.5;
    txt(0, 1) = 0.5;
    txt(1, 0) = 1;
    txt(2, 1) = 1;
    const auto rep = evaluate_retrieval(img, txt, ds);
    EXPECT_EQ(rep.image_to_text.recall_at.at(1), 1.0);
    EXPECT_EQ(rep.image_to_text.n_queries, 2u);
    EXPECT_EQ(rep.text_to_image.n_queries, 3u);
    // Text 0 is equidistant; the tie goes to image 0, which is its image.
    EXPECT_EQ(rep.text_to_image.recall_at.at(1), 1.0);
    EXPECT_EQ(rep.mean_r1(), 1.0);
}

TEST(Evaluate, CsvAndTable) {
    RetrievalReport rep;
    rep.image_to_text.recall_at = {{1, 0.5}, {5, 1.0}};
    rep.text_to_image.recall_at = {{1, 0.25}, {5, 0.75}};
    std::ostringstream csv;
    write_report_csv(rep, csv);
    EXPECT_EQ(csv.str(),
              "direction,K,recall\n"
              "image_to_text,1,0.5\nimage_to_text,5,1\n"
              "text_to_image,1,0.25\ntext_to_image,5,0.75\n");
    const std::string table = format_report_table(rep);
    EXPECT_NE(table.find("image_to_text"), std::string::npos);
    EXPECT_NE(table.find("25.00"), std::string::npos);
}

TEST(FnRate, CountingExamples) {
    PairedDataset ds;
    ds.image_dim = ds.text_dim = 1;
    ds.images.assign(4, 1.0f);
    ds.texts.assign(4, 1.0f);
    ds.pair_of = {0, 1, 2, 3};
    ds.cluster_of = std::vector<std::uint64_t>{0, 0, 1, 1};

    const std::vector<SampleRecord> cross{{Direction::image_to_text, 0, 2}, {Direction::text_to_image, 3, 0}};
    EXPECT_EQ(fn_sampling_rate(cross, ds), 0.0);

    const std::vector<SampleRecord> same{{Direction::image_to_text, 0, 1}, {Direction::text_to_image, 2, 3}};
    EXPECT_EQ(fn_sampling_rate(same, ds), 1.0);

    std::vector<SampleRecord> mixed;
    for (int i = 0; i < 7; ++i) {
        mixed.push_back({Direction::image_to_text, 0, 3});
    }
    mixed.push_back({Direction::image_to_text, 1, 0});
    mixed.push_back({Direction::text_to_image, 0, 1});
    mixed.push_back({Direction::text_to_image, 3, 2});
    EXPECT_NEAR(fn_sampling_rate(mixed, ds), 0.3, 1e-15);
}

TEST(FnRate, AnnotatedPositiveIsNotAFalseNegative) {
    const auto ds = tiny_dataset();
    EXPECT_FALSE(is_false_negative({Direction::image_to_text, 0, 1}, ds));
    EXPECT_TRUE(is_false_negative({Direction::image_to_text, 0, 2}, ds));
    EXPECT_TRUE(is_false_negative({Direction::text_to_image, 2, 0}, ds));
    EXPECT_FALSE(is_false_negative({Direction::text_to_image, 2, 1}, ds));
}

TEST(FnRate, NeedsLabels) {
    auto ds = tiny_dataset();
    ds.cluster_of.reset();
    const std::vector<SampleRecord> log{{Direction::image_to_text, 0, 2}};
    EXPECT_THROW(fn_sampling_rate(log, ds), Error);
}
