#include "fne/eval.hpp"

#include "fne/embedding.hpp"
#include "fne/error.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace fne {

RecallCurve recall_at_k(const Matrix& similarity,
                        const std::vector<std::vector<std::uint64_t>>& ground_truth,
                        std::span<const std::size_t> ks) {
    if (ground_truth.size() != similarity.rows()) {
        throw Error(Errc::dimension_mismatch, "ground truth must cover every query row");
    }
    RecallCurve curve;
    curve.n_queries = similarity.rows();
    // best_rank[q] = 0-based rank of the highest-ranked ground-truth candidate.
    std::vector<std::size_t> best_rank(similarity.rows());
    for (std::size_t q = 0; q < similarity.rows(); ++q) {
        const auto& truth = ground_truth[q];
        if (truth.empty()) {
            throw Error(Errc::invalid_argument, "query " + std::to_string(q) + " has no ground truth");
        }
        auto row = similarity.row(q);
        // The best ground-truth candidate: highest score, lowest index on ties.
        std::size_t best = std::numeric_limits<std::size_t>::max();
        for (auto g : truth) {
            if (g >= row.size()) {
                throw Error(Errc::invalid_argument, "query " + std::to_string(q) +
                                                        " ground truth outside the gallery");
            }
            if (best == std::numeric_limits<std::size_t>::max() || row[g] > row[best] ||
                (row[g] == row[best] && g < best)) {
                best = g;
            }
        }
        std::size_t rank = 0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (row[c] > row[best] || (row[c] == row[best] && c < best)) {
                ++rank;
            }
        }
        best_rank[q] = rank;
    }
    for (auto k : ks) {
        std::size_t hits = 0;
        for (auto r : best_rank) {
            hits += r < k ? 1 : 0;
        }
        curve.recall_at[k] = curve.n_queries == 0
                                 ? 0.0
                                 : static_cast<double>(hits) / static_cast<double>(curve.n_queries);
    }
    return curve;
}

double RetrievalReport::mean_r1() const {
    return 0.5 * (image_to_text.recall_at.at(1) + text_to_image.recall_at.at(1));
}

RetrievalReport evaluate_retrieval(const Matrix& image_embeddings, const Matrix& text_embeddings,
                                   const PairedDataset& dataset, std::span<const std::size_t> ks) {
    if (image_embeddings.rows() != dataset.n_images() || text_embeddings.rows() != dataset.n_texts()) {
        throw Error(Errc::dimension_mismatch, "embeddings do not match dataset item counts");
    }
    RetrievalReport report;
    const Matrix i2t = similarity_matrix(image_embeddings, text_embeddings);
    report.image_to_text = recall_at_k(i2t, dataset.captions_by_image(), ks);

    const Matrix t2i = similarity_matrix(text_embeddings, image_embeddings);
    std::vector<std::vector<std::uint64_t>> truth(dataset.n_texts());
    for (std::size_t t = 0; t < dataset.n_texts(); ++t) {
        truth[t] = {dataset.pair_of[t]};
    }
    report.text_to_image = recall_at_k(t2i, truth, ks);
    return report;
}

void write_report_csv(const RetrievalReport& report, std::ostream& out) {
    out << "direction,K,recall\n";
    out << std::setprecision(17);
    for (const auto& [k, r] : report.image_to_text.recall_at) {
        out << "image_to_text," << k << ',' << r << '\n';
    }
    for (const auto& [k, r] : report.text_to_image.recall_at) {
        out << "text_to_image," << k << ',' << r << '\n';
    }
}

std::string format_report_table(const RetrievalReport& report) {
    std::ostringstream os;
    os << std::left << std::setw(16) << "direction";
    for (const auto& [k, r] : report.image_to_text.recall_at) {
        os << std::right << std::setw(9) << ("R@" + std::to_string(k));
    }
    os << '\n';
    auto line = [&](const char* name, const RecallCurve& c) {
        os << std::left << std::setw(16) << name;
        for (const auto& [k, r] : c.recall_at) {
            os << std::right << std::setw(9) << std::fixed << std::setprecision(2) << 100.0 * r;
        }
        os << '\n';
    };
    line("image_to_text", report.image_to_text);
    line("text_to_image", report.text_to_image);
    return os.str();
}

bool is_false_negative(const SampleRecord& record, const PairedDataset& dataset) {
    if (!dataset.cluster_of) {
        throw Error(Errc::invalid_argument, "false-negative diagnostics need cluster labels");
    }
    const auto& labels = *dataset.cluster_of;
    std::uint64_t anchor_image;
    std::uint64_t chosen_image;
    bool annotated;
    if (record.direction == Direction::image_to_text) {
        anchor_image = record.anchor;
        chosen_image = dataset.pair_of.at(record.chosen);
        annotated = chosen_image == anchor_image;
    } else {
        anchor_image = dataset.pair_of.at(record.anchor);
        chosen_image = record.chosen;
        annotated = chosen_image == anchor_image;
    }
    return !annotated && labels.at(anchor_image) == labels.at(chosen_image);
}

double fn_sampling_rate(std::span<const SampleRecord> log, const PairedDataset& dataset) {
    if (!dataset.cluster_of) {
        throw Error(Errc::invalid_argument, "false-negative diagnostics need cluster labels");
    }
    if (log.empty()) {
        return 0.0;
    }
    std::size_t fn = 0;
    for (const auto& rec : log) {
        fn += is_false_negative(rec, dataset) ? 1 : 0;
    }
    return static_cast<double>(fn) / static_cast<double>(log.size());
}

} // namespace fne
