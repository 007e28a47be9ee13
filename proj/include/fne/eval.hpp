#pragma once

// Retrieval metrics and false-negative diagnostics.

#include "fne/datagen.hpp"
#include "fne/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fne {

struct RecallCurve {
    std::map<std::size_t, double> recall_at;  // K -> fraction of queries hit
    std::size_t n_queries = 0;
};

// Rank candidates by descending similarity, ties to the lower index; a query
// hits at K if any ground-truth candidate is among the first K.
RecallCurve recall_at_k(const Matrix& similarity,
                        const std::vector<std::vector<std::uint64_t>>& ground_truth,
                        std::span<const std::size_t> ks);

struct RetrievalReport {
    RecallCurve image_to_text;
    RecallCurve text_to_image;

    // Mean of R@1 over both directions.
    double mean_r1() const;
};

inline constexpr std::size_t kDefaultKs[] = {1, 5, 10};

// Image-to-text counts a hit for any annotated caption of the image.
RetrievalReport evaluate_retrieval(const Matrix& image_embeddings, const Matrix& text_embeddings,
                                   const PairedDataset& dataset,
                                   std::span<const std::size_t> ks = kDefaultKs);

void write_report_csv(const RetrievalReport& report, std::ostream& out);
std::string format_report_table(const RetrievalReport& report);

enum class Direction : std::uint8_t { image_to_text = 0, text_to_image = 1 };

struct SampleRecord {
    Direction direction = Direction::image_to_text;
    std::uint64_t anchor = 0;  // image id for image_to_text, text id otherwise
    std::uint64_t chosen = 0;  // text id for image_to_text, image id otherwise
};

// True when the chosen negative shares the anchor's ground-truth label but
// is not annotated as its positive. Requires cluster labels.
bool is_false_negative(const SampleRecord& record, const PairedDataset& dataset);

// Fraction of records that are ground-truth false negatives.
double fn_sampling_rate(std::span<const SampleRecord> log, const PairedDataset& dataset);

} // namespace fne
