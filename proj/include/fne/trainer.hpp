#pragma once

// Deterministic SGD training of the bi-encoder with momentum memory banks and
// false-negative-aware negative selection.

#include "fne/datagen.hpp"
#include "fne/eval.hpp"
#include "fne/memory.hpp"
#include "fne/model.hpp"
#include "fne/sampler.hpp"
#include "fne/similarity_stats.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fne {

// Which anchor features feed the similarity tracker. Candidates are always the
// full pool (batch + bank).
enum class TrackerFeatures { query, momentum };

std::string_view tracker_features_name(TrackerFeatures f) noexcept;
std::optional<TrackerFeatures> parse_tracker_features(std::string_view name) noexcept;

struct TrainConfig {
    double margin = 0.2;
    double learning_rate = 0.5;
    std::size_t epochs = 60;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    std::vector<std::size_t> lr_decay_epochs = {30, 45};
    double lr_decay_factor = 0.1;

    std::size_t embed_dim = 16;
    std::size_t hidden_dim = 0;  // > 0 adds a tanh hidden layer
    double momentum = 0.995;
    std::size_t bank_capacity = 8192;
    bool clear_banks_each_epoch = false;

    std::uint64_t min_ready_count = kDefaultMinReadyCount;
    double sigma_floor = kDefaultSigmaFloor;
    TrackerFeatures tracker_features = TrackerFeatures::query;

    // Throws Errc::invalid_argument naming the offending field.
    void validate() const;
    // Learning rate in effect for a 0-based epoch index.
    double learning_rate_at(std::size_t epoch) const;
};

struct TrainState {
    Encoder image_encoder;
    Encoder text_encoder;
    Encoder image_momentum;
    Encoder text_momentum;
    MemoryBank image_bank;
    MemoryBank text_bank;
    // Statistics of the epoch in progress (reset at every epoch boundary).
    DistributionTracker tracker;
    // Statistics of the last completed epoch that reached readiness; used for
    // weighting until the running epoch is ready itself.
    std::optional<TrackerSnapshot> carried;
    std::size_t epoch = 0;
    std::uint64_t step = 0;

    // Query encoders drawn from the init stream; momentum encoders are exact
    // copies; empty banks and tracker.
    static TrainState initialize(std::size_t image_dim, std::size_t text_dim, const TrainConfig& config);

    // Stats the sampler would use right now.
    TrackerSnapshot weighting_snapshot() const;
};

struct StepLog {
    std::size_t epoch = 0;
    std::uint64_t step = 0;
    double loss = 0.0;
    TrackerSnapshot tracker;  // the statistics used for weighting this step
    std::size_t samples = 0;
    std::size_t false_negatives = 0;
    bool has_labels = false;

    double fn_sample_rate() const;
};

struct EpochLog {
    std::vector<StepLog> steps;
    std::vector<SampleRecord> samples;

    double mean_loss() const;
};

struct TrainOptions {
    bool record_samples = false;
};

// One pass over all annotated pairs in shuffled mini-batches.
EpochLog train_epoch(TrainState& state, const PairedDataset& dataset, const TrainConfig& train,
                     const FneConfig& fne, const TrainOptions& options = {});

void write_log_header(std::ostream& out);
void write_log_rows(const EpochLog& log, std::ostream& out);

// Query-encoder embeddings of every image and text.
Matrix encode_images(const Encoder& encoder, const PairedDataset& dataset);
Matrix encode_texts(const Encoder& encoder, const PairedDataset& dataset);

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<unsigned char> serialize_checkpoint(const TrainState& state);
TrainState deserialize_checkpoint(std::span<const unsigned char> bytes);
void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

} // namespace fne
