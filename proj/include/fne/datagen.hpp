#pragma once

// Synthetic paired two-view data with ground-truth semantic duplicates, and
// the "FNED" binary container for externally computed embedding pairs.

#include "fne/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fne {

// Each image draws a latent point near one of n_clusters unit-norm centers.
// With probability duplicate_rate it is a semantic duplicate: it sits on its
// cluster prototype (center + duplicate_jitter noise) and shares the cluster's
// label with every other duplicate there. Otherwise it is spread by
// item_spread around the center and carries a label of its own.
struct SyntheticSpec {
    std::size_t n_clusters = 8;
    std::size_t items_per_cluster = 32;
    std::size_t captions_per_image = 2;
    std::size_t latent_dim = 8;
    std::size_t image_dim = 32;
    std::size_t text_dim = 32;
    double noise_sigma = 0.05;
    double duplicate_rate = 0.2;
    double item_spread = 1.0;
    double duplicate_jitter = 0.02;
    double min_center_angle_deg = 60.0;
    std::uint64_t seed = 0;
    // Items are redrawn per split; centers and view maps depend on seed only.
    std::uint64_t split = 0;

    std::size_t total_items() const noexcept { return n_clusters * items_per_cluster; }
    // Throws Errc::invalid_argument naming the offending field.
    void validate() const;
};

struct PairedDataset {
    std::size_t image_dim = 0;
    std::size_t text_dim = 0;
    std::vector<float> images;  // n_images x image_dim, row-major
    std::vector<float> texts;   // n_texts x text_dim, row-major
    std::vector<std::uint64_t> pair_of;  // text -> annotated image
    // Ground-truth semantic label per image; evaluation only.
    std::optional<std::vector<std::uint64_t>> cluster_of;

    std::size_t n_images() const noexcept { return image_dim == 0 ? 0 : images.size() / image_dim; }
    std::size_t n_texts() const noexcept { return text_dim == 0 ? 0 : texts.size() / text_dim; }
    bool has_clusters() const noexcept { return cluster_of.has_value(); }

    std::span<const float> image(std::size_t i) const { return {images.data() + i * image_dim, image_dim}; }
    std::span<const float> text(std::size_t t) const { return {texts.data() + t * text_dim, text_dim}; }

    // Annotated captions of each image.
    std::vector<std::vector<std::uint64_t>> captions_by_image() const;

    // Throws Errc::inconsistent on a malformed dataset.
    void validate() const;

    friend bool operator==(const PairedDataset&, const PairedDataset&) = default;
};

struct SyntheticWorld {
    Matrix centers;    // n_clusters x latent_dim
    Matrix image_map;  // image_dim x latent_dim
    Matrix text_map;   // text_dim x latent_dim
    Matrix latents;    // n_images x latent_dim
    std::vector<std::uint8_t> is_duplicate;
};

struct GeneratedData {
    PairedDataset dataset;
    SyntheticWorld world;
};

GeneratedData generate_with_world(const SyntheticSpec& spec);
PairedDataset generate(const SyntheticSpec& spec);

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr unsigned char kClusterSectionMarker = 'C';

std::vector<unsigned char> serialize_dataset(const PairedDataset& dataset);
PairedDataset deserialize_dataset(std::span<const unsigned char> bytes);
void save_embeddings(const PairedDataset& dataset, const std::string& path);
PairedDataset load_embeddings(const std::string& path);

// Rows as doubles, for feeding encoders.
Matrix image_rows(const PairedDataset& dataset, std::span<const std::uint64_t> indices);
Matrix text_rows(const PairedDataset& dataset, std::span<const std::uint64_t> indices);

} // namespace fne
