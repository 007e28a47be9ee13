#include "fne/datagen.hpp"

#include "fne/binary_io.hpp"
#include "fne/error.hpp"
#include "fne/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace fne {

void SyntheticSpec::validate() const {
    auto fail = [](const std::string& msg) { throw Error(Errc::invalid_argument, msg); };
    if (n_clusters == 0) fail("n_clusters must be positive");
    if (items_per_cluster == 0) fail("items_per_cluster must be positive");
    if (captions_per_image == 0) fail("captions_per_image must be positive");
    if (latent_dim == 0) fail("latent_dim must be positive");
    if (image_dim < latent_dim || text_dim < latent_dim) fail("view dimensions must be >= latent_dim");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be >= 0");
    if (!(duplicate_rate >= 0.0 && duplicate_rate <= 1.0)) fail("duplicate_rate must lie in [0, 1]");
    if (!(item_spread >= 0.0) || !std::isfinite(item_spread)) fail("item_spread must be >= 0");
    if (!(duplicate_jitter >= 0.0) || !std::isfinite(duplicate_jitter)) fail("duplicate_jitter must be >= 0");
    if (!(min_center_angle_deg >= 0.0 && min_center_angle_deg <= 180.0)) {
        fail("min_center_angle_deg must lie in [0, 180]");
    }
}

std::vector<std::vector<std::uint64_t>> PairedDataset::captions_by_image() const {
    std::vector<std::vector<std::uint64_t>> out(n_images());
    for (std::size_t t = 0; t < pair_of.size(); ++t) {
        out[pair_of[t]].push_back(t);
    }
    return out;
}

void PairedDataset::validate() const {
    auto fail = [](const std::string& msg) { throw Error(Errc::inconsistent, msg); };
    if (image_dim == 0 || text_dim == 0) fail("dataset dimensions must be positive");
    if (images.size() % image_dim != 0 || texts.size() % text_dim != 0) fail("view matrices are ragged");
    if (pair_of.size() != n_texts()) fail("pair mapping length differs from text count");
    for (auto img : pair_of) {
        if (img >= n_images()) fail("pair mapping references image " + std::to_string(img) + " out of range");
    }
    if (cluster_of && cluster_of->size() != n_images()) fail("cluster labels do not cover every image");
}

namespace {

constexpr std::uint64_t kSplitSalt = 0x5eed;

Matrix random_map(std::size_t rows, std::size_t cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(cols)));
    Matrix m(rows, cols);
    for (double& v : m.flat()) {
        v = normal(rng);
    }
    return m;
}

Matrix place_centers(const SyntheticSpec& spec, Rng& rng) {
    constexpr int kMaxAttempts = 10000;
    const double max_cos = std::cos(spec.min_center_angle_deg * std::numbers::pi / 180.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix centers(spec.n_clusters, spec.latent_dim);
    std::vector<double> candidate(spec.latent_dim);
    for (std::size_t k = 0; k < spec.n_clusters; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            double norm2 = 0.0;
            for (double& v : candidate) {
                v = normal(rng);
                norm2 += v * v;
            }
            const double inv = 1.0 / std::sqrt(norm2);
            for (double& v : candidate) {
                v *= inv;
            }
            placed = true;
            for (std::size_t j = 0; j < k && placed; ++j) {
                double c = 0.0;
                for (std::size_t i = 0; i < spec.latent_dim; ++i) {
                    c += candidate[i] * centers(j, i);
                }
                placed = c <= max_cos;
            }
        }
        if (!placed) {
            throw Error(Errc::infeasible, "cannot place " + std::to_string(spec.n_clusters) +
                                              " centers " + std::to_string(spec.min_center_angle_deg) +
                                              " degrees apart in " + std::to_string(spec.latent_dim) +
                                              " dimensions");
        }
        std::copy(candidate.begin(), candidate.end(), centers.row(k).begin());
    }
    return centers;
}

void project(const Matrix& map, std::span<const double> latent, double noise_sigma, Rng& rng,
             std::vector<float>& out) {
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t r = 0; r < map.rows(); ++r) {
        double v = 0.0;
        for (std::size_t c = 0; c < map.cols(); ++c) {
            v += map(r, c) * latent[c];
        }
        if (noise_sigma > 0.0) {
            v += noise_sigma * noise(rng);
        }
        out.push_back(static_cast<float>(v));
    }
}

} // namespace

GeneratedData generate_with_world(const SyntheticSpec& spec) {
    spec.validate();
    GeneratedData out;
    auto& world = out.world;
    auto& ds = out.dataset;

    Rng world_rng = make_rng(spec.seed, RngStream::data);
    world.centers = place_centers(spec, world_rng);
    world.image_map = random_map(spec.image_dim, spec.latent_dim, world_rng);
    world.text_map = random_map(spec.text_dim, spec.latent_dim, world_rng);

    Rng item_rng = make_rng(spec.seed, RngStream::split, kSplitSalt + spec.split);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t n = spec.total_items();
    const double spread = spec.item_spread / std::sqrt(static_cast<double>(spec.latent_dim));

    ds.image_dim = spec.image_dim;
    ds.text_dim = spec.text_dim;
    ds.images.reserve(n * spec.image_dim);
    ds.texts.reserve(n * spec.captions_per_image * spec.text_dim);
    std::vector<std::uint64_t> labels(n);
    world.latents = Matrix(n, spec.latent_dim);
    world.is_duplicate.assign(n, 0);

    for (std::size_t k = 0; k < spec.n_clusters; ++k) {
        for (std::size_t j = 0; j < spec.items_per_cluster; ++j) {
            const std::size_t item = k * spec.items_per_cluster + j;
            const bool duplicate = uniform01(item_rng) < spec.duplicate_rate;
            const double scale = duplicate ? spec.duplicate_jitter : spread;
            auto latent = world.latents.row(item);
            for (std::size_t i = 0; i < spec.latent_dim; ++i) {
                latent[i] = world.centers(k, i) + scale * normal(item_rng);
            }
            world.is_duplicate[item] = duplicate ? 1 : 0;
            labels[item] = duplicate ? k : spec.n_clusters + item;

            project(world.image_map, latent, spec.noise_sigma, item_rng, ds.images);
            for (std::size_t c = 0; c < spec.captions_per_image; ++c) {
                project(world.text_map, latent, spec.noise_sigma, item_rng, ds.texts);
                ds.pair_of.push_back(item);
            }
        }
    }
    ds.cluster_of = std::move(labels);
    return out;
}

PairedDataset generate(const SyntheticSpec& spec) { return generate_with_world(spec).dataset; }

std::vector<unsigned char> serialize_dataset(const PairedDataset& ds) {
    ds.validate();
    io::Writer w;
    w.put_bytes("FNED");
    w.put<std::uint32_t>(kDatasetVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.image_dim));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.text_dim));
    w.put<std::uint64_t>(ds.n_images());
    w.put<std::uint64_t>(ds.n_texts());
    w.put_array<std::uint64_t>(ds.pair_of);
    w.put_array<float>(ds.images);
    w.put_array<float>(ds.texts);
    if (ds.cluster_of) {
        w.put<unsigned char>(kClusterSectionMarker);
        w.put<std::uint64_t>(ds.cluster_of->size());
        w.put_array<std::uint64_t>(*ds.cluster_of);
    }
    return w.bytes();
}

PairedDataset deserialize_dataset(std::span<const unsigned char> bytes) {
    io::Reader r(bytes, "FNED");
    if (r.get_bytes(4) != "FNED") {
        throw Error(Errc::bad_magic, "not an FNED dataset (bad magic)");
    }
    const auto version = r.get<std::uint32_t>();
    if (version != kDatasetVersion) {
        throw Error(Errc::bad_version, "unsupported FNED version " + std::to_string(version));
    }
    PairedDataset ds;
    ds.image_dim = r.get<std::uint32_t>();
    ds.text_dim = r.get<std::uint32_t>();
    const auto n_images = r.get<std::uint64_t>();
    const auto n_texts = r.get<std::uint64_t>();
    if (ds.image_dim == 0 || ds.text_dim == 0) {
        throw Error(Errc::inconsistent, "FNED: zero view dimension");
    }
    ds.pair_of = r.get_array<std::uint64_t>(n_texts);
    if (n_images > r.remaining() / ds.image_dim) {
        throw Error(Errc::truncated, "FNED: truncated payload");
    }
    ds.images = r.get_array<float>(n_images * ds.image_dim);
    if (n_texts > r.remaining() / ds.text_dim) {
        throw Error(Errc::truncated, "FNED: truncated payload");
    }
    ds.texts = r.get_array<float>(n_texts * ds.text_dim);
    if (!r.at_end()) {
        const auto marker = r.get<unsigned char>();
        if (marker != kClusterSectionMarker) {
            throw Error(Errc::inconsistent, "FNED: unknown section marker");
        }
        const auto n_labels = r.get<std::uint64_t>();
        if (n_labels != n_images) {
            throw Error(Errc::inconsistent, "FNED: cluster section covers " + std::to_string(n_labels) +
                                                " images, header says " + std::to_string(n_images));
        }
        ds.cluster_of = r.get_array<std::uint64_t>(n_labels);
        if (!r.at_end()) {
            throw Error(Errc::inconsistent, "FNED: trailing bytes after cluster section");
        }
    }
    for (float v : ds.images) {
        if (!std::isfinite(v)) throw Error(Errc::inconsistent, "FNED: non-finite image feature");
    }
    for (float v : ds.texts) {
        if (!std::isfinite(v)) throw Error(Errc::inconsistent, "FNED: non-finite text feature");
    }
    ds.validate();
    return ds;
}

void save_embeddings(const PairedDataset& dataset, const std::string& path) {
    io::write_file(path, serialize_dataset(dataset));
}

PairedDataset load_embeddings(const std::string& path) {
    const auto bytes = io::read_file(path);
    return deserialize_dataset(bytes);
}

namespace {

Matrix gather(std::span<const float> data, std::size_t dim, std::size_t n,
              std::span<const std::uint64_t> indices) {
    Matrix out(indices.size(), dim);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= n) {
            throw Error(Errc::invalid_argument, "row index out of range");
        }
        const float* src = data.data() + indices[r] * dim;
        auto dst = out.row(r);
        for (std::size_t c = 0; c < dim; ++c) {
            dst[c] = static_cast<double>(src[c]);
        }
    }
    return out;
}

} // namespace

Matrix image_rows(const PairedDataset& ds, std::span<const std::uint64_t> indices) {
    return gather(ds.images, ds.image_dim, ds.n_images(), indices);
}

Matrix text_rows(const PairedDataset& ds, std::span<const std::uint64_t> indices) {
    return gather(ds.texts, ds.text_dim, ds.n_texts(), indices);
}

} // namespace fne
