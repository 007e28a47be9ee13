#include "fne/trainer.hpp"

#include "fne/embedding.hpp"
#include "fne/error.hpp"
#include "fne/kernels.hpp"
#include "fne/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

namespace fne {

std::string_view tracker_features_name(TrackerFeatures f) noexcept {
    return f == TrackerFeatures::query ? "query" : "momentum";
}

std::optional<TrackerFeatures> parse_tracker_features(std::string_view name) noexcept {
    if (name == "query") return TrackerFeatures::query;
    if (name == "momentum") return TrackerFeatures::momentum;
    return std::nullopt;
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(Errc::invalid_argument, msg); };
    if (!(margin > 0.0 && margin < 2.0)) fail("margin must lie in (0, 2)");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be >= 0");
    if (batch_size == 0) fail("batch_size must be positive");
    if (!(lr_decay_factor > 0.0 && lr_decay_factor < 1.0)) fail("lr_decay_factor must lie in (0, 1)");
    if (embed_dim == 0) fail("embed_dim must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
    if (bank_capacity == 0) fail("bank_capacity must be positive");
    if (batch_size > bank_capacity) fail("batch_size must not exceed bank_capacity");
    if (min_ready_count == 0) fail("min_ready_count must be positive");
    if (!(sigma_floor > 0.0)) fail("sigma_floor must be positive");
}

double TrainConfig::learning_rate_at(std::size_t epoch) const {
    double lr = learning_rate;
    for (auto e : lr_decay_epochs) {
        if (epoch >= e) {
            lr *= lr_decay_factor;
        }
    }
    return lr;
}

TrainState TrainState::initialize(std::size_t image_dim, std::size_t text_dim,
                                  const TrainConfig& config) {
    config.validate();
    Rng rng = make_rng(config.seed, RngStream::init);
    Encoder image = Encoder::random(image_dim, config.embed_dim, config.hidden_dim, rng);
    Encoder text = Encoder::random(text_dim, config.embed_dim, config.hidden_dim, rng);
    return TrainState{image,
                      text,
                      image,
                      text,
                      MemoryBank(config.bank_capacity, config.embed_dim),
                      MemoryBank(config.bank_capacity, config.embed_dim),
                      DistributionTracker(config.min_ready_count, config.sigma_floor),
                      std::nullopt,
                      0,
                      0};
}

TrackerSnapshot TrainState::weighting_snapshot() const {
    TrackerSnapshot live = tracker.snapshot();
    if (!live.ready && carried) {
        return *carried;
    }
    return live;
}

double StepLog::fn_sample_rate() const {
    if (!has_labels || samples == 0) {
        return std::nan("");
    }
    return static_cast<double>(false_negatives) / static_cast<double>(samples);
}

double EpochLog::mean_loss() const {
    if (steps.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& s : steps) {
        sum += s.loss;
    }
    return sum / static_cast<double>(steps.size());
}

namespace {

// One direction's candidate set for a single anchor: column indices into the
// shared source plus the pool handed to the sampler.
struct AnchorPool {
    std::vector<std::size_t> columns;
    CandidatePool pool;
};

AnchorPool build_pool(std::span<const double> sims, const CandidateSource& source,
                      std::span<const std::uint64_t> excluded, double positive_similarity) {
    AnchorPool ap;
    ap.pool.positive_similarity = positive_similarity;
    ap.columns.reserve(sims.size());
    ap.pool.ids.reserve(sims.size());
    ap.pool.similarities.reserve(sims.size());
    for (std::size_t j = 0; j < sims.size(); ++j) {
        const auto id = source.ids[j];
        if (std::find(excluded.begin(), excluded.end(), id) != excluded.end()) {
            continue;
        }
        ap.columns.push_back(j);
        ap.pool.ids.push_back(id);
        ap.pool.similarities.push_back(sims[j]);
    }
    return ap;
}

Selection select_negative(const CandidatePool& pool, const TrackerSnapshot& stats,
                          const FneConfig& fne, Rng& rng) {
    if (fne.mode != SamplingMode::fne) {
        return baseline_select(pool, fne.mode, rng);
    }
    if (!stats.ready) {
        return baseline_select(pool, SamplingMode::uniform, rng);
    }
    return sample_negative(combined_weights(pool, stats, fne), pool, rng);
}

void add_scaled(std::span<double> dst, std::span<const double> src, double scale) {
    kernels::axpy(scale, src, dst);
}

} // namespace

EpochLog train_epoch(TrainState& state, const PairedDataset& dataset, const TrainConfig& train,
                     const FneConfig& fne, const TrainOptions& options) {
    train.validate();
    fne.validate();
    dataset.validate();
    if (dataset.n_texts() == 0) {
        throw Error(Errc::invalid_argument, "train_epoch: dataset has no annotated pairs");
    }
    if (state.image_encoder.input_dim() != dataset.image_dim ||
        state.text_encoder.input_dim() != dataset.text_dim) {
        throw Error(Errc::dimension_mismatch, "train_epoch: encoder inputs do not match dataset");
    }

    // Epoch boundary: keep the last ready statistics, start a fresh window.
    if (state.tracker.ready()) {
        state.carried = state.tracker.snapshot();
    }
    state.tracker.reset();
    if (train.clear_banks_each_epoch) {
        state.image_bank.clear();
        state.text_bank.clear();
    }

    const auto captions = dataset.captions_by_image();
    const bool has_labels = dataset.has_clusters();
    const double lr = train.learning_rate_at(state.epoch);

    std::vector<std::uint64_t> order(dataset.n_texts());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = make_rng(train.seed, RngStream::shuffle, state.epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    Rng sample_rng = make_rng(train.seed, RngStream::sampling, state.epoch);

    EpochLog log;
    std::vector<double> grad_image(state.image_encoder.parameter_count());
    std::vector<double> grad_text(state.text_encoder.parameter_count());

    for (std::size_t begin = 0, batch_index = 0; begin < order.size();
         begin += train.batch_size, ++batch_index) {
        try {
            const std::size_t end = std::min(order.size(), begin + train.batch_size);
            const std::size_t b = end - begin;
            std::vector<std::uint64_t> texts(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                             order.begin() + static_cast<std::ptrdiff_t>(end));
            std::vector<std::uint64_t> images(b);
            for (std::size_t k = 0; k < b; ++k) {
                images[k] = dataset.pair_of[texts[k]];
            }

            const Matrix x_img = image_rows(dataset, images);
            const Matrix x_txt = text_rows(dataset, texts);
            Encoder::Cache cache_img;
            Encoder::Cache cache_txt;
            const Matrix v = state.image_encoder.forward(x_img, &cache_img);
            const Matrix w = state.text_encoder.forward(x_txt, &cache_txt);
            const Matrix v_key = state.image_momentum.forward(x_img);
            const Matrix w_key = state.text_momentum.forward(x_txt);

            // Shared sources; per-anchor exclusion of annotated positives below.
            const CandidateSource text_src = candidates(state.text_bank, texts, w, {});
            const CandidateSource image_src = candidates(state.image_bank, images, v, {});
            const Matrix sim_i2t = similarity_matrix(v, text_src.embeddings);
            const Matrix sim_t2i = similarity_matrix(w, image_src.embeddings);

            std::vector<double> positive(b);
            std::vector<AnchorPool> pools_i2t(b);
            std::vector<AnchorPool> pools_t2i(b);
            for (std::size_t k = 0; k < b; ++k) {
                positive[k] = cosine_similarity(v.row(k), w.row(k));
                pools_i2t[k] = build_pool(sim_i2t.row(k), text_src, captions[images[k]], positive[k]);
                const std::uint64_t own_image[] = {images[k]};
                pools_t2i[k] = build_pool(sim_t2i.row(k), image_src, own_image, positive[k]);
            }

            // Tracker input: positive similarity plus every pool negative, both directions.
            std::vector<double> obs_pos;
            std::vector<std::vector<double>> obs_neg;
            obs_pos.reserve(2 * b);
            obs_neg.reserve(2 * b);
            if (train.tracker_features == TrackerFeatures::query) {
                for (std::size_t k = 0; k < b; ++k) {
                    obs_pos.push_back(positive[k]);
                    obs_neg.push_back(pools_i2t[k].pool.similarities);
                }
                for (std::size_t k = 0; k < b; ++k) {
                    obs_pos.push_back(positive[k]);
                    obs_neg.push_back(pools_t2i[k].pool.similarities);
                }
            } else {
                const Matrix key_i2t = similarity_matrix(v_key, text_src.embeddings);
                const Matrix key_t2i = similarity_matrix(w_key, image_src.embeddings);
                for (int dir = 0; dir < 2; ++dir) {
                    const Matrix& sims = dir == 0 ? key_i2t : key_t2i;
                    const auto& pools = dir == 0 ? pools_i2t : pools_t2i;
                    for (std::size_t k = 0; k < b; ++k) {
                        obs_pos.push_back(cosine_similarity(v_key.row(k), w_key.row(k)));
                        std::vector<double> row;
                        row.reserve(pools[k].columns.size());
                        for (auto j : pools[k].columns) {
                            row.push_back(sims(k, j));
                        }
                        obs_neg.push_back(std::move(row));
                    }
                }
            }
            state.tracker.observe_batch(obs_pos, obs_neg);
            const TrackerSnapshot stats = state.weighting_snapshot();

            Matrix grad_v(b, train.embed_dim);
            Matrix grad_w(b, train.embed_dim);
            const double inv_b = 1.0 / static_cast<double>(b);
            double loss_sum = 0.0;
            StepLog step;
            step.epoch = state.epoch;
            step.step = state.step;
            step.tracker = stats;
            step.has_labels = has_labels;

            for (std::size_t k = 0; k < b; ++k) {
                const auto& pi = pools_i2t[k];
                const auto& pt = pools_t2i[k];
                if (pi.pool.size() == 0 || pt.pool.size() == 0) {
                    continue;  // nothing to contrast against yet
                }
                const Selection neg_text = select_negative(pi.pool, stats, fne, sample_rng);
                const Selection neg_image = select_negative(pt.pool, stats, fne, sample_rng);
                const std::size_t col_text = pi.columns[neg_text.index];
                const std::size_t col_image = pt.columns[neg_image.index];

                const SampleRecord rec_i2t{Direction::image_to_text, images[k], neg_text.id};
                const SampleRecord rec_t2i{Direction::text_to_image, texts[k], neg_image.id};
                step.samples += 2;
                if (has_labels) {
                    step.false_negatives += is_false_negative(rec_i2t, dataset) ? 1 : 0;
                    step.false_negatives += is_false_negative(rec_t2i, dataset) ? 1 : 0;
                }
                if (options.record_samples) {
                    log.samples.push_back(rec_i2t);
                    log.samples.push_back(rec_t2i);
                }

                const bool text_from_bank = col_text >= text_src.from_batch;
                const bool image_from_bank = col_image >= image_src.from_batch;
                const LossOutput out =
                    loss_backward(v.row(k), w.row(k), text_src.embeddings.row(col_text),
                                  image_src.embeddings.row(col_image), train.margin, text_from_bank,
                                  image_from_bank);
                loss_sum += out.loss;
                add_scaled(grad_v.row(k), out.grad_anchor_image, inv_b);
                add_scaled(grad_w.row(k), out.grad_positive_text, inv_b);
                if (out.grad_neg_text) {
                    add_scaled(grad_w.row(col_text), *out.grad_neg_text, inv_b);
                }
                if (out.grad_neg_image) {
                    add_scaled(grad_v.row(col_image), *out.grad_neg_image, inv_b);
                }
            }
            step.loss = loss_sum * inv_b;

            std::fill(grad_image.begin(), grad_image.end(), 0.0);
            std::fill(grad_text.begin(), grad_text.end(), 0.0);
            state.image_encoder.backward(cache_img, grad_v, grad_image);
            state.text_encoder.backward(cache_txt, grad_w, grad_text);
            if (lr != 0.0) {
                kernels::axpy(-lr, grad_image, state.image_encoder.parameters());
                kernels::axpy(-lr, grad_text, state.text_encoder.parameters());
            }
            momentum_update(state.image_momentum.parameters(), state.image_encoder.parameters(),
                            train.momentum);
            momentum_update(state.text_momentum.parameters(), state.text_encoder.parameters(),
                            train.momentum);
            state.image_bank.enqueue_batch(images, v_key);
            state.text_bank.enqueue_batch(texts, w_key);

            log.steps.push_back(step);
            ++state.step;
        } catch (const Error& e) {
            throw Error(e.code(), "epoch " + std::to_string(state.epoch) + ", batch " +
                                      std::to_string(batch_index) + ": " + e.what());
        }
    }
    ++state.epoch;
    return log;
}

void write_log_header(std::ostream& out) {
    out << "epoch,step,loss,mu_pos,sigma_pos,mu_neg,sigma_neg,tracker_ready,fn_sample_rate\n";
}

void write_log_rows(const EpochLog& log, std::ostream& out) {
    const auto old = out.precision(17);
    for (const auto& s : log.steps) {
        out << s.epoch << ',' << s.step << ',' << s.loss << ',' << s.tracker.mu_pos << ','
            << s.tracker.sigma_pos << ',' << s.tracker.mu_neg << ',' << s.tracker.sigma_neg << ','
            << (s.tracker.ready ? 1 : 0) << ',';
        if (s.has_labels && s.samples > 0) {
            out << s.fn_sample_rate();
        }
        out << '\n';
    }
    out.precision(old);
}

namespace {

Matrix encode_all(const Encoder& encoder, std::size_t n, Matrix (*rows)(const PairedDataset&, std::span<const std::uint64_t>),
                  const PairedDataset& ds) {
    constexpr std::size_t kChunk = 1024;
    Matrix out(n, encoder.output_dim());
    std::vector<std::uint64_t> idx;
    for (std::size_t begin = 0; begin < n; begin += kChunk) {
        const std::size_t end = std::min(n, begin + kChunk);
        idx.resize(end - begin);
        std::iota(idx.begin(), idx.end(), begin);
        const Matrix enc = encoder.forward(rows(ds, idx));
        std::copy(enc.flat().begin(), enc.flat().end(),
                  out.flat().begin() + static_cast<std::ptrdiff_t>(begin * encoder.output_dim()));
    }
    return out;
}

} // namespace

Matrix encode_images(const Encoder& encoder, const PairedDataset& dataset) {
    if (encoder.input_dim() != dataset.image_dim) {
        throw Error(Errc::dimension_mismatch, "image encoder input " + std::to_string(encoder.input_dim()) +
                                                  " != dataset image dimension " +
                                                  std::to_string(dataset.image_dim));
    }
    return encode_all(encoder, dataset.n_images(), &image_rows, dataset);
}

Matrix encode_texts(const Encoder& encoder, const PairedDataset& dataset) {
    if (encoder.input_dim() != dataset.text_dim) {
        throw Error(Errc::dimension_mismatch, "text encoder input " + std::to_string(encoder.input_dim()) +
                                                  " != dataset text dimension " +
                                                  std::to_string(dataset.text_dim));
    }
    return encode_all(encoder, dataset.n_texts(), &text_rows, dataset);
}

} // namespace fne
