// "FNEC" checkpoint: magic, u32 version, dimension header, then the query and
// momentum parameter tensors, both memory banks and the tracker state. Every
// real is a little-endian f64; every array is preceded by its u64 length.

#include "fne/binary_io.hpp"
#include "fne/error.hpp"
#include "fne/trainer.hpp"

#include <string>

namespace fne {
namespace {

void put_tensor(io::Writer& w, std::span<const double> values) {
    w.put<std::uint64_t>(values.size());
    w.put_array<double>(values);
}

void get_tensor(io::Reader& r, std::span<double> dst) {
    const auto n = r.get<std::uint64_t>();
    if (n != dst.size()) {
        throw Error(Errc::inconsistent, "FNEC: tensor of length " + std::to_string(n) +
                                            " where " + std::to_string(dst.size()) + " expected");
    }
    const auto values = r.get_array<double>(n);
    std::copy(values.begin(), values.end(), dst.begin());
}

void put_bank(io::Writer& w, const MemoryBank& bank) {
    const auto ids = bank.ids_oldest_first();
    w.put<std::uint64_t>(ids.size());
    w.put_array<std::uint64_t>(ids);
    put_tensor(w, bank.embeddings_oldest_first().flat());
}

void get_bank(io::Reader& r, MemoryBank& bank) {
    const auto n = r.get<std::uint64_t>();
    if (n > bank.capacity()) {
        throw Error(Errc::inconsistent, "FNEC: bank holds more entries than its capacity");
    }
    const auto ids = r.get_array<std::uint64_t>(n);
    Matrix emb(static_cast<std::size_t>(n), bank.dim());
    get_tensor(r, emb.flat());
    bank.clear();
    bank.enqueue_batch(ids, emb);
}

void put_stats(io::Writer& w, const GaussianStats& s) {
    w.put<std::uint64_t>(s.count);
    w.put<double>(s.mean);
    w.put<double>(s.m2);
}

GaussianStats get_stats(io::Reader& r) {
    GaussianStats s;
    s.count = r.get<std::uint64_t>();
    s.mean = r.get<double>();
    s.m2 = r.get<double>();
    return s;
}

} // namespace

std::vector<unsigned char> serialize_checkpoint(const TrainState& state) {
    io::Writer w;
    w.put_bytes("FNEC");
    w.put<std::uint32_t>(kCheckpointVersion);
    w.put<std::uint64_t>(state.image_encoder.input_dim());
    w.put<std::uint64_t>(state.text_encoder.input_dim());
    w.put<std::uint64_t>(state.image_encoder.output_dim());
    w.put<std::uint64_t>(state.image_encoder.hidden_dim());
    w.put<std::uint64_t>(state.image_bank.capacity());
    w.put<std::uint64_t>(state.epoch);
    w.put<std::uint64_t>(state.step);

    put_tensor(w, state.image_encoder.parameters());
    put_tensor(w, state.text_encoder.parameters());
    put_tensor(w, state.image_momentum.parameters());
    put_tensor(w, state.text_momentum.parameters());
    put_bank(w, state.image_bank);
    put_bank(w, state.text_bank);

    w.put<std::uint64_t>(state.tracker.min_ready_count());
    w.put<double>(state.tracker.sigma_floor());
    put_stats(w, state.tracker.positive());
    put_stats(w, state.tracker.negative());
    w.put<std::uint8_t>(state.carried ? 1 : 0);
    if (state.carried) {
        const auto& c = *state.carried;
        w.put<double>(c.mu_pos);
        w.put<double>(c.sigma_pos);
        w.put<double>(c.mu_neg);
        w.put<double>(c.sigma_neg);
        w.put<std::uint64_t>(c.n_pos);
        w.put<std::uint64_t>(c.n_neg);
    }
    return w.bytes();
}

TrainState deserialize_checkpoint(std::span<const unsigned char> bytes) {
    io::Reader r(bytes, "FNEC");
    if (r.get_bytes(4) != "FNEC") {
        throw Error(Errc::bad_magic, "not an FNEC checkpoint (bad magic)");
    }
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw Error(Errc::bad_version, "unsupported FNEC version " + std::to_string(version));
    }
    const auto image_dim = r.get<std::uint64_t>();
    const auto text_dim = r.get<std::uint64_t>();
    const auto embed_dim = r.get<std::uint64_t>();
    const auto hidden_dim = r.get<std::uint64_t>();
    const auto capacity = r.get<std::uint64_t>();
    constexpr std::uint64_t kSane = std::uint64_t{1} << 32;
    if (image_dim == 0 || text_dim == 0 || embed_dim == 0 || capacity == 0 || image_dim > kSane ||
        text_dim > kSane || embed_dim > kSane || hidden_dim > kSane || capacity > kSane) {
        throw Error(Errc::inconsistent, "FNEC: implausible dimension header");
    }
    const auto epoch = r.get<std::uint64_t>();
    const auto step = r.get<std::uint64_t>();

    Encoder image(image_dim, embed_dim, hidden_dim);
    Encoder text(text_dim, embed_dim, hidden_dim);
    Encoder image_m(image_dim, embed_dim, hidden_dim);
    Encoder text_m(text_dim, embed_dim, hidden_dim);
    get_tensor(r, image.parameters());
    get_tensor(r, text.parameters());
    get_tensor(r, image_m.parameters());
    get_tensor(r, text_m.parameters());
    MemoryBank image_bank(capacity, embed_dim);
    MemoryBank text_bank(capacity, embed_dim);
    get_bank(r, image_bank);
    get_bank(r, text_bank);

    const auto min_ready = r.get<std::uint64_t>();
    const auto sigma_floor = r.get<double>();
    if (min_ready == 0 || !(sigma_floor > 0.0)) {
        throw Error(Errc::inconsistent, "FNEC: invalid tracker settings");
    }
    DistributionTracker tracker(min_ready, sigma_floor);
    const GaussianStats pos = get_stats(r);
    const GaussianStats neg = get_stats(r);
    tracker.restore(pos, neg);
    std::optional<TrackerSnapshot> carried;
    const auto has_carried = r.get<std::uint8_t>();
    if (has_carried > 1) {
        throw Error(Errc::inconsistent, "FNEC: invalid carried-statistics flag");
    }
    if (has_carried == 1) {
        TrackerSnapshot c;
        c.mu_pos = r.get<double>();
        c.sigma_pos = r.get<double>();
        c.mu_neg = r.get<double>();
        c.sigma_neg = r.get<double>();
        c.n_pos = r.get<std::uint64_t>();
        c.n_neg = r.get<std::uint64_t>();
        c.ready = true;
        carried = c;
    }
    if (!r.at_end()) {
        throw Error(Errc::inconsistent, "FNEC: trailing bytes");
    }
    return TrainState{std::move(image),      std::move(text),      std::move(image_m),
                      std::move(text_m),     std::move(image_bank), std::move(text_bank),
                      std::move(tracker),    carried,               static_cast<std::size_t>(epoch),
                      step};
}

void save_checkpoint(const TrainState& state, const std::string& path) {
    io::write_file(path, serialize_checkpoint(state));
}

TrainState load_checkpoint(const std::string& path) {
    const auto bytes = io::read_file(path);
    return deserialize_checkpoint(bytes);
}

} // namespace fne
