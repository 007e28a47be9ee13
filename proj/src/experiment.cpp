#include "fne/experiment.hpp"

#include "fne/error.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace fne {

using nlohmann::json;

void RunConfig::resolve() {
    data.seed = seed;
    train.seed = seed;
    data.validate();
    train.validate();
    fne.validate();
}

json to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["data"] = {
        {"n_clusters", c.data.n_clusters},
        {"items_per_cluster", c.data.items_per_cluster},
        {"captions_per_image", c.data.captions_per_image},
        {"latent_dim", c.data.latent_dim},
        {"image_dim", c.data.image_dim},
        {"text_dim", c.data.text_dim},
        {"noise_sigma", c.data.noise_sigma},
        {"duplicate_rate", c.data.duplicate_rate},
        {"item_spread", c.data.item_spread},
        {"duplicate_jitter", c.data.duplicate_jitter},
        {"min_center_angle_deg", c.data.min_center_angle_deg},
        {"split", c.data.split},
    };
    j["train"] = {
        {"margin", c.train.margin},
        {"learning_rate", c.train.learning_rate},
        {"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"lr_decay_epochs", c.train.lr_decay_epochs},
        {"lr_decay_factor", c.train.lr_decay_factor},
        {"embed_dim", c.train.embed_dim},
        {"hidden_dim", c.train.hidden_dim},
        {"momentum", c.train.momentum},
        {"bank_capacity", c.train.bank_capacity},
        {"clear_banks_each_epoch", c.train.clear_banks_each_epoch},
        {"min_ready_count", c.train.min_ready_count},
        {"sigma_floor", c.train.sigma_floor},
        {"tracker_features", std::string(tracker_features_name(c.train.tracker_features))},
    };
    j["fne"] = {
        {"prior_p", c.fne.prior_p},
        {"alpha", c.fne.alpha},
        {"lambda", c.fne.lambda},
        {"mode", std::string(mode_name(c.fne.mode))},
    };
    return j;
}

namespace {

template <typename T>
void read_field(const json& obj, const char* section, const char* key, T& dst) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        return;
    }
    try {
        if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
            if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
                throw Error(Errc::invalid_argument, "");
            }
        }
        dst = it->get<T>();
    } catch (const std::exception&) {
        throw Error(Errc::invalid_argument,
                    std::string("config: bad value for ") + section + "." + key);
    }
}

void reject_unknown(const json& obj, const char* section, std::initializer_list<const char*> known) {
    if (!obj.is_object()) {
        throw Error(Errc::invalid_argument, std::string("config: '") + section + "' must be an object");
    }
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known) {
            ok = ok || key == k;
        }
        if (!ok) {
            throw Error(Errc::invalid_argument,
                        std::string("config: unknown key '") + section + "." + key + "'");
        }
    }
}

} // namespace

RunConfig from_json(const json& j, RunConfig c) {
    reject_unknown(j, "<root>", {"seed", "data", "train", "fne"});
    read_field(j, "<root>", "seed", c.seed);
    if (j.contains("data")) {
        const auto& d = j.at("data");
        reject_unknown(d, "data",
                       {"n_clusters", "items_per_cluster", "captions_per_image", "latent_dim", "image_dim",
                        "text_dim", "noise_sigma", "duplicate_rate", "item_spread", "duplicate_jitter",
                        "min_center_angle_deg", "split"});
        read_field(d, "data", "n_clusters", c.data.n_clusters);
        read_field(d, "data", "items_per_cluster", c.data.items_per_cluster);
        read_field(d, "data", "captions_per_image", c.data.captions_per_image);
        read_field(d, "data", "latent_dim", c.data.latent_dim);
        read_field(d, "data", "image_dim", c.data.image_dim);
        read_field(d, "data", "text_dim", c.data.text_dim);
        read_field(d, "data", "noise_sigma", c.data.noise_sigma);
        read_field(d, "data", "duplicate_rate", c.data.duplicate_rate);
        read_field(d, "data", "item_spread", c.data.item_spread);
        read_field(d, "data", "duplicate_jitter", c.data.duplicate_jitter);
        read_field(d, "data", "min_center_angle_deg", c.data.min_center_angle_deg);
        read_field(d, "data", "split", c.data.split);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        reject_unknown(t, "train",
                       {"margin", "learning_rate", "epochs", "batch_size", "lr_decay_epochs",
                        "lr_decay_factor", "embed_dim", "hidden_dim", "momentum", "bank_capacity",
                        "clear_banks_each_epoch", "min_ready_count", "sigma_floor", "tracker_features"});
        read_field(t, "train", "margin", c.train.margin);
        read_field(t, "train", "learning_rate", c.train.learning_rate);
        read_field(t, "train", "epochs", c.train.epochs);
        read_field(t, "train", "batch_size", c.train.batch_size);
        read_field(t, "train", "lr_decay_epochs", c.train.lr_decay_epochs);
        read_field(t, "train", "lr_decay_factor", c.train.lr_decay_factor);
        read_field(t, "train", "embed_dim", c.train.embed_dim);
        read_field(t, "train", "hidden_dim", c.train.hidden_dim);
        read_field(t, "train", "momentum", c.train.momentum);
        read_field(t, "train", "bank_capacity", c.train.bank_capacity);
        read_field(t, "train", "clear_banks_each_epoch", c.train.clear_banks_each_epoch);
        read_field(t, "train", "min_ready_count", c.train.min_ready_count);
        read_field(t, "train", "sigma_floor", c.train.sigma_floor);
        std::string features(tracker_features_name(c.train.tracker_features));
        read_field(t, "train", "tracker_features", features);
        const auto parsed = parse_tracker_features(features);
        if (!parsed) {
            throw Error(Errc::invalid_argument, "config: unknown tracker_features '" + features + "'");
        }
        c.train.tracker_features = *parsed;
    }
    if (j.contains("fne")) {
        const auto& f = j.at("fne");
        reject_unknown(f, "fne", {"prior_p", "alpha", "lambda", "mode"});
        read_field(f, "fne", "prior_p", c.fne.prior_p);
        read_field(f, "fne", "alpha", c.fne.alpha);
        read_field(f, "fne", "lambda", c.fne.lambda);
        std::string mode(mode_name(c.fne.mode));
        read_field(f, "fne", "mode", mode);
        const auto parsed = parse_mode(mode);
        if (!parsed) {
            throw Error(Errc::invalid_argument, "config: unknown sampling mode '" + mode + "'");
        }
        c.fne.mode = *parsed;
    }
    return c;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::io, "cannot open config file '" + path + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw Error(Errc::invalid_argument, "config file '" + path + "': " + e.what());
    }
    return from_json(j, std::move(base));
}

ExperimentResult run_experiment(const RunConfig& input) {
    RunConfig config = input;
    config.resolve();

    SyntheticSpec train_spec = config.data;
    train_spec.split = 0;
    SyntheticSpec test_spec = config.data;
    test_spec.split = 1;
    const PairedDataset train_data = generate(train_spec);
    const PairedDataset test_data = generate(test_spec);

    TrainState state = TrainState::initialize(train_data.image_dim, train_data.text_dim, config.train);
    ExperimentResult result;
    for (std::size_t e = 0; e < config.train.epochs; ++e) {
        EpochLog log = train_epoch(state, train_data, config.train, config.fne);
        result.final_epoch_loss = log.mean_loss();
        result.steps.insert(result.steps.end(), log.steps.begin(), log.steps.end());
    }
    std::size_t fn = 0;
    for (const auto& s : result.steps) {
        if (s.tracker.ready) {
            ++result.warm_steps;
            result.warm_samples += s.samples;
            fn += s.false_negatives;
        }
    }
    result.fn_rate_after_warmup =
        result.warm_samples == 0 ? std::nan("") : static_cast<double>(fn) / static_cast<double>(result.warm_samples);
    result.report = evaluate_retrieval(encode_images(state.image_encoder, test_data),
                                       encode_texts(state.text_encoder, test_data), test_data);
    return result;
}

std::string_view axis_name(SweepAxis axis) noexcept {
    switch (axis) {
    case SweepAxis::prior_p: return "prior_p";
    case SweepAxis::lambda: return "lambda";
    case SweepAxis::batch_size: return "batch_size";
    case SweepAxis::bank_capacity: return "bank_capacity";
    }
    return "unknown";
}

std::optional<SweepAxis> parse_axis(std::string_view name) noexcept {
    for (auto a : {SweepAxis::prior_p, SweepAxis::lambda, SweepAxis::batch_size, SweepAxis::bank_capacity}) {
        if (name == axis_name(a)) {
            return a;
        }
    }
    return std::nullopt;
}

namespace {

std::size_t as_count(double value, const char* what) {
    if (!(value >= 1.0) || value != std::floor(value) || value > 1e12) {
        throw Error(Errc::invalid_argument, std::string(what) + " sweep values must be positive integers");
    }
    return static_cast<std::size_t>(value);
}

} // namespace

RunConfig apply_axis(const RunConfig& base, SweepAxis axis, double value) {
    RunConfig c = base;
    switch (axis) {
    case SweepAxis::prior_p: c.fne.prior_p = value; break;
    case SweepAxis::lambda: c.fne.lambda = value; break;
    case SweepAxis::batch_size: c.train.batch_size = as_count(value, "batch_size"); break;
    case SweepAxis::bank_capacity: c.train.bank_capacity = as_count(value, "bank_capacity"); break;
    }
    c.resolve();
    return c;
}

std::vector<SweepRow> run_sweep(const RunConfig& base, SweepAxis axis, std::span<const double> values,
                                std::size_t n_seeds, std::size_t jobs) {
    if (n_seeds == 0) {
        throw Error(Errc::invalid_argument, "sweep needs at least one seed");
    }
    std::vector<SweepRow> rows;
    std::vector<RunConfig> configs;
    for (double v : values) {
        for (std::size_t s = 0; s < n_seeds; ++s) {
            RunConfig c = base;
            c.seed = base.seed + s;
            configs.push_back(apply_axis(c, axis, v));
            rows.push_back(SweepRow{axis, v, c.seed, {}});
        }
    }
    jobs = std::max<std::size_t>(1, std::min(jobs, configs.size()));
    if (jobs == 1) {
        for (std::size_t i = 0; i < configs.size(); ++i) {
            rows[i].result = run_experiment(configs[i]);
        }
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < configs.size(); i = next++) {
                try {
                    rows[i].result = run_experiment(configs[i]);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : workers) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
    return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out) {
    out << "axis,value,seed,i2t_r1,i2t_r5,i2t_r10,t2i_r1,t2i_r5,t2i_r10,mean_r1,fn_sample_rate,final_loss\n";
    const auto old = out.precision(17);
    for (const auto& r : rows) {
        const auto& i2t = r.result.report.image_to_text.recall_at;
        const auto& t2i = r.result.report.text_to_image.recall_at;
        out << axis_name(r.axis) << ',' << r.value << ',' << r.seed << ',' << i2t.at(1) << ','
            << i2t.at(5) << ',' << i2t.at(10) << ',' << t2i.at(1) << ',' << t2i.at(5) << ','
            << t2i.at(10) << ',' << r.result.report.mean_r1() << ',';
        if (!std::isnan(r.result.fn_rate_after_warmup)) {
            out << r.result.fn_rate_after_warmup;
        }
        out << ',' << r.result.final_epoch_loss << '\n';
    }
    out.precision(old);
}

} // namespace fne
