#include "cli.hpp"

#include "fne/datagen.hpp"
#include "fne/error.hpp"
#include "fne/eval.hpp"
#include "fne/experiment.hpp"
#include "fne/sampler.hpp"
#include "fne/trainer.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

namespace fne::cli {

namespace fs = std::filesystem;

fs::path output_path(const std::string& path) {
    fs::path p(path);
    if (p.is_relative()) {
        if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0') {
            return fs::path(root) / p;
        }
    }
    return p;
}

namespace {

// Flag values that override the config file when given.
struct Overrides {
    std::optional<std::uint64_t> seed;

    std::optional<std::size_t> clusters, items_per_cluster, captions, latent_dim, image_dim, text_dim;
    std::optional<double> noise, duplicate_rate, item_spread, duplicate_jitter, min_center_angle;
    std::optional<std::uint32_t> split;

    std::optional<std::size_t> epochs, batch_size, embed_dim, hidden_dim, bank_capacity;
    std::optional<double> lr, margin, momentum, lr_decay_factor, sigma_floor;
    std::optional<std::vector<std::size_t>> lr_decay_epochs;
    std::optional<std::uint64_t> min_ready;
    std::optional<std::string> tracker_features;
    bool clear_banks = false;

    std::optional<std::string> mode;
    std::optional<double> prior_p, alpha, lambda;

    std::string config_path;
};

void add_seed_and_config(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--seed", o.seed, "Run seed");
    cmd.add_option("--config", o.config_path, "JSON config file (flags take precedence)");
}

void add_data_flags(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--clusters", o.clusters, "Number of semantic clusters")->group("Data");
    cmd.add_option("--items-per-cluster", o.items_per_cluster)->group("Data");
    cmd.add_option("--captions", o.captions, "Captions per image")->group("Data");
    cmd.add_option("--latent-dim", o.latent_dim)->group("Data");
    cmd.add_option("--image-dim", o.image_dim)->group("Data");
    cmd.add_option("--text-dim", o.text_dim)->group("Data");
    cmd.add_option("--noise", o.noise, "View noise sigma")->group("Data");
    cmd.add_option("--duplicate-rate", o.duplicate_rate)->group("Data");
    cmd.add_option("--item-spread", o.item_spread)->group("Data");
    cmd.add_option("--duplicate-jitter", o.duplicate_jitter)->group("Data");
    cmd.add_option("--min-center-angle", o.min_center_angle, "Degrees")->group("Data");
    cmd.add_option("--split", o.split, "0 = train, 1 = held out")->group("Data");
}

void add_train_flags(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--epochs", o.epochs)->group("Training");
    cmd.add_option("--batch-size", o.batch_size)->group("Training");
    cmd.add_option("--lr", o.lr, "Initial learning rate")->group("Training");
    cmd.add_option("--lr-decay-epochs", o.lr_decay_epochs)->delimiter(',')->group("Training");
    cmd.add_option("--lr-decay-factor", o.lr_decay_factor)->group("Training");
    cmd.add_option("--margin", o.margin)->group("Training");
    cmd.add_option("--embed-dim", o.embed_dim)->group("Training");
    cmd.add_option("--hidden-dim", o.hidden_dim, "0 = linear encoders")->group("Training");
    cmd.add_option("--momentum", o.momentum, "Momentum encoder coefficient")->group("Training");
    cmd.add_option("--bank-capacity", o.bank_capacity)->group("Training");
    cmd.add_flag("--clear-banks", o.clear_banks, "Empty memory banks at each epoch start")->group("Training");
    cmd.add_option("--min-ready", o.min_ready, "Samples per side before weighting starts")->group("Training");
    cmd.add_option("--sigma-floor", o.sigma_floor)->group("Training");
    cmd.add_option("--tracker-features", o.tracker_features, "query | momentum")->group("Training");
}

void add_fne_flags(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--mode", o.mode, "fne | hardest | uniform | semi-hard")->group("Sampling");
    cmd.add_option("--prior-p", o.prior_p)->group("Sampling");
    cmd.add_option("--alpha", o.alpha, "Cut-down sharpness")->group("Sampling");
    cmd.add_option("--lambda", o.lambda, "Cut-down posterior threshold")->group("Sampling");
}

template <typename T, typename U>
void set_if(const std::optional<T>& v, U& dst) {
    if (v) {
        dst = *v;
    }
}

RunConfig resolve_config(const Overrides& o) {
    RunConfig c;
    if (!o.config_path.empty()) {
        c = load_config_file(o.config_path, c);
    }
    set_if(o.seed, c.seed);

    set_if(o.clusters, c.data.n_clusters);
    set_if(o.items_per_cluster, c.data.items_per_cluster);
    set_if(o.captions, c.data.captions_per_image);
    set_if(o.latent_dim, c.data.latent_dim);
    set_if(o.image_dim, c.data.image_dim);
    set_if(o.text_dim, c.data.text_dim);
    set_if(o.noise, c.data.noise_sigma);
    set_if(o.duplicate_rate, c.data.duplicate_rate);
    set_if(o.item_spread, c.data.item_spread);
    set_if(o.duplicate_jitter, c.data.duplicate_jitter);
    set_if(o.min_center_angle, c.data.min_center_angle_deg);
    set_if(o.split, c.data.split);

    set_if(o.epochs, c.train.epochs);
    set_if(o.batch_size, c.train.batch_size);
    set_if(o.lr, c.train.learning_rate);
    set_if(o.lr_decay_epochs, c.train.lr_decay_epochs);
    set_if(o.lr_decay_factor, c.train.lr_decay_factor);
    set_if(o.margin, c.train.margin);
    set_if(o.embed_dim, c.train.embed_dim);
    set_if(o.hidden_dim, c.train.hidden_dim);
    set_if(o.momentum, c.train.momentum);
    set_if(o.bank_capacity, c.train.bank_capacity);
    if (o.clear_banks) {
        c.train.clear_banks_each_epoch = true;
    }
    set_if(o.min_ready, c.train.min_ready_count);
    set_if(o.sigma_floor, c.train.sigma_floor);
    if (o.tracker_features) {
        const auto f = parse_tracker_features(*o.tracker_features);
        if (!f) {
            throw Error(Errc::invalid_argument, "unknown --tracker-features '" + *o.tracker_features + "'");
        }
        c.train.tracker_features = *f;
    }

    if (o.mode) {
        const auto m = parse_mode(*o.mode);
        if (!m) {
            throw Error(Errc::invalid_argument, "unknown --mode '" + *o.mode + "'");
        }
        c.fne.mode = *m;
    }
    set_if(o.prior_p, c.fne.prior_p);
    set_if(o.alpha, c.fne.alpha);
    set_if(o.lambda, c.fne.lambda);

    c.resolve();
    return c;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(Errc::io, "cannot create directory '" + dir.string() + "': " + ec.message());
    }
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw Error(Errc::io, "cannot write '" + path.string() + "'");
    }
    return f;
}

void finish(std::ofstream& f, const fs::path& path) {
    f.flush();
    if (!f) {
        throw Error(Errc::io, "write failed for '" + path.string() + "'");
    }
}

void write_config(const RunConfig& c, const fs::path& path) {
    auto f = open_out(path);
    f << to_json(c).dump(2) << '\n';
    finish(f, path);
}

// ---- generate-data -------------------------------------------------------

struct GenerateArgs {
    Overrides o;
    std::string out = "dataset.fned";
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    const RunConfig c = resolve_config(a.o);
    const PairedDataset ds = generate(c.data);
    const fs::path path = output_path(a.out);
    if (path.has_parent_path()) {
        ensure_dir(path.parent_path());
    }
    save_embeddings(ds, path.string());
    write_config(c, fs::path(path.string() + ".config.json"));
    out << "wrote " << path.string() << ": " << ds.n_images() << " images x " << ds.image_dim << ", "
        << ds.n_texts() << " texts x " << ds.text_dim << " (clusters=" << c.data.n_clusters
        << ", duplicate_rate=" << c.data.duplicate_rate << ", noise=" << c.data.noise_sigma
        << ", split=" << c.data.split << ", seed=" << c.seed << ")\n";
    return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
    Overrides o;
    std::string data;
    std::string out_dir = "train";
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    const RunConfig c = resolve_config(a.o);
    const PairedDataset ds = load_embeddings(a.data);
    const fs::path dir = output_path(a.out_dir);
    ensure_dir(dir);
    write_config(c, dir / "config.json");

    const fs::path failed = dir / "FAILED";
    std::error_code ignored;
    fs::remove(failed, ignored);

    const fs::path log_path = dir / "train_log.csv";
    auto log = open_out(log_path);
    write_log_header(log);
    try {
        TrainState state = TrainState::initialize(ds.image_dim, ds.text_dim, c.train);
        for (std::size_t e = 0; e < c.train.epochs; ++e) {
            const EpochLog epoch = train_epoch(state, ds, c.train, c.fne);
            write_log_rows(epoch, log);
            finish(log, log_path);
            out << "epoch " << e + 1 << "/" << c.train.epochs << " loss " << epoch.mean_loss() << '\n';
        }
        save_checkpoint(state, (dir / "checkpoint.fnec").string());
    } catch (const std::exception& e) {
        auto marker = open_out(failed);
        marker << e.what() << '\n';
        throw;
    }
    out << "checkpoint written to " << (dir / "checkpoint.fnec").string() << '\n';
    return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
    std::string checkpoint;
    std::string data;
    std::string out_dir = "eval";
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const TrainState state = load_checkpoint(a.checkpoint);
    const PairedDataset ds = load_embeddings(a.data);
    if (state.image_encoder.input_dim() != ds.image_dim || state.text_encoder.input_dim() != ds.text_dim) {
        std::ostringstream msg;
        msg << "checkpoint expects image/text dims " << state.image_encoder.input_dim() << "/"
            << state.text_encoder.input_dim() << " but dataset has " << ds.image_dim << "/" << ds.text_dim;
        throw Error(Errc::dimension_mismatch, msg.str());
    }
    const RetrievalReport report = evaluate_retrieval(encode_images(state.image_encoder, ds),
                                                      encode_texts(state.text_encoder, ds), ds);
    const fs::path dir = output_path(a.out_dir);
    ensure_dir(dir);
    const fs::path path = dir / "recall.csv";
    auto f = open_out(path);
    write_report_csv(report, f);
    finish(f, path);
    out << format_report_table(report);
    return 0;
}

// ---- weights-curve ---------------------------------------------------------

struct CurveArgs {
    std::optional<double> mu_pos, sigma_pos, mu_neg, sigma_neg, s_pos;
    std::optional<double> prior_p, alpha, lambda;
    std::string checkpoint;
    std::string config_path;
    std::string out = "weights_curve.csv";
};

int cmd_weights_curve(const CurveArgs& a, std::ostream& out) {
    const bool explicit_stats = a.mu_pos || a.sigma_pos || a.mu_neg || a.sigma_neg;
    if (explicit_stats && !(a.mu_pos && a.sigma_pos && a.mu_neg && a.sigma_neg)) {
        throw Error(Errc::invalid_argument,
                    "--mu-pos, --sigma-pos, --mu-neg and --sigma-neg must be given together");
    }
    if (explicit_stats == !a.checkpoint.empty()) {
        throw Error(Errc::invalid_argument, "give either the four distribution flags or --checkpoint");
    }

    RunConfig c;
    if (!a.config_path.empty()) {
        c = load_config_file(a.config_path, c);
    }
    set_if(a.prior_p, c.fne.prior_p);
    set_if(a.alpha, c.fne.alpha);
    set_if(a.lambda, c.fne.lambda);
    c.fne.validate();

    TrackerSnapshot snap;
    if (explicit_stats) {
        snap.mu_pos = *a.mu_pos;
        snap.sigma_pos = *a.sigma_pos;
        snap.mu_neg = *a.mu_neg;
        snap.sigma_neg = *a.sigma_neg;
        snap.ready = true;
    } else {
        snap = load_checkpoint(a.checkpoint).weighting_snapshot();
        if (!snap.ready) {
            throw Error(Errc::not_ready, "checkpoint tracker has no ready statistics");
        }
    }
    const double s_pos = a.s_pos.value_or(snap.mu_pos);
    const PosteriorModel model(snap.mu_pos, snap.sigma_pos, snap.mu_neg, snap.sigma_neg, c.fne.prior_p);

    const fs::path path = output_path(a.out);
    if (path.has_parent_path()) {
        ensure_dir(path.parent_path());
    }
    auto f = open_out(path);
    f.precision(17);
    f << "s,posterior,branch,weight\n";
    for (int i = -1000; i <= 1000; ++i) {
        const double s = i / 1000.0;
        const double post = model(s);
        const bool cut = post <= c.fne.lambda;
        const double w = cut ? cutdown_weight(s, s_pos, c.fne.alpha) : base_weight(post);
        if (!std::isfinite(post) || !std::isfinite(w)) {
            throw Error(Errc::non_finite, "non-finite weight at s=" + std::to_string(s));
        }
        f << s << ',' << post << ',' << (cut ? "cutdown" : "posterior") << ',' << w << '\n';
    }
    finish(f, path);
    out << "wrote 2001 points to " << path.string() << '\n';
    return 0;
}

// ---- sweep -----------------------------------------------------------------

struct SweepArgs {
    Overrides o;
    std::string axis;
    std::vector<double> values;
    std::size_t seeds = 1;
    std::size_t jobs = 1;
    std::string out_dir = "sweep";
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
    const auto axis = parse_axis(a.axis);
    if (!axis) {
        throw Error(Errc::invalid_argument,
                    "unknown --axis '" + a.axis + "' (prior_p, lambda, batch_size, bank_capacity)");
    }
    const RunConfig c = resolve_config(a.o);
    const fs::path dir = output_path(a.out_dir);
    ensure_dir(dir);
    write_config(c, dir / "config.json");
    const auto rows = run_sweep(c, *axis, a.values, a.seeds, a.jobs);
    const fs::path path = dir / "sweep.csv";
    auto f = open_out(path);
    write_sweep_csv(rows, f);
    finish(f, path);
    for (const auto& r : rows) {
        out << axis_name(r.axis) << '=' << r.value << " seed=" << r.seed
            << " mean_R@1=" << r.result.report.mean_r1() << '\n';
    }
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"False-negative-aware negative sampling for cross-modal retrieval", "fne"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate-data", "Write a synthetic paired dataset");
    add_seed_and_config(*g, gen.o);
    add_data_flags(*g, gen.o);
    g->add_option("-o,--out", gen.out, "Dataset file")->capture_default_str();

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train encoders on a dataset file");
    add_seed_and_config(*t, tr.o);
    add_data_flags(*t, tr.o);
    add_train_flags(*t, tr.o);
    add_fne_flags(*t, tr.o);
    t->add_option("--data", tr.data, "Dataset file")->required();
    t->add_option("--out-dir", tr.out_dir)->capture_default_str();

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Recall@K of a checkpoint on a dataset");
    e->add_option("--checkpoint", ev.checkpoint)->required();
    e->add_option("--data", ev.data)->required();
    e->add_option("--out-dir", ev.out_dir)->capture_default_str();

    CurveArgs cv;
    auto* w = app.add_subcommand("weights-curve", "Sampling weight as a function of similarity");
    w->add_option("--mu-pos", cv.mu_pos);
    w->add_option("--sigma-pos", cv.sigma_pos);
    w->add_option("--mu-neg", cv.mu_neg);
    w->add_option("--sigma-neg", cv.sigma_neg);
    w->add_option("--s-pos", cv.s_pos, "Positive similarity for the cut-down term (default: mu-pos)");
    w->add_option("--checkpoint", cv.checkpoint, "Take distributions from a checkpoint");
    w->add_option("--prior-p", cv.prior_p);
    w->add_option("--alpha", cv.alpha);
    w->add_option("--lambda", cv.lambda);
    w->add_option("--config", cv.config_path);
    w->add_option("-o,--out", cv.out)->capture_default_str();

    SweepArgs sw;
    auto* s = app.add_subcommand("sweep", "Train and evaluate across values of one setting");
    add_seed_and_config(*s, sw.o);
    add_data_flags(*s, sw.o);
    add_train_flags(*s, sw.o);
    add_fne_flags(*s, sw.o);
    s->add_option("--axis", sw.axis, "prior_p | lambda | batch_size | bank_capacity")->required();
    s->add_option("--values", sw.values)->required()->delimiter(',');
    s->add_option("--seeds", sw.seeds, "Seeds per value")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--jobs", sw.jobs, "Parallel runs")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--out-dir", sw.out_dir)->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& pe) {
        err << "error: " << pe.what() << "\nrun with --help for usage\n";
        return 2;
    }

    try {
        if (*g) return cmd_generate(gen, out);
        if (*t) return cmd_train(tr, out);
        if (*e) return cmd_eval(ev, out);
        if (*w) return cmd_weights_curve(cv, out);
        if (*s) return cmd_sweep(sw, out);
    } catch (const Error& ex) {
        err << "error [" << errc_name(ex.code()) << "]: " << ex.what() << '\n';
        return exit_code_for(ex.code());
    } catch (const fs::filesystem_error& ex) {
        err << "error [io]: " << ex.what() << '\n';
        return 3;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return 1;
    }
    return 2;
}

} // namespace fne::cli
