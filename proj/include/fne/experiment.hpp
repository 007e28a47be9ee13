#pragma once

// Resolved run configuration and the train-then-evaluate experiment driver
// used by the CLI sweeps and the acceptance suite.

#include "fne/datagen.hpp"
#include "fne/eval.hpp"
#include "fne/sampler.hpp"
#include "fne/trainer.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fne {

struct RunConfig {
    // Single run seed; every consumer derives its own stream from it.
    std::uint64_t seed = 0;
    SyntheticSpec data;
    TrainConfig train;
    FneConfig fne;

    // Pushes the run seed into the data and training sections and validates.
    void resolve();
};

nlohmann::json to_json(const RunConfig& config);
// Applies the keys present in `j` on top of `base`. Unknown keys and
// ill-typed values are rejected with Errc::invalid_argument.
RunConfig from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config_file(const std::string& path, RunConfig base = {});

struct ExperimentResult {
    RetrievalReport report;  // on the held-out split
    // Over steps where weighting statistics were available.
    double fn_rate_after_warmup = 0.0;
    std::size_t warm_samples = 0;
    std::size_t warm_steps = 0;
    double final_epoch_loss = 0.0;
    std::vector<StepLog> steps;
};

// Trains on split 0 of the synthetic spec and evaluates Recall@K on split 1
// (same centers and view maps, freshly drawn items).
ExperimentResult run_experiment(const RunConfig& config);

enum class SweepAxis { prior_p, lambda, batch_size, bank_capacity };

std::string_view axis_name(SweepAxis axis) noexcept;
std::optional<SweepAxis> parse_axis(std::string_view name) noexcept;
// Returns a copy of base with the axis set to value (validated).
RunConfig apply_axis(const RunConfig& base, SweepAxis axis, double value);

struct SweepRow {
    SweepAxis axis = SweepAxis::prior_p;
    double value = 0.0;
    std::uint64_t seed = 0;
    ExperimentResult result;
};

// One run per (value, seed offset); seeds are base.seed + [0, n_seeds).
// jobs > 1 runs independent experiments on worker threads; results are the
// same as a serial run.
std::vector<SweepRow> run_sweep(const RunConfig& base, SweepAxis axis, std::span<const double> values,
                                std::size_t n_seeds = 1, std::size_t jobs = 1);

void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out);

} // namespace fne
