#pragma once

// False-negative-aware negative sampling.
//
// Each candidate negative gets a posterior probability of actually matching
// the anchor, from the two tracked similarity Gaussians and a Bernoulli match
// prior. Likely false negatives get weight exp(-posterior); candidates whose
// posterior is at or below lambda are easy negatives and instead get the
// cut-down weight exp(-alpha (s_neg - s_pos)^2).

#include "fne/rng.hpp"
#include "fne/similarity_stats.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fne {

enum class SamplingMode { fne, hardest, uniform, semi_hard };

std::string_view mode_name(SamplingMode mode) noexcept;
std::optional<SamplingMode> parse_mode(std::string_view name) noexcept;

struct FneConfig {
    double prior_p = 1e-4;
    double alpha = 0.5;
    double lambda = 0.01;
    SamplingMode mode = SamplingMode::fne;

    // Throws Errc::invalid_argument naming the offending field.
    void validate() const;
};

struct CandidatePool {
    std::vector<std::uint64_t> ids;
    std::vector<double> similarities;
    double positive_similarity = 0.0;

    std::size_t size() const noexcept { return ids.size(); }
};

struct WeightReport {
    std::vector<double> posterior;
    std::vector<double> weight;
    std::vector<std::uint8_t> cut_down;  // 1 where posterior <= lambda
};

// Precomputed log-space posterior for one set of distribution parameters.
class PosteriorModel {
public:
    PosteriorModel(double mu_pos, double sigma_pos, double mu_neg, double sigma_neg, double prior_p);
    PosteriorModel(const TrackerSnapshot& snapshot, double prior_p)
        : PosteriorModel(snapshot.mu_pos, snapshot.sigma_pos, snapshot.mu_neg, snapshot.sigma_neg,
                         prior_p) {}

    // log(p f+(s)) - log((1-p) f-(s))
    double log_odds(double s) const noexcept;
    double operator()(double s) const noexcept;

private:
    double mu_pos_;
    double mu_neg_;
    double inv_two_var_pos_;
    double inv_two_var_neg_;
    double offset_;
};

// p f+(s) / (p f+(s) + (1-p) f-(s)) with normal f+, f-, evaluated in log space.
double posterior(double s, double mu_pos, double sigma_pos, double mu_neg, double sigma_neg,
                 double prior_p);
// Same rule from already-evaluated densities.
double posterior_from_densities(double f_pos, double f_neg, double prior_p);

double base_weight(double posterior) noexcept;
double cutdown_weight(double s_neg, double s_pos, double alpha) noexcept;

// Throws Errc::not_ready if the snapshot is not ready (caller falls back).
WeightReport combined_weights(const CandidatePool& pool, const TrackerSnapshot& snapshot,
                              const FneConfig& config);

struct Selection {
    std::size_t index = 0;
    std::uint64_t id = 0;
    double similarity = 0.0;
};

// One categorical draw proportional to report.weight.
Selection sample_negative(const WeightReport& report, const CandidatePool& pool, Rng& rng);

// hardest: argmax (first on ties); uniform: uniform draw; semi_hard: uniform
// among s < s_pos, else hardest.
Selection baseline_select(const CandidatePool& pool, SamplingMode mode, Rng& rng);

} // namespace fne
