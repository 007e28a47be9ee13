#include "fne/sampler.hpp"

#include "fne/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fne {

std::string_view mode_name(SamplingMode mode) noexcept {
    switch (mode) {
    case SamplingMode::fne: return "fne";
    case SamplingMode::hardest: return "hardest";
    case SamplingMode::uniform: return "uniform";
    case SamplingMode::semi_hard: return "semi-hard";
    }
    return "unknown";
}

std::optional<SamplingMode> parse_mode(std::string_view name) noexcept {
    for (auto m : {SamplingMode::fne, SamplingMode::hardest, SamplingMode::uniform,
                   SamplingMode::semi_hard}) {
        if (name == mode_name(m)) {
            return m;
        }
    }
    if (name == "semi_hard") {
        return SamplingMode::semi_hard;
    }
    return std::nullopt;
}

void FneConfig::validate() const {
    if (!(prior_p > 0.0 && prior_p < 1.0)) {
        throw Error(Errc::invalid_argument, "prior_p must lie in (0, 1), got " + std::to_string(prior_p));
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw Error(Errc::invalid_argument, "alpha must be positive, got " + std::to_string(alpha));
    }
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw Error(Errc::invalid_argument, "lambda must lie in (0, 1), got " + std::to_string(lambda));
    }
}

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw Error(Errc::non_finite, std::string("posterior: non-finite ") + what);
    }
}

inline double logistic(double z) noexcept {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace

PosteriorModel::PosteriorModel(double mu_pos, double sigma_pos, double mu_neg, double sigma_neg,
                               double prior_p)
    : mu_pos_(mu_pos), mu_neg_(mu_neg) {
    require_finite(mu_pos, "mu_pos");
    require_finite(sigma_pos, "sigma_pos");
    require_finite(mu_neg, "mu_neg");
    require_finite(sigma_neg, "sigma_neg");
    require_finite(prior_p, "prior_p");
    if (!(sigma_pos > 0.0) || !(sigma_neg > 0.0)) {
        throw Error(Errc::invalid_argument, "posterior: sigmas must be positive");
    }
    if (!(prior_p > 0.0 && prior_p < 1.0)) {
        throw Error(Errc::invalid_argument, "posterior: prior_p must lie in (0, 1)");
    }
    inv_two_var_pos_ = 0.5 / (sigma_pos * sigma_pos);
    inv_two_var_neg_ = 0.5 / (sigma_neg * sigma_neg);
    // The 1/sqrt(2 pi) factors cancel.
    offset_ = std::log(prior_p) - std::log1p(-prior_p) + std::log(sigma_neg) - std::log(sigma_pos);
}

double PosteriorModel::log_odds(double s) const noexcept {
    const double dp = s - mu_pos_;
    const double dn = s - mu_neg_;
    return offset_ - dp * dp * inv_two_var_pos_ + dn * dn * inv_two_var_neg_;
}

double PosteriorModel::operator()(double s) const noexcept { return logistic(log_odds(s)); }

double posterior(double s, double mu_pos, double sigma_pos, double mu_neg, double sigma_neg,
                 double prior_p) {
    require_finite(s, "similarity");
    return PosteriorModel(mu_pos, sigma_pos, mu_neg, sigma_neg, prior_p)(s);
}

double posterior_from_densities(double f_pos, double f_neg, double prior_p) {
    require_finite(f_pos, "positive density");
    require_finite(f_neg, "negative density");
    if (f_pos < 0.0 || f_neg < 0.0 || !(prior_p > 0.0 && prior_p < 1.0)) {
        throw Error(Errc::invalid_argument, "posterior: densities must be >= 0 and prior in (0, 1)");
    }
    const double num = prior_p * f_pos;
    const double den = num + (1.0 - prior_p) * f_neg;
    if (!(den > 0.0)) {
        throw Error(Errc::degenerate_input, "posterior: both densities vanish");
    }
    return num / den;
}

double base_weight(double posterior) noexcept { return std::exp(-posterior); }

double cutdown_weight(double s_neg, double s_pos, double alpha) noexcept {
    const double gap = s_neg - s_pos;
    return std::exp(-alpha * gap * gap);
}

WeightReport combined_weights(const CandidatePool& pool, const TrackerSnapshot& snapshot,
                              const FneConfig& config) {
    if (!snapshot.ready) {
        throw Error(Errc::not_ready, "tracker not ready: fallback required");
    }
    if (pool.ids.size() != pool.similarities.size()) {
        throw Error(Errc::dimension_mismatch, "candidate pool ids and similarities differ in length");
    }
    if (pool.size() == 0) {
        throw Error(Errc::invalid_argument, "candidate pool is empty");
    }
    const PosteriorModel model(snapshot, config.prior_p);
    const std::size_t n = pool.size();
    WeightReport report;
    report.posterior.resize(n);
    report.weight.resize(n);
    report.cut_down.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = pool.similarities[i];
        const double post = model(s);
        report.posterior[i] = post;
        if (post <= config.lambda) {
            report.cut_down[i] = 1;
            report.weight[i] = cutdown_weight(s, pool.positive_similarity, config.alpha);
        } else {
            report.cut_down[i] = 0;
            report.weight[i] = base_weight(post);
        }
    }
    return report;
}

Selection sample_negative(const WeightReport& report, const CandidatePool& pool, Rng& rng) {
    if (report.weight.size() != pool.size() || pool.size() == 0) {
        throw Error(Errc::dimension_mismatch, "weight report does not match candidate pool");
    }
    std::vector<double> cumulative(report.weight.size());
    double total = 0.0;
    for (std::size_t i = 0; i < report.weight.size(); ++i) {
        const double w = report.weight[i];
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw Error(Errc::non_finite, "invalid sampling weight at index " + std::to_string(i));
        }
        total += w;
        cumulative[i] = total;
    }
    if (!(total > 0.0)) {
        throw Error(Errc::degenerate_input, "all sampling weights are zero");
    }
    const double target = uniform01(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    std::size_t idx = static_cast<std::size_t>(it - cumulative.begin());
    // Guard against target landing on the final boundary through rounding, and
    // never return a zero-weight entry.
    idx = std::min(idx, cumulative.size() - 1);
    while (report.weight[idx] == 0.0 && idx > 0) {
        --idx;
    }
    return {idx, pool.ids[idx], pool.similarities[idx]};
}

namespace {

std::size_t argmax_first(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

} // namespace

Selection baseline_select(const CandidatePool& pool, SamplingMode mode, Rng& rng) {
    if (pool.size() == 0 || pool.ids.size() != pool.similarities.size()) {
        throw Error(Errc::invalid_argument, "baseline_select needs a nonempty, consistent pool");
    }
    std::size_t idx = 0;
    switch (mode) {
    case SamplingMode::hardest:
        idx = argmax_first(pool.similarities);
        break;
    case SamplingMode::uniform:
        idx = uniform_index(rng, pool.size());
        break;
    case SamplingMode::semi_hard: {
        std::vector<std::size_t> eligible;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (pool.similarities[i] < pool.positive_similarity) {
                eligible.push_back(i);
            }
        }
        idx = eligible.empty() ? argmax_first(pool.similarities)
                               : eligible[uniform_index(rng, eligible.size())];
        break;
    }
    case SamplingMode::fne:
        throw Error(Errc::invalid_argument, "baseline_select does not handle mode fne");
    }
    return {idx, pool.ids[idx], pool.similarities[idx]};
}

} // namespace fne
