#pragma once

// Streaming Gaussian models of matched-pair and mismatched-pair similarity.

#include <cstdint>
#include <mutex>
#include <span>
#include <vector>

namespace fne {

// Running count / mean / sum of squared deviations. Population variance.
struct GaussianStats {
    std::uint64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double x);
    // Chan et al. pairwise combination.
    void merge(const GaussianStats& other);

    // Throws Errc::not_ready when count < 2.
    double variance() const;
    // sqrt(variance) floored at sigma_floor; sigma_floor when count < 2.
    double sigma(double sigma_floor) const;

    friend bool operator==(const GaussianStats&, const GaussianStats&) = default;
};

// Normal density at s with the tracked mean and max(sigma, sigma_floor).
double pdf(const GaussianStats& stats, double s, double sigma_floor);

struct TrackerSnapshot {
    double mu_pos = 0.0;
    double sigma_pos = 0.0;
    double mu_neg = 0.0;
    double sigma_neg = 0.0;
    bool ready = false;
    std::uint64_t n_pos = 0;
    std::uint64_t n_neg = 0;
};

inline constexpr std::uint64_t kDefaultMinReadyCount = 256;
inline constexpr double kDefaultSigmaFloor = 1e-6;

// Single writer (observe_batch / reset / restore); snapshot() may be called
// from any thread and never observes a half-applied batch.
class DistributionTracker {
public:
    explicit DistributionTracker(std::uint64_t min_ready_count = kDefaultMinReadyCount,
                                 double sigma_floor = kDefaultSigmaFloor);
    DistributionTracker(const DistributionTracker& other);
    DistributionTracker& operator=(const DistributionTracker& other);

    // Row i of negative_sims holds every negative similarity for anchor i.
    // positive_sims[i] is admitted only if strictly above all of row i;
    // every negative is admitted.
    void observe_batch(std::span<const double> positive_sims,
                       std::span<const std::vector<double>> negative_sims);

    TrackerSnapshot snapshot() const;
    bool ready() const;

    GaussianStats positive() const;
    GaussianStats negative() const;
    std::uint64_t min_ready_count() const noexcept { return min_ready_count_; }
    double sigma_floor() const noexcept { return sigma_floor_; }

    void reset();
    void restore(const GaussianStats& positive, const GaussianStats& negative);

private:
    TrackerSnapshot snapshot_locked() const;

    std::uint64_t min_ready_count_;
    double sigma_floor_;
    mutable std::mutex mutex_;
    GaussianStats positive_;
    GaussianStats negative_;
};

} // namespace fne
