#include "fne/similarity_stats.hpp"

#include "fne/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace fne {

void GaussianStats::push(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
}

void GaussianStats::merge(const GaussianStats& other) {
    if (other.count == 0) {
        return;
    }
    if (count == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double n = na + nb;
    const double delta = other.mean - mean;
    mean += delta * (nb / n);
    m2 += other.m2 + delta * delta * (na * nb / n);
    count += other.count;
}

double GaussianStats::variance() const {
    if (count < 2) {
        throw Error(Errc::not_ready, "tracker not ready: variance needs at least 2 samples, have " +
                                         std::to_string(count));
    }
    return m2 / static_cast<double>(count);
}

double GaussianStats::sigma(double sigma_floor) const {
    if (count < 2) {
        return sigma_floor;
    }
    return std::max(std::sqrt(std::max(m2, 0.0) / static_cast<double>(count)), sigma_floor);
}

double pdf(const GaussianStats& stats, double s, double sigma_floor) {
    if (stats.count < 2) {
        throw Error(Errc::not_ready, "tracker not ready: density needs at least 2 samples");
    }
    const double sigma = stats.sigma(sigma_floor);
    const double z = (s - stats.mean) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

DistributionTracker::DistributionTracker(std::uint64_t min_ready_count, double sigma_floor)
    : min_ready_count_(min_ready_count), sigma_floor_(sigma_floor) {
    if (min_ready_count_ == 0) {
        throw Error(Errc::invalid_argument, "min_ready_count must be positive");
    }
    if (!(sigma_floor_ > 0.0)) {
        throw Error(Errc::invalid_argument, "sigma_floor must be positive");
    }
}

DistributionTracker::DistributionTracker(const DistributionTracker& other)
    : min_ready_count_(other.min_ready_count_), sigma_floor_(other.sigma_floor_) {
    std::lock_guard lock(other.mutex_);
    positive_ = other.positive_;
    negative_ = other.negative_;
}

DistributionTracker& DistributionTracker::operator=(const DistributionTracker& other) {
    if (this == &other) {
        return *this;
    }
    std::scoped_lock lock(mutex_, other.mutex_);
    min_ready_count_ = other.min_ready_count_;
    sigma_floor_ = other.sigma_floor_;
    positive_ = other.positive_;
    negative_ = other.negative_;
    return *this;
}

void DistributionTracker::observe_batch(std::span<const double> positive_sims,
                                        std::span<const std::vector<double>> negative_sims) {
    if (positive_sims.size() != negative_sims.size()) {
        throw Error(Errc::dimension_mismatch, "observe_batch: " +
                                                  std::to_string(positive_sims.size()) +
                                                  " positives but " +
                                                  std::to_string(negative_sims.size()) +
                                                  " negative rows");
    }
    // Validate and accumulate off to the side, then publish under the lock.
    GaussianStats pos_batch;
    GaussianStats neg_batch;
    for (std::size_t i = 0; i < positive_sims.size(); ++i) {
        const double sp = positive_sims[i];
        if (!std::isfinite(sp)) {
            throw Error(Errc::non_finite,
                        "non-finite positive similarity for anchor " + std::to_string(i));
        }
        const auto& row = negative_sims[i];
        bool admit = true;
        double sum = 0.0;
        for (double sn : row) {
            if (!std::isfinite(sn)) {
                throw Error(Errc::non_finite,
                            "non-finite negative similarity for anchor " + std::to_string(i));
            }
            admit = admit && sp > sn;
            sum += sn;
        }
        if (!row.empty()) {
            GaussianStats row_stats;
            row_stats.count = row.size();
            row_stats.mean = sum / static_cast<double>(row.size());
            for (double sn : row) {
                const double d = sn - row_stats.mean;
                row_stats.m2 += d * d;
            }
            neg_batch.merge(row_stats);
        }
        if (admit) {
            pos_batch.push(sp);
        }
    }
    std::lock_guard lock(mutex_);
    positive_.merge(pos_batch);
    negative_.merge(neg_batch);
}

TrackerSnapshot DistributionTracker::snapshot_locked() const {
    TrackerSnapshot s;
    s.mu_pos = positive_.mean;
    s.sigma_pos = positive_.sigma(sigma_floor_);
    s.mu_neg = negative_.mean;
    s.sigma_neg = negative_.sigma(sigma_floor_);
    s.n_pos = positive_.count;
    s.n_neg = negative_.count;
    s.ready = positive_.count >= min_ready_count_ && negative_.count >= min_ready_count_;
    return s;
}

TrackerSnapshot DistributionTracker::snapshot() const {
    std::lock_guard lock(mutex_);
    return snapshot_locked();
}

bool DistributionTracker::ready() const { return snapshot().ready; }

GaussianStats DistributionTracker::positive() const {
    std::lock_guard lock(mutex_);
    return positive_;
}

GaussianStats DistributionTracker::negative() const {
    std::lock_guard lock(mutex_);
    return negative_;
}

void DistributionTracker::reset() {
    std::lock_guard lock(mutex_);
    positive_ = {};
    negative_ = {};
}

void DistributionTracker::restore(const GaussianStats& positive, const GaussianStats& negative) {
    std::lock_guard lock(mutex_);
    positive_ = positive;
    negative_ = negative;
}

} // namespace fne
