#include "fne/memory.hpp"

#include "fne/error.hpp"
#include "fne/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fne {

MemoryBank::MemoryBank(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim), ids_(capacity), data_(capacity * dim) {
    if (capacity == 0 || dim == 0) {
        throw Error(Errc::invalid_argument, "memory bank capacity and dimension must be positive");
    }
}

void MemoryBank::enqueue_batch(std::span<const std::uint64_t> ids, const Matrix& embeddings) {
    if (ids.size() != embeddings.rows()) {
        throw Error(Errc::dimension_mismatch, "enqueue_batch: " + std::to_string(ids.size()) +
                                                  " ids for " + std::to_string(embeddings.rows()) +
                                                  " embeddings");
    }
    if (ids.size() > capacity_) {
        throw Error(Errc::invalid_argument, "enqueue_batch: batch of " + std::to_string(ids.size()) +
                                                " exceeds bank capacity " + std::to_string(capacity_));
    }
    if (!ids.empty() && embeddings.cols() != dim_) {
        throw Error(Errc::dimension_mismatch, "enqueue_batch: embedding dimension " +
                                                  std::to_string(embeddings.cols()) +
                                                  " != bank dimension " + std::to_string(dim_));
    }
    for (std::size_t r = 0; r < ids.size(); ++r) {
        std::size_t dst;
        if (size_ < capacity_) {
            dst = slot(size_);
            ++size_;
        } else {
            dst = head_;
            head_ = (head_ + 1) % capacity_;
        }
        ids_[dst] = ids[r];
        auto src = embeddings.row(r);
        std::copy(src.begin(), src.end(), data_.begin() + static_cast<std::ptrdiff_t>(dst * dim_));
    }
}

void MemoryBank::clear() noexcept {
    head_ = 0;
    size_ = 0;
}

std::uint64_t MemoryBank::id_at(std::size_t i) const {
    if (i >= size_) {
        throw Error(Errc::invalid_argument, "memory bank index out of range");
    }
    return ids_[slot(i)];
}

std::span<const double> MemoryBank::embedding_at(std::size_t i) const {
    if (i >= size_) {
        throw Error(Errc::invalid_argument, "memory bank index out of range");
    }
    return {data_.data() + slot(i) * dim_, dim_};
}

std::vector<std::uint64_t> MemoryBank::ids_oldest_first() const {
    std::vector<std::uint64_t> out(size_);
    for (std::size_t i = 0; i < size_; ++i) {
        out[i] = ids_[slot(i)];
    }
    return out;
}

Matrix MemoryBank::embeddings_oldest_first() const {
    Matrix out(size_, dim_);
    for (std::size_t i = 0; i < size_; ++i) {
        const double* src = data_.data() + slot(i) * dim_;
        std::copy(src, src + dim_, out.row(i).begin());
    }
    return out;
}

bool operator==(const MemoryBank& a, const MemoryBank& b) {
    return a.capacity_ == b.capacity_ && a.dim_ == b.dim_ &&
           a.ids_oldest_first() == b.ids_oldest_first() &&
           a.embeddings_oldest_first() == b.embeddings_oldest_first();
}

CandidateSource candidates(const MemoryBank& bank, std::span<const std::uint64_t> batch_ids,
                           const Matrix& batch_embeddings,
                           const std::unordered_set<std::uint64_t>& exclude_ids) {
    if (batch_ids.size() != batch_embeddings.rows()) {
        throw Error(Errc::dimension_mismatch, "candidates: batch ids and embeddings differ in count");
    }
    if (!batch_ids.empty() && batch_embeddings.cols() != bank.dim()) {
        throw Error(Errc::dimension_mismatch, "candidates: batch dimension differs from bank");
    }
    CandidateSource out;
    out.embeddings = Matrix(0, bank.dim());
    for (std::size_t r = 0; r < batch_ids.size(); ++r) {
        if (!exclude_ids.contains(batch_ids[r])) {
            out.ids.push_back(batch_ids[r]);
            out.embeddings.append_row(batch_embeddings.row(r));
        }
    }
    out.from_batch = out.ids.size();
    for (std::size_t i = 0; i < bank.size(); ++i) {
        const auto id = bank.id_at(i);
        if (!exclude_ids.contains(id)) {
            out.ids.push_back(id);
            out.embeddings.append_row(bank.embedding_at(i));
        }
    }
    return out;
}

void momentum_update(std::span<double> key_params, std::span<const double> query_params, double m) {
    if (key_params.size() != query_params.size()) {
        throw Error(Errc::dimension_mismatch, "momentum_update: parameter shapes differ (" +
                                                  std::to_string(key_params.size()) + " vs " +
                                                  std::to_string(query_params.size()) + ")");
    }
    if (!(m >= 0.0 && m < 1.0)) {
        throw Error(Errc::invalid_argument, "momentum must lie in [0, 1)");
    }
    if (m == 0.0) {
        std::copy(query_params.begin(), query_params.end(), key_params.begin());
        return;
    }
    // key + (1 - m)(query - key): leaves key untouched when key == query.
    kernels::lerp(1.0 - m, query_params, key_params);
}

} // namespace fne
