#pragma once

// Fixed-capacity FIFO feature queue filled by a momentum encoder.

#include "fne/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

namespace fne {

class MemoryBank {
public:
    MemoryBank(std::size_t capacity, std::size_t dim);

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }

    // Appends rows in order, evicting the oldest entries past capacity.
    void enqueue_batch(std::span<const std::uint64_t> ids, const Matrix& embeddings);
    void clear() noexcept;

    // i = 0 is the oldest entry.
    std::uint64_t id_at(std::size_t i) const;
    std::span<const double> embedding_at(std::size_t i) const;

    std::vector<std::uint64_t> ids_oldest_first() const;
    Matrix embeddings_oldest_first() const;

    friend bool operator==(const MemoryBank& a, const MemoryBank& b);

private:
    std::size_t slot(std::size_t i) const noexcept { return (head_ + i) % capacity_; }

    std::size_t capacity_;
    std::size_t dim_;
    std::size_t head_ = 0;  // slot of the oldest entry
    std::size_t size_ = 0;
    std::vector<std::uint64_t> ids_;
    std::vector<double> data_;
};

struct CandidateSource {
    std::vector<std::uint64_t> ids;
    Matrix embeddings;
    // Rows [0, from_batch) came from the current batch, the rest from the bank.
    std::size_t from_batch = 0;
};

// Current batch first, then the bank oldest to newest, minus excluded ids.
CandidateSource candidates(const MemoryBank& bank, std::span<const std::uint64_t> batch_ids,
                           const Matrix& batch_embeddings,
                           const std::unordered_set<std::uint64_t>& exclude_ids);

// key <- m * key + (1 - m) * query, elementwise.
void momentum_update(std::span<double> key_params, std::span<const double> query_params, double m);

} // namespace fne
