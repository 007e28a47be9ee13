#pragma once

#include "fne/matrix.hpp"

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fne {

// Fixed-dimension real vector; nonempty with finite entries.
class Embedding {
public:
    explicit Embedding(std::vector<double> values);
    Embedding(std::initializer_list<double> values) : Embedding(std::vector<double>(values)) {}
    explicit Embedding(std::span<const double> values)
        : Embedding(std::vector<double>(values.begin(), values.end())) {}

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    friend bool operator==(const Embedding&, const Embedding&) = default;

private:
    std::vector<double> values_;
};

// Patch or word features of one item; all tokens share one dimension.
class TokenSet {
public:
    TokenSet() = default;
    explicit TokenSet(std::vector<Embedding> tokens);

    bool empty() const noexcept { return tokens_.empty(); }
    std::size_t size() const noexcept { return tokens_.size(); }
    std::span<const Embedding> tokens() const noexcept { return tokens_; }

private:
    std::vector<Embedding> tokens_;
};

// Elementwise mean of the tokens.
Embedding average_pool(const TokenSet& tokens);

double l2_norm(std::span<const double> v);

// a.b / (|a| |b|), clamped to [-1, 1]. Zero-norm inputs are rejected.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
inline double cosine_similarity(const Embedding& a, const Embedding& b) {
    return cosine_similarity(a.values(), b.values());
}

// Entry (i, j) is cosine_similarity(queries[i], candidates[j]), bit for bit.
Matrix similarity_matrix(std::span<const Embedding> queries, std::span<const Embedding> candidates);
Matrix similarity_matrix(const Matrix& queries, const Matrix& candidates);

// Gradient of cosine_similarity(a, b) with respect to a, accumulated as
// out += scale * (b / (|a||b|) - s * a / |a|^2).
void accumulate_cosine_grad(std::span<const double> a, std::span<const double> b, double scale,
                            std::span<double> out);

} // namespace fne
