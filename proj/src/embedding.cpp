#include "fne/embedding.hpp"

#include "fne/error.hpp"
#include "fne/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fne {

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
        throw Error(Errc::invalid_argument, "embedding must have dimension > 0");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw Error(Errc::non_finite,
                        "embedding entry " + std::to_string(i) + " is not finite");
        }
    }
}

TokenSet::TokenSet(std::vector<Embedding> tokens) : tokens_(std::move(tokens)) {
    for (const auto& t : tokens_) {
        if (t.dim() != tokens_.front().dim()) {
            throw Error(Errc::dimension_mismatch, "tokens of one set must share a dimension");
        }
    }
}

Embedding average_pool(const TokenSet& tokens) {
    if (tokens.empty()) {
        throw Error(Errc::invalid_argument, "cannot pool an empty token set");
    }
    const std::size_t dim = tokens.tokens().front().dim();
    std::vector<double> mean(dim, 0.0);
    for (const auto& t : tokens.tokens()) {
        for (std::size_t i = 0; i < dim; ++i) {
            mean[i] += t[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(tokens.size());
    for (double& v : mean) {
        v *= inv;
    }
    return Embedding(std::move(mean));
}

double l2_norm(std::span<const double> v) { return std::sqrt(kernels::dot(v, v)); }

namespace {

double checked_norm(std::span<const double> v, const char* role, std::size_t index) {
    const double n = l2_norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw Error(Errc::degenerate_input, std::string("zero-norm or non-finite ") + role +
                                                " embedding at index " + std::to_string(index));
    }
    return n;
}

inline double clamp_unit(double s) { return std::clamp(s, -1.0, 1.0); }

} // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) {
        throw Error(Errc::dimension_mismatch, "cosine similarity of vectors with dimensions " +
                                                  std::to_string(a.size()) + " and " +
                                                  std::to_string(b.size()));
    }
    const double na = checked_norm(a, "first", 0);
    const double nb = checked_norm(b, "second", 0);
    return clamp_unit(kernels::dot(a, b) / (na * nb));
}

Matrix similarity_matrix(const Matrix& queries, const Matrix& candidates) {
    if (queries.rows() > 0 && candidates.rows() > 0 && queries.cols() != candidates.cols()) {
        throw Error(Errc::dimension_mismatch,
                    "query dimension " + std::to_string(queries.cols()) +
                        " differs from candidate dimension " + std::to_string(candidates.cols()));
    }
    const std::size_t dim = queries.cols();
    std::vector<double> cand_norms(candidates.rows());
    for (std::size_t j = 0; j < candidates.rows(); ++j) {
        cand_norms[j] = checked_norm(candidates.row(j), "candidate", j);
    }
    Matrix out(queries.rows(), candidates.rows());
    const auto& k = kernels::active();
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        const double qn = checked_norm(queries.row(i), "query", i);
        double* row = out.row(i).data();
        k.dot_rows(queries.row(i).data(), candidates.data(), candidates.rows(), dim, row);
        for (std::size_t j = 0; j < candidates.rows(); ++j) {
            row[j] = clamp_unit(row[j] / (qn * cand_norms[j]));
        }
    }
    return out;
}

Matrix similarity_matrix(std::span<const Embedding> queries, std::span<const Embedding> candidates) {
    Matrix q;
    Matrix c;
    for (const auto& e : queries) {
        q.append_row(e.values());
    }
    for (const auto& e : candidates) {
        c.append_row(e.values());
    }
    if (queries.empty() || candidates.empty()) {
        // Dimension checks still apply across the nonempty side.
        Matrix out(queries.size(), candidates.size());
        for (std::size_t j = 0; j < c.rows(); ++j) {
            checked_norm(c.row(j), "candidate", j);
        }
        for (std::size_t i = 0; i < q.rows(); ++i) {
            checked_norm(q.row(i), "query", i);
        }
        return out;
    }
    return similarity_matrix(q, c);
}

void accumulate_cosine_grad(std::span<const double> a, std::span<const double> b, double scale,
                            std::span<double> out) {
    const double na = checked_norm(a, "first", 0);
    const double nb = checked_norm(b, "second", 0);
    const double s = kernels::dot(a, b) / (na * nb);
    const double cb = scale / (na * nb);
    const double ca = -scale * s / (na * na);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += cb * b[i] + ca * a[i];
    }
}

} // namespace fne
