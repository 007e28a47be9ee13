#pragma once

// Toy bi-encoder pieces: a dense encoder per view and the two-direction
// triplet loss with analytic gradients.

#include "fne/embedding.hpp"
#include "fne/matrix.hpp"
#include "fne/rng.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace fne {

// out = W x + b, or W2 tanh(W1 x + b1) + b2 when hidden_dim > 0.
// All parameters live in one flat vector: [W1, b1, (W2, b2)], row-major.
class Encoder {
public:
    Encoder(std::size_t input_dim, std::size_t output_dim, std::size_t hidden_dim = 0);

    // Weight ~ N(0, 1/fan_in), zero bias.
    static Encoder random(std::size_t input_dim, std::size_t output_dim, std::size_t hidden_dim,
                          Rng& rng);
    // Linear encoder from an explicit d_out x d_in weight and bias.
    static Encoder linear(const Matrix& weight, std::span<const double> bias);

    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t output_dim() const noexcept { return output_dim_; }
    std::size_t hidden_dim() const noexcept { return hidden_dim_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }

    Embedding encode(std::span<const double> input) const;

    struct Cache {
        Matrix input;
        Matrix hidden;  // tanh activations, empty for linear encoders
    };

    // One row per item.
    Matrix forward(const Matrix& inputs, Cache* cache = nullptr) const;
    // grad_params += d(loss)/d(params) given d(loss)/d(outputs).
    void backward(const Cache& cache, const Matrix& grad_outputs, std::span<double> grad_params) const;

    friend bool operator==(const Encoder&, const Encoder&) = default;

private:
    void affine(std::size_t w_offset, std::size_t in, std::size_t out, std::span<const double> x,
                std::span<double> y) const;
    void affine_backward(std::size_t w_offset, std::size_t in, std::size_t out,
                         std::span<const double> x, std::span<const double> gy,
                         std::span<double> grad_params, std::span<double> gx) const;

    std::size_t input_dim_;
    std::size_t output_dim_;
    std::size_t hidden_dim_;
    std::vector<double> params_;
};

Embedding encode(const Encoder& encoder, std::span<const double> input);

// [margin - s_pos + s_neg_text]+ + [margin - s_pos + s_neg_image]+
double triplet_loss_fne(double s_pos, double s_neg_text, double s_neg_image, double margin);

struct LossOutput {
    double loss = 0.0;
    std::vector<double> grad_anchor_image;
    std::vector<double> grad_positive_text;
    std::optional<std::vector<double>> grad_neg_text;
    std::optional<std::vector<double>> grad_neg_image;
};

// A negative flagged constant (bank-sourced) never receives a gradient. A hinge
// whose argument is exactly zero counts as inactive.
LossOutput loss_backward(std::span<const double> anchor_image, std::span<const double> positive_text,
                         std::span<const double> neg_text, std::span<const double> neg_image,
                         double margin, bool neg_text_constant = false,
                         bool neg_image_constant = false);

} // namespace fne
