#include "fne/model.hpp"

#include "fne/error.hpp"
#include "fne/kernels.hpp"

#include <cmath>
#include <string>

namespace fne {

Encoder::Encoder(std::size_t input_dim, std::size_t output_dim, std::size_t hidden_dim)
    : input_dim_(input_dim), output_dim_(output_dim), hidden_dim_(hidden_dim) {
    if (input_dim == 0 || output_dim == 0) {
        throw Error(Errc::invalid_argument, "encoder dimensions must be positive");
    }
    if (hidden_dim == 0) {
        params_.assign(output_dim * input_dim + output_dim, 0.0);
    } else {
        params_.assign(hidden_dim * input_dim + hidden_dim + output_dim * hidden_dim + output_dim, 0.0);
    }
}

Encoder Encoder::random(std::size_t input_dim, std::size_t output_dim, std::size_t hidden_dim,
                        Rng& rng) {
    Encoder enc(input_dim, output_dim, hidden_dim);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto fill = [&](std::size_t offset, std::size_t out, std::size_t in) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        for (std::size_t i = 0; i < out * in; ++i) {
            enc.params_[offset + i] = normal(rng) * scale;
        }
    };
    if (hidden_dim == 0) {
        fill(0, output_dim, input_dim);
    } else {
        fill(0, hidden_dim, input_dim);
        fill(hidden_dim * input_dim + hidden_dim, output_dim, hidden_dim);
    }
    return enc;
}

Encoder Encoder::linear(const Matrix& weight, std::span<const double> bias) {
    if (bias.size() != weight.rows()) {
        throw Error(Errc::dimension_mismatch, "encoder bias length must equal weight rows");
    }
    Encoder enc(weight.cols(), weight.rows(), 0);
    std::copy(weight.flat().begin(), weight.flat().end(), enc.params_.begin());
    std::copy(bias.begin(), bias.end(), enc.params_.begin() + static_cast<std::ptrdiff_t>(weight.flat().size()));
    return enc;
}

void Encoder::affine(std::size_t w_offset, std::size_t in, std::size_t out,
                     std::span<const double> x, std::span<double> y) const {
    const auto& k = kernels::active();
    const double* w = params_.data() + w_offset;
    const double* b = w + out * in;
    k.dot_rows(x.data(), w, out, in, y.data());
    for (std::size_t o = 0; o < out; ++o) {
        y[o] += b[o];
    }
}

void Encoder::affine_backward(std::size_t w_offset, std::size_t in, std::size_t out,
                              std::span<const double> x, std::span<const double> gy,
                              std::span<double> grad_params, std::span<double> gx) const {
    const auto& k = kernels::active();
    double* gw = grad_params.data() + w_offset;
    double* gb = gw + out * in;
    const double* w = params_.data() + w_offset;
    for (std::size_t o = 0; o < out; ++o) {
        if (gy[o] == 0.0) {
            continue;
        }
        k.axpy(gy[o], x.data(), gw + o * in, in);
        gb[o] += gy[o];
        if (!gx.empty()) {
            k.axpy(gy[o], w + o * in, gx.data(), in);
        }
    }
}

Embedding Encoder::encode(std::span<const double> input) const {
    if (input.size() != input_dim_) {
        throw Error(Errc::dimension_mismatch, "encoder expects input of length " +
                                                  std::to_string(input_dim_) + ", got " +
                                                  std::to_string(input.size()));
    }
    Matrix in(1, input_dim_);
    std::copy(input.begin(), input.end(), in.row(0).begin());
    return Embedding(forward(in).row(0));
}

Matrix Encoder::forward(const Matrix& inputs, Cache* cache) const {
    if (inputs.rows() > 0 && inputs.cols() != input_dim_) {
        throw Error(Errc::dimension_mismatch, "encoder expects input of length " +
                                                  std::to_string(input_dim_) + ", got " +
                                                  std::to_string(inputs.cols()));
    }
    Matrix out(inputs.rows(), output_dim_);
    if (hidden_dim_ == 0) {
        for (std::size_t r = 0; r < inputs.rows(); ++r) {
            affine(0, input_dim_, output_dim_, inputs.row(r), out.row(r));
        }
        if (cache != nullptr) {
            cache->input = inputs;
            cache->hidden = Matrix();
        }
        return out;
    }
    Matrix hidden(inputs.rows(), hidden_dim_);
    const std::size_t second = hidden_dim_ * input_dim_ + hidden_dim_;
    for (std::size_t r = 0; r < inputs.rows(); ++r) {
        affine(0, input_dim_, hidden_dim_, inputs.row(r), hidden.row(r));
        for (double& h : hidden.row(r)) {
            h = std::tanh(h);
        }
        affine(second, hidden_dim_, output_dim_, hidden.row(r), out.row(r));
    }
    if (cache != nullptr) {
        cache->input = inputs;
        cache->hidden = std::move(hidden);
    }
    return out;
}

void Encoder::backward(const Cache& cache, const Matrix& grad_outputs,
                       std::span<double> grad_params) const {
    if (grad_params.size() != params_.size()) {
        throw Error(Errc::dimension_mismatch, "gradient buffer does not match encoder parameters");
    }
    if (grad_outputs.rows() != cache.input.rows()) {
        throw Error(Errc::dimension_mismatch, "gradient rows do not match cached forward pass");
    }
    if (hidden_dim_ == 0) {
        for (std::size_t r = 0; r < grad_outputs.rows(); ++r) {
            affine_backward(0, input_dim_, output_dim_, cache.input.row(r), grad_outputs.row(r),
                            grad_params, {});
        }
        return;
    }
    const std::size_t second = hidden_dim_ * input_dim_ + hidden_dim_;
    std::vector<double> grad_hidden(hidden_dim_);
    for (std::size_t r = 0; r < grad_outputs.rows(); ++r) {
        std::fill(grad_hidden.begin(), grad_hidden.end(), 0.0);
        affine_backward(second, hidden_dim_, output_dim_, cache.hidden.row(r), grad_outputs.row(r),
                        grad_params, grad_hidden);
        auto h = cache.hidden.row(r);
        for (std::size_t j = 0; j < hidden_dim_; ++j) {
            grad_hidden[j] *= 1.0 - h[j] * h[j];
        }
        affine_backward(0, input_dim_, hidden_dim_, cache.input.row(r), grad_hidden, grad_params, {});
    }
}

Embedding encode(const Encoder& encoder, std::span<const double> input) {
    return encoder.encode(input);
}

double triplet_loss_fne(double s_pos, double s_neg_text, double s_neg_image, double margin) {
    return std::max(0.0, margin - s_pos + s_neg_text) + std::max(0.0, margin - s_pos + s_neg_image);
}

LossOutput loss_backward(std::span<const double> anchor_image, std::span<const double> positive_text,
                         std::span<const double> neg_text, std::span<const double> neg_image,
                         double margin, bool neg_text_constant, bool neg_image_constant) {
    const std::size_t d = anchor_image.size();
    if (positive_text.size() != d || neg_text.size() != d || neg_image.size() != d) {
        throw Error(Errc::dimension_mismatch, "loss_backward: embeddings differ in dimension");
    }
    const double s_pos = cosine_similarity(anchor_image, positive_text);
    const double s_nt = cosine_similarity(anchor_image, neg_text);
    const double s_ni = cosine_similarity(neg_image, positive_text);
    const double hinge_text = margin - s_pos + s_nt;
    const double hinge_image = margin - s_pos + s_ni;

    LossOutput out;
    out.grad_anchor_image.assign(d, 0.0);
    out.grad_positive_text.assign(d, 0.0);
    const bool text_active = hinge_text > 0.0;
    const bool image_active = hinge_image > 0.0;
    out.loss = (text_active ? hinge_text : 0.0) + (image_active ? hinge_image : 0.0);

    const double pos_scale = -(static_cast<double>(text_active) + static_cast<double>(image_active));
    if (pos_scale != 0.0) {
        accumulate_cosine_grad(anchor_image, positive_text, pos_scale, out.grad_anchor_image);
        accumulate_cosine_grad(positive_text, anchor_image, pos_scale, out.grad_positive_text);
    }
    if (text_active) {
        accumulate_cosine_grad(anchor_image, neg_text, 1.0, out.grad_anchor_image);
        if (!neg_text_constant) {
            out.grad_neg_text.emplace(d, 0.0);
            accumulate_cosine_grad(neg_text, anchor_image, 1.0, *out.grad_neg_text);
        }
    }
    if (image_active) {
        accumulate_cosine_grad(positive_text, neg_image, 1.0, out.grad_positive_text);
        if (!neg_image_constant) {
            out.grad_neg_image.emplace(d, 0.0);
            accumulate_cosine_grad(neg_image, positive_text, 1.0, *out.grad_neg_image);
        }
    }
    return out;
}

} // namespace fne
