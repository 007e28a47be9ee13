#include "fne/embedding.hpp"
#include "fne/error.hpp"
#include "fne/model.hpp"
#include "fne/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace fne;

namespace {

std::vector<double> random_vec(std::size_t d, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(d);
    for (auto& x : v) {
        x = dist(rng);
    }
    return v;
}

struct Triplet {
    std::vector<double> a, p, nt, ni;
};

// Central differences of the independent loss oracle.
std::vector<double> fd_grad(Triplet t, std::vector<double> Triplet::*which, double margin, double h) {
    auto& v = t.*which;
    std::vector<double> g(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double saved = v[k];
        v[k] = saved + h;
        const long double up = oracle::triplet_loss(t.a, t.p, t.nt, t.ni, margin);
        v[k] = saved - h;
        const long double dn = oracle::triplet_loss(t.a, t.p, t.nt, t.ni, margin);
        v[k] = saved;
        g[k] = static_cast<double>((up - dn) / (2.0L * h));
    }
    return g;
}

} // namespace

TEST(Encode, Examples) {
    Matrix identity(2, 2);
    identity(0, 0) = identity(1, 1) = 1.0;
    const std::vector<double> zero{0.0, 0.0};
    const std::vector<double> x{0.3, -2.0};
    EXPECT_EQ(encode(Encoder::linear(identity, zero), x), Embedding(x));

    const std::vector<double> b{0.5, 1.5};
    EXPECT_EQ(encode(Encoder::linear(Matrix(2, 2), b), x), Embedding(b));

    Matrix w(2, 2);
    w(0, 0) = 1;
    w(0, 1) = 2;
    w(1, 1) = 1;
    const std::vector<double> bias{1.0, 0.0};
    const std::vector<double> ones{1.0, 1.0};
    EXPECT_EQ(encode(Encoder::linear(w, bias), ones), (Embedding{4.0, 1.0}));
}

TEST(Encode, DimensionMismatch) {
    const Encoder e(3, 2);
    const std::vector<double> x{1.0, 2.0};
    try {
        encode(e, x);
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.code(), Errc::dimension_mismatch);
    }
}

TEST(TripletLoss, Examples) {
    EXPECT_NEAR(triplet_loss_fne(0.8, 0.5, 0.9, 0.2), 0.3, 1e-15);
    EXPECT_EQ(triplet_loss_fne(1.0, -1.0, -1.0, 0.2), 0.0);
    EXPECT_NEAR(triplet_loss_fne(0.4, 0.4, 0.4, 0.2), 0.4, 1e-15);
}

TEST(LossBackward, InactiveHingesGiveZeroGradients) {
    const std::vector<double> a{1, 0, 0}, p{1, 0.01, 0}, nt{-1, 0, 0}, ni{0, 0, -1};
    const auto out = loss_backward(a, p, nt, ni, 0.2);
    EXPECT_EQ(out.loss, 0.0);
    for (double g : out.grad_anchor_image) {
        EXPECT_EQ(g, 0.0);
    }
    for (double g : out.grad_positive_text) {
        EXPECT_EQ(g, 0.0);
    }
    EXPECT_FALSE(out.grad_neg_text.has_value());
    EXPECT_FALSE(out.grad_neg_image.has_value());
}

TEST(LossBackward, HingeAtExactlyZeroIsInactive) {
    // margin 1, s_pos = 1, s_neg_text = 0: the argument is exactly 0.
    const std::vector<double> a{1, 0}, p{2, 0}, nt{0, 1}, ni{-1, 0};
    const auto out = loss_backward(a, p, nt, ni, 1.0);
    EXPECT_EQ(out.loss, 0.0);
    EXPECT_FALSE(out.grad_neg_text.has_value());
}

TEST(LossBackward, ConstantNegativesGetNoGradient) {
    const std::vector<double> a{1, 0.2}, p{0.9, 0.1}, nt{1, 0.3}, ni{0.95, 0.15};
    const auto out = loss_backward(a, p, nt, ni, 0.2, true, true);
    EXPECT_GT(out.loss, 0.0);
    EXPECT_FALSE(out.grad_neg_text.has_value());
    EXPECT_FALSE(out.grad_neg_image.has_value());
}

TEST(LossBackward, ZeroNormRejected) {
    const std::vector<double> a{0, 0}, p{1, 0}, nt{0, 1}, ni{1, 1};
    try {
        loss_backward(a, p, nt, ni, 0.2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::degenerate_input);
    }
}

TEST(LossBackward, MatchesFiniteDifferences) {
    Rng rng(99);
    const double margin = 0.2;
    int active_both = 0, active_one = 0, inactive = 0;
    for (int trial = 0; trial < 100;) {
        Triplet t{random_vec(5, rng), random_vec(5, rng), random_vec(5, rng), random_vec(5, rng)};
        // Pull the positive towards the anchor by a random amount to mix hinge states.
        const double pull = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
        for (std::size_t k = 0; k < 5; ++k) {
            t.p[k] += pull * t.a[k];
        }
        const long double pos = oracle::cosine(t.a, t.p);
        const long double ht = margin - pos + oracle::cosine(t.a, t.nt);
        const long double hi = margin - pos + oracle::cosine(t.ni, t.p);
        if (std::abs(ht) < 1e-3 || std::abs(hi) < 1e-3) {
            continue;  // too close to a kink for differencing
        }
        ++trial;
        (ht > 0 && hi > 0 ? active_both : (ht > 0 || hi > 0 ? active_one : inactive))++;

        const auto out = loss_backward(t.a, t.p, t.nt, t.ni, margin);
        EXPECT_NEAR(out.loss, static_cast<double>(oracle::triplet_loss(t.a, t.p, t.nt, t.ni, margin)), 1e-12);
        const double h = 1e-5;
        EXPECT_LE(oracle::relative_error(out.grad_anchor_image, fd_grad(t, &Triplet::a, margin, h)), 1e-6);
        EXPECT_LE(oracle::relative_error(out.grad_positive_text, fd_grad(t, &Triplet::p, margin, h)), 1e-6);
        const auto fd_nt = fd_grad(t, &Triplet::nt, margin, h);
        const auto fd_ni = fd_grad(t, &Triplet::ni, margin, h);
        EXPECT_EQ(out.grad_neg_text.has_value(), ht > 0);
        EXPECT_EQ(out.grad_neg_image.has_value(), hi > 0);
        EXPECT_LE(oracle::relative_error(out.grad_neg_text.value_or(std::vector<double>(5, 0.0)), fd_nt), 1e-6);
        EXPECT_LE(oracle::relative_error(out.grad_neg_image.value_or(std::vector<double>(5, 0.0)), fd_ni), 1e-6);
    }
    EXPECT_GT(active_both, 0);
    EXPECT_GT(active_one, 0);
    EXPECT_GT(inactive, 0);
}

TEST(LossBackward, SmallStepDecreasesActiveTriplet) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        Triplet t{random_vec(4, rng), random_vec(4, rng), random_vec(4, rng), random_vec(4, rng)};
        const auto out = loss_backward(t.a, t.p, t.nt, t.ni, 0.5);
        if (out.loss <= 1e-3) {
            continue;
        }
        const double step = 1e-4;
        for (std::size_t k = 0; k < 4; ++k) {
            t.a[k] -= step * out.grad_anchor_image[k];
            t.p[k] -= step * out.grad_positive_text[k];
            if (out.grad_neg_text) t.nt[k] -= step * (*out.grad_neg_text)[k];
            if (out.grad_neg_image) t.ni[k] -= step * (*out.grad_neg_image)[k];
        }
        EXPECT_LT(oracle::triplet_loss(t.a, t.p, t.nt, t.ni, 0.5), out.loss);
    }
}

TEST(Encoder, BackwardMatchesFiniteDifferences) {
    Rng rng(3);
    for (std::size_t hidden : {0u, 6u}) {
        Encoder enc = Encoder::random(4, 3, hidden, rng);
        Matrix x(5, 4);
        for (auto& v : x.flat()) {
            v = std::normal_distribution<double>(0.0, 1.0)(rng);
        }
        // Scalar objective: sum of outputs weighted by fixed coefficients.
        Matrix coeff(5, 3);
        for (auto& v : coeff.flat()) {
            v = std::normal_distribution<double>(0.0, 1.0)(rng);
        }
        auto objective = [&](const Encoder& e) {
            const Matrix y = e.forward(x);
            long double s = 0.0L;
            for (std::size_t i = 0; i < y.flat().size(); ++i) {
                s += static_cast<long double>(y.flat()[i]) * coeff.flat()[i];
            }
            return s;
        };
        Encoder::Cache cache;
        enc.forward(x, &cache);
        std::vector<double> grad(enc.parameter_count(), 0.0);
        enc.backward(cache, coeff, grad);

        std::vector<double> fd(enc.parameter_count());
        const double h = 1e-6;
        for (std::size_t k = 0; k < fd.size(); ++k) {
            Encoder up = enc, dn = enc;
            up.parameters()[k] += h;
            dn.parameters()[k] -= h;
            fd[k] = static_cast<double>((objective(up) - objective(dn)) / (2.0L * h));
        }
        EXPECT_LE(oracle::relative_error(grad, fd), 1e-6) << "hidden=" << hidden;
    }
}

TEST(Encoder, ForwardRowsMatchEncode) {
    Rng rng(8);
    const Encoder enc = Encoder::random(6, 4, 3, rng);
    Matrix x(3, 6);
    for (auto& v : x.flat()) {
        v = std::normal_distribution<double>(0.0, 1.0)(rng);
    }
    const Matrix y = enc.forward(x);
    for (std::size_t r = 0; r < 3; ++r) {
        const Embedding e = enc.encode(x.row(r));
        for (std::size_t c = 0; c < 4; ++c) {
            EXPECT_EQ(y(r, c), e[c]);
        }
    }
}
