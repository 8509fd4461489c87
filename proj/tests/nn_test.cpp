#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sdfsim/nn/adam.hpp"
#include "sdfsim/nn/mlp.hpp"
#include "sdfsim/nn/normalizer.hpp"
#include "sdfsim/nn/serialize.hpp"

using namespace sdfsim;
using nn::Activation;
using nn::MlpConfig;

namespace {

// Central-difference gradient oracle over a fixed linear loss L = sum(C .* Y).
// Runs on the double instantiation so h = 1e-4 resolves correctly.
template <typename F>
double max_rel_error_fd(nn::MlpT<double>& mlp, const nn::MlpT<double>::Mat& x,
                        const nn::MlpT<double>::Mat& c, int n_params, Rng& pick, F&& also_check_dx) {
    using Mat = nn::MlpT<double>::Mat;
    nn::MlpT<double>::Tape tape;
    mlp.forward(x, tape);
    auto grads = mlp.make_grads();
    Mat dx;
    mlp.backward(tape, c, grads, &dx);

    std::vector<double*> params;
    std::vector<std::size_t> counts;
    mlp.visit_tensors_mut([&](const std::string&, double* p, std::size_t n) {
        params.push_back(p);
        counts.push_back(n);
    });
    std::vector<double*> gptrs;
    nn::MlpT<double>::visit_grads(grads, [&](double* p, std::size_t) { gptrs.push_back(p); });

    const double h = 1e-4;
    double worst = 0.0;
    for (int k = 0; k < n_params; ++k) {
        std::size_t ti = pick.uniform_index(params.size());
        std::size_t j = pick.uniform_index(counts[ti]);
        double saved = params[ti][j];
        params[ti][j] = saved + h;
        double lp = mlp.forward(x).cwiseProduct(c).sum();
        params[ti][j] = saved - h;
        double lm = mlp.forward(x).cwiseProduct(c).sum();
        params[ti][j] = saved;
        double fd = (lp - lm) / (2.0 * h);
        double an = gptrs[ti][j];
        double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
        worst = std::max(worst, std::abs(fd - an) / denom);
    }
    also_check_dx(x, c, dx);
    return worst;
}

nn::MlpT<double>::Mat random_mat(int r, int cdim, Rng& rng, double scale = 1.0) {
    nn::MlpT<double>::Mat m(r, cdim);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < cdim; ++j) m(i, j) = rng.uniform(-scale, scale);
    return m;
}

}  // namespace

TEST(Mlp, ZeroWeightsOutputBias) {
    Rng rng(1);
    nn::Mlp mlp({4, 3, 8, 2, Activation::Relu, false}, rng);
    for (auto& l : mlp.layers()) l.w.setZero();
    mlp.layers().back().b << 1.0f, -2.0f, 0.5f;
    MatF x = MatF::Random(5, 4);
    MatF y = mlp.forward(x);
    for (int r = 0; r < 5; ++r) {
        EXPECT_FLOAT_EQ(y(r, 0), 1.0f);
        EXPECT_FLOAT_EQ(y(r, 1), -2.0f);
        EXPECT_FLOAT_EQ(y(r, 2), 0.5f);
    }
}

TEST(Mlp, SingleLinearLayerExact) {
    Rng rng(2);
    nn::Mlp mlp({3, 2, 0, 0, Activation::Identity, false}, rng);
    MatF x = MatF::Random(7, 3);
    MatF y = mlp.forward(x);
    MatF expect = x * mlp.layers()[0].w.transpose();
    expect.rowwise() += mlp.layers()[0].b;
    EXPECT_TRUE(y.isApprox(expect));
}

TEST(Mlp, ForwardDeterministic) {
    Rng rng(3);
    nn::Mlp mlp({5, 4, 16, 2, Activation::Elu, true}, rng);
    MatF x = MatF::Random(9, 5);
    MatF y1 = mlp.forward(x);
    MatF y2 = mlp.forward(x);
    EXPECT_TRUE((y1.array() == y2.array()).all());
}

TEST(Mlp, InitDeterministicPerSeed) {
    Rng a(42), b(42), c(43);
    nn::Mlp m1({6, 2, 32, 2, Activation::Relu, true}, a);
    nn::Mlp m2({6, 2, 32, 2, Activation::Relu, true}, b);
    nn::Mlp m3({6, 2, 32, 2, Activation::Relu, true}, c);
    EXPECT_TRUE((m1.layers()[0].w.array() == m2.layers()[0].w.array()).all());
    EXPECT_FALSE((m1.layers()[0].w.array() == m3.layers()[0].w.array()).all());
}

TEST(Mlp, LinearLayerGradientAnalytic) {
    Rng rng(4);
    nn::MlpT<double> mlp({3, 2, 0, 0, Activation::Identity, false}, rng);
    auto x = random_mat(6, 3, rng);
    auto dy = random_mat(6, 2, rng);
    nn::MlpT<double>::Tape tape;
    mlp.forward(x, tape);
    auto grads = mlp.make_grads();
    mlp.backward(tape, dy, grads);
    nn::MlpT<double>::Mat expect = dy.transpose() * x;
    EXPECT_TRUE(grads.layers[0].w.isApprox(expect, 1e-12));
    EXPECT_TRUE(grads.layers[0].b.isApprox(dy.colwise().sum(), 1e-12));
}

TEST(Mlp, ZeroUpstreamGradientZeroParamGrads) {
    Rng rng(5);
    nn::Mlp mlp({4, 3, 16, 2, Activation::Relu, true}, rng);
    MatF x = MatF::Random(5, 4);
    nn::Mlp::Tape tape;
    mlp.forward(x, tape);
    auto grads = mlp.make_grads();
    mlp.backward(tape, MatF::Zero(5, 3), grads);
    for (auto& l : grads.layers) {
        EXPECT_EQ(l.w.cwiseAbs().maxCoeff(), 0.0f);
        EXPECT_EQ(l.b.cwiseAbs().maxCoeff(), 0.0f);
    }
}

// Finite-difference check across every architecture configuration the
// pipeline instantiates, including LayerNorm.
TEST(Mlp, GradCheckAllArchitectures) {
    struct Case {
        MlpConfig cfg;
        const char* label;
    };
    std::vector<Case> cases = {
        {{3, 1, 64, 7, Activation::Elu, false}, "sdf field"},
        {{11, 128, 128, 2, Activation::Relu, true}, "surface encoder"},
        {{12, 128, 128, 2, Activation::Relu, true}, "object encoder"},
        {{4, 128, 128, 2, Activation::Relu, true}, "intra edge encoder"},
        {{8, 128, 128, 2, Activation::Relu, true}, "collision edge encoder"},
        {{384, 128, 128, 2, Activation::Relu, true}, "processor update"},
        {{128, 3, 128, 2, Activation::Relu, true}, "decoder"},
    };
    Rng rng(7);
    for (const auto& c : cases) {
        nn::MlpT<double> mlp(c.cfg, rng);
        auto x = random_mat(4, c.cfg.input, rng);
        auto coef = random_mat(4, c.cfg.output, rng);
        double worst = max_rel_error_fd(mlp, x, coef, 60, rng,
                                        [](const auto&, const auto&, const auto&) {});
        EXPECT_LT(worst, 1e-4) << c.label;
    }
}

// Input gradients (the quantity Eq. 1-style projections consume) also match
// finite differences.
TEST(Mlp, GradCheckInputGradient) {
    Rng rng(8);
    nn::MlpT<double> mlp({3, 1, 32, 4, Activation::Elu, false}, rng);
    auto x = random_mat(5, 3, rng, 0.5);
    nn::MlpT<double>::Tape tape;
    mlp.forward(x, tape);
    auto grads = mlp.make_grads();
    nn::MlpT<double>::Mat dx;
    mlp.backward(tape, nn::MlpT<double>::Mat::Ones(5, 1), grads, &dx);
    const double h = 1e-4;
    for (int r = 0; r < x.rows(); ++r) {
        for (int j = 0; j < 3; ++j) {
            auto xp = x, xm = x;
            xp(r, j) += h;
            xm(r, j) -= h;
            double fd = (mlp.forward(xp).col(0).sum() - mlp.forward(xm).col(0).sum()) / (2 * h);
            EXPECT_NEAR(dx(r, j), fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST(Normalizer, ConstantStreamClampsVariance) {
    nn::Normalizer n(2);
    MatF rows(10, 2);
    rows.setConstant(3.5f);
    n.update(rows);
    EXPECT_DOUBLE_EQ(n.variance().minCoeff(), nn::Normalizer::kVarianceFloor);
    MatF applied = n.apply(rows);
    EXPECT_NEAR(applied.cwiseAbs().maxCoeff(), 0.0f, 1e-3f);
}

TEST(Normalizer, MonteCarloStandardNormal) {
    nn::Normalizer n(3);
    Rng rng(123);
    const int N = 100000;
    MatF rows(N, 3);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < 3; ++j) rows(i, j) = float(rng.normal());
    n.update(rows);
    MatF applied = n.apply(rows);
    for (int j = 0; j < 3; ++j) {
        double mean = applied.col(j).cast<double>().mean();
        EXPECT_NEAR(mean, 0.0, 0.02);
        double var = applied.col(j).cast<double>().squaredNorm() / N - mean * mean;
        EXPECT_NEAR(var, 1.0, 1e-3);
    }
}

TEST(Normalizer, RoundTripIdentity) {
    nn::Normalizer n(4);
    Rng rng(9);
    MatF rows(64, 4);
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 4; ++j) rows(i, j) = float(rng.uniform(-5, 5));
    n.update(rows);
    // Full precision round trip.
    MatD xd = rows.cast<double>();
    MatD rt = n.invert(n.apply(xd));
    EXPECT_LT((rt - xd).cwiseAbs().maxCoeff(), 1e-10);
    // Float path stays within float round-off.
    MatF rtf = n.invert(n.apply(rows));
    EXPECT_LT((rtf - rows).cwiseAbs().maxCoeff(), 1e-4f);
}

TEST(Normalizer, ErrorsBeforeUpdate) {
    nn::Normalizer n(2);
    MatF x(1, 2);
    x.setZero();
    EXPECT_THROW(n.invert(x), Error);
    n.update(x);  // one sample is still not enough
    EXPECT_THROW(n.apply(x), Error);
}

TEST(Adam, ZeroGradientsLeaveParamsUnchanged) {
    std::vector<float> p = {1.0f, -2.0f, 3.0f};
    nn::AdamOptimizer opt(nn::LrSchedule::constant(1e-2));
    opt.register_buffer(p.data(), p.size());
    std::vector<float> g = {0, 0, 0};
    ASSERT_TRUE(opt.step({g.data()}));
    EXPECT_FLOAT_EQ(p[0], 1.0f);
    EXPECT_FLOAT_EQ(p[1], -2.0f);
    EXPECT_FLOAT_EQ(p[2], 3.0f);
}

TEST(Adam, QuadraticConverges) {
    float x = 1.0f;
    nn::AdamOptimizer opt(nn::LrSchedule::constant(1e-2));
    opt.register_buffer(&x, 1);
    for (int i = 0; i < 500; ++i) {
        float g = 2.0f * x;
        ASSERT_TRUE(opt.step({&g}));
    }
    EXPECT_LT(std::abs(x), 0.01f);
}

TEST(Adam, LrScheduleEndpoints) {
    nn::LrSchedule s{1e-3, 1e-4, 200000};
    EXPECT_NEAR(s.at(0), 1e-3, 1e-9);
    EXPECT_NEAR(s.at(200000), 1e-4, 1e-9);
    EXPECT_NEAR(s.at(400000), 1e-4, 1e-9);  // clamps past the horizon
    EXPECT_GT(s.at(100000), 1e-4);
    EXPECT_LT(s.at(100000), 1e-3);
}

TEST(Adam, RejectsNonFiniteGradients) {
    std::vector<float> p = {1.0f, 2.0f};
    nn::AdamOptimizer opt(nn::LrSchedule::constant(1e-2));
    opt.register_buffer(p.data(), p.size());
    std::vector<float> g = {std::numeric_limits<float>::quiet_NaN(), 1.0f};
    EXPECT_FALSE(opt.step({g.data()}));
    EXPECT_FLOAT_EQ(p[0], 1.0f);
    EXPECT_FLOAT_EQ(p[1], 2.0f);
    EXPECT_EQ(opt.step_count(), 0);
}

TEST(Serialize, MlpRoundTripBitExact) {
    namespace fs = std::filesystem;
    Rng rng(11);
    nn::Mlp mlp({7, 3, 24, 2, Activation::Relu, true}, rng);
    fs::path path = fs::temp_directory_path() / "sdfsim_mlp_roundtrip.bin";

    nn::TensorBundle b;
    b.meta["mlp"] = nn::mlp_config_json(mlp.config());
    nn::bundle_add_mlp(b, "mlp", mlp);
    b.save(path);

    auto loaded = nn::TensorBundle::load(path);
    nn::Mlp back = nn::bundle_read_mlp(loaded, "mlp", nn::mlp_config_from_json(loaded.meta.at("mlp")));
    for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
        EXPECT_TRUE((mlp.layers()[l].w.array() == back.layers()[l].w.array()).all());
        EXPECT_TRUE((mlp.layers()[l].b.array() == back.layers()[l].b.array()).all());
    }

    // Re-saving the loaded bundle reproduces the file byte for byte.
    fs::path path2 = fs::temp_directory_path() / "sdfsim_mlp_roundtrip2.bin";
    nn::TensorBundle b2;
    b2.meta = loaded.meta;
    nn::bundle_add_mlp(b2, "mlp", back);
    b2.save(path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    EXPECT_EQ(s1, s2);
    fs::remove(path);
    fs::remove(path2);
}
