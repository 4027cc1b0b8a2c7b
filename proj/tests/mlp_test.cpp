#include <gtest/gtest.h>

#include <cmath>

#include "genlab/nn/mlp.hpp"
#include "test_support.hpp"

namespace genlab {
namespace {

TEST(Mlp, XavierWeightsWithinBoundAndBiasesZero) {
    const auto net = init_mlp<float>({784, 392, 196, 98, 1}, Activation::sigmoid, InitSpec{InitScheme::xavier_uniform, 0.02, 3},
                                     Role::discriminator);
    ASSERT_EQ(net.layers.size(), 4u);
    for (const auto& l : net.layers) {
        const double bound = xavier_bound(l.in(), l.out());
        for (float w : l.weight.data()) EXPECT_LE(std::abs(w), bound);
        for (float b : l.bias.data()) EXPECT_EQ(b, 0.0f);
    }
    EXPECT_EQ(net.layers[0].activation, Activation::relu);
    EXPECT_EQ(net.layers[3].activation, Activation::sigmoid);
    EXPECT_EQ(net.dims(), (std::vector<std::size_t>{784, 392, 196, 98, 1}));
}

TEST(Mlp, NormalInitHasRequestedSpread) {
    const auto net = init_mlp<double>({200, 200}, Activation::identity, InitSpec{InitScheme::normal, 0.02, 4}, Role::generator);
    double sq = 0;
    for (double w : net.layers[0].weight.data()) sq += w * w;
    EXPECT_NEAR(std::sqrt(sq / 40000.0), 0.02, 0.001);
}

TEST(Mlp, InitIsDeterministicPerSeedAndRole) {
    const InitSpec spec{InitScheme::xavier_uniform, 0.02, 9};
    const auto a = init_mlp<float>({10, 5, 2}, Activation::identity, spec, Role::generator);
    const auto b = init_mlp<float>({10, 5, 2}, Activation::identity, spec, Role::generator);
    const auto c = init_mlp<float>({10, 5, 2}, Activation::identity, spec, Role::encoder);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
}

TEST(Mlp, InvalidConfigRejected) {
    const InitSpec spec{};
    EXPECT_THROW(init_mlp<float>({10}, Activation::identity, spec, Role::generator), ConfigError);
    EXPECT_THROW(init_mlp<float>({10, 0, 2}, Activation::identity, spec, Role::generator), ConfigError);
    EXPECT_THROW(init_mlp<float>({10, 5, 2}, std::vector<Activation>{Activation::relu}, spec, Role::generator),
                 ConfigError);
}

TEST(Mlp, ForwardMatchesManualComputation) {
    Mlp<double> net;
    net.layers.push_back({Tensor<double>::matrix({{1, -1}, {2, 0.5}}), Tensor<double>::vector({0.1, -3}), Activation::relu});
    net.layers.push_back({Tensor<double>::matrix({{0.5}, {-2}}), Tensor<double>::vector({0.25}), Activation::sigmoid});
    const auto x = Tensor<double>::matrix({{1, 1}, {-1, 2}});
    const auto y = infer(net, x);
    auto manual = [](double a, double b) {
        const double h0 = std::max(0.0, a * 1 + b * 2 + 0.1);
        const double h1 = std::max(0.0, a * -1 + b * 0.5 - 3);
        return 1.0 / (1.0 + std::exp(-(0.5 * h0 - 2 * h1 + 0.25)));
    };
    EXPECT_NEAR(y.at(0, 0), manual(1, 1), 1e-12);
    EXPECT_NEAR(y.at(1, 0), manual(-1, 2), 1e-12);
}

TEST(Mlp, WrongInputWidthIsDimensionError) {
    const auto net = init_mlp<float>({100, 98, 784}, Activation::sigmoid, InitSpec{}, Role::generator);
    EXPECT_THROW(infer(net, Tensor<float>(Shape{4, 99})), DimensionError);
}

TEST(Mlp, ClipWeightsBoundsEveryParameter) {
    auto net = init_mlp<float>({20, 10, 1}, Activation::identity, InitSpec{InitScheme::normal, 1.0, 5}, Role::discriminator);
    net.layers[0].bias[0] = 3.0f;
    clip_weights(net, 0.01f);
    EXPECT_LE(max_abs_parameter(net), 0.01f);
    EXPECT_EQ(net.layers[0].bias[0], 0.01f);
    EXPECT_THROW(clip_weights(net, 0.0f), ConfigError);
}

TEST(Mlp, ParameterNamesFollowLayerOrder) {
    const auto net = init_mlp<float>({3, 2, 1}, Activation::identity, InitSpec{}, Role::generator);
    EXPECT_EQ(net.parameter_names(),
              (std::vector<std::string>{"layer0.weight", "layer0.bias", "layer1.weight", "layer1.bias"}));
    EXPECT_EQ(net.parameters().size(), 4u);
}

}  // namespace
}  // namespace genlab
