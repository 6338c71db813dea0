#include <catch2/catch.hpp>

#include "landver/network_io.hpp"
#include "landver/relu_network.hpp"

#include "support/oracles.hpp"
#include "support/test_rng.hpp"

using namespace landver;

namespace {

LayeredReluNetwork identity_net(Eigen::Index n) {
    LayeredReluNetwork net;
    net.input_dim = n;
    net.output_dim = n;
    net.layers.push_back(identity_layer(n));
    net.validate();
    return net;
}

LayeredReluNetwork random_net(testsupport::Rng& rng, std::vector<Eigen::Index> widths,
                              bool zero_bias = false, Activation last = Activation::Identity) {
    LayeredReluNetwork net;
    net.input_dim = widths.front();
    net.output_dim = widths.back();
    for (std::size_t k = 1; k < widths.size(); ++k) {
        Mat w(widths[k], widths[k - 1]);
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-1.5, 1.5);
        Vec b = Vec::Zero(widths[k]);
        if (!zero_bias)
            for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-0.5, 0.5);
        const Activation act = k + 1 == widths.size() ? last : Activation::ReLU;
        net.layers.push_back(Layer::dense(w, b, act));
    }
    net.validate();
    return net;
}

Vec random_vec(testsupport::Rng& rng, Eigen::Index n, double lo = -3.0, double hi = 3.0) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
    return v;
}

} // namespace

TEST_CASE("evaluate identity net") {
    auto net = identity_net(2);
    Vec x(2);
    x << 3, -2;
    Vec y = evaluate(net, x);
    CHECK(y(0) == 3.0);
    CHECK(y(1) == -2.0);
}

TEST_CASE("evaluate single relu layer clamps") {
    LayeredReluNetwork net;
    net.input_dim = 1;
    net.output_dim = 1;
    net.layers.push_back(Layer::dense(Mat::Identity(1, 1), Vec::Zero(1), Activation::ReLU));
    net.validate();
    Vec x(1);
    x << -5;
    CHECK(evaluate(net, x)(0) == 0.0);
}

TEST_CASE("evaluate rejects dimension mismatch") {
    auto net = identity_net(3);
    Vec x(2);
    x << 1, 2;
    CHECK_THROWS_AS(evaluate(net, x), ContractError);
}

TEST_CASE("evaluate matches straight-line interpreter on random nets") {
    testsupport::Rng rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        auto net = random_net(rng, {4, 7, 5, 3});
        Vec x = random_vec(rng, 4);
        Vec y = evaluate(net, x);
        auto ref = testsupport::straightline_eval(net, {x(0), x(1), x(2), x(3)});
        for (Eigen::Index i = 0; i < 3; ++i)
            CHECK(y(i) == Approx(ref[static_cast<std::size_t>(i)]).margin(1e-12));
    }
}

TEST_CASE("compose with identity behaves as the other net") {
    testsupport::Rng rng(7);
    auto net = random_net(rng, {3, 6, 2});
    auto composed = compose(identity_net(3), net);
    CHECK(composed.layers.size() == net.layers.size() + 1);
    for (int trial = 0; trial < 50; ++trial) {
        Vec x = random_vec(rng, 3);
        CHECK((evaluate(composed, x) - evaluate(net, x)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("compose equals pointwise application") {
    testsupport::Rng rng(8);
    auto f = random_net(rng, {5, 8, 4});
    auto s = random_net(rng, {4, 6, 2});
    auto fs = compose(f, s);
    CHECK(fs.layers.size() == f.layers.size() + s.layers.size());
    for (int trial = 0; trial < 1000; ++trial) {
        Vec x = random_vec(rng, 5);
        Vec expect = evaluate(s, evaluate(f, x));
        Vec got = evaluate(fs, x);
        REQUIRE((got - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("compose of negation with itself is the identity") {
    LayeredReluNetwork neg;
    neg.input_dim = 3;
    neg.output_dim = 3;
    neg.layers.push_back(Layer::dense(-Mat::Identity(3, 3), Vec::Zero(3), Activation::Identity));
    neg.validate();
    auto negneg = compose(neg, neg);
    testsupport::Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        Vec x = random_vec(rng, 3);
        CHECK((evaluate(negneg, x) - x).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("compose rejects dimension mismatch") {
    testsupport::Rng rng(10);
    auto f = random_net(rng, {3, 4});
    auto s = random_net(rng, {5, 2});
    CHECK_THROWS_AS(compose(f, s), ContractError);
}

TEST_CASE("compose is associative in evaluation") {
    testsupport::Rng rng(11);
    auto a = random_net(rng, {3, 5, 4});
    auto b = random_net(rng, {4, 6, 3});
    auto c = random_net(rng, {3, 4, 2});
    auto left = compose(compose(a, b), c);
    auto right = compose(a, compose(b, c));
    for (int trial = 0; trial < 200; ++trial) {
        Vec x = random_vec(rng, 3);
        CHECK((evaluate(left, x) - evaluate(right, x)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("positively scale-covariant through zero-bias relu layers") {
    testsupport::Rng rng(12);
    auto net = random_net(rng, {4, 6, 3}, /*zero_bias=*/true, Activation::ReLU);
    for (int trial = 0; trial < 200; ++trial) {
        Vec x = random_vec(rng, 4);
        const double c = rng.uniform(0.0, 4.0);
        Vec lhs = evaluate(net, Vec(c * x));
        Vec rhs = c * evaluate(net, x);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + rhs.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("stack_parallel of one net equals that net") {
    testsupport::Rng rng(13);
    auto net = random_net(rng, {3, 5, 2});
    auto stacked = stack_parallel({net});
    for (int trial = 0; trial < 20; ++trial) {
        Vec x = random_vec(rng, 3);
        CHECK((evaluate(stacked, x) - evaluate(net, x)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("stack_parallel rejects an empty list") {
    CHECK_THROWS_AS(stack_parallel({}), ContractError);
}

TEST_CASE("stack_parallel concatenates independent evaluations") {
    testsupport::Rng rng(14);
    auto a = random_net(rng, {2, 4, 1});
    auto b = random_net(rng, {3, 5, 2});
    auto stacked = stack_parallel({a, b});
    CHECK(stacked.input_dim == 5);
    CHECK(stacked.output_dim == 3);
    for (int trial = 0; trial < 100; ++trial) {
        Vec xa = random_vec(rng, 2);
        Vec xb = random_vec(rng, 3);
        Vec x(5);
        x << xa, xb;
        Vec y = evaluate(stacked, x);
        Vec ya = evaluate(a, xa);
        Vec yb = evaluate(b, xb);
        CHECK(y(0) == ya(0));
        CHECK(y(1) == yb(0));
        CHECK(y(2) == yb(1));
    }
}

TEST_CASE("validate flags inconsistent chains") {
    LayeredReluNetwork net;
    net.input_dim = 2;
    net.output_dim = 2;
    net.layers.push_back(Layer::dense(Mat::Identity(3, 2), Vec::Zero(3), Activation::ReLU));
    net.layers.push_back(Layer::dense(Mat::Identity(2, 2), Vec::Zero(2), Activation::Identity));
    CHECK_THROWS_AS(net.validate(), ValidationError);
}

TEST_CASE("identity padding preserves behavior and enables stacking") {
    testsupport::Rng rng(15);
    auto shallow = random_net(rng, {2, 3});          // one layer
    auto deep = random_net(rng, {2, 4, 3});          // two layers
    auto padded = padded_to_depth(shallow, deep.layers.size());
    CHECK(padded.layers.size() == deep.layers.size());
    for (int t = 0; t < 50; ++t) {
        Vec x = random_vec(rng, 2);
        CHECK((evaluate(padded, x) - evaluate(shallow, x)).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK_THROWS_AS(padded_to_depth(deep, 1), ContractError);
}

TEST_CASE("stack_parallel handles block-structured layers") {
    // Two structured one-layer nets with offset blocks.
    auto make = [](double scale) {
        LayeredReluNetwork net;
        net.input_dim = 3;
        net.output_dim = 2;
        Mat blk(1, 2);
        blk << scale, -scale;
        std::vector<LayerBlock> blocks{{0, 0, blk}, {1, 1, blk}};
        net.layers.push_back(Layer::structured(2, 3, blocks, Vec::Zero(2), Activation::Identity));
        net.validate();
        return net;
    };
    auto a = make(1.0), b = make(0.5);
    auto stacked = stack_parallel({a, b});
    CHECK_FALSE(stacked.layers[0].is_dense());
    testsupport::Rng rng(16);
    for (int t = 0; t < 100; ++t) {
        Vec x = random_vec(rng, 6);
        Vec ya = evaluate(a, x.segment(0, 3));
        Vec yb = evaluate(b, x.segment(3, 3));
        Vec y = evaluate(stacked, x);
        CHECK(y(0) == ya(0));
        CHECK(y(1) == ya(1));
        CHECK(y(2) == yb(0));
        CHECK(y(3) == yb(1));
    }
}

TEST_CASE("stack_parallel rejects mismatched shapes") {
    testsupport::Rng rng(17);
    auto one_layer = random_net(rng, {2, 2});
    auto two_layer = random_net(rng, {2, 3, 2});
    CHECK_THROWS_AS(stack_parallel({one_layer, two_layer}), ContractError);
    CHECK_NOTHROW(stack_parallel({padded_to_depth(one_layer, 2), two_layer}));
}
