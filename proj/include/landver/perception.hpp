#pragma once

#include <string>
#include <vector>

#include "landver/geometry.hpp"
#include "landver/pixel_tests.hpp"
#include "landver/relu_network.hpp"

// Compiles the rasterization rule into ReLU weights. Per pixel and per
// projected line the gadget spends exactly 68 ReLU neurons:
//
//   layer 1: 48 = 4 edges x 6 absolute values (each |t| = ReLU(t)+ReLU(-t))
//            of O1+O2, O1, O2, O3+O4, O3, O4
//   layer 2: 12 = 4 edges x {|m1-m2| pair, carry of -(m1+m2)} giving the edge
//            score max(m1,m2), where m(a,b) = |a+b|-|a|-|b|
//   layer 3:  6 = two min gadgets over edge-score pairs
//   layer 4:  2 = final min, using min(f1,f2) = f1 - ReLU(f1-f2) and the
//            carry ReLU(-f1) (both operands are nonpositive)
//
// The carries lean on the scores being nonpositive, which holds because
// m(a,b) <= 0 always. A pixel's score v is negative exactly when the
// projected segment properly crosses one of its edges, matching the
// rasterization oracle's convention bit for bit.

namespace landver {

struct PerceptionBuildSpec {
    int q = 16;                 // image side, pixels
    int lines = 2;              // projected runway lines (1 or 2)
    double sharpness = 1e3;     // binarization slope k
    double degeneracy_margin = 1e-9; // |v| below this counts as degenerate

    void validate() const {
        if (q < 2) throw ConfigError("perception q must be >= 2");
        if (lines != 1 && lines != 2) throw ConfigError("perception lines must be 1 or 2");
        if (!(sharpness > 0.0)) throw ConfigError("binarization sharpness must be positive");
        if (degeneracy_margin < 0.0) throw ConfigError("degeneracy margin must be >= 0");
    }
};

struct StageCount {
    std::string name;
    std::size_t relu_neurons = 0;
};

struct PerceptionManifest {
    int q = 0;
    int lines = 0;
    bool binarized = true;
    double sharpness = 0.0;
    std::vector<StageCount> stages;
    std::size_t per_line_gadget_relu = 0; // per line; the assembled budget
    std::size_t total_relu = 0;
};

namespace detail {

// Row-major rows of the four layers of one pixel-line gadget, as dense
// matrices over [that line's 5 zeta inputs].
struct PixelGadgetWeights {
    Mat l1; // 48 x 5
    Vec b1; // 48
    Mat l2; // 12 x 48
    Mat l3; // 6 x 12
    Mat l4; // 2 x 6
};

inline PixelGadgetWeights pixel_gadget_weights(int i, int j) {
    PixelGadgetWeights g;
    g.l1 = Mat::Zero(48, 5);
    g.b1 = Vec::Zero(48);
    g.l2 = Mat::Zero(12, 48);
    g.l3 = Mat::Zero(6, 12);
    g.l4 = Mat::Zero(2, 6);

    const auto edges = pixel_edges(i, j);
    for (int e = 0; e < 4; ++e) {
        const PixelEdge& ed = edges[e];
        const double cross = ed.ax * ed.by - ed.ay * ed.bx;
        // Affine forms of the four orientation values in the zeta inputs.
        Eigen::Matrix<double, 4, 5> O = Eigen::Matrix<double, 4, 5>::Zero();
        Eigen::Vector4d Ob = Eigen::Vector4d::Zero();
        O.row(0) << ed.ay - ed.by, ed.bx - ed.ax, 0, 0, 0;
        Ob[0] = cross;
        O.row(1) << 0, 0, ed.ay - ed.by, ed.bx - ed.ax, 0;
        Ob[1] = cross;
        O.row(2) << -ed.ay, ed.ax, ed.ay, -ed.ax, 1;
        O.row(3) << -ed.by, ed.bx, ed.by, -ed.bx, 1;

        // Six absolute-value pairs per edge: O1+O2, O1, O2, O3+O4, O3, O4.
        Eigen::Matrix<double, 6, 5> forms;
        Eigen::Matrix<double, 6, 1> form_bias;
        forms.row(0) = O.row(0) + O.row(1);
        form_bias[0] = Ob[0] + Ob[1];
        forms.row(1) = O.row(0);
        form_bias[1] = Ob[0];
        forms.row(2) = O.row(1);
        form_bias[2] = Ob[1];
        forms.row(3) = O.row(2) + O.row(3);
        form_bias[3] = Ob[2] + Ob[3];
        forms.row(4) = O.row(2);
        form_bias[4] = Ob[2];
        forms.row(5) = O.row(3);
        form_bias[5] = Ob[3];
        const int r1 = 12 * e;
        for (int t = 0; t < 6; ++t) {
            g.l1.row(r1 + 2 * t) = forms.row(t);
            g.b1[r1 + 2 * t] = form_bias[t];
            g.l1.row(r1 + 2 * t + 1) = -forms.row(t);
            g.b1[r1 + 2 * t + 1] = -form_bias[t];
        }

        // m1, m2 as affine in the edge's 12 abs outputs.
        Eigen::RowVectorXd m1 = Eigen::RowVectorXd::Zero(48);
        Eigen::RowVectorXd m2 = Eigen::RowVectorXd::Zero(48);
        m1.segment(r1, 6) << 1, 1, -1, -1, -1, -1;
        m2.segment(r1 + 6, 6) << 1, 1, -1, -1, -1, -1;
        const int r2 = 3 * e;
        g.l2.row(r2) = m1 - m2;
        g.l2.row(r2 + 1) = m2 - m1;
        g.l2.row(r2 + 2) = -(m1 + m2);
    }

    // Edge score e = max(m1,m2) = (r0 + r1 - carry)/2 over that edge's triple.
    auto edge_score = [](int e) {
        Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(12);
        s.segment(3 * e, 3) << 0.5, 0.5, -0.5;
        return s;
    };
    for (int pair = 0; pair < 2; ++pair) {
        const Eigen::RowVectorXd a = edge_score(2 * pair);
        const Eigen::RowVectorXd b = edge_score(2 * pair + 1);
        g.l3.row(3 * pair) = a - b;
        g.l3.row(3 * pair + 1) = b - a;
        g.l3.row(3 * pair + 2) = -(a + b);
    }

    // f = min over a pair = -(p0 + p1 + p2)/2 over that pair's triple.
    Eigen::RowVectorXd f1 = Eigen::RowVectorXd::Zero(6);
    Eigen::RowVectorXd f2 = Eigen::RowVectorXd::Zero(6);
    f1.segment(0, 3) << -0.5, -0.5, -0.5;
    f2.segment(3, 3) << -0.5, -0.5, -0.5;
    g.l4.row(0) = -f1;      // carry, f1 <= 0
    g.l4.row(1) = f1 - f2;  // v = min(f1,f2) = -(row0 + row1)
    return g;
}

} // namespace detail

// Standalone gadgets for the elementary identities.

inline LayeredReluNetwork build_abs_gadget() {
    LayeredReluNetwork net;
    net.input_dim = 1;
    net.output_dim = 1;
    Mat w(2, 1);
    w << 1, -1;
    net.layers.push_back(Layer::dense(w, Vec::Zero(2), Activation::ReLU));
    Mat out(1, 2);
    out << 1, 1;
    net.layers.push_back(Layer::dense(out, Vec::Zero(1), Activation::Identity));
    net.validate();
    return net;
}

// m(a,b) = |a+b| - |a| - |b|; strictly negative iff a and b strictly disagree
// in sign, zero when they agree or either is zero.
inline LayeredReluNetwork build_sign_mismatch_gadget() {
    LayeredReluNetwork net;
    net.input_dim = 2;
    net.output_dim = 1;
    Mat w(6, 2);
    w << 1, 1, -1, -1, 1, 0, -1, 0, 0, 1, 0, -1;
    net.layers.push_back(Layer::dense(w, Vec::Zero(6), Activation::ReLU));
    Mat out(1, 6);
    out << 1, 1, -1, -1, -1, -1;
    net.layers.push_back(Layer::dense(out, Vec::Zero(1), Activation::Identity));
    net.validate();
    return net;
}

namespace detail {
inline LayeredReluNetwork build_minmax_gadget(bool is_min) {
    LayeredReluNetwork net;
    net.input_dim = 2;
    net.output_dim = 1;
    Mat w(4, 2);
    w << 1, -1, -1, 1, 1, 1, -1, -1; // |a-b| pair then a+b carry pair
    net.layers.push_back(Layer::dense(w, Vec::Zero(4), Activation::ReLU));
    Mat out(1, 4);
    const double s = is_min ? -0.5 : 0.5;
    out << s, s, 0.5, -0.5;
    net.layers.push_back(Layer::dense(out, Vec::Zero(1), Activation::Identity));
    net.validate();
    return net;
}
} // namespace detail

inline LayeredReluNetwork build_min_gadget() { return detail::build_minmax_gadget(true); }
inline LayeredReluNetwork build_max_gadget() { return detail::build_minmax_gadget(false); }

// clamp(-k v, 0, 1) = ReLU(-k v) - ReLU(-k v - 1): 1 for v <= -1/k, 0 for
// v >= 0, nonincreasing in v.
inline LayeredReluNetwork build_binarization_stage(double k) {
    if (!(k > 0.0)) throw ContractError("binarization slope must be positive");
    LayeredReluNetwork net;
    net.input_dim = 1;
    net.output_dim = 1;
    Mat w(2, 1);
    w << -k, -k;
    Vec b(2);
    b << 0, -1;
    net.layers.push_back(Layer::dense(w, b, Activation::ReLU));
    Mat out(1, 2);
    out << 1, -1;
    net.layers.push_back(Layer::dense(out, Vec::Zero(1), Activation::Identity));
    net.validate();
    return net;
}

// 5-input, 1-output network scoring one pixel against one projected line;
// exactly 68 ReLU neurons. Output is negative iff the line segment properly
// crosses one of the pixel's edges.
inline LayeredReluNetwork build_pixel_gadget(int i, int j, int q) {
    if (i < 1 || i > q || j < 1 || j > q)
        throw ContractError("pixel index out of range [1, q]");
    const auto g = detail::pixel_gadget_weights(i, j);
    LayeredReluNetwork net;
    net.input_dim = 5;
    net.output_dim = 1;
    net.layers.push_back(Layer::dense(g.l1, g.b1, Activation::ReLU));
    net.layers.push_back(Layer::dense(g.l2, Vec::Zero(12), Activation::ReLU));
    net.layers.push_back(Layer::dense(g.l3, Vec::Zero(6), Activation::ReLU));
    net.layers.push_back(Layer::dense(g.l4, Vec::Zero(2), Activation::ReLU));
    Mat out(1, 2);
    out << -1, -1;
    net.layers.push_back(Layer::dense(out, Vec::Zero(1), Activation::Identity));
    net.validate();
    return net;
}

struct PerceptionNetwork {
    LayeredReluNetwork net;
    PerceptionManifest manifest;
};

// Assembles the full perception network: per pixel (pixel-major, row-major
// order) one 68-neuron gadget per line, a 3-neuron min combiner when both
// lines are rendered, and optionally the binarization stage. Input is the
// concatenated zeta vector of the rendered lines; output has one entry per
// pixel in image storage order.
inline PerceptionNetwork assemble_perception_network(const PerceptionBuildSpec& spec,
                                                     const CameraIntrinsics& cam,
                                                     bool include_binarization = true) {
    spec.validate();
    cam.validate();
    if (spec.q != cam.q())
        throw ConfigError("perception build q does not match camera pixel count");
    const int q = spec.q;
    const int nl = spec.lines;
    const Eigen::Index P = static_cast<Eigen::Index>(q) * q;
    const Eigen::Index in_dim = 5 * nl;

    std::vector<LayerBlock> bl1, bl2, bl3, bl4;
    Vec bias1 = Vec::Zero(48 * P * nl);
    for (Eigen::Index p = 0; p < P; ++p) {
        const int i = static_cast<int>(p / q) + 1;
        const int j = static_cast<int>(p % q) + 1;
        const auto g = detail::pixel_gadget_weights(i, j);
        for (int l = 0; l < nl; ++l) {
            bl1.push_back({p * 48 * nl + l * 48, 5 * l, g.l1});
            bias1.segment(p * 48 * nl + l * 48, 48) = g.b1;
            bl2.push_back({p * 12 * nl + l * 12, p * 48 * nl + l * 48, g.l2});
            bl3.push_back({p * 6 * nl + l * 6, p * 12 * nl + l * 12, g.l3});
            bl4.push_back({p * 2 * nl + l * 2, p * 6 * nl + l * 6, g.l4});
        }
    }

    LayeredReluNetwork net;
    net.input_dim = in_dim;
    net.layers.push_back(
        Layer::structured(48 * P * nl, in_dim, std::move(bl1), std::move(bias1), Activation::ReLU));
    net.layers.push_back(Layer::structured(12 * P * nl, 48 * P * nl, std::move(bl2),
                                           Vec::Zero(12 * P * nl), Activation::ReLU));
    net.layers.push_back(Layer::structured(6 * P * nl, 12 * P * nl, std::move(bl3),
                                           Vec::Zero(6 * P * nl), Activation::ReLU));
    net.layers.push_back(Layer::structured(2 * P * nl, 6 * P * nl, std::move(bl4),
                                           Vec::Zero(2 * P * nl), Activation::ReLU));

    Eigen::Index score_width; // width of the layer holding per-pixel scores
    Eigen::Index per_pixel;   // entries per pixel in that layer
    if (nl == 2) {
        // min(vL, vR) with v = -(g0 + g1) per line.
        Mat comb(3, 4);
        comb << -1, -1, 1, 1, 1, 1, -1, -1, 1, 1, 1, 1;
        std::vector<LayerBlock> blc;
        for (Eigen::Index p = 0; p < P; ++p) blc.push_back({p * 3, p * 4, comb});
        net.layers.push_back(Layer::structured(3 * P, 4 * P, std::move(blc), Vec::Zero(3 * P),
                                               Activation::ReLU));
        score_width = 3 * P;
        per_pixel = 3;
    } else {
        score_width = 2 * P;
        per_pixel = 2;
    }

    if (include_binarization) {
        const double k = spec.sharpness;
        Mat binw(2, per_pixel);
        if (nl == 2)
            binw << k / 2, k / 2, k / 2, k / 2, k / 2, k / 2; // -k v = k(c0+c1+c2)/2
        else
            binw << k, k, k, k; // -k v = k(g0+g1)
        Vec binb(2);
        binb << 0, -1;
        std::vector<LayerBlock> blb;
        Vec bias_b(2 * P);
        for (Eigen::Index p = 0; p < P; ++p) {
            blb.push_back({p * 2, p * per_pixel, binw});
            bias_b.segment(p * 2, 2) = binb;
        }
        net.layers.push_back(
            Layer::structured(2 * P, score_width, std::move(blb), std::move(bias_b),
                              Activation::ReLU));
        Mat outw(1, 2);
        outw << 1, -1;
        std::vector<LayerBlock> blo;
        for (Eigen::Index p = 0; p < P; ++p) blo.push_back({p, p * 2, outw});
        net.layers.push_back(
            Layer::structured(P, 2 * P, std::move(blo), Vec::Zero(P), Activation::Identity));
    } else {
        Mat outw(1, per_pixel);
        if (nl == 2)
            outw << -0.5, -0.5, -0.5;
        else
            outw << -1, -1;
        std::vector<LayerBlock> blo;
        for (Eigen::Index p = 0; p < P; ++p) blo.push_back({p, p * per_pixel, outw});
        net.layers.push_back(
            Layer::structured(P, score_width, std::move(blo), Vec::Zero(P), Activation::Identity));
    }
    net.output_dim = P;
    net.validate();

    PerceptionManifest man;
    man.q = q;
    man.lines = nl;
    man.binarized = include_binarization;
    man.sharpness = spec.sharpness;
    man.per_line_gadget_relu = static_cast<std::size_t>(68) * P;
    for (int l = 0; l < nl; ++l)
        man.stages.push_back({"line_" + std::string(l == 0 ? "L" : "R") + "_gadgets",
                              static_cast<std::size_t>(68) * P});
    if (nl == 2) man.stages.push_back({"line_combiner", static_cast<std::size_t>(3) * P});
    if (include_binarization)
        man.stages.push_back({"binarization", static_cast<std::size_t>(2) * P});
    man.total_relu = net.relu_neuron_count();

    // The budget must bind exactly: gadget stages hold 68 q^2 per line.
    std::size_t gadget_relu = static_cast<std::size_t>((48 + 12 + 6 + 2) * P * nl);
    if (gadget_relu != man.per_line_gadget_relu * nl)
        throw ValidationError("perception gadget neuron budget violated");
    std::size_t expected_total = gadget_relu + (nl == 2 ? 3 * P : 0) +
                                 (include_binarization ? 2 * P : 0);
    if (man.total_relu != expected_total)
        throw ValidationError("perception total neuron count mismatch");
    return {std::move(net), std::move(man)};
}

// NN composition of perception and controller: controller applied to the
// perception outputs.
inline LayeredReluNetwork build_augmented_network(const LayeredReluNetwork& perception,
                                                  const LayeredReluNetwork& controller) {
    if (perception.output_dim != controller.input_dim)
        throw ContractError("perception output dim " + std::to_string(perception.output_dim) +
                            " != controller input dim " + std::to_string(controller.input_dim));
    return compose(perception, controller);
}

} // namespace landver
