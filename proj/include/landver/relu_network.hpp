#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "landver/errors.hpp"

namespace landver {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Activation { ReLU, Identity };

inline const char* to_string(Activation a) {
    return a == Activation::ReLU ? "relu" : "identity";
}

// One rectangular sub-matrix of a layer's weight matrix. Everything outside
// the listed blocks is zero; overlapping blocks accumulate.
struct LayerBlock {
    Eigen::Index row0 = 0;
    Eigen::Index col0 = 0;
    Mat weight;
};

// Affine map followed by an elementwise activation. Weights are stored either
// densely or as a list of blocks; the hand-assembled perception networks are
// block-structured and would be enormous as dense matrices.
class Layer {
  public:
    static Layer dense(Mat weight, Vec bias, Activation act) {
        Layer l;
        l.rows_ = weight.rows();
        l.cols_ = weight.cols();
        l.dense_ = std::move(weight);
        l.bias_ = std::move(bias);
        l.act_ = act;
        l.is_dense_ = true;
        return l;
    }

    static Layer structured(Eigen::Index rows, Eigen::Index cols, std::vector<LayerBlock> blocks,
                            Vec bias, Activation act) {
        Layer l;
        l.rows_ = rows;
        l.cols_ = cols;
        l.blocks_ = std::move(blocks);
        l.bias_ = std::move(bias);
        l.act_ = act;
        l.is_dense_ = false;
        return l;
    }

    Eigen::Index input_dim() const { return cols_; }
    Eigen::Index output_dim() const { return rows_; }
    Activation activation() const { return act_; }
    bool is_dense() const { return is_dense_; }
    const Mat& dense_weight() const { return dense_; }
    const std::vector<LayerBlock>& blocks() const { return blocks_; }
    const Vec& bias() const { return bias_; }

    Vec pre_activation(const Vec& x) const {
        Vec y = bias_;
        if (is_dense_) {
            y.noalias() += dense_ * x;
        } else {
            for (const LayerBlock& b : blocks_)
                y.segment(b.row0, b.weight.rows()).noalias() +=
                    b.weight * x.segment(b.col0, b.weight.cols());
        }
        return y;
    }

    Vec apply(const Vec& x) const {
        Vec y = pre_activation(x);
        if (act_ == Activation::ReLU) y = y.cwiseMax(0.0);
        return y;
    }

    // Sound elementwise output bounds for inputs in [lo, hi].
    void apply_interval(const Vec& lo, const Vec& hi, Vec& out_lo, Vec& out_hi) const {
        Vec c = 0.5 * (lo + hi);
        Vec r = 0.5 * (hi - lo);
        Vec yc = bias_;
        Vec yr = Vec::Zero(rows_);
        if (is_dense_) {
            yc.noalias() += dense_ * c;
            yr.noalias() += dense_.cwiseAbs() * r;
        } else {
            for (const LayerBlock& b : blocks_) {
                yc.segment(b.row0, b.weight.rows()).noalias() +=
                    b.weight * c.segment(b.col0, b.weight.cols());
                yr.segment(b.row0, b.weight.rows()).noalias() +=
                    b.weight.cwiseAbs() * r.segment(b.col0, b.weight.cols());
            }
        }
        out_lo = yc - yr;
        out_hi = yc + yr;
        if (act_ == Activation::ReLU) {
            out_lo = out_lo.cwiseMax(0.0);
            out_hi = out_hi.cwiseMax(0.0);
        }
    }

    Mat to_dense() const {
        if (is_dense_) return dense_;
        Mat w = Mat::Zero(rows_, cols_);
        for (const LayerBlock& b : blocks_)
            w.block(b.row0, b.col0, b.weight.rows(), b.weight.cols()) += b.weight;
        return w;
    }

    void check(Eigen::Index expected_inputs) const {
        if (cols_ != expected_inputs)
            throw ValidationError("layer input width " + std::to_string(cols_) +
                                  " does not match preceding width " +
                                  std::to_string(expected_inputs));
        if (bias_.size() != rows_)
            throw ValidationError("bias length " + std::to_string(bias_.size()) +
                                  " does not match layer output width " + std::to_string(rows_));
        if (!bias_.allFinite()) throw ValidationError("non-finite bias entry");
        if (is_dense_) {
            if (dense_.rows() != rows_ || dense_.cols() != cols_)
                throw ValidationError("dense weight shape mismatch");
            if (!dense_.allFinite()) throw ValidationError("non-finite weight entry");
        } else {
            for (const LayerBlock& b : blocks_) {
                if (b.row0 < 0 || b.col0 < 0 || b.row0 + b.weight.rows() > rows_ ||
                    b.col0 + b.weight.cols() > cols_)
                    throw ValidationError("weight block exceeds layer bounds");
                if (!b.weight.allFinite()) throw ValidationError("non-finite weight entry");
            }
        }
    }

  private:
    Eigen::Index rows_ = 0;
    Eigen::Index cols_ = 0;
    bool is_dense_ = true;
    Mat dense_;
    std::vector<LayerBlock> blocks_;
    Vec bias_;
    Activation act_ = Activation::Identity;
};

// Feed-forward network of affine+activation layers. Immutable once built;
// evaluation is pure and safe to call concurrently.
struct LayeredReluNetwork {
    std::vector<Layer> layers;
    Eigen::Index input_dim = 0;
    Eigen::Index output_dim = 0;

    // Dimension-chain validator. Every construction path funnels through this.
    void validate() const {
        if (layers.empty()) throw ValidationError("network has no layers");
        if (input_dim <= 0 || output_dim <= 0)
            throw ValidationError("network dimensions must be positive");
        Eigen::Index width = input_dim;
        for (const Layer& l : layers) {
            l.check(width);
            width = l.output_dim();
        }
        if (width != output_dim)
            throw ValidationError("final layer width " + std::to_string(width) +
                                  " does not match declared output_dim " +
                                  std::to_string(output_dim));
    }

    std::size_t relu_neuron_count() const {
        std::size_t n = 0;
        for (const Layer& l : layers)
            if (l.activation() == Activation::ReLU) n += static_cast<std::size_t>(l.output_dim());
        return n;
    }
};

inline Vec evaluate(const LayeredReluNetwork& net, const Vec& x) {
    if (x.size() != net.input_dim)
        throw ContractError("evaluate: input has dimension " + std::to_string(x.size()) +
                            ", network expects " + std::to_string(net.input_dim));
    Vec v = x;
    for (const Layer& l : net.layers) v = l.apply(v);
    return v;
}

// Pipeline composition: the result feeds `first`'s output into `second`.
// Layers are concatenated verbatim; nothing is fused across the boundary, so
// layer and neuron counts stay the sum of the operands'.
inline LayeredReluNetwork compose(const LayeredReluNetwork& first,
                                  const LayeredReluNetwork& second) {
    if (first.output_dim != second.input_dim)
        throw ContractError("compose: first output dim " + std::to_string(first.output_dim) +
                            " != second input dim " + std::to_string(second.input_dim));
    LayeredReluNetwork out;
    out.input_dim = first.input_dim;
    out.output_dim = second.output_dim;
    out.layers = first.layers;
    out.layers.insert(out.layers.end(), second.layers.begin(), second.layers.end());
    out.validate();
    return out;
}

// Identity layer of the given width.
inline Layer identity_layer(Eigen::Index n) {
    return Layer::dense(Mat::Identity(n, n), Vec::Zero(n), Activation::Identity);
}

// Appends Identity layers until the network has `depth` layers.
inline LayeredReluNetwork padded_to_depth(const LayeredReluNetwork& net, std::size_t depth) {
    if (net.layers.size() > depth)
        throw ContractError("padded_to_depth: network deeper than requested depth");
    LayeredReluNetwork out = net;
    while (out.layers.size() < depth) out.layers.push_back(identity_layer(net.output_dim));
    out.validate();
    return out;
}

// Block-diagonal parallel composition: input vectors are concatenated and each
// component network acts on its own slice. All nets must have equal depth and
// matching activations per layer position (pad with Identity layers first).
inline LayeredReluNetwork stack_parallel(const std::vector<LayeredReluNetwork>& nets) {
    if (nets.empty()) throw ContractError("stack_parallel: empty network list");
    const std::size_t depth = nets.front().layers.size();
    for (const LayeredReluNetwork& n : nets) {
        if (n.layers.size() != depth)
            throw ContractError("stack_parallel: unequal layer counts; pad with Identity layers");
        for (std::size_t k = 0; k < depth; ++k)
            if (n.layers[k].activation() != nets.front().layers[k].activation())
                throw ContractError("stack_parallel: mismatched activation at layer " +
                                    std::to_string(k));
    }
    LayeredReluNetwork out;
    for (std::size_t k = 0; k < depth; ++k) {
        Eigen::Index rows = 0, cols = 0;
        for (const LayeredReluNetwork& n : nets) {
            rows += n.layers[k].output_dim();
            cols += n.layers[k].input_dim();
        }
        std::vector<LayerBlock> blocks;
        Vec bias(rows);
        Eigen::Index r0 = 0, c0 = 0;
        for (const LayeredReluNetwork& n : nets) {
            const Layer& l = n.layers[k];
            if (l.is_dense()) {
                blocks.push_back({r0, c0, l.dense_weight()});
            } else {
                for (const LayerBlock& b : l.blocks())
                    blocks.push_back({r0 + b.row0, c0 + b.col0, b.weight});
            }
            bias.segment(r0, l.output_dim()) = l.bias();
            r0 += l.output_dim();
            c0 += l.input_dim();
        }
        out.layers.push_back(Layer::structured(rows, cols, std::move(blocks), std::move(bias),
                                               nets.front().layers[k].activation()));
    }
    out.input_dim = out.layers.front().input_dim();
    out.output_dim = out.layers.back().output_dim();
    out.validate();
    return out;
}

} // namespace landver
