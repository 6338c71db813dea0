#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "landver/errors.hpp"
#include "landver/relu_network.hpp"

// Weight file format (text, line oriented):
//
//   landver-net 1
//   input_dim <n>
//   layers <count>
//   layer <k> <relu|identity> <rows> <cols>
//   storage dense                      | storage blocks <nblocks>
//   w <cols hexfloats>   (rows lines)  | block <row0> <col0> <r> <c>
//   ...                                | w <c hexfloats>  (r lines, per block)
//   b <rows hexfloats>
//
// Weights are row-major within a row line, printed as C hexfloats so that a
// save/load/save round trip is byte identical. NaN and infinity are rejected.

namespace landver {

namespace detail {

inline std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

struct LineReader {
    std::istream& in;
    int line_no = 0;
    std::string line;

    bool next() {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_no, msg); }
};

inline double parse_double_token(const std::string& tok, LineReader& r) {
    const char* s = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0') r.fail("bad numeric token '" + tok + "'");
    if (!std::isfinite(v)) r.fail("non-finite value '" + tok + "' rejected");
    return v;
}

// Wrong token syntax is a parse error; a value count that contradicts the
// declared dimensions is a validation error (the file is readable but
// inconsistent).
inline std::vector<double> parse_value_line(LineReader& r, const char* tag,
                                            Eigen::Index expected) {
    if (!r.next()) throw ParseError(r.line_no + 1, std::string("expected '") + tag + "' line");
    std::istringstream ss(r.line);
    std::string head;
    ss >> head;
    if (head != tag) r.fail(std::string("expected '") + tag + "' line, got '" + head + "'");
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(expected));
    std::string tok;
    while (ss >> tok) vals.push_back(parse_double_token(tok, r));
    if (static_cast<Eigen::Index>(vals.size()) != expected)
        throw ValidationError("line " + std::to_string(r.line_no) + ": '" + tag + "' carries " +
                              std::to_string(vals.size()) + " values, declared dimension wants " +
                              std::to_string(expected));
    return vals;
}

} // namespace detail

inline void save_weights(const LayeredReluNetwork& net, std::ostream& out) {
    net.validate();
    out << "landver-net 1\n";
    out << "input_dim " << net.input_dim << "\n";
    out << "layers " << net.layers.size() << "\n";
    auto write_matrix_rows = [&out](const Mat& w) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            out << "w";
            for (Eigen::Index j = 0; j < w.cols(); ++j)
                out << ' ' << detail::format_double(w(i, j));
            out << "\n";
        }
    };
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        const Layer& l = net.layers[k];
        out << "layer " << k << ' ' << to_string(l.activation()) << ' ' << l.output_dim() << ' '
            << l.input_dim() << "\n";
        if (l.is_dense()) {
            out << "storage dense\n";
            write_matrix_rows(l.dense_weight());
        } else {
            out << "storage blocks " << l.blocks().size() << "\n";
            for (const LayerBlock& b : l.blocks()) {
                out << "block " << b.row0 << ' ' << b.col0 << ' ' << b.weight.rows() << ' '
                    << b.weight.cols() << "\n";
                write_matrix_rows(b.weight);
            }
        }
        out << "b";
        for (Eigen::Index i = 0; i < l.bias().size(); ++i)
            out << ' ' << detail::format_double(l.bias()(i));
        out << "\n";
    }
}

inline void save_weights(const LayeredReluNetwork& net, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "' for writing");
    save_weights(net, f);
    if (!f) throw ValidationError("write to '" + path + "' failed");
}

inline LayeredReluNetwork load_weights(std::istream& in) {
    detail::LineReader r{in, 0, {}};

    auto expect_kv = [&r](const char* key) -> std::vector<std::string> {
        if (!r.next()) throw ParseError(r.line_no + 1, std::string("expected '") + key + "' line");
        std::istringstream ss(r.line);
        std::string head;
        ss >> head;
        if (head != key) r.fail(std::string("expected '") + key + "', got '" + head + "'");
        std::vector<std::string> rest;
        std::string tok;
        while (ss >> tok) rest.push_back(tok);
        return rest;
    };
    auto to_index = [&r](const std::string& tok) -> Eigen::Index {
        try {
            std::size_t pos = 0;
            long long v = std::stoll(tok, &pos);
            if (pos != tok.size() || v < 0) throw std::invalid_argument(tok);
            return static_cast<Eigen::Index>(v);
        } catch (const std::exception&) {
            r.fail("bad integer token '" + tok + "'");
        }
    };

    auto header = expect_kv("landver-net");
    if (header.size() != 1 || header[0] != "1") r.fail("unsupported weight file version");
    auto idim_tok = expect_kv("input_dim");
    if (idim_tok.size() != 1) r.fail("input_dim wants one value");
    const Eigen::Index input_dim = to_index(idim_tok[0]);
    auto layers_tok = expect_kv("layers");
    if (layers_tok.size() != 1) r.fail("layers wants one value");
    const Eigen::Index n_layers = to_index(layers_tok[0]);
    if (n_layers <= 0) r.fail("layer count must be positive");

    auto read_matrix = [&r](Eigen::Index rows, Eigen::Index cols) {
        Mat w(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            auto vals = detail::parse_value_line(r, "w", cols);
            for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = vals[static_cast<std::size_t>(j)];
        }
        return w;
    };

    LayeredReluNetwork net;
    net.input_dim = input_dim;
    for (Eigen::Index k = 0; k < n_layers; ++k) {
        auto lt = expect_kv("layer");
        if (lt.size() != 4) r.fail("layer header wants: index activation rows cols");
        if (to_index(lt[0]) != k) r.fail("layer index out of order");
        Activation act;
        if (lt[1] == "relu")
            act = Activation::ReLU;
        else if (lt[1] == "identity")
            act = Activation::Identity;
        else
            r.fail("unknown activation '" + lt[1] + "'");
        const Eigen::Index rows = to_index(lt[2]);
        const Eigen::Index cols = to_index(lt[3]);
        if (rows <= 0 || cols <= 0) r.fail("layer dimensions must be positive");

        auto st = expect_kv("storage");
        if (st.size() == 1 && st[0] == "dense") {
            Mat w = read_matrix(rows, cols);
            auto bias = detail::parse_value_line(r, "b", rows);
            net.layers.push_back(Layer::dense(
                std::move(w), Eigen::Map<const Vec>(bias.data(), rows), act));
        } else if (st.size() == 2 && st[0] == "blocks") {
            const Eigen::Index n_blocks = to_index(st[1]);
            std::vector<LayerBlock> blocks;
            blocks.reserve(static_cast<std::size_t>(n_blocks));
            for (Eigen::Index bi = 0; bi < n_blocks; ++bi) {
                auto bt = expect_kv("block");
                if (bt.size() != 4) r.fail("block header wants: row0 col0 rows cols");
                LayerBlock b;
                b.row0 = to_index(bt[0]);
                b.col0 = to_index(bt[1]);
                const Eigen::Index br = to_index(bt[2]);
                const Eigen::Index bc = to_index(bt[3]);
                if (br <= 0 || bc <= 0) r.fail("block dimensions must be positive");
                if (b.row0 + br > rows || b.col0 + bc > cols)
                    r.fail("block exceeds layer bounds");
                b.weight = read_matrix(br, bc);
                blocks.push_back(std::move(b));
            }
            auto bias = detail::parse_value_line(r, "b", rows);
            net.layers.push_back(Layer::structured(rows, cols, std::move(blocks),
                                                   Eigen::Map<const Vec>(bias.data(), rows), act));
        } else {
            r.fail("unknown storage kind");
        }
    }
    net.output_dim = net.layers.back().output_dim();
    net.validate(); // dimension-chain consistency beyond per-line shape checks
    return net;
}

inline LayeredReluNetwork load_weights(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "' for reading");
    return load_weights(f);
}

inline std::string weights_to_string(const LayeredReluNetwork& net) {
    std::ostringstream ss;
    save_weights(net, ss);
    return ss.str();
}

} // namespace landver
