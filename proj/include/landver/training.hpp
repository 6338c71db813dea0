#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "landver/dynamics.hpp"
#include "landver/raster.hpp"
#include "landver/rng.hpp"
#include "landver/scenario.hpp"

namespace landver {

// Scripted teacher: proportional pitch-rate law u = -k1 (theta - theta_ref),
// where theta_ref is the glide angle toward an aim point along the runway
// with a distance floor that flares the reference out near touchdown.
struct TeacherParams {
    double k1 = 2.0;              // 1/s, proportional gain
    double z_touchdown = 2500.0;  // m, aim point along the runway
    double theta_ref_max = 0.6;   // rad, reference clamp
    double flare_distance = 50.0; // m, distance floor near the aim point
    double u_max = 1.5;           // rad/s, command clamp
};

inline double teacher_reference_pitch(const AircraftState& s, const TeacherParams& p) {
    const double dist = std::max(p.z_touchdown - s.z, p.flare_distance);
    const double ref = -std::atan2(std::max(s.y, 0.0), dist);
    return std::clamp(ref, -p.theta_ref_max, p.theta_ref_max);
}

inline double teacher_control(const AircraftState& s, const TeacherParams& p) {
    const double u = -p.k1 * (s.theta - teacher_reference_pitch(s, p));
    return std::clamp(u, -p.u_max, p.u_max);
}

struct TrainParams {
    int hidden_layers = 2;
    int width = 128;
    int epochs = 40;
    int batch = 64;
    double lr = 1e-3;
    int n_traj = 60;
    int steps = 180;
    double init_z_lo = 900.0;
    double init_z_hi = 1100.0;
    double init_ratio_lo = 0.85;
    double init_ratio_hi = 1.05;
    double init_pitch_noise = 0.25; // rad around the reference pitch
    double holdout_fraction = 0.1;  // fraction of trajectories held out
    std::uint64_t seed = 1;
    TeacherParams teacher;

    void validate() const {
        if (hidden_layers < 1 || width < 1) throw ConfigError("bad controller architecture");
        if (epochs < 0 || batch < 1 || !(lr > 0.0)) throw ConfigError("bad training parameters");
        if (n_traj < 1 || steps < 1) throw ConfigError("bad data generation parameters");
        if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
            throw ConfigError("holdout fraction must be in [0, 1)");
    }
};

struct TrainReport {
    std::vector<double> epoch_loss;
    double final_loss = 0.0;
    int samples = 0;
    int holdout_samples = 0;
    double holdout_within_tenth = 0.0; // fraction of |err| <= 0.1 rad/s
};

namespace detail {

struct Dataset {
    Mat inputs;  // q^2 x n, binarized oracle images column-wise
    Vec targets; // teacher controls
};

inline Dataset generate_teacher_dataset(const Scenario& sc, const TrainParams& tp, Rng& rng,
                                        int n_traj) {
    std::vector<Vec> images;
    std::vector<double> controls;
    const int q = sc.camera.q();
    for (int traj = 0; traj < n_traj; ++traj) {
        AircraftState s;
        s.z = rng.uniform(tp.init_z_lo, tp.init_z_hi);
        s.y = s.z * rng.uniform(tp.init_ratio_lo, tp.init_ratio_hi);
        s.x = sc.x_offset;
        AircraftState ref_probe = s;
        ref_probe.theta = 0.0;
        s.theta = teacher_reference_pitch(ref_probe, tp.teacher) +
                  tp.init_pitch_noise * rng.uniform(-1, 1);
        for (int t = 0; t < tp.steps; ++t) {
            if (s.y < 1.0 || !sc.validity.contains(s)) break;
            RenderResult r;
            try {
                r = render_image_oracle(s, sc.runway, sc.camera, sc.lines);
            } catch (const std::runtime_error&) {
                break;
            }
            Vec img(static_cast<Eigen::Index>(q) * q);
            for (Eigen::Index i = 0; i < img.size(); ++i)
                img(i) = r.image.bits[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
            const double u = teacher_control(s, tp.teacher);
            images.push_back(std::move(img));
            controls.push_back(u);
            s = step(s, u, sc.dynamics);
        }
    }
    Dataset ds;
    ds.inputs.resize(static_cast<Eigen::Index>(q) * q,
                     static_cast<Eigen::Index>(images.size()));
    ds.targets.resize(static_cast<Eigen::Index>(controls.size()));
    for (std::size_t c = 0; c < images.size(); ++c) {
        ds.inputs.col(static_cast<Eigen::Index>(c)) = images[c];
        ds.targets(static_cast<Eigen::Index>(c)) = controls[c];
    }
    return ds;
}

struct Mlp {
    std::vector<Mat> w;
    std::vector<Vec> b;

    static Mlp init(Eigen::Index input, int hidden_layers, int width, Rng& rng) {
        Mlp m;
        Eigen::Index fan_in = input;
        for (int l = 0; l < hidden_layers; ++l) {
            Mat wl(width, fan_in);
            const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (Eigen::Index i = 0; i < wl.size(); ++i) wl.data()[i] = scale * rng.normal();
            m.w.push_back(std::move(wl));
            m.b.push_back(Vec::Zero(width));
            fan_in = width;
        }
        Mat wo(1, fan_in);
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (Eigen::Index i = 0; i < wo.size(); ++i) wo.data()[i] = scale * rng.normal();
        m.w.push_back(std::move(wo));
        m.b.push_back(Vec::Zero(1));
        return m;
    }

    // Batched forward; caches post-activations for the backward pass.
    Vec forward(const Mat& x, std::vector<Mat>* cache = nullptr) const {
        Mat a = x;
        if (cache) cache->push_back(a);
        for (std::size_t l = 0; l < w.size(); ++l) {
            Mat z = (w[l] * a).colwise() + b[l];
            if (l + 1 < w.size()) z = z.cwiseMax(0.0);
            a = std::move(z);
            if (cache) cache->push_back(a);
        }
        return a.row(0).transpose();
    }

    LayeredReluNetwork to_network(Eigen::Index input) const {
        LayeredReluNetwork net;
        net.input_dim = input;
        net.output_dim = 1;
        for (std::size_t l = 0; l < w.size(); ++l)
            net.layers.push_back(Layer::dense(
                w[l], b[l], l + 1 < w.size() ? Activation::ReLU : Activation::Identity));
        net.validate();
        return net;
    }
};

} // namespace detail

struct TrainedController {
    LayeredReluNetwork net;
    TrainReport report;
};

// Behavioral cloning of the scripted teacher: mean-squared-error regression
// of the pitch-rate command from the binarized camera image, trained with
// Adam on seeded teacher rollouts. Deterministic for a fixed seed.
inline TrainedController train_controller_bc(const Scenario& sc, const TrainParams& tp) {
    sc.validate();
    tp.validate();
    Rng data_rng = derived_rng(tp.seed, 11);
    Rng init_rng = derived_rng(tp.seed, 13);
    Rng shuffle_rng = derived_rng(tp.seed, 17);

    const int holdout_traj =
        std::min(tp.n_traj - 1, static_cast<int>(std::round(tp.n_traj * tp.holdout_fraction)));
    const int train_traj = tp.n_traj - holdout_traj;
    auto train_set = detail::generate_teacher_dataset(sc, tp, data_rng, train_traj);
    auto hold_set = detail::generate_teacher_dataset(sc, tp, data_rng, holdout_traj);
    if (train_set.targets.size() == 0) throw ConfigError("teacher produced no training data");

    const Eigen::Index input = train_set.inputs.rows();
    auto mlp = detail::Mlp::init(input, tp.hidden_layers, tp.width, init_rng);

    TrainReport report;
    report.samples = static_cast<int>(train_set.targets.size());
    report.holdout_samples = static_cast<int>(hold_set.targets.size());

    const Eigen::Index n = train_set.targets.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    // Adam state.
    std::vector<Mat> mw, vw;
    std::vector<Vec> mb, vb;
    for (const auto& wl : mlp.w) {
        mw.push_back(Mat::Zero(wl.rows(), wl.cols()));
        vw.push_back(Mat::Zero(wl.rows(), wl.cols()));
    }
    for (const auto& bl : mlp.b) {
        mb.push_back(Vec::Zero(bl.size()));
        vb.push_back(Vec::Zero(bl.size()));
    }
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long adam_t = 0;

    for (int epoch = 0; epoch < tp.epochs; ++epoch) {
        // Fisher-Yates with the seeded generator.
        for (Eigen::Index i = n - 1; i > 0; --i) {
            const Eigen::Index j = static_cast<Eigen::Index>(
                shuffle_rng.next_u64() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }
        double epoch_loss = 0.0;
        Eigen::Index seen = 0;
        for (Eigen::Index start = 0; start < n; start += tp.batch) {
            const Eigen::Index bsz = std::min<Eigen::Index>(tp.batch, n - start);
            Mat xb(input, bsz);
            Vec yb(bsz);
            for (Eigen::Index k = 0; k < bsz; ++k) {
                xb.col(k) = train_set.inputs.col(order[static_cast<std::size_t>(start + k)]);
                yb(k) = train_set.targets(order[static_cast<std::size_t>(start + k)]);
            }
            // Forward with caches.
            std::vector<Mat> acts;
            mlp.forward(xb, &acts);
            const Mat& out = acts.back(); // 1 x bsz
            Eigen::RowVectorXd diff = out.row(0) - yb.transpose();
            epoch_loss += 0.5 * diff.squaredNorm();
            seen += bsz;

            // Backward.
            ++adam_t;
            const double corr =
                std::sqrt(1.0 - std::pow(beta2, adam_t)) / (1.0 - std::pow(beta1, adam_t));
            Mat delta = diff / static_cast<double>(bsz); // dL/dout, 1 x bsz
            for (std::size_t l = mlp.w.size(); l-- > 0;) {
                const Mat& a_prev = acts[l];
                Mat gw = delta * a_prev.transpose();
                Vec gb = delta.rowwise().sum();
                Mat delta_prev;
                if (l > 0) {
                    delta_prev = mlp.w[l].transpose() * delta;
                    // ReLU gate on the previous activation.
                    delta_prev =
                        (acts[l].array() > 0.0).template cast<double>() * delta_prev.array();
                }
                mw[l] = beta1 * mw[l] + (1 - beta1) * gw;
                vw[l] = beta2 * vw[l] + (1 - beta2) * gw.cwiseProduct(gw);
                mlp.w[l].array() -=
                    tp.lr * corr * mw[l].array() / (vw[l].array().sqrt() + eps);
                mb[l] = beta1 * mb[l] + (1 - beta1) * gb;
                vb[l] = beta2 * vb[l] + (1 - beta2) * gb.cwiseProduct(gb);
                mlp.b[l].array() -=
                    tp.lr * corr * mb[l].array() / (vb[l].array().sqrt() + eps);
                delta = std::move(delta_prev);
            }
        }
        epoch_loss /= static_cast<double>(seen);
        if (!std::isfinite(epoch_loss))
            throw ValidationError("training diverged at epoch " + std::to_string(epoch) +
                                  " (loss is not finite); lower the learning rate");
        report.epoch_loss.push_back(epoch_loss);
    }

    // Final loss over the training set (also for the zero-epoch case).
    {
        Vec pred = mlp.forward(train_set.inputs);
        report.final_loss =
            0.5 * (pred - train_set.targets).squaredNorm() / static_cast<double>(n);
    }
    if (report.holdout_samples > 0) {
        Vec pred = mlp.forward(hold_set.inputs);
        int within = 0;
        for (Eigen::Index i = 0; i < pred.size(); ++i)
            if (std::abs(pred(i) - hold_set.targets(i)) <= 0.1) ++within;
        report.holdout_within_tenth =
            static_cast<double>(within) / static_cast<double>(pred.size());
    }
    return {mlp.to_network(input), std::move(report)};
}

} // namespace landver
