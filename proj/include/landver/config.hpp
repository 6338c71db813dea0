#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "landver/abstraction.hpp"
#include "landver/bounded.hpp"
#include "landver/partition.hpp"
#include "landver/perception.hpp"
#include "landver/scenario.hpp"
#include "landver/training.hpp"

namespace landver {

enum class ControllerSource { Train, File };
enum class VerifyScope { Reachable, All };

struct SpecConfig {
    SpecKind kind = SpecKind::Invariant;
    int horizon = 20;
    bool sink_is_unsafe = true;
    std::optional<StateBox> unsafe_state_box;      // Invariant
    std::optional<Eigen::Vector3d> target_lower;   // Reach, working coordinates
    std::optional<Eigen::Vector3d> target_upper;
};

struct VerifierConfig {
    int budget = 10000;
    VerifyScope scope = VerifyScope::Reachable;
    int max_regions = 0; // 0: no cap
    bool export_properties = false;
};

struct McConfig {
    int trajectories = 1000;
    int steps = 200;
};

struct PipelineConfig {
    std::uint64_t seed = 1;
    Scenario scenario;
    PerceptionBuildSpec perception;
    PartitionSpec partition_spec;
    std::vector<double> mu_list;
    bool mu_exhaustive = true;
    SpecConfig spec;
    Eigen::Vector3d initial_lower;
    Eigen::Vector3d initial_upper;
    ControllerSource controller_source = ControllerSource::Train;
    std::string controller_path;
    TrainParams training;
    VerifierConfig verifier;
    McConfig mc;
    std::string output_dir = "out";
    nlohmann::json echo; // the parsed document, reproduced in reports
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& path, const std::string& what) {
    throw ConfigError("config field '" + path + "': " + what);
}

inline const nlohmann::json& need(const nlohmann::json& j, const std::string& key,
                                  const std::string& path) {
    if (!j.contains(key)) config_fail(path + key, "missing");
    return j.at(key);
}

inline double need_num(const nlohmann::json& j, const std::string& key, const std::string& path) {
    const auto& v = need(j, key, path);
    if (!v.is_number()) config_fail(path + key, "expected a number");
    return v.get<double>();
}

inline int need_int(const nlohmann::json& j, const std::string& key, const std::string& path) {
    const auto& v = need(j, key, path);
    if (!v.is_number_integer()) config_fail(path + key, "expected an integer");
    return v.get<int>();
}

inline Eigen::Vector3d need_vec3(const nlohmann::json& j, const std::string& key,
                                 const std::string& path) {
    const auto& v = need(j, key, path);
    if (!v.is_array() || v.size() != 3) config_fail(path + key, "expected an array of 3 numbers");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

inline Interval need_interval(const nlohmann::json& j, const std::string& key,
                              const std::string& path) {
    const auto& v = need(j, key, path);
    if (!v.is_array() || v.size() != 2) config_fail(path + key, "expected [lo, hi]");
    const double lo = v[0].get<double>(), hi = v[1].get<double>();
    if (!(lo <= hi)) config_fail(path + key, "bounds out of order");
    return Interval(lo, hi);
}

} // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& j) {
    using detail::config_fail;
    using detail::need;
    using detail::need_int;
    using detail::need_interval;
    using detail::need_num;
    using detail::need_vec3;

    PipelineConfig cfg;
    cfg.echo = j;
    if (need_int(j, "schema_version", "") != 1)
        config_fail("schema_version", "unsupported version (want 1)");
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();

    const auto& sj = need(j, "scenario", "");
    {
        const auto& rj = need(sj, "runway", "scenario.");
        cfg.scenario.runway.Lx = need_num(rj, "Lx", "scenario.runway.");
        cfg.scenario.runway.Lz = need_num(rj, "Lz", "scenario.runway.");
        cfg.scenario.runway.width = need_num(rj, "width", "scenario.runway.");
        cfg.scenario.runway.length = need_num(rj, "length", "scenario.runway.");
        const auto& cj = need(sj, "camera", "scenario.");
        cfg.scenario.camera.f = need_num(cj, "f", "scenario.camera.");
        cfg.scenario.camera.W = need_num(cj, "W", "scenario.camera.");
        cfg.scenario.camera.H = need_num(cj, "H", "scenario.camera.");
        cfg.scenario.camera.WP = need_int(cj, "WP", "scenario.camera.");
        cfg.scenario.camera.HP = need_int(cj, "HP", "scenario.camera.");
        const auto& dj = need(sj, "dynamics", "scenario.");
        cfg.scenario.dynamics.Vg = need_num(dj, "Vg", "scenario.dynamics.");
        cfg.scenario.dynamics.tau = need_num(dj, "tau", "scenario.dynamics.");
        cfg.scenario.x_offset = need_num(sj, "x_offset", "scenario.");
        cfg.scenario.pitch_sign = need_int(sj, "pitch_sign", "scenario.");
        cfg.scenario.lines = need_int(sj, "lines", "scenario.");
        if (sj.contains("validity")) {
            const auto& vj = sj.at("validity");
            cfg.scenario.validity.theta_abs_max =
                need_num(vj, "theta_abs_max", "scenario.validity.");
            cfg.scenario.validity.z_min = need_num(vj, "z_min", "scenario.validity.");
            cfg.scenario.validity.z_max = need_num(vj, "z_max", "scenario.validity.");
            cfg.scenario.validity.y_min = need_num(vj, "y_min", "scenario.validity.");
            cfg.scenario.validity.y_max = need_num(vj, "y_max", "scenario.validity.");
        }
        if (sj.contains("sampling")) {
            const auto& mj = sj.at("sampling");
            cfg.scenario.sampling.z_lo = need_num(mj, "z_lo", "scenario.sampling.");
            cfg.scenario.sampling.z_hi = need_num(mj, "z_hi", "scenario.sampling.");
            cfg.scenario.sampling.ratio_lo = need_num(mj, "ratio_lo", "scenario.sampling.");
            cfg.scenario.sampling.ratio_hi = need_num(mj, "ratio_hi", "scenario.sampling.");
            cfg.scenario.sampling.theta_lo = need_num(mj, "theta_lo", "scenario.sampling.");
            cfg.scenario.sampling.theta_hi = need_num(mj, "theta_hi", "scenario.sampling.");
        }
        cfg.scenario.validate();
    }

    {
        const auto& pj = need(j, "perception", "");
        cfg.perception.q = cfg.scenario.camera.q();
        cfg.perception.lines = cfg.scenario.lines;
        cfg.perception.sharpness = need_num(pj, "sharpness", "perception.");
        cfg.perception.degeneracy_margin = need_num(pj, "degeneracy_margin", "perception.");
        cfg.perception.validate();
    }

    {
        const auto& pj = need(j, "partition", "");
        cfg.partition_spec.lower = need_vec3(pj, "lower", "partition.");
        cfg.partition_spec.upper = need_vec3(pj, "upper", "partition.");
        const auto& cj = need(pj, "cells", "partition.");
        if (!cj.is_array() || cj.size() != 3) config_fail("partition.cells", "expected 3 ints");
        cfg.partition_spec.cells = {cj[0].get<int>(), cj[1].get<int>(), cj[2].get<int>()};
        cfg.partition_spec.validate();
    }

    {
        const auto& mj = need(j, "mu_list", "");
        if (!mj.is_array() || mj.empty()) config_fail("mu_list", "expected a non-empty array");
        for (const auto& v : mj) cfg.mu_list.push_back(v.get<double>());
        if (!std::is_sorted(cfg.mu_list.begin(), cfg.mu_list.end()))
            config_fail("mu_list", "must be ascending");
        if (j.contains("mu_exhaustive")) cfg.mu_exhaustive = j.at("mu_exhaustive").get<bool>();
    }

    {
        const auto& pj = need(j, "spec", "");
        const std::string kind = need(pj, "kind", "spec.").get<std::string>();
        if (kind == "invariant")
            cfg.spec.kind = SpecKind::Invariant;
        else if (kind == "reach")
            cfg.spec.kind = SpecKind::Reach;
        else
            config_fail("spec.kind", "expected 'invariant' or 'reach'");
        cfg.spec.horizon = need_int(pj, "horizon", "spec.");
        if (cfg.spec.horizon < 0) config_fail("spec.horizon", "must be >= 0");
        cfg.spec.sink_is_unsafe = need(pj, "sink_is_unsafe", "spec.").get<bool>();
        if (cfg.spec.kind == SpecKind::Invariant) {
            const auto& uj = need(pj, "unsafe_state_box", "spec.");
            if (!uj.is_null()) {
                StateBox box{need_interval(uj, "z", "spec.unsafe_state_box."),
                             need_interval(uj, "y", "spec.unsafe_state_box."),
                             need_interval(uj, "theta", "spec.unsafe_state_box.")};
                cfg.spec.unsafe_state_box = box;
            }
        } else {
            const auto& tj = need(pj, "target_zeta_box", "spec.");
            cfg.spec.target_lower = need_vec3(tj, "lower", "spec.target_zeta_box.");
            cfg.spec.target_upper = need_vec3(tj, "upper", "spec.target_zeta_box.");
        }
    }

    {
        const auto& ij = need(j, "initial", "");
        cfg.initial_lower = need_vec3(ij, "zeta_lower", "initial.");
        cfg.initial_upper = need_vec3(ij, "zeta_upper", "initial.");
        for (int d = 0; d < 3; ++d)
            if (!(cfg.initial_lower[d] <= cfg.initial_upper[d]))
                config_fail("initial", "bounds out of order");
    }

    {
        const auto& cj = need(j, "controller", "");
        const std::string src = need(cj, "source", "controller.").get<std::string>();
        if (src == "train")
            cfg.controller_source = ControllerSource::Train;
        else if (src == "file")
            cfg.controller_source = ControllerSource::File;
        else
            config_fail("controller.source", "expected 'train' or 'file'");
        if (cfg.controller_source == ControllerSource::File)
            cfg.controller_path = need(cj, "path", "controller.").get<std::string>();
        if (cj.contains("training")) {
            const auto& tj = cj.at("training");
            auto opt_num = [&](const char* key, double& slot) {
                if (tj.contains(key)) slot = tj.at(key).get<double>();
            };
            auto opt_int = [&](const char* key, int& slot) {
                if (tj.contains(key)) slot = tj.at(key).get<int>();
            };
            opt_int("hidden_layers", cfg.training.hidden_layers);
            opt_int("width", cfg.training.width);
            opt_int("epochs", cfg.training.epochs);
            opt_int("batch", cfg.training.batch);
            opt_num("lr", cfg.training.lr);
            opt_int("n_traj", cfg.training.n_traj);
            opt_int("steps", cfg.training.steps);
            opt_num("init_z_lo", cfg.training.init_z_lo);
            opt_num("init_z_hi", cfg.training.init_z_hi);
            opt_num("init_ratio_lo", cfg.training.init_ratio_lo);
            opt_num("init_ratio_hi", cfg.training.init_ratio_hi);
            opt_num("init_pitch_noise", cfg.training.init_pitch_noise);
            opt_num("holdout_fraction", cfg.training.holdout_fraction);
            if (tj.contains("teacher")) {
                const auto& kj = tj.at("teacher");
                auto topt = [&](const char* key, double& slot) {
                    if (kj.contains(key)) slot = kj.at(key).get<double>();
                };
                topt("k1", cfg.training.teacher.k1);
                topt("z_touchdown", cfg.training.teacher.z_touchdown);
                topt("theta_ref_max", cfg.training.teacher.theta_ref_max);
                topt("flare_distance", cfg.training.teacher.flare_distance);
                topt("u_max", cfg.training.teacher.u_max);
            }
        }
        cfg.training.seed = cfg.seed;
        cfg.training.validate();
    }

    if (j.contains("verifier")) {
        const auto& vj = j.at("verifier");
        if (vj.contains("budget")) cfg.verifier.budget = vj.at("budget").get<int>();
        if (vj.contains("scope")) {
            const std::string s = vj.at("scope").get<std::string>();
            if (s == "reachable")
                cfg.verifier.scope = VerifyScope::Reachable;
            else if (s == "all")
                cfg.verifier.scope = VerifyScope::All;
            else
                config_fail("verifier.scope", "expected 'reachable' or 'all'");
        }
        if (vj.contains("max_regions")) cfg.verifier.max_regions = vj.at("max_regions").get<int>();
        if (vj.contains("export_properties"))
            cfg.verifier.export_properties = vj.at("export_properties").get<bool>();
        if (cfg.verifier.budget <= 0) config_fail("verifier.budget", "must be positive");
    }

    if (j.contains("mc")) {
        cfg.mc.trajectories = j.at("mc").value("trajectories", 1000);
        cfg.mc.steps = j.at("mc").value("steps", 200);
    }
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    return cfg;
}

// Loads and validates a config file. Relative controller paths resolve
// against the config file's own directory.
inline PipelineConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    PipelineConfig cfg = parse_config(j);
    if (!cfg.controller_path.empty()) {
        std::filesystem::path p(cfg.controller_path);
        if (p.is_relative())
            cfg.controller_path =
                (std::filesystem::path(path).parent_path() / p).lexically_normal().string();
    }
    return cfg;
}

} // namespace landver
