#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "landver/abstraction.hpp"
#include "landver/bounded.hpp"
#include "landver/cnf.hpp"
#include "landver/config.hpp"
#include "landver/network_io.hpp"
#include "landver/perception.hpp"
#include "landver/training.hpp"
#include "landver/verify.hpp"
#include "landver/version.hpp"

namespace landver {

enum class PipelineStatus { Safe, UnsafeEnvelope, Unknown, NoFeasibleMu };

inline const char* to_string(PipelineStatus s) {
    switch (s) {
        case PipelineStatus::Safe: return "SAFE";
        case PipelineStatus::UnsafeEnvelope: return "UNSAFE-ENVELOPE";
        case PipelineStatus::Unknown: return "UNKNOWN";
        default: return "NO-FEASIBLE-MU";
    }
}

inline int exit_code(PipelineStatus s) {
    switch (s) {
        case PipelineStatus::Safe: return 0;
        case PipelineStatus::UnsafeEnvelope: return 2;
        case PipelineStatus::Unknown: return 3;
        default: return 4;
    }
}

struct PipelineReport {
    PipelineStatus status = PipelineStatus::Unknown;
    nlohmann::json document;            // full machine-readable report
    std::vector<RegionReport> regions;  // per-region verdicts at mu_max
    std::optional<double> mu_max;
};

// Resolves the unsafe/target state set of the bounded spec over the grid,
// including the sink when configured unsafe.
inline std::vector<std::uint32_t> resolve_spec_set(const PipelineConfig& cfg, const Fsm& fsm) {
    std::vector<std::uint32_t> set;
    if (cfg.spec.kind == SpecKind::Invariant) {
        if (cfg.spec.unsafe_state_box)
            set = cells_meeting_state_box(cfg.partition_spec, cfg.scenario,
                                          *cfg.spec.unsafe_state_box);
        if (cfg.spec.sink_is_unsafe) set.push_back(fsm.sink());
    } else {
        set = cells_meeting_zeta_box(cfg.partition_spec, *cfg.spec.target_lower,
                                     *cfg.spec.target_upper);
    }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    return set;
}

// Bounded spec of the configured property over a given machine.
inline BoundedSpec bounded_spec_for(const PipelineConfig& cfg, const Fsm& fsm) {
    BoundedSpec bs;
    bs.kind = cfg.spec.kind;
    bs.horizon = cfg.spec.horizon;
    bs.initial = cells_meeting_zeta_box(cfg.partition_spec, cfg.initial_lower, cfg.initial_upper);
    bs.target = resolve_spec_set(cfg, fsm);
    return bs;
}

namespace detail {

struct StageTimer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double take() {
        const auto t1 = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        t0 = t1;
        return ms;
    }
};

inline std::string mu_tag(double mu) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", mu);
    std::string s = buf;
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

// Binarized perception output vs the oracle image on sampled poses: the
// residual between what the controller was trained on and what verification
// composes with.
inline nlohmann::json binarization_discrepancy(const Scenario& sc,
                                               const LayeredReluNetwork& perception_bin,
                                               int samples, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0, sum = 0.0;
    long count = 0;
    for (int t = 0; t < samples; ++t) {
        const AircraftState s = sc.sample_in_domain(rng);
        const auto oracle = render_image_oracle(s, sc.runway, sc.camera, sc.lines);
        const Vec out = evaluate(perception_bin, sc.nn_input(s));
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            const double d =
                std::abs(out(i) - (oracle.image.bits[static_cast<std::size_t>(i)] ? 1.0 : 0.0));
            worst = std::max(worst, d);
            sum += d;
            ++count;
        }
    }
    return {{"samples", samples}, {"max", worst}, {"mean", count ? sum / count : 0.0}};
}

} // namespace detail

// End-to-end run: build or load the controller, compile the perception
// network, compose, sweep the control deviation against the abstraction,
// verify the surviving regions, and cross-check with closed-loop rollouts.
// Every stage's artifacts land in the output directory.
inline PipelineReport run_pipeline(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    cfg.scenario.validate();
    cfg.partition_spec.validate();
    fs::create_directories(cfg.output_dir);
    const auto out_path = [&](const std::string& name) {
        return (fs::path(cfg.output_dir) / name).string();
    };

    nlohmann::json doc;
    doc["schema_version"] = kReportSchema;
    doc["versions"] = {{"landver", kVersion}};
    doc["seed"] = cfg.seed;
    doc["config"] = cfg.echo;
    nlohmann::json timings;
    std::vector<std::string> caveats;
    detail::StageTimer timer;
    const auto wall0 = std::chrono::steady_clock::now();

    // Controller.
    LayeredReluNetwork controller;
    if (cfg.controller_source == ControllerSource::Train) {
        auto trained = train_controller_bc(cfg.scenario, cfg.training);
        controller = std::move(trained.net);
        doc["training"] = {{"samples", trained.report.samples},
                           {"holdout_samples", trained.report.holdout_samples},
                           {"final_loss", trained.report.final_loss},
                           {"holdout_within_tenth", trained.report.holdout_within_tenth},
                           {"epochs", cfg.training.epochs}};
    } else {
        controller = load_weights(cfg.controller_path);
        doc["training"] = nullptr;
    }
    save_weights(controller, out_path("controller.net"));
    timings["train_ms"] = timer.take();

    // Perception network and composition.
    auto built = assemble_perception_network(cfg.perception, cfg.scenario.camera);
    save_weights(built.net, out_path("perception.net"));
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& st : built.manifest.stages)
        stages.push_back({{"name", st.name}, {"relu_neurons", st.relu_neurons}});
    doc["perception"] = {{"q", built.manifest.q},
                         {"lines", built.manifest.lines},
                         {"sharpness", built.manifest.sharpness},
                         {"stages", stages},
                         {"per_line_gadget_relu", built.manifest.per_line_gadget_relu},
                         {"total_relu", built.manifest.total_relu}};
    doc["perception"]["binarization_discrepancy"] = detail::binarization_discrepancy(
        cfg.scenario, built.net, 200, derived_rng(cfg.seed, 31).next_u64());
    {
        std::ofstream mf(out_path("perception_manifest.json"));
        mf << doc["perception"].dump(2) << "\n";
    }
    const LayeredReluNetwork nn_aug = build_augmented_network(built.net, controller);
    save_weights(nn_aug, out_path("nnaug.net"));
    timings["perception_ms"] = timer.take();

    // Abstraction sweep.
    std::vector<FsmBuildResult> machines;
    auto build = [&](double mu) {
        auto r = build_fsm(cfg.partition_spec, cfg.scenario, nn_aug, mu);
        save_fsm(r.fsm, out_path("fsm_mu" + detail::mu_tag(mu) + ".txt"));
        machines.push_back(r);
        return r.fsm;
    };
    const auto initial_cells =
        cells_meeting_zeta_box(cfg.partition_spec, cfg.initial_lower, cfg.initial_upper);
    if (initial_cells.empty())
        throw ConfigError("initial set maps to no cells of the partition");
    auto satisfies = [&](const Fsm& fsm) {
        BoundedSpec bs;
        bs.kind = cfg.spec.kind;
        bs.horizon = cfg.spec.horizon;
        bs.initial = initial_cells;
        bs.target = resolve_spec_set(cfg, fsm);
        return check_bounded(fsm, bs).status == CheckStatus::Holds;
    };
    const auto search = mu_search(cfg.mu_list, build, satisfies, cfg.mu_exhaustive);
    {
        nlohmann::json outcomes = nlohmann::json::array();
        for (const auto& o : search.outcomes)
            outcomes.push_back(
                {{"mu", o.mu}, {"holds", o.holds}, {"transitions", o.transitions}});
        doc["mu_search"] = {{"outcomes", outcomes},
                            {"prefix_ok", search.prefix_ok},
                            {"monotonic", search.monotonic}};
        if (search.mu_max)
            doc["mu_search"]["mu_max"] = *search.mu_max;
        else
            doc["mu_search"]["mu_max"] = nullptr;
    }
    {
        // Grid statistics at the first built machine.
        const auto& m0 = machines.front();
        std::vector<std::uint32_t> unsafe_cells;
        if (cfg.spec.kind == SpecKind::Invariant && cfg.spec.unsafe_state_box)
            unsafe_cells = cells_meeting_state_box(cfg.partition_spec, cfg.scenario,
                                                   *cfg.spec.unsafe_state_box);
        doc["fsm"] = {{"regions", cfg.partition_spec.total()},
                      {"untraversable", m0.untraversable_count},
                      {"initial_cells", initial_cells.size()},
                      {"unsafe_cells", unsafe_cells.size()},
                      {"inflation_at_first_mu", m0.inflation}};
    }
    if (!cfg.spec.sink_is_unsafe)
        caveats.push_back("sink treated as benign: behavior outside the verified chart is not "
                          "covered by the verdict");
    timings["fsm_ms"] = timer.take();

    PipelineReport report;
    report.mu_max = search.mu_max;

    // Region verification at mu_max.
    doc["regions"] = nlohmann::json::array();
    AggregateStatus agg = AggregateStatus::Safe;
    if (search.mu_max) {
        const std::size_t mu_index =
            static_cast<std::size_t>(std::find_if(search.outcomes.begin(), search.outcomes.end(),
                                                  [&](const MuOutcome& o) {
                                                      return o.mu == *search.mu_max;
                                                  }) -
                                     search.outcomes.begin());
        const FsmBuildResult& at_mu = machines.at(mu_index);

        std::vector<int> scope_ids;
        if (cfg.verifier.scope == VerifyScope::Reachable) {
            // Reachable set within the horizon.
            std::vector<int> dist(at_mu.fsm.num_states(), -1);
            std::vector<std::uint32_t> frontier = initial_cells;
            for (auto s : frontier) dist[s] = 0;
            for (int depth = 0; depth < cfg.spec.horizon && !frontier.empty(); ++depth) {
                std::vector<std::uint32_t> next;
                for (auto s : frontier)
                    for (auto d : at_mu.fsm.succ[s])
                        if (dist[d] == -1) {
                            dist[d] = depth + 1;
                            next.push_back(d);
                        }
                frontier = std::move(next);
            }
            for (std::uint32_t s = 0; s < at_mu.fsm.num_regions; ++s)
                if (dist[s] >= 0 && at_mu.traversable[s]) scope_ids.push_back(static_cast<int>(s));
        } else {
            for (int s = 0; s < cfg.partition_spec.total(); ++s)
                if (at_mu.traversable[static_cast<std::size_t>(s)]) scope_ids.push_back(s);
        }
        if (cfg.verifier.max_regions > 0 &&
            scope_ids.size() > static_cast<std::size_t>(cfg.verifier.max_regions)) {
            // Deterministic seeded subsample, reported in ascending order.
            Rng rng = derived_rng(cfg.seed, 23);
            for (std::size_t i = scope_ids.size() - 1; i > 0; --i)
                std::swap(scope_ids[i],
                          scope_ids[rng.next_u64() % static_cast<std::uint64_t>(i + 1)]);
            scope_ids.resize(static_cast<std::size_t>(cfg.verifier.max_regions));
            std::sort(scope_ids.begin(), scope_ids.end());
        }

        auto batch = batch_verify(nn_aug, cfg.partition_spec, scope_ids, cfg.scenario,
                                  *search.mu_max, cfg.verifier.budget, cfg.seed);
        report.regions = batch.reports;
        agg = batch.aggregate;
        for (const auto& r : batch.reports) {
            nlohmann::json rj = {{"id", r.region_id},
                                 {"center", {r.center[0], r.center[1], r.center[2]}},
                                 {"verdict", r.unverifiable ? "UNVERIFIABLE"
                                                            : to_string(r.verdict.status)},
                                 {"splits", r.verdict.splits}};
            if (!r.unverifiable && r.verdict.status == VerdictStatus::Unknown)
                rj["gap"] = r.verdict.bound_gap;
            doc["regions"].push_back(std::move(rj));
        }
        if (cfg.verifier.export_properties) {
            fs::create_directories(out_path("properties"));
            for (int id : scope_ids) {
                try {
                    const InputBox box = region_to_input_box(cfg.partition_spec, id, cfg.scenario);
                    const auto st = cfg.scenario.state_from_triplet(cfg.partition_spec.center(id));
                    if (!st) continue;
                    ControlEnvelope env;
                    env.center = evaluate(nn_aug, cfg.scenario.nn_input(*st));
                    env.radius = *search.mu_max;
                    std::ofstream pf(out_path("properties/region_" + std::to_string(id) + ".txt"));
                    pf << region_property_text(id, box, env);
                } catch (const std::runtime_error&) {
                    // Unverifiable regions carry no exported property.
                }
            }
        }
        report.status = agg == AggregateStatus::Safe          ? PipelineStatus::Safe
                        : agg == AggregateStatus::UnsafeEnvelope ? PipelineStatus::UnsafeEnvelope
                                                                 : PipelineStatus::Unknown;
        if (agg == AggregateStatus::UnsafeEnvelope)
            caveats.push_back("a violated control envelope refutes the abstraction's premise for "
                              "that region, not system-level safety");
    } else {
        report.status = PipelineStatus::NoFeasibleMu;
    }
    timings["verify_ms"] = timer.take();

    // Closed-loop spot check.
    {
        Rng rng = derived_rng(cfg.seed, 37);
        int completed = 0, unsafe_entries = 0, invalid_draws = 0;
        for (int t = 0; t < cfg.mc.trajectories; ++t) {
            Eigen::Vector3d p;
            for (int d = 0; d < 3; ++d) p[d] = rng.uniform(cfg.initial_lower[d],
                                                           cfg.initial_upper[d]);
            const auto st = cfg.scenario.state_from_triplet(p);
            if (!st) {
                ++invalid_draws;
                continue;
            }
            auto traj = simulate_trajectory(*st, nn_aug, cfg.mc.steps, cfg.scenario.runway,
                                            cfg.scenario.camera, cfg.scenario.dynamics,
                                            cfg.scenario.lines, /*keep_images=*/false);
            if (traj.completed) ++completed;
            if (cfg.spec.unsafe_state_box) {
                for (const auto& rec : traj.records) {
                    const auto& b = *cfg.spec.unsafe_state_box;
                    if (b.z.contains(rec.state.z) && b.y.contains(rec.state.y) &&
                        b.theta.contains(rec.state.theta)) {
                        ++unsafe_entries;
                        break;
                    }
                }
            }
        }
        doc["mc"] = {{"trajectories", cfg.mc.trajectories},
                     {"invalid_draws", invalid_draws},
                     {"completed", completed},
                     {"unsafe_entries", unsafe_entries}};
    }
    timings["mc_ms"] = timer.take();

    doc["status"] = to_string(report.status);
    doc["caveats"] = caveats;
    timings["total_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall0)
            .count();
    doc["timings"] = timings;
    report.document = std::move(doc);
    return report;
}

// Writes report.json, the per-region CSV and a human summary. Timing data is
// confined to the "timings" object of the JSON and the millis CSV column so
// reruns compare byte-identically after stripping them.
inline void emit_report(const PipelineReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream f((fs::path(dir) / "report.json").string());
        if (!f) throw ValidationError("cannot write report.json");
        f << report.document.dump(2) << "\n";
    }
    {
        std::ofstream f((fs::path(dir) / "regions.csv").string());
        if (!f) throw ValidationError("cannot write regions.csv");
        f << "region_id,center,verdict,splits,millis\n";
        f.precision(17);
        for (const auto& r : report.regions) {
            f << r.region_id << ',' << r.center[0] << '|' << r.center[1] << '|' << r.center[2]
              << ','
              << (r.unverifiable ? "UNVERIFIABLE" : to_string(r.verdict.status)) << ','
              << r.verdict.splits << ',' << r.verdict.millis << "\n";
        }
    }
    {
        std::ofstream f((fs::path(dir) / "summary.txt").string());
        f << "status: " << to_string(report.status) << "\n";
        if (report.mu_max)
            f << "mu_max: " << *report.mu_max << "\n";
        else
            f << "mu_max: none\n";
        f << "regions verified: " << report.regions.size() << "\n";
        int proved = 0, violated = 0, unknown = 0, unverifiable = 0;
        for (const auto& r : report.regions) {
            if (r.unverifiable)
                ++unverifiable;
            else if (r.verdict.status == VerdictStatus::Proved)
                ++proved;
            else if (r.verdict.status == VerdictStatus::Violated)
                ++violated;
            else
                ++unknown;
        }
        f << "proved: " << proved << ", violated: " << violated << ", unknown: " << unknown
          << ", unverifiable: " << unverifiable << "\n";
    }
}

} // namespace landver
