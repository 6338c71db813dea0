// Command-line surface of the landing-verification toolkit. Every subcommand
// is independently runnable from artifacts cached on disk by earlier stages.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "landver/abstraction.hpp"
#include "landver/bounded.hpp"
#include "landver/cnf.hpp"
#include "landver/config.hpp"
#include "landver/network_io.hpp"
#include "landver/perception.hpp"
#include "landver/pipeline.hpp"
#include "landver/training.hpp"
#include "landver/verify.hpp"
#include "landver/version.hpp"

namespace {

using namespace landver;

AircraftState parse_state(const std::string& text, double x_offset) {
    // Display ordering: z, y, theta.
    double z, y, theta;
    char c1, c2;
    std::istringstream ss(text);
    if (!(ss >> z >> c1 >> y >> c2 >> theta) || c1 != ',' || c2 != ',')
        throw ConfigError("state wants 'z,y,theta'");
    AircraftState s;
    s.z = z;
    s.y = y;
    s.theta = theta;
    s.x = x_offset;
    return s;
}

int cmd_render(const std::string& config_path, const std::string& state_text,
               const std::string& out_path) {
    auto cfg = load_config(config_path);
    const AircraftState s = parse_state(state_text, cfg.scenario.x_offset);
    auto r = render_image_oracle(s, cfg.scenario.runway, cfg.scenario.camera, cfg.scenario.lines);
    if (out_path.empty()) {
        std::cout << r.image.ascii();
    } else {
        std::ofstream f(out_path);
        f << r.image.ascii();
    }
    return 0;
}

int cmd_build_perception(const std::string& config_path, const std::string& out_path,
                         const std::string& manifest_path, bool no_binarization) {
    auto cfg = load_config(config_path);
    auto built =
        assemble_perception_network(cfg.perception, cfg.scenario.camera, !no_binarization);
    save_weights(built.net, out_path);
    nlohmann::json man;
    man["q"] = built.manifest.q;
    man["lines"] = built.manifest.lines;
    man["binarized"] = built.manifest.binarized;
    man["sharpness"] = built.manifest.sharpness;
    man["per_line_gadget_relu"] = built.manifest.per_line_gadget_relu;
    man["total_relu"] = built.manifest.total_relu;
    man["stages"] = nlohmann::json::array();
    for (const auto& st : built.manifest.stages)
        man["stages"].push_back({{"name", st.name}, {"relu_neurons", st.relu_neurons}});
    if (!manifest_path.empty()) {
        std::ofstream f(manifest_path);
        f << man.dump(2) << "\n";
    } else {
        std::cout << man.dump(2) << "\n";
    }
    return 0;
}

int cmd_compose(const std::string& perception_path, const std::string& controller_path,
                const std::string& out_path) {
    auto perception = load_weights(perception_path);
    auto controller = load_weights(controller_path);
    save_weights(build_augmented_network(perception, controller), out_path);
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_path,
              const std::string& report_path) {
    auto cfg = load_config(config_path);
    auto trained = train_controller_bc(cfg.scenario, cfg.training);
    save_weights(trained.net, out_path);
    nlohmann::json rep = {{"samples", trained.report.samples},
                          {"holdout_samples", trained.report.holdout_samples},
                          {"final_loss", trained.report.final_loss},
                          {"holdout_within_tenth", trained.report.holdout_within_tenth},
                          {"epoch_loss", trained.report.epoch_loss}};
    if (!report_path.empty()) {
        std::ofstream f(report_path);
        f << rep.dump(2) << "\n";
    } else {
        std::cout << rep.dump(2) << "\n";
    }
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& net_path,
                 const std::string& state_text, int steps, const std::string& out_path,
                 const std::string& dump_dir) {
    auto cfg = load_config(config_path);
    auto net = load_weights(net_path);
    const AircraftState s0 = parse_state(state_text, cfg.scenario.x_offset);
    const bool keep_images = !dump_dir.empty();
    auto traj = simulate_trajectory(s0, net, steps, cfg.scenario.runway, cfg.scenario.camera,
                                    cfg.scenario.dynamics, cfg.scenario.lines, keep_images);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        out = &file;
    }
    *out << "step,z,y,theta,u\n";
    out->precision(17);
    for (const auto& rec : traj.records)
        *out << rec.step_index << ',' << rec.state.z << ',' << rec.state.y << ','
             << rec.state.theta << ',' << rec.u << "\n";
    if (!traj.completed)
        std::cerr << "trajectory terminated early: " << traj.termination << "\n";
    if (keep_images) {
        std::filesystem::create_directories(dump_dir);
        for (const auto& rec : traj.records) {
            std::ofstream img((std::filesystem::path(dump_dir) /
                               ("step_" + std::to_string(rec.step_index) + ".txt"))
                                  .string());
            img << rec.image.ascii();
        }
    }
    return 0;
}

int cmd_abstract(const std::string& config_path, const std::string& net_path, double mu,
                 const std::string& out_path) {
    auto cfg = load_config(config_path);
    auto net = load_weights(net_path);
    auto built = build_fsm(cfg.partition_spec, cfg.scenario, net, mu);
    save_fsm(built.fsm, out_path);
    std::cout << "regions " << cfg.partition_spec.total() << ", untraversable "
              << built.untraversable_count << ", transitions " << built.fsm.transition_count()
              << ", inflation " << built.inflation << "\n";
    return 0;
}

int cmd_check_fsm(const std::string& config_path, const std::string& fsm_path,
                  const std::string& cnf_path) {
    auto cfg = load_config(config_path);
    auto fsm = load_fsm(fsm_path);
    const BoundedSpec spec = bounded_spec_for(cfg, fsm);
    if (!cnf_path.empty()) {
        std::ofstream f(cnf_path);
        f << export_cnf(fsm, spec);
    }
    auto res = check_bounded(fsm, spec);
    std::cout << (res.status == CheckStatus::Holds ? "HOLDS" : "FAILS") << "\n";
    if (!res.witness.empty()) {
        std::cout << "witness:";
        for (auto s : res.witness) std::cout << ' ' << s;
        std::cout << "\n";
    }
    return res.status == CheckStatus::Holds ? 0 : 2;
}

int cmd_verify_regions(const std::string& config_path, const std::string& net_path, double mu,
                       const std::string& out_path, int budget_override,
                       const std::string& properties_dir) {
    auto cfg = load_config(config_path);
    auto net = load_weights(net_path);
    const int budget = budget_override > 0 ? budget_override : cfg.verifier.budget;
    std::vector<int> ids;
    for (int id = 0; id < cfg.partition_spec.total(); ++id)
        if (cfg.scenario.state_from_triplet(cfg.partition_spec.center(id))) ids.push_back(id);
    if (cfg.verifier.max_regions > 0 &&
        ids.size() > static_cast<std::size_t>(cfg.verifier.max_regions))
        ids.resize(static_cast<std::size_t>(cfg.verifier.max_regions));
    auto batch = batch_verify(net, cfg.partition_spec, ids, cfg.scenario, mu, budget, cfg.seed);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        out = &file;
    }
    *out << "region_id,center,verdict,splits,millis\n";
    out->precision(17);
    for (const auto& r : batch.reports)
        *out << r.region_id << ',' << r.center[0] << '|' << r.center[1] << '|' << r.center[2]
             << ',' << (r.unverifiable ? "UNVERIFIABLE" : to_string(r.verdict.status)) << ','
             << r.verdict.splits << ',' << r.verdict.millis << "\n";
    if (!properties_dir.empty()) {
        std::filesystem::create_directories(properties_dir);
        for (int id : ids) {
            try {
                const auto st = cfg.scenario.state_from_triplet(cfg.partition_spec.center(id));
                if (!st) continue;
                ControlEnvelope env{evaluate(net, cfg.scenario.nn_input(*st)), mu};
                std::ofstream pf((std::filesystem::path(properties_dir) /
                                  ("region_" + std::to_string(id) + ".txt"))
                                     .string());
                pf << region_property_text(
                    id, region_to_input_box(cfg.partition_spec, id, cfg.scenario), env);
            } catch (const std::runtime_error&) {
            }
        }
    }
    std::cerr << "aggregate: " << to_string(batch.aggregate) << "\n";
    return 0;
}

int cmd_pipeline(const std::string& config_path, const std::string& outdir_override) {
    auto cfg = load_config(config_path);
    if (!outdir_override.empty()) cfg.output_dir = outdir_override;
    auto report = run_pipeline(cfg);
    emit_report(report, cfg.output_dir);
    std::cout << "status: " << to_string(report.status) << "\n";
    if (report.mu_max) std::cout << "mu_max: " << *report.mu_max << "\n";
    std::cout << "report: " << cfg.output_dir << "/report.json\n";
    return exit_code(report.status);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vision-based landing controller verification toolkit"};
    app.set_version_flag("--version", landver::kVersion);
    app.require_subcommand(1);

    std::string config_path, state_text, out_path, manifest_path, dump_dir, properties_dir;
    std::string perception_path, controller_path, net_path, fsm_path, cnf_path, outdir;
    int steps = 100;
    int budget = 0;
    double mu = 0.0;
    bool no_binarization = false;

    auto* render = app.add_subcommand("render", "Render the reference camera image for a pose");
    render->add_option("--config", config_path, "scenario config")->required();
    render->add_option("--state", state_text, "pose as z,y,theta")->required();
    render->add_option("--out", out_path, "output file (stdout by default)");

    auto* buildp = app.add_subcommand("build-perception",
                                      "Compile the rasterizer into a ReLU network");
    buildp->add_option("--config", config_path, "scenario config")->required();
    buildp->add_option("--out", out_path, "weight file to write")->required();
    buildp->add_option("--manifest", manifest_path, "manifest json to write");
    buildp->add_flag("--no-binarization", no_binarization,
                     "emit the raw pixel scores instead of clamped outputs");

    auto* compose = app.add_subcommand("compose", "Compose perception and controller networks");
    compose->add_option("--perception", perception_path)->required();
    compose->add_option("--controller", controller_path)->required();
    compose->add_option("--out", out_path)->required();

    auto* train = app.add_subcommand("train", "Behavioral-cloning training of the controller");
    train->add_option("--config", config_path)->required();
    train->add_option("--out", out_path)->required();
    train->add_option("--report", manifest_path, "training report json");

    auto* simulate = app.add_subcommand("simulate", "Closed-loop rollout to a CSV trace");
    simulate->add_option("--config", config_path)->required();
    simulate->add_option("--net", net_path, "augmented network weights")->required();
    simulate->add_option("--state", state_text, "initial pose as z,y,theta")->required();
    simulate->add_option("--steps", steps);
    simulate->add_option("--out", out_path, "trace csv (stdout by default)");
    simulate->add_option("--dump-images", dump_dir, "directory for ascii image dumps");

    auto* abstract_cmd = app.add_subcommand("abstract", "Build the finite-state abstraction");
    abstract_cmd->add_option("--config", config_path)->required();
    abstract_cmd->add_option("--net", net_path, "augmented network weights")->required();
    abstract_cmd->add_option("--mu", mu, "control deviation")->required();
    abstract_cmd->add_option("--out", out_path, "fsm file")->required();

    auto* check = app.add_subcommand("check-fsm", "Bounded check of the configured property");
    check->add_option("--config", config_path)->required();
    check->add_option("--fsm", fsm_path)->required();
    check->add_option("--cnf", cnf_path, "also export the DIMACS encoding");

    auto* verify = app.add_subcommand("verify-regions",
                                      "Per-region control-envelope verification");
    verify->add_option("--config", config_path)->required();
    verify->add_option("--net", net_path, "augmented network weights")->required();
    verify->add_option("--mu", mu, "envelope radius")->required();
    verify->add_option("--out", out_path, "csv (stdout by default)");
    verify->add_option("--budget", budget, "split budget override");
    verify->add_option("--properties", properties_dir, "export per-region property files");

    auto* pipeline = app.add_subcommand("pipeline", "Run the whole verification pipeline");
    pipeline->add_option("--config", config_path)->required();
    pipeline->add_option("--outdir", outdir, "output directory override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (render->parsed()) return cmd_render(config_path, state_text, out_path);
        if (buildp->parsed())
            return cmd_build_perception(config_path, out_path, manifest_path, no_binarization);
        if (compose->parsed()) return cmd_compose(perception_path, controller_path, out_path);
        if (train->parsed()) return cmd_train(config_path, out_path, manifest_path);
        if (simulate->parsed())
            return cmd_simulate(config_path, net_path, state_text, steps, out_path, dump_dir);
        if (abstract_cmd->parsed()) return cmd_abstract(config_path, net_path, mu, out_path);
        if (check->parsed()) return cmd_check_fsm(config_path, fsm_path, cnf_path);
        if (verify->parsed())
            return cmd_verify_regions(config_path, net_path, mu, out_path, budget,
                                      properties_dir);
        if (pipeline->parsed()) return cmd_pipeline(config_path, outdir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
