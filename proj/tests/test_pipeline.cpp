#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>

#include "landver/config.hpp"
#include "landver/pipeline.hpp"

using namespace landver;

namespace {

std::string configs_dir() {
    // Tests run from the build tree; configs live in the source tree.
    for (auto base : {"../configs", "../../configs", "configs"}) {
        if (std::filesystem::exists(std::filesystem::path(base) / "trivial_safe_q2.json"))
            return base;
    }
    throw std::runtime_error("config directory not found");
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("configs parse and validate") {
    auto trivial = load_config(configs_dir() + "/trivial_safe_q2.json");
    CHECK(trivial.scenario.camera.q() == 2);
    CHECK(trivial.controller_source == ControllerSource::File);
    CHECK_FALSE(trivial.spec.unsafe_state_box.has_value());

    auto desk = load_config(configs_dir() + "/desk_q8.json");
    CHECK(desk.scenario.camera.q() == 8);
    CHECK(desk.mu_list.size() == 7);
    CHECK(desk.spec.unsafe_state_box.has_value());
    CHECK(desk.training.width == 128);
}

TEST_CASE("config validation points at the offending field") {
    nlohmann::json j;
    j["schema_version"] = 2;
    CHECK_THROWS_WITH(parse_config(j), Catch::Contains("schema_version"));
    j["schema_version"] = 1;
    CHECK_THROWS_WITH(parse_config(j), Catch::Contains("scenario"));
}

TEST_CASE("corrupted weight files surface a structured error") {
    const auto dir = std::filesystem::temp_directory_path() / "landver_badnet";
    std::filesystem::create_directories(dir);
    const auto bad = dir / "bad.net";
    std::ofstream(bad.string()) << "landver-net 1\ninput_dim 4\nlayers 1\n"
                                << "layer 0 relu 2 4\nstorage dense\nw 1 2 3\n";
    auto cfg = load_config(configs_dir() + "/trivial_safe_q2.json");
    cfg.controller_path = bad.string();
    cfg.output_dir = (dir / "out").string();
    CHECK_THROWS_AS(run_pipeline(cfg), ValidationError);
}

TEST_CASE("trivially safe scenario runs the whole pipeline to SAFE") {
    auto cfg = load_config(configs_dir() + "/trivial_safe_q2.json");
    const auto dir = std::filesystem::temp_directory_path() / "landver_trivial";
    std::filesystem::remove_all(dir);
    cfg.output_dir = dir.string();
    auto report = run_pipeline(cfg);
    CHECK(report.status == PipelineStatus::Safe);
    REQUIRE(report.mu_max.has_value());
    CHECK(*report.mu_max == 1.1);
    CHECK(report.regions.size() > 0);
    for (const auto& r : report.regions) {
        CHECK_FALSE(r.unverifiable);
        CHECK(r.verdict.status == VerdictStatus::Proved);
    }
    CHECK(report.document.at("mc").at("unsafe_entries").get<int>() == 0);
    emit_report(report, cfg.output_dir);
    CHECK(std::filesystem::exists(dir / "report.json"));
    CHECK(std::filesystem::exists(dir / "regions.csv"));
    CHECK(std::filesystem::exists(dir / "controller.net"));
    CHECK(std::filesystem::exists(dir / "perception.net"));
    CHECK(std::filesystem::exists(dir / "nnaug.net"));
    CHECK(std::filesystem::exists(dir / "fsm_mu1p1.txt"));
    // Property files exported for the verified regions.
    bool any_property = false;
    for (const auto& e : std::filesystem::directory_iterator(dir / "properties"))
        any_property = any_property || e.path().extension() == ".txt";
    CHECK(any_property);

    // The CSV has one row per region plus the header.
    const std::string csv = slurp((dir / "regions.csv").string());
    CHECK(std::count(csv.begin(), csv.end(), '\n') ==
          static_cast<long>(report.regions.size()) + 1);
    CHECK(csv.rfind("region_id,center,verdict,splits,millis\n", 0) == 0);
}

TEST_CASE("reports are byte-identical across reruns modulo timings") {
    auto cfg = load_config(configs_dir() + "/trivial_safe_q2.json");
    const auto dir = std::filesystem::temp_directory_path() / "landver_determinism";
    std::filesystem::remove_all(dir);
    cfg.output_dir = (dir / "a").string();
    auto a = run_pipeline(cfg);
    cfg.output_dir = (dir / "b").string();
    auto b = run_pipeline(cfg);
    nlohmann::json da = a.document, db = b.document;
    da.erase("timings");
    db.erase("timings");
    CHECK(da.dump() == db.dump());
    // Artifact files identical outright.
    CHECK(slurp((dir / "a" / "nnaug.net").string()) == slurp((dir / "b" / "nnaug.net").string()));
    CHECK(slurp((dir / "a" / "fsm_mu0p1.txt").string()) ==
          slurp((dir / "b" / "fsm_mu0p1.txt").string()));
}

TEST_CASE("empty region list still emits a header-only csv") {
    PipelineReport rep;
    rep.status = PipelineStatus::NoFeasibleMu;
    rep.document = {{"status", "NO-FEASIBLE-MU"}};
    const auto dir = std::filesystem::temp_directory_path() / "landver_emptycsv";
    std::filesystem::remove_all(dir);
    emit_report(rep, dir.string());
    CHECK(slurp((dir / "regions.csv").string()) == "region_id,center,verdict,splits,millis\n");
}

TEST_CASE("stage timings are nonnegative and sum close to the total") {
    auto cfg = load_config(configs_dir() + "/trivial_safe_q2.json");
    const auto dir = std::filesystem::temp_directory_path() / "landver_timing";
    std::filesystem::remove_all(dir);
    cfg.output_dir = dir.string();
    auto report = run_pipeline(cfg);
    const auto& t = report.document.at("timings");
    double sum = 0.0;
    for (const char* key : {"train_ms", "perception_ms", "fsm_ms", "verify_ms", "mc_ms"}) {
        const double v = t.at(key).get<double>();
        CHECK(v >= 0.0);
        sum += v;
    }
    const double total = t.at("total_ms").get<double>();
    CHECK(sum <= total * 1.1 + 5.0);
    CHECK(sum >= total * 0.9 - 5.0);
}

TEST_CASE("reach properties run through the pipeline") {
    auto cfg = load_config(configs_dir() + "/trivial_safe_q2.json");
    cfg.spec.kind = SpecKind::Reach;
    // Target: the initial corridor itself; every initial cell reaches it in
    // zero steps, so the sweep passes at every deviation.
    cfg.spec.target_lower = cfg.initial_lower;
    cfg.spec.target_upper = cfg.initial_upper;
    const auto dir = std::filesystem::temp_directory_path() / "landver_reach";
    std::filesystem::remove_all(dir);
    cfg.output_dir = dir.string();
    auto report = run_pipeline(cfg);
    CHECK(report.status == PipelineStatus::Safe);
    REQUIRE(report.mu_max.has_value());
    CHECK(*report.mu_max == 1.1);
}
