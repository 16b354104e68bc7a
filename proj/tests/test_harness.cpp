#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "byzsim/errors.hpp"
#include "byzsim/harness.hpp"

using namespace byzsim;
using namespace byzsim::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("byzsim-test-" + name);
    fs::remove_all(dir);
    return dir;
}

json small_config() {
    return json::parse(R"({
        "name": "small",
        "scenario": {"generator": "gaussian", "n": 7, "f": 1, "mu": 1.0, "variance": 0.5},
        "algorithm": "dsgd_robust",
        "adversary": {"kind": "byzantine", "attack": {"type": "sign_flip", "kappa": 2.0}},
        "theta0": [4.0],
        "T": 150,
        "seeds": [3]
    })");
}

std::vector<std::string> problems_of(const json& config) {
    try {
        prepare(config);
    } catch (const ValidationError& e) {
        return e.problems();
    }
    return {};
}

bool any_starts_with(const std::vector<std::string>& items, const std::string& prefix) {
    for (const auto& s : items) {
        if (s.rfind(prefix, 0) == 0) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("single point, single seed") {
    const fs::path out = scratch("single");
    const auto result = run_experiment(small_config(), {out, 1, std::nullopt, true});
    CHECK(result.summaries.size() == 1);
    CHECK(result.trace_files.size() == 1);
    std::ifstream summary(result.summary_file);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(summary, line)) rows += !line.empty();
    CHECK(rows == 1);

    const SummaryRecord& s = result.summaries[0];
    REQUIRE(s.mean_final_gap.has_value());
    CHECK(std::isfinite(*s.mean_final_gap));
    CHECK(std::isfinite(s.upper_bound));
    CHECK(std::isfinite(s.constants.floor));
    CHECK(*s.mean_final_gap <= s.upper_bound);
}

TEST_CASE("sweep over f") {
    json config = small_config();
    config["seeds"] = json::array();
    for (int s = 0; s < 10; ++s) config["seeds"].push_back(s);
    config["sweep"] = {{"parameter", "f"}, {"values", {0, 1, 2}}};
    const fs::path out = scratch("sweep");
    const auto result = run_experiment(config, {out, 2, std::nullopt, true});
    CHECK(result.summaries.size() == 3);
    CHECK(result.trace_files.size() == 30);
    CHECK(result.summaries[2].config["scenario"]["f"] == 2);
    CHECK(result.summaries[2].constants.f == 2);
    CHECK(result.summaries[0].fingerprint != result.summaries[1].fingerprint);

    // Every emitted trace parses under the versioned schema.
    for (const auto& file : result.trace_files) {
        const auto rows = parse_trace_csv(read_file(file));
        CHECK(rows.size() == 150);
    }
}

TEST_CASE("traces are byte-identical across repeats and thread counts") {
    json config = small_config();
    config["seeds"] = {1, 2, 3, 4, 5};
    config["sweep"] = {{"parameter", "scenario.n"}, {"values", {5, 7}}};
    const auto a = run_experiment(config, {scratch("det-a"), 1, std::nullopt, true});
    const auto b = run_experiment(config, {scratch("det-b"), 4, std::nullopt, true});
    const auto c = run_experiment(config, {scratch("det-c"), 1, std::nullopt, true});
    REQUIRE(a.trace_files.size() == 10);
    for (std::size_t i = 0; i < a.trace_files.size(); ++i) {
        const std::string ta = read_file(a.trace_files[i]);
        CHECK(ta == read_file(b.trace_files[i]));
        CHECK(ta == read_file(c.trace_files[i]));
    }
}

TEST_CASE("emitted configs reproduce the summary exactly") {
    const fs::path out = scratch("replay");
    const auto first = run_experiment(small_config(), {out, 1, std::nullopt, false});
    const json resolved = json::parse(read_file(out / "configs" / "small-p0.json"));
    const auto again = run_experiment(resolved, {scratch("replay-2"), 1, std::nullopt, false});
    CHECK(first.summaries[0].final_gaps == again.summaries[0].final_gaps);
    CHECK(first.summaries[0].fingerprint == again.summaries[0].fingerprint);
}

TEST_CASE("fingerprint survives re-serialization") {
    const json config = small_config();
    const json reparsed = json::parse(config.dump(4));
    CHECK(fingerprint(config) == fingerprint(reparsed));
    json reordered = json::parse(R"({"T": 150, "seeds": [3], "theta0": [4.0], "name": "small",
        "adversary": {"attack": {"kappa": 2.0, "type": "sign_flip"}, "kind": "byzantine"},
        "algorithm": "dsgd_robust",
        "scenario": {"variance": 0.5, "mu": 1.0, "f": 1, "n": 7, "generator": "gaussian"}})");
    CHECK(fingerprint(config) == fingerprint(reordered));
    json changed = config;
    changed["T"] = 151;
    CHECK(fingerprint(config) != fingerprint(changed));
}

TEST_CASE("summary records round-trip") {
    const auto result = run_experiment(small_config(), {scratch("roundtrip"), 1, std::nullopt, false});
    const json j = result.summaries[0].to_json();
    const SummaryRecord back = SummaryRecord::from_json(json::parse(j.dump()));
    CHECK(back.to_json() == j);
    CHECK(j["schema"] == kSummarySchema);
}

TEST_CASE("validation reports field paths and runs nothing") {
    json config = small_config();
    config.erase("seeds");
    config["T"] = 1;
    config["scenario"]["variance"] = "big";
    const auto problems = problems_of(config);
    CHECK(any_starts_with(problems, "seeds:"));
    CHECK(any_starts_with(problems, "T:"));
    CHECK(any_starts_with(problems, "scenario.variance:"));

    json bad_sweep = small_config();
    bad_sweep["sweep"] = {{"parameter", "f"}, {"values", {1, 4}}};
    const fs::path out = scratch("invalid");
    CHECK_THROWS_AS(run_experiment(bad_sweep, {out, 1, std::nullopt, true}), ValidationError);
    CHECK_FALSE(fs::exists(out));
    CHECK(any_starts_with(problems_of(bad_sweep), "sweep[1] scenario.f:"));

    json unknown = small_config();
    unknown["algorithm"] = "krum";
    CHECK(any_starts_with(problems_of(unknown), "algorithm:"));

    json attack = small_config();
    attack["adversary"]["attack"]["type"] = "gaslight";
    CHECK(any_starts_with(problems_of(attack), "adversary.attack.type:"));

    json sweep_path = small_config();
    sweep_path["sweep"] = {{"parameter", "nothing.here"}, {"values", {1}}};
    CHECK(any_starts_with(problems_of(sweep_path), "sweep.parameter:"));

    json trim = small_config();
    trim["trim"] = 4;
    CHECK(any_starts_with(problems_of(trim), "trim:"));

    json empty_seeds = small_config();
    empty_seeds["seeds"] = json::array();
    CHECK(any_starts_with(problems_of(empty_seeds), "seeds:"));
}

TEST_CASE("seed override") {
    json config = small_config();
    config["seeds"] = {1, 2, 3};
    const auto points = prepare(config, 42);
    REQUIRE(points.size() == 1);
    CHECK(points[0].seeds == std::vector<std::uint64_t>{42});
}

TEST_CASE("divergence is recorded, not fatal") {
    const json config = json::parse(read_file(fs::path(BYZSIM_CONFIG_DIR) / "baseline_fixed_vector.json"));
    const auto result = run_experiment(config, {scratch("diverge"), 1, std::nullopt, true});
    REQUIRE(result.summaries.size() == 1);
    CHECK(result.summaries[0].diverged_at[0].has_value());
    CHECK_FALSE(result.summaries[0].final_gaps[0].has_value());
    CHECK(result.summaries[0].errors[0].empty());
}

TEST_CASE("every shipped config validates") {
    for (const auto& entry : fs::directory_iterator(BYZSIM_CONFIG_DIR)) {
        if (entry.path().extension() != ".json") continue;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(prepare(json::parse(read_file(entry.path()))));
    }
}

TEST_CASE("bound overlay") {
    json config = small_config();
    config["scenario"] = {{"generator", "gaussian"}, {"n", 5}, {"f", 0}, {"mu", 1.0}, {"variance", 0.0},
                          {"spread", 0.0}};
    config.erase("adversary");
    config["schedule"] = "option2";
    const auto result = run_experiment(config, {scratch("overlay"), 1, std::nullopt, true});
    const json summary = result.summaries[0].to_json();
    std::vector<std::vector<IterationRecord>> traces;
    for (const auto& f : result.trace_files) traces.push_back(parse_trace_csv(read_file(f)));

    const std::vector<std::size_t> grid{0, 2, 10, 75, 149, 150};
    const auto rows = emit_bound_overlay(summary, grid, traces);
    const double Q0 = result.summaries[0].constants.Q0;
    CHECK(Q0 == 4.0);
    REQUIRE(rows.size() == grid.size());
    for (const auto& row : rows) {
        CHECK(row.floor == rows[0].floor);
        if (row.empirical_mean_gap) CHECK(*row.empirical_mean_gap >= 0.0);
        if (row.t >= 2) {
            REQUIRE(row.bound.has_value());
            CHECK(*row.bound == doctest::Approx(7.0 / 6.0 * Q0 * std::exp(-static_cast<double>(row.t) / 108.0)).epsilon(1e-14));
        }
    }
    CHECK(rows[0].empirical_mean_gap.value() == Q0);
    CHECK(rows.back().empirical_mean_gap.has_value());

    const std::string csv = format_overlay_csv(rows);
    CHECK(csv.rfind("t,empirical_mean_gap,bound,floor\n", 0) == 0);

    json stripped = summary;
    stripped.erase("constants");
    CHECK_THROWS_AS(emit_bound_overlay(stripped, grid, traces), CapabilityError);
}

TEST_CASE("trace csv round-trips exactly") {
    std::vector<IterationRecord> rows;
    for (std::size_t t = 0; t < 5; ++t) {
        rows.push_back({t, 1.0 / 18.0, 0.1 * static_cast<double>(t), 1e-300 * static_cast<double>(t), 3.0,
                        std::nextafter(1.0, 2.0), 0.0, 5e10});
    }
    const std::string text = format_trace_csv(rows);
    const auto back = parse_trace_csv(text);
    REQUIRE(back.size() == rows.size());
    CHECK(format_trace_csv(back) == text);
    CHECK(back[3].mean_drift_sq == rows[3].mean_drift_sq);
    CHECK_THROWS_AS(parse_trace_csv("t,gamma\n"), InputError);
}
