#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asiplab/chain.hpp"
#include "asiplab/coupling.hpp"
#include "asiplab/csv.hpp"
#include "asiplab/stats.hpp"
#include "asiplab/ulam.hpp"

namespace asiplab {

using nlohmann::json;

// All verdict thresholds live here; config files may override any field.
struct Thresholds {
    double ks_c_alpha = 1.628;  // asymptotic 1% Kolmogorov constant
    double sigma2_consistency_rel = 0.05;
    double clt_ks_max = 0.05;
    double clt_source_gap = 0.03;
    double lil_checkpoint_max = 1.3;
    double lil_final_max = 1.1;
    double asip_exponent_max = 0.35;
    double phi_tail_rel = 1e-6;
    double hr_band_lo = 0.5;
    double hr_band_hi = 1.5;
};

inline void apply_threshold_overrides(Thresholds& th, const json& block) {
    auto set = [&](const char* key, double& field) {
        if (block.contains(key)) field = block.at(key).get<double>();
    };
    set("ks_c_alpha", th.ks_c_alpha);
    set("sigma2_consistency_rel", th.sigma2_consistency_rel);
    set("clt_ks_max", th.clt_ks_max);
    set("clt_source_gap", th.clt_source_gap);
    set("lil_checkpoint_max", th.lil_checkpoint_max);
    set("lil_final_max", th.lil_final_max);
    set("asip_exponent_max", th.asip_exponent_max);
    set("phi_tail_rel", th.phi_tail_rel);
    set("hr_band_lo", th.hr_band_lo);
    set("hr_band_hi", th.hr_band_hi);
}

struct ExperimentConfig {
    std::string kind;
    std::string name;
    std::string map_id = "doubling";
    std::map<std::string, double> map_params;
    std::string obs_id = "identity_centered";
    std::map<std::string, double> obs_params;
    double p = 4.0;
    std::vector<std::size_t> sizes;
    std::size_t reps = 100;
    std::uint64_t seed = 0;
    double dt = 0.0;        // fixed embedding step; 0 = adaptive variance/dt_div
    double dt_div = 400.0;
    int workers = 1;
    std::string out_dir = "out";
    std::size_t grid = std::size_t{1} << 16;
    int lag_cutoff = 30;
    int horizon = 20;
    int dict_size = 16;
    int gap_max = 16;
    int phi_thresholds = 512;
    std::string mode = "auto";      // stationary | blocks | auto
    std::string expect = "shrinking";
    std::string scale = "harmonic";  // reverse-series scaling
    bool dump_increments = false;
    Thresholds th;
    json raw;
};

inline const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds = {
        "orbit", "sigma2", "clt", "lil", "asip-rate", "duality",
        "phi", "kcond", "pfo", "lemma43", "hanson-russo", "reverse-series"};
    return kinds;
}

inline ExperimentConfig parse_config(const json& j) {
    ExperimentConfig cfg;
    cfg.raw = j;
    if (!j.contains("kind")) throw ConfigError("config: missing 'kind'");
    cfg.kind = j.at("kind").get<std::string>();
    bool known = false;
    for (const auto& k : experiment_kinds()) known = known || k == cfg.kind;
    if (!known) throw ConfigError("config: unknown kind '" + cfg.kind + "'");
    if (!j.contains("seed")) throw ConfigError("config: missing 'seed' (wall-clock seeding is not supported)");
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.name = j.value("name", cfg.kind);

    if (j.contains("map")) {
        const auto& m = j.at("map");
        cfg.map_id = m.value("id", cfg.map_id);
        if (m.contains("params"))
            for (auto it = m.at("params").begin(); it != m.at("params").end(); ++it)
                cfg.map_params[it.key()] = it.value().get<double>();
    }
    if (j.contains("observable")) {
        const auto& o = j.at("observable");
        cfg.obs_id = o.value("id", cfg.obs_id);
        if (o.contains("params"))
            for (auto it = o.at("params").begin(); it != o.at("params").end(); ++it)
                cfg.obs_params[it.key()] = it.value().get<double>();
    }
    cfg.p = j.value("p", cfg.p);
    if (j.contains("sizes"))
        for (const auto& s : j.at("sizes")) cfg.sizes.push_back(s.get<std::size_t>());
    cfg.reps = j.value("reps", cfg.reps);
    cfg.dt = j.value("dt", cfg.dt);
    cfg.dt_div = j.value("dt_div", cfg.dt_div);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.grid = j.value("grid", cfg.grid);
    cfg.lag_cutoff = j.value("lag_cutoff", cfg.lag_cutoff);
    cfg.horizon = j.value("horizon", cfg.horizon);
    cfg.dict_size = j.value("dict_size", cfg.dict_size);
    cfg.gap_max = j.value("gap_max", cfg.gap_max);
    cfg.phi_thresholds = j.value("phi_thresholds", cfg.phi_thresholds);
    cfg.mode = j.value("mode", cfg.mode);
    cfg.expect = j.value("expect", cfg.expect);
    cfg.scale = j.value("scale", cfg.scale);
    cfg.dump_increments = j.value("dump_increments", cfg.dump_increments);
    if (j.contains("thresholds")) apply_threshold_overrides(cfg.th, j.at("thresholds"));

    // referenced ids must resolve; constructing them validates parameters too
    make_map(cfg.map_id, cfg.map_params);
    observable_catalog(cfg.obs_id, cfg.obs_params);

    const bool uses_p = cfg.kind == "asip-rate" || cfg.kind == "lemma43" ||
                        cfg.kind == "reverse-series";
    if (uses_p && !(cfg.p > 2.0 && cfg.p <= 4.0))
        throw ConfigError("config: p must lie in (2,4] for kind '" + cfg.kind + "'");
    const bool needs_sizes = cfg.kind != "sigma2" && cfg.kind != "phi" && cfg.kind != "kcond" &&
                             cfg.kind != "pfo" && cfg.kind != "lemma43";
    if (needs_sizes && cfg.sizes.empty())
        throw ConfigError("config: kind '" + cfg.kind + "' requires 'sizes'");
    for (std::size_t s : cfg.sizes)
        if (s == 0) throw ConfigError("config: sizes must be positive");
    std::sort(cfg.sizes.begin(), cfg.sizes.end());
    return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

struct RunResult {
    std::vector<std::string> artifacts;  // filenames relative to out_dir
    std::vector<std::string> verdicts;
    double elapsed_ms = 0.0;
};

namespace detail_runner {

struct Workbench {
    MapPtr map;
    TransferPtr op;
    Observable obs;
    double nu_f = 0.0;
};

inline Workbench make_workbench(const ExperimentConfig& cfg) {
    Workbench wb;
    wb.map = make_map(cfg.map_id, cfg.map_params);
    std::size_t grid = cfg.grid;
    // countable-branch maps default to a coarser grid so the preimage cache
    // fits; an explicit "grid" entry overrides
    if (!cfg.raw.contains("grid") && wb.map->countable_branches())
        grid = std::min(grid, std::size_t{1} << 14);
    wb.op = std::make_shared<AnalyticTransfer>(wb.map, grid);
    wb.obs = observable_catalog(cfg.obs_id, cfg.obs_params);
    wb.nu_f = wb.op->nu_fn(wb.obs.eval);
    return wb;
}

inline std::string verdict_line(const std::string& check, bool pass, double value,
                                double threshold) {
    std::ostringstream os;
    os << "VERDICT " << check << " " << (pass ? "PASS" : "FAIL") << " value=" << fmt17(value)
       << " threshold=" << fmt17(threshold);
    return os.str();
}

inline void stamp(CsvWriter& csv, const ExperimentConfig& cfg) {
    csv.meta("map", cfg.map_id);
    csv.meta("observable", cfg.obs_id);
    csv.meta("seed", static_cast<unsigned long long>(cfg.seed));
    csv.meta("kind", cfg.kind);
}

}  // namespace detail_runner

// Implemented in run_kinds.hpp (split for readability).
RunResult run_experiment(const ExperimentConfig& cfg);

inline int replay(const std::string& manifest_path, std::ostream& log) {
    std::ifstream in(manifest_path);
    if (!in) {
        log << "replay: cannot open manifest " << manifest_path << "\n";
        return 2;
    }
    json manifest;
    in >> manifest;
    ExperimentConfig cfg = parse_config(manifest.at("config"));
    const std::string orig_dir = cfg.out_dir;

    const std::string tmp_dir =
        (std::filesystem::temp_directory_path() /
         ("asiplab-replay-" + std::to_string(Philox::splitmix(cfg.seed ^ 0x9e3779b9))))
            .string();
    cfg.raw["out_dir"] = tmp_dir;
    cfg.out_dir = tmp_dir;
    run_experiment(cfg);

    auto slurp = [](const std::filesystem::path& p) -> std::string {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    bool all_match = true;
    for (const auto& art : manifest.at("artifacts")) {
        const std::string name = art.get<std::string>();
        const auto a = std::filesystem::path(orig_dir) / name;
        const auto b = std::filesystem::path(tmp_dir) / name;
        if (!std::filesystem::exists(a) || !std::filesystem::exists(b)) {
            log << "replay: MISSING " << name << "\n";
            all_match = false;
            continue;
        }
        const bool same = slurp(a) == slurp(b);
        log << "replay: " << (same ? "MATCH " : "MISMATCH ") << name << "\n";
        all_match = all_match && same;
    }
    std::filesystem::remove_all(tmp_dir);
    log << (all_match ? "replay: all artifacts match\n" : "replay: differences found\n");
    return all_match ? 0 : 1;
}

}  // namespace asiplab

#include "asiplab/run_kinds.hpp"
