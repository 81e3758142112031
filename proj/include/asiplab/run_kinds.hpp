#pragma once

// Per-kind experiment implementations behind runner.hpp's run_experiment.

#include <filesystem>

namespace asiplab {

namespace detail_runner {

using Artifacts = RunResult;

inline std::string art_path(const ExperimentConfig& cfg, const std::string& suffix) {
    return (std::filesystem::path(cfg.out_dir) / (cfg.name + "_" + suffix)).string();
}

inline void run_orbit(const ExperimentConfig& cfg, Artifacts& out) {
    const Workbench wb = make_workbench(cfg);
    const std::size_t n = cfg.sizes.at(0);
    RandomStream rng(cfg.seed, 0);
    const double x0 = wb.map->inv_cdf(rng.uniform_pos());
    const std::vector<double> orbit = iterate(*wb.map, x0, n);

    CsvWriter csv(art_path(cfg, "orbit.csv"));
    stamp(csv, cfg);
    csv.header({"i", "x"});
    for (std::size_t i = 0; i < orbit.size(); ++i) csv.row({static_cast<unsigned long>(i), orbit[i]});
    out.artifacts.push_back(cfg.name + "_orbit.csv");

    if (cfg.dump_increments && n >= 2) {
        auto mfun = std::make_shared<MFunction>(wb.op, wb.obs);
        const ReverseMDS mds = reverse_mds(mfun, n - 1, x0);
        CsvWriter mdscsv(art_path(cfg, "mds.csv"));
        stamp(mdscsv, cfg);
        mdscsv.meta("tail_bound", mfun->tail_bound());
        mdscsv.header({"l", "state", "d_star"});
        for (std::size_t l = 1; l < n; ++l)
            mdscsv.row({static_cast<unsigned long>(l), mds.orbit[l - 1], mds.increments[l - 1]});
        out.artifacts.push_back(cfg.name + "_mds.csv");
    }
}

inline void run_sigma2(const ExperimentConfig& cfg, Artifacts& out) {
    const Workbench wb = make_workbench(cfg);
    const std::size_t orbit_n = cfg.sizes.empty() ? 1000000 : cfg.sizes.back();
    const VarianceEstimate est = sigma2(*wb.op, wb.obs, cfg.lag_cutoff, orbit_n, cfg.seed);

    CsvWriter csv(art_path(cfg, "sigma2.csv"));
    stamp(csv, cfg);
    csv.meta("sigma2_series", est.sigma2_series);
    csv.meta("sigma2_batch", est.sigma2_batch);
    csv.meta("tail_bound", est.tail_bound);
    csv.meta("lag_cutoff", est.lag_cutoff);
    csv.meta("n_used", static_cast<unsigned long long>(est.n_used));
    csv.meta("degenerate", est.degenerate);
    csv.header({"k", "covariance"});
    for (std::size_t k = 0; k < est.covariances.size(); ++k)
        csv.row({static_cast<unsigned long>(k), est.covariances[k]});
    out.artifacts.push_back(cfg.name + "_sigma2.csv");

    if (est.degenerate) {
        out.verdicts.push_back(verdict_line("sigma2_degenerate", false, 0.0, 0.0));
    } else {
        const double rel = std::fabs(est.sigma2_series - est.sigma2_batch) /
                           std::max(est.sigma2_series, 1e-300);
        out.verdicts.push_back(
            verdict_line("sigma2_series_vs_batch", rel <= cfg.th.sigma2_consistency_rel, rel,
                         cfg.th.sigma2_consistency_rel));
        out.verdicts.push_back(verdict_line("sigma2_nonnegative", !est.inconsistent,
                                            est.sigma2_series, -est.tail_bound));
    }
}

inline void run_clt(const ExperimentConfig& cfg, Artifacts& out) {
    const Workbench wb = make_workbench(cfg);
    const std::size_t n = cfg.sizes.at(0);
    const VarianceEstimate est = sigma2(*wb.op, wb.obs, cfg.lag_cutoff, 0, cfg.seed);
    if (est.degenerate) throw NumericError("clt: sigma^2 is degenerate for this observable");
    const double sigma = std::sqrt(est.sigma2_series);

    const CltReport fwd = clt_test(*wb.map, wb.obs, wb.nu_f, SumSource::ForwardOrbit, n, cfg.reps,
                                   sigma, cfg.seed, cfg.workers);
    const CltReport bwd = clt_test(*wb.map, wb.obs, wb.nu_f, SumSource::BackwardChain, n, cfg.reps,
                                   sigma, cfg.seed ^ 0xabcd1234, cfg.workers);

    CsvWriter csv(art_path(cfg, "clt.csv"));
    stamp(csv, cfg);
    csv.meta("sigma", sigma);
    csv.meta("n", static_cast<unsigned long long>(n));
    csv.header({"source", "ks", "pvalue", "reps"});
    csv.row({"forward", fwd.ks, fwd.pvalue, static_cast<unsigned long>(fwd.reps)});
    csv.row({"backward", bwd.ks, bwd.pvalue, static_cast<unsigned long>(bwd.reps)});
    out.artifacts.push_back(cfg.name + "_clt.csv");

    out.verdicts.push_back(
        verdict_line("clt_forward_ks", fwd.ks < cfg.th.clt_ks_max, fwd.ks, cfg.th.clt_ks_max));
    out.verdicts.push_back(
        verdict_line("clt_backward_ks", bwd.ks < cfg.th.clt_ks_max, bwd.ks, cfg.th.clt_ks_max));
    const double gap = std::fabs(fwd.ks - bwd.ks);
    out.verdicts.push_back(
        verdict_line("clt_source_gap", gap < cfg.th.clt_source_gap, gap, cfg.th.clt_source_gap));
}

inline void run_lil(const ExperimentConfig& cfg, Artifacts& out) {
    const Workbench wb = make_workbench(cfg);
    const std::size_t n_max = cfg.sizes.back();
    const VarianceEstimate est = sigma2(*wb.op, wb.obs, cfg.lag_cutoff, 0, cfg.seed);
    if (est.degenerate) throw NumericError("lil: sigma^2 is degenerate for this observable");
    const double sigma = std::sqrt(est.sigma2_series);

    std::vector<LilReport> reports(cfg.reps);
    parallel_replicas(cfg.reps, cfg.workers, [&](std::size_t r) {
        reports[r] = lil_envelope(*wb.map, wb.obs, wb.nu_f, n_max, sigma, cfg.seed, r);
    });

    CsvWriter csv(art_path(cfg, "lil.csv"));
    stamp(csv, cfg);
    csv.meta("sigma", sigma);
    csv.header({"seed_index", "n", "ratio"});
    for (std::size_t r = 0; r < reports.size(); ++r)
        for (std::size_t c = 0; c < reports[r].ns.size(); ++c)
            csv.row({static_cast<unsigned long>(r), static_cast<unsigned long>(reports[r].ns[c]),
                     reports[r].ratios[c]});
    out.artifacts.push_back(cfg.name + "_lil.csv");

    const std::size_t n_checkpoints = reports.front().ns.size();
    double worst_median = 0.0;
    for (std::size_t c = 0; c < n_checkpoints; ++c) {
        std::vector<double> col(cfg.reps);
        for (std::size_t r = 0; r < cfg.reps; ++r) col[r] = reports[r].ratios[c];
        worst_median = std::max(worst_median, median_of(col));
    }
    std::vector<double> finals(cfg.reps);
    for (std::size_t r = 0; r < cfg.reps; ++r) finals[r] = reports[r].final_ratio;
    const double final_median = median_of(finals);
    out.verdicts.push_back(verdict_line("lil_checkpoint_medians", worst_median <= cfg.th.lil_checkpoint_max,
                                        worst_median, cfg.th.lil_checkpoint_max));
    out.verdicts.push_back(verdict_line("lil_final_octave", final_median <= cfg.th.lil_final_max,
                                        final_median, cfg.th.lil_final_max));
}

inline void run_duality(const ExperimentConfig& cfg, Artifacts& out) {
    const Workbench wb = make_workbench(cfg);
    const auto window = static_cast<int>(cfg.sizes.at(0));
    if (window > 8) throw ConfigError("duality: window must be <= 8");
    const DualityReport rep = duality_test(*wb.map, window, cfg.reps, cfg.seed);

    CsvWriter csv(art_path(cfg, "duality.csv"));
    stamp(csv, cfg);
    csv.meta("reps", static_cast<unsigned long long>(rep.reps));
    csv.header({"coordinate", "ks", "pvalue", "critical"});
    for (const auto& row : rep.rows) {
        const double lam = row.ks * std::sqrt(static_cast<double>(rep.reps) / 2.0);
        csv.row({row.label, row.ks, kolmogorov_q(lam), row.critical});
    }
    out.artifacts.push_back(cfg.name + "_duality.csv");
    double worst = 0.0, crit = 0.0;
    for (const auto& row : rep.rows) {
        worst = std::max(worst, row.ks);
        crit = row.critical;
    }
    out.verdicts.push_back(verdict_line("duality_all_ks", rep.all_pass, worst, crit));
}

inline void run_phi(const ExperimentConfig& cfg, Artifacts& out) {
    const Workbench wb = make_workbench(cfg);
    const int N = cfg.horizon;
    const PhiReport p1 = phi_coefficient(*wb.op, 1, N, cfg.phi_thresholds, cfg.gap_max);
    const PhiReport p2 = phi_coefficient(*wb.op, 2, N, cfg.phi_thresholds, cfg.gap_max);

    for (const PhiReport* rep : {&p1, &p2}) {
        const std::string fname = rep->k == 1 ? "phi1.csv" : "phi2.csv";
        CsvWriter csv(art_path(cfg, fname));
        stamp(csv, cfg);
        csv.meta("k", rep->k);
        csv.meta("gap_max", rep->gap_max);
        csv.meta("thresholds", rep->thresholds);
        csv.meta("lower_bound_note", "grid/threshold sup is a lower bound of the definition");
        csv.header({"n", "value", "rho_fit"});
        for (std::size_t i = 0; i < rep->values.size(); ++i)
            csv.row({static_cast<unsigned long>(i + 1), rep->values[i], rep->rho_fit});
        out.artifacts.push_back(cfg.name + "_" + fname);
    }

    const RateConditionSum cond = rate_condition_sum(p2);
    out.verdicts.push_back(verdict_line("phi_rho_subgeometric", p1.rho_fit < 1.0, p1.rho_fit, 1.0));
    out.verdicts.push_back(verdict_line("phi_cond42_stable",
                                        cond.convergent && cond.tail_fraction < cfg.th.phi_tail_rel,
                                        cond.tail_fraction, cfg.th.phi_tail_rel));
}

inline void run_kcond(const ExperimentConfig& cfg, Artifacts& out) {
    const Workbench wb = make_workbench(cfg);
    const double gamma = 0.5773502691896258;
    const MomentConditionReport rep = wb.op->check_moment_conditions(wb.obs, gamma, std::max(cfg.horizon, 16), cfg.gap_max);

    auto dump = [&](const std::string& fname, const std::vector<double>& norms,
                    const std::vector<double>& terms, const char* norm_id) {
        CsvWriter csv(art_path(cfg, fname));
        stamp(csv, cfg);
        csv.meta("norm", norm_id);
        csv.meta("gamma", gamma);
        csv.header({"n", "norm", "summand", "cumulative"});
        Accumulator cum;
        for (std::size_t i = 0; i < terms.size(); ++i) {
            cum.add(terms[i]);
            csv.row({static_cast<unsigned long>(i + 2), norms[i], terms[i], cum.value()});
        }
        out.artifacts.push_back(cfg.name + "_" + fname);
    };
    dump("kcond1.csv", rep.norms1, rep.terms1, "4");
    dump("kcond2.csv", rep.norms2, rep.terms2, "2");

    out.verdicts.push_back(verdict_line("kcond_series1_summable", rep.series1.summable,
                                        rep.series1.partial_sum, 0.0));
    out.verdicts.push_back(verdict_line("kcond_series2_summable", rep.series2.summable,
                                        rep.series2.partial_sum, 0.0));
}

inline void run_pfo(const ExperimentConfig& cfg, Artifacts& out) {
    const Workbench wb = make_workbench(cfg);
    const ContractionReport rep = wb.op->check_lipschitz_contraction(cfg.horizon, cfg.dict_size);

    CsvWriter csv(art_path(cfg, "pfo.csv"));
    stamp(csv, cfg);
    csv.meta("dict_size", rep.dict_size);
    csv.meta("j_scan", rep.j_scan);
    csv.meta("c1", rep.c1);
    csv.meta("rho1", rep.rho1);
    csv.meta("c2", rep.c2);
    csv.meta("rho2", rep.rho2);
    csv.meta("lower_bound_note", "hinge dictionary sup is a lower bound of the Lipschitz sup");
    csv.header({"i", "part1", "part2"});
    for (std::size_t i = 0; i < rep.part1.size(); ++i)
        csv.row({static_cast<unsigned long>(i + 1), rep.part1[i], rep.part2[i]});
    out.artifacts.push_back(cfg.name + "_pfo.csv");

    out.verdicts.push_back(verdict_line("pfo_rho1", rep.rho1 < 1.0, rep.rho1, 1.0));
    out.verdicts.push_back(verdict_line("pfo_rho2", rep.rho2 < 1.0, rep.rho2, 1.0));
}

inline void run_lemma43(const ExperimentConfig& cfg, Artifacts& out) {
    const Workbench wb = make_workbench(cfg);
    Observable g = wb.obs;
    if (cfg.raw.contains("observable2")) {
        const auto& o = cfg.raw.at("observable2");
        std::map<std::string, double> params;
        if (o.contains("params"))
            for (auto it = o.at("params").begin(); it != o.at("params").end(); ++it)
                params[it.key()] = it.value().get<double>();
        g = observable_catalog(o.value("id", cfg.obs_id), params);
    }
    const int horizon = std::min(cfg.horizon, 12);
    const PhiReport p1 = phi_coefficient(*wb.op, 1, horizon, cfg.phi_thresholds, cfg.gap_max);
    const PhiReport p2 = phi_coefficient(*wb.op, 2, horizon, cfg.phi_thresholds, cfg.gap_max);
    const CovarianceBoundReport rep = check_covariance_bounds(*wb.op, wb.obs, g, cfg.p, horizon, p1, p2);

    CsvWriter csv(art_path(cfg, "lemma43.csv"));
    stamp(csv, cfg);
    csv.meta("p", cfg.p);
    csv.meta("phi_note", "rhs uses grid lower bounds of phi");
    csv.header({"k", "lhs1", "rhs1", "ok1", "lhs2", "rhs2", "ok2"});
    for (const auto& row : rep.rows)
        csv.row({row.k, row.lhs1, row.rhs1, row.ok1, row.lhs2, row.rhs2, row.ok2});
    out.artifacts.push_back(cfg.name + "_lemma43.csv");
    out.verdicts.push_back(verdict_line("lemma43_all_hold", rep.all_ok, rep.all_ok ? 1.0 : 0.0, 1.0));
}

inline void run_hanson_russo(const ExperimentConfig& cfg, Artifacts& out) {
    if (cfg.sizes.size() < 2) throw ConfigError("hanson-russo: sizes must be [window, horizon]");
    const std::size_t a_steps = cfg.sizes[0];
    const std::size_t t_steps = cfg.sizes[1];
    std::vector<double> ratios(cfg.reps);
    parallel_replicas(cfg.reps, cfg.workers, [&](std::size_t r) {
        ratios[r] = hanson_russo_check(RandomStream(cfg.seed, r), a_steps, t_steps).sup_ratio;
    });

    CsvWriter csv(art_path(cfg, "hanson_russo.csv"));
    stamp(csv, cfg);
    csv.meta("window_steps", static_cast<unsigned long long>(a_steps));
    csv.meta("horizon_steps", static_cast<unsigned long long>(t_steps));
    csv.header({"replica", "sup_ratio"});
    for (std::size_t r = 0; r < ratios.size(); ++r)
        csv.row({static_cast<unsigned long>(r), ratios[r]});
    out.artifacts.push_back(cfg.name + "_hanson_russo.csv");

    const double med = median_of(ratios);
    const bool in_band = med >= cfg.th.hr_band_lo && med <= cfg.th.hr_band_hi;
    out.verdicts.push_back(verdict_line("hanson_russo_band", in_band, med, cfg.th.hr_band_hi));
}

inline void run_reverse_series(const ExperimentConfig& cfg, Artifacts& out) {
    const Workbench wb = make_workbench(cfg);
    auto mfun = std::make_shared<MFunction>(wb.op, wb.obs);
    const std::size_t n = cfg.sizes.back();
    const bool harmonic = cfg.scale != "none";
    auto make_xi = [&](RandomStream& rng) {
        const ReverseMDS mds = reverse_mds(mfun, n, rng);
        std::vector<double> xi(mds.increments.size());
        for (std::size_t k = 0; k < xi.size(); ++k)
            xi[k] = harmonic ? mds.increments[k] / static_cast<double>(k + 1) : mds.increments[k];
        return xi;
    };
    const std::vector<std::size_t> checkpoints = {std::max<std::size_t>(2, n / 16),
                                                  std::max<std::size_t>(3, n / 4), n / 2};
    const ReverseSeriesReport rep =
        reverse_series_check(make_xi, checkpoints, cfg.reps, cfg.seed, cfg.workers);

    CsvWriter csv(art_path(cfg, "reverse_series.csv"));
    stamp(csv, cfg);
    csv.meta("scale", harmonic ? "harmonic" : "none");
    csv.header({"checkpoint", "tail_median"});
    for (std::size_t c = 0; c < rep.checkpoints.size(); ++c)
        csv.row({static_cast<unsigned long>(rep.checkpoints[c]), rep.tail_medians[c]});
    out.artifacts.push_back(cfg.name + "_reverse_series.csv");

    const bool expect_shrink = cfg.expect != "nonshrinking";
    out.verdicts.push_back(verdict_line("reverse_series_tails", rep.shrinking == expect_shrink,
                                        rep.shrinking ? 1.0 : 0.0, expect_shrink ? 1.0 : 0.0));
}

inline void run_asip_rate(const ExperimentConfig& cfg, Artifacts& out) {
    const Workbench wb = make_workbench(cfg);
    const VarianceEstimate est = sigma2(*wb.op, wb.obs, cfg.lag_cutoff, 0, cfg.seed);
    if (est.degenerate) throw NumericError("asip-rate: sigma^2 is degenerate for this observable");
    const double sigma = std::sqrt(est.sigma2_series);
    const std::size_t n_max = cfg.sizes.back();

    AsipSourceSpec spec;
    spec.base_f = &wb.obs;
    spec.nu_f = wb.nu_f;
    spec.sigma = sigma;
    spec.p = cfg.p;
    const bool use_blocks = cfg.mode == "blocks" || (cfg.mode == "auto" && !wb.obs.bounded);
    std::shared_ptr<const BlockScheme> blocks;
    MFunctionPtr mfun;
    if (use_blocks) {
        blocks = std::make_shared<BlockScheme>(wb.op, wb.obs, cfg.p, block_level_of(n_max));
        spec.blocks = blocks;
    } else {
        mfun = std::make_shared<MFunction>(wb.op, wb.obs);
        spec.mfun = mfun;
    }
    CouplingOptions opts;
    opts.dt_div = cfg.dt_div;
    opts.fixed_dt = cfg.dt;
    const RateFit fit = asip_rate(spec, cfg.sizes, cfg.reps, cfg.seed, cfg.workers, opts);

    CsvWriter csv(art_path(cfg, "rate.csv"));
    stamp(csv, cfg);
    csv.meta("p", cfg.p);
    csv.meta("sigma", sigma);
    csv.meta("mode", use_blocks ? "blocks" : "stationary");
    csv.meta("exponent", fit.exponent);
    csv.meta("envelope_target", fit.envelope_target);
    csv.header({"n", "median_sup_error", "median_mart_residual", "loglog_ratio"});
    for (std::size_t c = 0; c < fit.ns.size(); ++c)
        csv.row({static_cast<unsigned long>(fit.ns[c]), fit.sup_errors[c], fit.mart_residuals[c],
                 fit.loglog_ratios[c]});
    out.artifacts.push_back(cfg.name + "_rate.csv");

    // replica-0 trace, downsampled
    {
        RandomStream rng(cfg.seed, 0);
        const double v0 = wb.map->inv_cdf(rng.uniform_pos());
        CouplingOptions topts = opts;
        topts.sigma_iid = sigma;
        CouplingTrace trace;
        if (use_blocks) {
            MapMdsSource src(blocks, n_max, v0);
            trace = couple(src, RandomStream(cfg.seed ^ 0x5eedc0de, 0), topts);
        } else {
            MapMdsSource src(mfun, n_max, v0);
            trace = couple(src, RandomStream(cfg.seed ^ 0x5eedc0de, 0), topts);
        }
        CsvWriter tcsv(art_path(cfg, "trace.csv"));
        stamp(tcsv, cfg);
        tcsv.meta("p", cfg.p);
        tcsv.meta("dt", cfg.dt > 0.0 ? cfg.dt : 0.0);
        tcsv.meta("dt_div", cfg.dt_div);
        tcsv.header({"n", "partial_sum", "gaussian_sum", "sup_error", "clock"});
        const std::size_t stride = std::max<std::size_t>(1, n_max / 4096);
        double m = 0.0, z = 0.0, clock = 0.0, sup = 0.0;
        for (std::size_t k = 1; k <= n_max; ++k) {
            m += trace.increments[k - 1];
            z += trace.gaussian[k - 1];
            clock += trace.stop_times[k - 1];
            sup = std::max(sup, std::fabs(m - z));
            if (k % stride == 0 || k == n_max)
                tcsv.row({static_cast<unsigned long>(k), m, z, sup, clock});
        }
        out.artifacts.push_back(cfg.name + "_trace.csv");
    }

    out.verdicts.push_back(verdict_line("asip_exponent", fit.exponent <= cfg.th.asip_exponent_max,
                                        fit.exponent, cfg.th.asip_exponent_max));
    const bool trend = fit.loglog_ratios.back() < fit.loglog_ratios.front();
    out.verdicts.push_back(verdict_line("asip_loglog_trend", trend, fit.loglog_ratios.back(),
                                        fit.loglog_ratios.front()));
}

}  // namespace detail_runner

inline RunResult run_experiment(const ExperimentConfig& cfg) {
    namespace dr = detail_runner;
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(cfg.out_dir);
    RunResult res;
    if (cfg.kind == "orbit") dr::run_orbit(cfg, res);
    else if (cfg.kind == "sigma2") dr::run_sigma2(cfg, res);
    else if (cfg.kind == "clt") dr::run_clt(cfg, res);
    else if (cfg.kind == "lil") dr::run_lil(cfg, res);
    else if (cfg.kind == "duality") dr::run_duality(cfg, res);
    else if (cfg.kind == "phi") dr::run_phi(cfg, res);
    else if (cfg.kind == "kcond") dr::run_kcond(cfg, res);
    else if (cfg.kind == "pfo") dr::run_pfo(cfg, res);
    else if (cfg.kind == "lemma43") dr::run_lemma43(cfg, res);
    else if (cfg.kind == "hanson-russo") dr::run_hanson_russo(cfg, res);
    else if (cfg.kind == "reverse-series") dr::run_reverse_series(cfg, res);
    else if (cfg.kind == "asip-rate") dr::run_asip_rate(cfg, res);
    else throw ConfigError("unknown kind: " + cfg.kind);

    const auto t1 = std::chrono::steady_clock::now();
    res.elapsed_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

    json manifest;
    manifest["library_version"] = kVersion;
    manifest["config"] = cfg.raw;
    manifest["artifacts"] = res.artifacts;
    manifest["verdicts"] = res.verdicts;
    manifest["elapsed_ms"] = res.elapsed_ms;
    std::ofstream mf(std::filesystem::path(cfg.out_dir) / (cfg.name + "_manifest.json"));
    mf << manifest.dump(2) << "\n";
    return res;
}

}  // namespace asiplab
