// blowup-lab: experiment runner around the blow-up laboratory headers.
//
//   blowup-lab resolvent --config exp.ini   tables + asymptotics report
//   blowup-lab solve     --config exp.ini   PDE run persisted to a run dir
//   blowup-lab analyze   --config exp.ini   similarity/profile analysis
//   blowup-lab verify    --config exp.ini   the fourteen-criterion gate
//
// Exit codes: 0 success; 1 hard failure or failed verification; 2 malformed
// config (diagnostics name the offending section.key); 3 solver abort;
// 4 analysis on a run without a resolved blow-up core. --strict additionally
// promotes soft trend-report failures to exit 1. BLOWUP_LAB_THREADS bounds
// the concurrency of the verification gate; everything else is sequential.

#include <CLI11.hpp>

#include <blowup/acceptance.hpp>
#include <blowup/config.hpp>
#include <blowup/io.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

namespace {

using namespace blowup;

int env_threads() {
    const char* env = std::getenv("BLOWUP_LAB_THREADS");
    if (!env) return 1;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (!end || *end != '\0' || v < 1 || v > 64) return 1;
    return static_cast<int>(v);
}

// --- resolvent -------------------------------------------------------------

int cmd_resolvent(const ExperimentConfig& cfg, bool strict) {
    const NonlinearitySpec& sp = cfg.spec;
    double x_lo = cfg.x_lo > 0.0
                      ? cfg.x_lo
                      : std::max(5.0, 2.0 * positivity_threshold(sp));
    ResolventTable tb = build_table(sp, x_lo, cfg.x_hi, cfg.quad_tol);

    std::string dir = cfg.out_dir + "/resolvent-" + run_id(cfg);
    std::filesystem::create_directories(dir);

    std::vector<double> fv(tb.x.size()), lv(tb.x.size());
    for (std::size_t i = 0; i < tb.x.size(); ++i) {
        fv[i] = eval_f(sp, tb.x[i]).f;
        lv[i] = eval_L(sp, tb.x[i]).L;
    }
    write_csv(dir + "/g_table.csv", {"X", "G", "f", "L"}, {tb.x, tb.g, fv, lv});

    std::vector<double> ladder;
    for (double lx = cfg.ladder_lo; lx <= cfg.ladder_hi + 1e-9;
         lx += cfg.ladder_step)
        ladder.push_back(std::exp(lx));
    AsymptoticsReport rep = check_asymptotics(sp, ladder);
    write_json_file(dir + "/asymptotics.json", asymptotics_json(rep));

    std::vector<std::string> header = {"X"};
    std::vector<std::vector<double>> cols = {rep.series.front().x};
    for (const TrendSeries& s : rep.series) {
        header.push_back(s.name);
        cols.push_back(s.value);
    }
    write_csv(dir + "/asymptotics.csv", header, cols);

    HypothesisReport hyp = validate_hypotheses(sp, cfg.run.n);
    write_json_file(dir + "/hypotheses.json", hypotheses_json(hyp));

    json man = manifest_preamble("resolvent", cfg);
    man["table"] = {{"x_lo", tb.x_lo()}, {"x_hi", tb.x_hi()},
                    {"nodes", tb.x.size()}, {"tail_coef", tb.tail_coef}};
    man["asymptotics_all_pass"] = rep.all_pass;
    man["hypotheses_all_pass"] = hyp.all_pass;
    man["files"] = {"g_table.csv", "asymptotics.csv", "asymptotics.json",
                    "hypotheses.json"};
    write_json_file(dir + "/manifest.json", man);

    std::printf("resolvent: %zu-node table on [%.3g, %.3g] for %s\n",
                tb.x.size(), tb.x_lo(), tb.x_hi(), family_name(sp.family));
    for (const TrendSeries& s : rep.series)
        std::printf("  %-18s %s  (last %.6g)\n", s.name.c_str(),
                    s.pass ? "pass" : "FAIL", s.value.back());
    std::printf("  hypotheses: %s\n  -> %s\n",
                hyp.all_pass ? "pass" : "FAIL", dir.c_str());
    if (!rep.all_pass || !hyp.all_pass) {
        std::printf("  (trend failures are soft; rerun with --strict to gate "
                    "on them)\n");
        if (strict) return 1;
    }
    return 0;
}

// --- solve -------------------------------------------------------------------

int cmd_solve(const ExperimentConfig& cfg) {
    RunRecord rec = solve(cfg.run);
    std::string dir = run_directory(cfg);
    save_run(cfg, rec, dir);
    std::printf("solve: status=%s", run_status_name(rec.status));
    if (rec.has_estimate)
        std::printf("  T_hat=%.17g  spread=%.3g", rec.estimate.T_hat,
                    rec.estimate.spread);
    std::printf("  snapshots=%zu\n  -> %s\n", rec.snapshots.size(), dir.c_str());
    bool aborted = rec.status == RunStatus::DtUnderflow ||
                   rec.status == RunStatus::StepBudgetExhausted;
    return aborted ? 3 : 0;
}

// --- analyze -----------------------------------------------------------------

int cmd_analyze(const ExperimentConfig& cfg, bool strict) {
    std::string dir = run_directory(cfg);
    RunRecord rec;
    try {
        rec = load_run(dir);
        std::printf("analyze: loaded %s\n", dir.c_str());
    } catch (const std::exception&) {
        std::printf("analyze: no persisted run at %s, solving first\n",
                    dir.c_str());
        rec = solve(cfg.run);
        save_run(cfg, rec, dir);
    }

    if (rec.status != RunStatus::BlewUp || !rec.has_estimate) {
        std::fprintf(stderr,
                     "analyze: run status '%s'%s leaves no blow-up core to "
                     "analyze\n", run_status_name(rec.status),
                     rec.has_estimate ? "" : " (no estimate)");
        return 4;
    }
    std::vector<SimilarityFrame> frames = frames_from_record(rec, cfg.y_max);
    if (cfg.max_frames > 0 &&
        frames.size() > static_cast<std::size_t>(cfg.max_frames))
        frames.erase(frames.begin(), frames.end() - cfg.max_frames);
    if (frames.size() < 8 || frames.back().s - frames.front().s < 3.0) {
        std::fprintf(stderr,
                     "analyze: %zu similarity frames spanning delta-s %.2f "
                     "(need >= 8 over >= 3); the core is unresolved\n",
                     frames.size(),
                     frames.empty() ? 0.0 : frames.back().s - frames.front().s);
        return 4;
    }

    const NonlinearitySpec& sp = rec.config.spec;
    std::string adir = dir + "/analysis";
    std::filesystem::create_directories(adir);
    ResolventTable tb =
        build_table(sp, std::max(0.5, 1.2 * positivity_threshold(sp)),
                    4.0 * rec.m_value.back(), cfg.quad_tol);
    HermiteBasis basis = make_basis(rec.config.n, 96, cfg.y_max);
    const bool all_frames = cfg.max_frames == 0;

    // spectral series + neutral mode (uncertainty bands need the full record)
    std::vector<SpectralCoefficients> series = spectral_series(frames, basis);
    NeutralModeTrack track = all_frames
                                 ? neutral_mode_track(rec, basis)
                                 : neutral_mode_track(frames, basis, sp.p);
    {
        std::vector<double> s, a, b, tn, tg, sb, target;
        for (std::size_t k = 0; k < series.size(); ++k) {
            s.push_back(series[k].s);
            a.push_back(series[k].a);
            b.push_back(series[k].b);
            tn.push_back(series[k].theta_norm);
            tg.push_back(series[k].theta_grad_norm);
            sb.push_back(track.sb[k]);
            target.push_back(track.target);
        }
        write_csv(adir + "/spectral.csv",
                  {"s", "a", "b", "theta_norm", "theta_grad_norm", "s_b",
                   "target"}, {s, a, b, tn, tg, sb, target});
    }

    std::vector<double> rs, rsup, rh1, hs, hv, hbeta;
    for (const SimilarityFrame& fr : frames) {
        TheoremResidual res = theorem1_residual(fr, cfg.residual_radius);
        rs.push_back(fr.s);
        rsup.push_back(res.sup);
        rh1.push_back(res.h1);
        HodS h = h_of_s(sp, tb, fr.s);
        hs.push_back(fr.s);
        hv.push_back(h.h);
        hbeta.push_back(h.beta);
    }
    write_csv(adir + "/residuals.csv", {"s", "sup", "h1"}, {rs, rsup, rh1});
    write_csv(adir + "/h_of_s.csv", {"s", "h", "beta"}, {hs, hv, hbeta});

    LowerDecaySeries decay = all_frames ? lower_decay_check(rec, basis)
                                        : lower_decay_check(frames, basis);
    write_csv(adir + "/lower_decay.csv", {"s", "s_phi_norm"},
              {decay.s, decay.value});

    {
        std::vector<double> t, m, ps;
        for (std::size_t k = 0; k < rec.m_time.size(); ++k) {
            double arg = rec.estimate.T_hat - rec.m_time[k];
            try {
                double v = G_inv(tb, arg);
                t.push_back(rec.m_time[k]);
                m.push_back(rec.m_value[k]);
                ps.push_back(v);
            } catch (const std::out_of_range&) {
                continue; // before the table window or past T_hat
            }
        }
        write_csv(adir + "/psi.csv", {"t", "m", "psi"}, {t, m, ps});
    }

    // profile comparisons per the [verification] checks
    json cmp;
    std::vector<ComparisonSample> all_samples;
    std::string soft;
    {
        std::vector<ProfilePrediction> preds;
        if (cfg.check_enabled("global")) preds.push_back(global_prediction(tb));
        if (cfg.check_enabled("final")) preds.push_back(final_prediction(tb));
        if (cfg.check_enabled("spacetime"))
            preds.push_back(spacetime_prediction(tb));
        if (cfg.check_enabled("explicit"))
            preds.push_back(explicit_prediction(sp));
        if (!preds.empty()) {
            ComparisonWindow win;
            win.tau_lo = cfg.tau_lo;
            win.tau_hi = cfg.tau_hi;
            win.K = cfg.window_K;
            win.keep_samples = true;
            ComparisonReport rep = verify_against_run(rec, preds, win);
            cmp["profiles"] = comparison_json(rep);
            all_samples.insert(all_samples.end(), rep.samples.begin(),
                               rep.samples.end());
        }
    }
    if (cfg.check_enabled("upper_h")) {
        double gate = cfg.m_gate > 0.0 ? cfg.m_gate : aux_gate(sp);
        JCalibration cal = fit_j_parameters(rec, gate);
        std::vector<ProfilePrediction> preds = {
            upper_h_prediction(sp, cal.A), final_upper_h_prediction(sp, cal.A)};
        ComparisonWindow win;
        win.tau_hi = cfg.upper_tau_hi;
        win.x_max = 0.5 * rec.config.domain.R;
        win.m_gate = gate;
        win.upper_slack = cfg.upper_slack;
        win.keep_samples = true;
        ComparisonReport rep = verify_against_run(rec, preds, win);
        cmp["upper"] = comparison_json(rep);
        cmp["upper"]["A"] = cal.A;
        all_samples.insert(all_samples.end(), rep.samples.begin(),
                           rep.samples.end());
        if (rep.entries[0].violation_fraction >= 0.01)
            soft += " upper-bound-violations";
    }
    ProfileTrend trend;
    bool have_trend = false;
    if (cfg.check_enabled("trend")) {
        trend = global_profile_trend(rec, tb, cfg.trend_k_lo, cfg.trend_k_hi);
        cmp["trend"] = profile_trend_json(trend);
        have_trend = true;
        if (!trend.approaching_one) soft += " profile-trend";
    }
    if (!cmp.is_null()) write_json_file(adir + "/comparison.json", cmp);
    if (!all_samples.empty())
        write_samples_csv(adir + "/profile_ratios.csv", all_samples);

    write_plot_m_vs_psi(adir + "/plot_m_vs_psi.gp");
    write_plot_neutral_mode(adir + "/plot_neutral_mode.gp");
    if (!all_samples.empty())
        write_plot_profile_ratio(adir + "/plot_profile_ratio.gp");

    if (!track.gap_shrinking) soft += " neutral-gap";
    if (!decay.bounded_below) soft += " lower-decay";

    json man = manifest_preamble("analyze", cfg);
    man["status"] = run_status_name(rec.status);
    man["T_hat"] = rec.estimate.T_hat;
    man["spread"] = rec.estimate.spread;
    man["frames"] = frames.size();
    man["neutral_mode"] = {{"target", track.target},
                           {"s_b_final", track.sb.back()},
                           {"final_gap", track.final_gap},
                           {"final_gap_lo", track.final_gap_lo},
                           {"final_gap_hi", track.final_gap_hi},
                           {"gap_shrinking", track.gap_shrinking}};
    man["residual"] = {{"first", rsup.front()}, {"last", rsup.back()}};
    man["lower_decay"] = {{"bounded_below", decay.bounded_below},
                          {"final", decay.value.back()},
                          {"final_lo", decay.final_lo},
                          {"final_hi", decay.final_hi}};
    if (have_trend) man["trend"] = profile_trend_json(trend);
    man["soft_failures"] = detail::trim(soft);
    write_json_file(adir + "/manifest.json", man);

    std::printf("analyze: %zu frames, s in [%.3g, %.3g]\n", frames.size(),
                frames.front().s, frames.back().s);
    std::printf("  neutral mode: s*b -> %.4f (target %.4f, gap %.3f%s)\n",
                track.sb.back(), track.target, track.final_gap,
                track.gap_shrinking ? ", shrinking" : ", NOT shrinking");
    std::printf("  residual: %.4g -> %.4g; lower decay: %s (%.4f)\n",
                rsup.front(), rsup.back(),
                decay.bounded_below ? "bounded below" : "NOT bounded below",
                decay.value.back());
    if (have_trend) {
        std::printf("  profile trend medians:");
        for (double m : trend.median_ratio) std::printf(" %.4f", m);
        std::printf(" (%s)\n", trend.approaching_one ? "approaching one"
                                                     : "NOT approaching one");
    }
    std::printf("  -> %s\n", adir.c_str());
    if (!soft.empty()) {
        std::printf("  soft failures:%s%s\n", soft.c_str(),
                    strict ? "" : " (--strict gates on these)");
        if (strict) return 1;
    }
    return 0;
}

// --- verify ------------------------------------------------------------------

int cmd_verify(const ExperimentConfig& cfg, int threads) {
    AcceptanceBudget budget;
    std::printf("verify: building reference state (n=1 and n=3 plateau runs, "
                "%d nodes)...\n", budget.ref_nodes);
    std::fflush(stdout);
    AcceptanceContext cx = build_acceptance_context(budget, cfg.seed);
    std::printf("verify: reference state ready in %.1fs; %d thread(s)\n\n",
                cx.build_seconds, threads);
    std::fflush(stdout);
    std::vector<CriterionResult> results = run_acceptance(cx, threads);

    int failed = 0;
    json arr = json::array();
    for (const CriterionResult& r : results) {
        std::puts(criterion_line(r).c_str());
        if (!r.pass) ++failed;
        json row;
        row["index"] = r.index;
        row["name"] = r.name;
        row["pass"] = r.pass;
        row["seconds"] = r.seconds;
        row["detail"] = r.detail;
        arr.push_back(row);
    }
    json man = manifest_preamble("verify", cfg);
    man["threads"] = threads;
    man["reference_seconds"] = cx.build_seconds;
    man["criteria"] = arr;
    man["all_pass"] = failed == 0;
    std::string dir = cfg.out_dir + "/verify";
    write_json_file(dir + "/criteria.json", man);
    std::printf("\n%zu criteria, %d passed, %d failed\n  -> %s/criteria.json\n",
                results.size(), static_cast<int>(results.size()) - failed,
                failed, dir.c_str());
    return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"blow-up laboratory: resolvents, PDE runs, similarity "
                 "analysis, profile verification"};
    app.require_subcommand(1);

    std::string config_path, out_override;
    bool strict = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (INI)")
            ->required();
        sub->add_flag("--strict", strict,
                      "promote soft trend-report failures to exit 1");
        sub->add_option("--out", out_override,
                        "override the [output] directory");
    };
    CLI::App* c_res = app.add_subcommand(
        "resolvent", "build the resolvent table and asymptotics report");
    CLI::App* c_sol = app.add_subcommand(
        "solve", "run the radial solver and persist the run directory");
    CLI::App* c_ana = app.add_subcommand(
        "analyze", "similarity and profile analysis of a persisted run");
    CLI::App* c_ver = app.add_subcommand(
        "verify", "run the fourteen-criterion acceptance gate");
    for (CLI::App* sub : {c_res, c_sol, c_ana, c_ver}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    std::vector<std::string> errors;
    blowup::ExperimentConfig cfg =
        blowup::load_config_file(config_path, errors);
    if (!errors.empty()) {
        for (const std::string& e : errors)
            std::fprintf(stderr, "config error: %s\n", e.c_str());
        return 2;
    }
    if (!out_override.empty()) {
        cfg.out_dir = out_override;
        for (auto& [key, value] : cfg.echo)
            if (key == "output.out_dir") value = out_override;
        std::erase(cfg.defaulted, std::string("output.out_dir"));
    }

    try {
        if (*c_res) return cmd_resolvent(cfg, strict);
        if (*c_sol) return cmd_solve(cfg);
        if (*c_ana) return cmd_analyze(cfg, strict);
        if (*c_ver) return cmd_verify(cfg, env_threads());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
