// Command-line front end: simulate traces, run the recovery pipeline,
// evaluate against ground truth, and benchmark stage latency.
//
// Exit codes: 0 success, 2 input error, 3 no viable output.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "respirfi/biomarkers.hpp"
#include "respirfi/dsp.hpp"
#include "respirfi/eval_metrics.hpp"
#include "respirfi/pipeline.hpp"

namespace {

using namespace respirfi;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 2;
constexpr int kExitNoViableOutput = 3;

// Truth displacement over [start, start+len) resampled to a uniform grid.
// Displacement rises on inhalation, so the result is oriented.
Waveform truth_window(const GroundTruthTrace& truth, double start_s, double len_s,
                      double fs_hz) {
    Waveform w;
    w.sample_rate_hz = fs_hz;
    w.sign_convention = SignConvention::oriented;
    const auto n = static_cast<std::size_t>(std::llround(len_s * fs_hz));
    w.samples.reserve(n);
    const auto& t = truth.timestamps_s;
    const auto& v = truth.displacement;
    for (std::size_t i = 0; i < n; ++i) {
        const double q = start_s + static_cast<double>(i) / fs_hz;
        const auto it = std::lower_bound(t.begin(), t.end(), q);
        if (it == t.begin()) {
            w.samples.push_back(v.front());
        } else if (it == t.end()) {
            w.samples.push_back(v.back());
        } else {
            const auto hi = static_cast<std::size_t>(it - t.begin());
            const double f = (q - t[hi - 1]) / (t[hi] - t[hi - 1]);
            w.samples.push_back(v[hi - 1] + f * (v[hi] - v[hi - 1]));
        }
    }
    return w;
}

std::vector<double> decimate_to(const std::vector<double>& x, double fs, double target) {
    const auto stride =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fs / target)));
    std::vector<double> out;
    for (std::size_t i = 0; i < x.size(); i += stride) out.push_back(x[i]);
    return out;
}

json agreement_json(const AgreementStats& s) {
    json j;
    j["mean_bias"] = s.mean_bias;
    j["sd_diff"] = s.sd_diff;
    j["loa_low"] = s.loa_low;
    j["loa_high"] = s.loa_high;
    j["pct_within_loa"] = s.pct_within_loa;
    return j;
}

void dump_bnr_csv(const WaveformMatrix& gm, const std::vector<double>& ratios,
                  const BnrTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(Err::io_failure, "cannot open " + path.string());
    out << "# threshold=" << table.threshold_used << '\n';
    out << "row,subcarrier,freq_hz,bnr,retained\n";
    std::vector<char> kept(gm.n_rows(), 0);
    for (int r : table.retained) kept[static_cast<std::size_t>(r)] = 1;
    for (std::size_t r = 0; r < gm.n_rows(); ++r)
        out << r << ',' << gm.subcarrier_index_map[r] << ',' << gm.freqs_hz[r] << ','
            << ratios[r] << ',' << int(kept[r]) << '\n';
}

void dump_groups_csv(const WaveformMatrix& kept, const SimilarityGraph& graph,
                     const Partition& part, const std::filesystem::path& assign_path,
                     const std::filesystem::path& matrix_path) {
    // Rows reordered group1, group2, discarded: the block structure of the
    // reordered similarity matrix shows the grouping.
    std::vector<int> order;
    std::vector<std::string> label;
    for (int r : part.group1) { order.push_back(r); label.push_back("group1"); }
    for (int r : part.group2) { order.push_back(r); label.push_back("group2"); }
    for (int r : part.discarded) { order.push_back(r); label.push_back("discarded"); }

    std::ofstream out(assign_path);
    if (!out) throw Error(Err::io_failure, "cannot open " + assign_path.string());
    out << "row,subcarrier,freq_hz,group,v_score\n";
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto r = static_cast<std::size_t>(order[i]);
        out << order[i] << ',' << kept.subcarrier_index_map[r] << ',' << kept.freqs_hz[r]
            << ',' << label[i] << ',' << part.scores[r] << '\n';
    }

    std::ofstream mat(matrix_path);
    if (!mat) throw Error(Err::io_failure, "cannot open " + matrix_path.string());
    mat << "# rows/cols ordered group1,group2,discarded\n";
    for (int ri : order) {
        for (std::size_t c = 0; c < order.size(); ++c) {
            if (c) mat << ',';
            mat << graph.w[static_cast<std::size_t>(ri)][static_cast<std::size_t>(order[c])];
        }
        mat << '\n';
    }
}

int cmd_simulate(const std::string& scene_path, double duration, double rate,
                 int subcarriers, std::uint64_t seed, double center_freq,
                 double bandwidth, const std::string& out_path,
                 const std::string& truth_path) {
    const SceneSpec scene = scene_from_json_file(scene_path);
    const SimResult sim =
        simulate_trace(scene, duration, rate, subcarriers, seed, center_freq, bandwidth);
    write_trace(sim.trace, out_path);
    if (!truth_path.empty()) write_truth(sim.truth, truth_path);
    std::cout << "wrote " << out_path << " (" << sim.trace.n_samples() << " samples x "
              << sim.trace.n_subcarriers() << " subcarriers)\n";
    return kExitOk;
}

int cmd_run(const std::string& input, const std::string& config_path,
            const std::string& out_path, const std::string& report_path,
            bool dump_bnr, bool dump_groups, double bnr_floor_override) {
    const CsiTrace trace = read_trace(input);
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = config_from_json_file(config_path);
    if (bnr_floor_override >= 0.0) cfg.bnr_floor = bnr_floor_override;
    cfg.validate();

    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<WindowResult> windows = run_stream(trace, cfg);
    const double elapsed_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!report_path.empty()) write_window_reports(windows, report_path);
    if (!out_path.empty()) {
        const StitchedWaveform stitched =
            stitch_waveforms(windows, cfg, trace.sample_rate_hz);
        write_waveform_csv(stitched, trace.sample_rate_hz, out_path);
    }

    if ((dump_bnr || dump_groups) && !windows.empty()) {
        // Diagnostics reflect the first window.
        const auto win = static_cast<std::size_t>(
            std::llround(cfg.window_s * trace.sample_rate_hz));
        const CsiTrace slice = trace.slice(0, win);
        const std::filesystem::path stem =
            report_path.empty() ? std::filesystem::path("respirfi")
                                : std::filesystem::path(report_path).replace_extension();
        try {
            const WaveformMatrix gm =
                extract_preliminary(slice, cfg.sg_window, cfg.sg_order, cfg.lowess_span);
            const std::vector<double> ratios = screening_ratios(slice, gm, cfg);
            const BnrTable table = select(ratios, cfg.bnr_percentile, cfg.bnr_floor);
            if (dump_bnr)
                dump_bnr_csv(gm, ratios, table, stem.string() + ".bnr.csv");
            if (dump_groups) {
                const WaveformMatrix kept = gm.subset(table.retained);
                const SimilarityGraph graph = build_similarity(kept, cfg.sim_threshold);
                const auto [g1, g2] = partition_groups(graph);
                const Partition part = refine(graph, g1, g2, cfg.keep_fraction);
                dump_groups_csv(kept, graph, part, stem.string() + ".groups.csv",
                                stem.string() + ".similarity.csv");
            }
        } catch (const Error& e) {
            std::cerr << "diagnostic dump skipped: " << e.what() << '\n';
        }
    }

    std::size_t ok_count = 0;
    for (const auto& w : windows)
        if (w.reason == ReasonCode::ok) ++ok_count;
    std::cout << ok_count << "/" << windows.size() << " windows ok, "
              << elapsed_s << " s ("
              << static_cast<double>(windows.size()) / elapsed_s << " windows/s)\n";
    return ok_count > 0 ? kExitOk : kExitNoViableOutput;
}

int cmd_eval(const std::string& waveform_path, const std::string& report_path,
             const std::string& truth_path, const std::string& out_path) {
    const WaveformFile wf = read_waveform_csv(waveform_path);
    const GroundTruthTrace truth = read_truth(truth_path);
    const std::vector<BiomarkerReport> windows = read_report(report_path);

    json metrics;
    const AlignedPair aligned = align_for_pcc(wf.waveform, wf.start_s, truth);
    metrics["waveform_pcc"] = pcc(aligned.x, aligned.y);
    metrics["lag_s"] = aligned.lag_s;

    std::vector<double> rr_est, rr_true;
    std::vector<double> ie_est, ie_true, tvv_est, tvv_true, apen_est, apen_true;
    for (const BiomarkerReport& w : windows) {
        Waveform tw = truth_window(truth, w.window_start_s, w.window_len_s,
                                   wf.waveform.sample_rate_hz);
        BreathSegmentation seg;
        try {
            seg = detect_breaths(tw);
        } catch (const Error&) {
            continue;
        }
        if (w.rr_bpm) {
            rr_est.push_back(*w.rr_bpm);
            rr_true.push_back(respiratory_rate(seg));
        }
        if (w.ie_ratio && !seg.breaths.empty()) {
            ie_est.push_back(*w.ie_ratio);
            ie_true.push_back(ie_ratio(tw, seg));
        }
        if (w.tv_variability && seg.breaths.size() >= 2) {
            // Both sides normalized so the variances are comparable.
            Waveform tz = tw;
            tz.samples = zscore(tw.samples);
            tvv_est.push_back(*w.tv_variability);
            tvv_true.push_back(tv_variability(tz, seg));
        }
        if (w.apen) {
            const std::vector<double> slow =
                decimate_to(tw.samples, tw.sample_rate_hz, 10.0);
            if (slow.size() >= 50) {
                apen_est.push_back(*w.apen);
                apen_true.push_back(apen(slow));
            }
        }
    }

    metrics["n_windows"] = windows.size();
    metrics["rr_mae_bpm"] = rr_est.empty() ? json(nullptr) : json(mae(rr_est, rr_true));
    metrics["ie_mse"] = ie_est.empty() ? json(nullptr) : json(mse(ie_est, ie_true));
    metrics["tvv_mse"] = tvv_est.empty() ? json(nullptr) : json(mse(tvv_est, tvv_true));
    metrics["apen_mse"] = apen_est.empty() ? json(nullptr) : json(mse(apen_est, apen_true));

    json ba;
    ba["ie_ratio"] =
        ie_est.size() >= 3 ? agreement_json(bland_altman(ie_est, ie_true)) : json(nullptr);
    ba["tv_variability"] =
        tvv_est.size() >= 3 ? agreement_json(bland_altman(tvv_est, tvv_true)) : json(nullptr);
    ba["apen"] =
        apen_est.size() >= 3 ? agreement_json(bland_altman(apen_est, apen_true)) : json(nullptr);
    metrics["bland_altman"] = std::move(ba);

    std::ofstream out(out_path);
    if (!out) throw Error(Err::io_failure, "cannot open " + out_path);
    out << metrics.dump(2) << '\n';
    std::cout << "waveform_pcc=" << metrics["waveform_pcc"] << " rr_mae_bpm="
              << metrics["rr_mae_bpm"] << '\n';
    return rr_est.empty() && ie_est.empty() ? kExitNoViableOutput : kExitOk;
}

int cmd_bench(int subcarriers, double window_s) {
    PipelineConfig cfg;
    const BenchReport rep = bench(cfg, subcarriers, window_s);
    json j;
    j["n_subcarriers"] = rep.n_subcarriers;
    j["window_samples"] = rep.window_samples;
    j["preprocess_ms"] = rep.preprocess_ms;
    j["select_ms"] = rep.select_ms;
    j["group_ms"] = rep.group_ms;
    j["phase_ms"] = rep.phase_ms;
    j["biomarker_ms"] = rep.biomarker_ms;
    j["total_ms"] = rep.total_ms;
    j["select_ms_2k"] = rep.select_ms_2k;
    j["group_ms_empty"] = rep.group_ms_empty;
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"single-antenna WiFi respiratory monitoring pipeline"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "synthesize a CSI trace from a scene");
    std::string scene_path, sim_out, sim_truth;
    double duration = 180.0, rate = 100.0, center_freq = 6.025e9, bandwidth = 160e6;
    int subcarriers = 2000;
    std::uint64_t seed = 1;
    sim->add_option("--scene", scene_path, "scene JSON")->required();
    sim->add_option("--duration", duration, "seconds");
    sim->add_option("--rate", rate, "samples per second");
    sim->add_option("--subcarriers", subcarriers, "subcarrier count");
    sim->add_option("--seed", seed, "noise seed");
    sim->add_option("--center-freq", center_freq, "center frequency, Hz");
    sim->add_option("--bandwidth", bandwidth, "bandwidth, Hz");
    sim->add_option("--out", sim_out, "output trace CSV")->required();
    sim->add_option("--truth", sim_truth, "output truth CSV");

    auto* run = app.add_subcommand("run", "recover waveform and biomarkers from a trace");
    std::string run_input, run_config, run_out, run_report;
    bool dump_bnr = false, dump_groups = false;
    double bnr_floor_override = -1.0;
    run->add_option("--input", run_input, "trace CSV")->required();
    run->add_option("--config", run_config, "pipeline config JSON");
    run->add_option("--out", run_out, "output waveform CSV");
    run->add_option("--report", run_report, "output report JSON");
    run->add_option("--bnr-floor", bnr_floor_override,
                    "override the BNR quality floor (sensitivity knob)");
    run->add_flag("--dump-bnr", dump_bnr, "dump the first window's BNR table");
    run->add_flag("--dump-groups", dump_groups,
                  "dump the first window's similarity matrix and partition");

    auto* eval = app.add_subcommand("eval", "compare pipeline output to ground truth");
    std::string eval_wave, eval_report, eval_truth, eval_out;
    eval->add_option("--waveform", eval_wave, "waveform CSV")->required();
    eval->add_option("--report", eval_report, "report JSON")->required();
    eval->add_option("--truth", eval_truth, "truth CSV")->required();
    eval->add_option("--out", eval_out, "metrics JSON")->required();

    auto* bench_cmd = app.add_subcommand("bench", "per-stage latency benchmark");
    int bench_k = 2000;
    double bench_window = 15.0;
    bench_cmd->add_option("--subcarriers", bench_k, "subcarrier count");
    bench_cmd->add_option("--window-s", bench_window, "window length, seconds");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(scene_path, duration, rate, subcarriers, seed, center_freq,
                                bandwidth, sim_out, sim_truth);
        if (run->parsed())
            return cmd_run(run_input, run_config, run_out, run_report, dump_bnr,
                           dump_groups, bnr_floor_override);
        if (eval->parsed())
            return cmd_eval(eval_wave, eval_report, eval_truth, eval_out);
        if (bench_cmd->parsed())
            return cmd_bench(bench_k, bench_window);
    } catch (const respirfi::Error& e) {
        std::cerr << "error [" << err_name(e.code()) << "]: " << e.what() << '\n';
        return e.code() == Err::no_viable_subcarriers ? kExitNoViableOutput
                                                      : kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    return kExitInputError;
}
