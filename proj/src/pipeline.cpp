#include "respirfi/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "respirfi/dsp.hpp"
#include "respirfi/eval_metrics.hpp"

namespace respirfi {

namespace {

using nlohmann::json;

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::vector<double> decimate(const std::vector<double>& x, double fs, double target_hz) {
    const auto stride = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(fs / target_hz)));
    std::vector<double> out;
    out.reserve(x.size() / stride + 1);
    for (std::size_t i = 0; i < x.size(); i += stride) out.push_back(x[i]);
    return out;
}

std::vector<double> sg_column(const CsiTrace& slice, int subcarrier, int window, int order) {
    std::vector<double> col(slice.n_samples());
    for (std::size_t i = 0; i < col.size(); ++i)
        col[i] = slice.amplitudes[i][static_cast<std::size_t>(subcarrier)];
    return sg_filter(col, window, order);
}

PathSpec path_from_json(const json& j) {
    PathSpec p;
    const double mag = j.at("attenuation_mag").get<double>();
    const double phase = j.value("attenuation_phase_rad", 0.0);
    p.attenuation = std::polar(mag, phase);
    p.length_m = j.at("length_m").get<double>();
    return p;
}

json optional_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

} // namespace

void PipelineConfig::validate() const {
    if (window_s < 15.0 || window_s > 60.0)
        throw Error(Err::invalid_value, "window_s outside [15, 60]");
    if (hop_s <= 0.0 || hop_s > window_s)
        throw Error(Err::invalid_value, "hop_s must be in (0, window_s]");
    if (sg_window < 3 || sg_window % 2 == 0 || sg_order < 0 || sg_order >= sg_window)
        throw Error(Err::invalid_value, "bad SG parameters");
    if (!(lowess_span > 0.0) || lowess_span > 1.0)
        throw Error(Err::invalid_value, "lowess_span outside (0, 1]");
    if (bnr_band_lo_hz <= 0.0 || bnr_band_hi_hz <= bnr_band_lo_hz)
        throw Error(Err::invalid_value, "bad BNR band");
    if (bnr_percentile < 0.0 || bnr_percentile > 100.0)
        throw Error(Err::invalid_value, "bnr_percentile outside [0, 100]");
    if (sim_threshold < 0.0 || sim_threshold > 1.0)
        throw Error(Err::invalid_value, "sim_threshold outside [0, 1]");
    if (keep_fraction < 0.0 || keep_fraction > 1.0)
        throw Error(Err::invalid_value, "keep_fraction outside [0, 1]");
    if (gaussian_sigma < 0.0)
        throw Error(Err::invalid_value, "gaussian_sigma must be >= 0");
    if (min_breath_dist_s <= 0.0 || prominence_frac < 0.0)
        throw Error(Err::invalid_value, "bad breath-detection parameters");
    if (apen_m < 1 || apen_r_frac <= 0.0 || apen_downsample_hz <= 0.0)
        throw Error(Err::invalid_value, "bad ApEn parameters");
    if (degraded_min_retained < 1)
        throw Error(Err::invalid_value, "degraded_min_retained must be >= 1");
}

PipelineConfig config_from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Err::io_failure, "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(Err::malformed_header, std::string("bad config JSON: ") + e.what());
    }
    PipelineConfig cfg;
    cfg.window_s = j.value("window_s", cfg.window_s);
    cfg.hop_s = j.value("hop_s", cfg.hop_s);
    cfg.sg_window = j.value("sg_window", cfg.sg_window);
    cfg.sg_order = j.value("sg_order", cfg.sg_order);
    cfg.lowess_span = j.value("lowess_span", cfg.lowess_span);
    if (j.contains("bnr_band")) {
        cfg.bnr_band_lo_hz = j["bnr_band"].at(0).get<double>();
        cfg.bnr_band_hi_hz = j["bnr_band"].at(1).get<double>();
    }
    cfg.bnr_floor = j.value("bnr_floor", cfg.bnr_floor);
    cfg.bnr_percentile = j.value("bnr_percentile", cfg.bnr_percentile);
    cfg.sim_threshold = j.value("sim_threshold", cfg.sim_threshold);
    cfg.keep_fraction = j.value("keep_fraction", cfg.keep_fraction);
    cfg.gaussian_sigma = j.value("gaussian_sigma", cfg.gaussian_sigma);
    cfg.min_breath_dist_s = j.value("min_breath_dist_s", cfg.min_breath_dist_s);
    cfg.prominence_frac = j.value("prominence_frac", cfg.prominence_frac);
    cfg.apen_m = j.value("apen_m", cfg.apen_m);
    cfg.apen_r_frac = j.value("apen_r_frac", cfg.apen_r_frac);
    cfg.apen_downsample_hz = j.value("apen_downsample_hz", cfg.apen_downsample_hz);
    cfg.degraded_min_retained = j.value("degraded_min_retained", cfg.degraded_min_retained);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.validate();
    return cfg;
}

SceneSpec scene_from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Err::io_failure, "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(Err::malformed_header, std::string("bad scene JSON: ") + e.what());
    }
    SceneSpec scene;
    try {
        scene.los = path_from_json(j.at("los"));
        scene.chest_rest = path_from_json(j.at("chest_rest"));
        if (j.contains("extra_static_paths"))
            for (const auto& p : j["extra_static_paths"])
                scene.extra_static_paths.push_back(path_from_json(p));
        scene.vartheta_rad = j.value("vartheta_rad", 0.0);
        scene.chest_delta_m = j.at("chest_delta_m").get<double>();
        const auto& b = j.at("breath");
        scene.breath.rate_bpm = b.at("rate_bpm").get<double>();
        scene.breath.ie_ratio = b.value("ie_ratio", 1.0);
        if (b.contains("amplitude_modulation")) {
            scene.breath.amplitude_modulation.clear();
            if (b["amplitude_modulation"].is_number()) {
                scene.breath.amplitude_modulation.push_back(
                    b["amplitude_modulation"].get<double>());
            } else {
                for (const auto& a : b["amplitude_modulation"])
                    scene.breath.amplitude_modulation.push_back(a.get<double>());
            }
        }
        const std::string shape = b.value("shape", "asymmetric_raised_cosine");
        if (shape == "sinusoid")
            scene.breath.shape = BreathProfile::Shape::sinusoid;
        else if (shape == "asymmetric_raised_cosine")
            scene.breath.shape = BreathProfile::Shape::asymmetric_raised_cosine;
        else
            throw Error(Err::invalid_scene, "unknown breath shape: " + shape);
        if (j.contains("noise_snr_db") && !j["noise_snr_db"].is_null())
            scene.noise_snr_db = j["noise_snr_db"].get<double>();
    } catch (const json::exception& e) {
        throw Error(Err::invalid_scene, std::string("scene JSON: ") + e.what());
    }
    scene.validate();
    return scene;
}

std::vector<double> screening_ratios(const CsiTrace& slice, const WaveformMatrix& gm,
                                     const PipelineConfig& cfg) {
    std::vector<double> out(gm.n_rows());
    for (std::size_t r = 0; r < gm.n_rows(); ++r) {
        const std::vector<double> col =
            sg_column(slice, gm.subcarrier_index_map[r], cfg.sg_window, cfg.sg_order);
        out[r] = bnr(zscore(col), slice.sample_rate_hz, cfg.bnr_band_lo_hz,
                     cfg.bnr_band_hi_hz);
    }
    return out;
}

const char* reason_name(ReasonCode r) {
    switch (r) {
        case ReasonCode::ok: return "ok";
        case ReasonCode::no_viable_subcarriers: return "no_viable_subcarriers";
        case ReasonCode::ambiguous_trend: return "ambiguous_trend";
        case ReasonCode::no_breaths: return "no_breaths";
        case ReasonCode::degenerate_input: return "degenerate_input";
    }
    return "unknown";
}

WindowResult run_window(const CsiTrace& slice, const PipelineConfig& cfg) {
    cfg.validate();
    slice.validate();

    WindowResult res;
    res.window_start_s = slice.timestamps_s.front();
    res.window_len_s = static_cast<double>(slice.n_samples()) / slice.sample_rate_hz;
    res.report.window_start_s = res.window_start_s;
    res.report.window_len_s = res.window_len_s;
    res.diag.n_subcarriers = static_cast<int>(slice.n_subcarriers());

    // Preprocess + screen. Failures here mean nothing in the trace moves
    // inside the breathing band.
    WaveformMatrix gm;
    BnrTable table;
    try {
        gm = extract_preliminary(slice, cfg.sg_window, cfg.sg_order, cfg.lowess_span);
        res.diag.n_rows = static_cast<int>(gm.n_rows());
        const std::vector<double> ratios = screening_ratios(slice, gm, cfg);
        table = select(ratios, cfg.bnr_percentile, cfg.bnr_floor);
    } catch (const Error& e) {
        if (e.code() == Err::all_subcarriers_degenerate ||
            e.code() == Err::no_viable_subcarriers || e.code() == Err::too_few) {
            res.reason = ReasonCode::no_viable_subcarriers;
            res.diag.degraded = true;
            return res;
        }
        throw;
    }
    res.diag.n_retained = static_cast<int>(table.retained.size());
    res.diag.bnr_threshold = table.threshold_used;
    res.diag.degraded = res.diag.n_retained < cfg.degraded_min_retained;

    // Group, refine, fuse.
    const WaveformMatrix kept = gm.subset(table.retained);
    const SimilarityGraph graph = build_similarity(kept, cfg.sim_threshold);
    const auto [g1, g2] = partition_groups(graph);
    const Partition part = refine(graph, g1, g2, cfg.keep_fraction);
    res.diag.group1_size = static_cast<int>(part.group1.size());
    res.diag.group2_size = static_cast<int>(part.group2.size());
    res.diag.n_discarded = static_cast<int>(part.discarded.size());

    Waveform wave;
    try {
        wave = align_and_fuse(kept, part);
    } catch (const Error&) {
        res.reason = ReasonCode::degenerate_input;
        res.diag.degraded = true;
        return res;
    }

    // Phase identification from the raw-amplitude frequency trend.
    try {
        const ContiguousRun run = longest_contiguous(part, kept.subcarrier_index_map);
        std::vector<std::vector<double>> amp_rows;
        amp_rows.reserve(run.original_indices.size());
        for (int sc : run.original_indices)
            amp_rows.push_back(sg_column(slice, sc, cfg.sg_window, cfg.sg_order));
        const std::vector<double> profile = frequency_profile(amp_rows, cfg.gaussian_sigma);
        auto [oriented, decision] = identify_and_orient(wave, run, profile);
        wave = std::move(oriented);
        res.diag.phase = std::move(decision);
    } catch (const Error& e) {
        if (e.code() == Err::set_too_small || e.code() == Err::ambiguous_trend ||
            e.code() == Err::empty_partition) {
            res.reason = ReasonCode::ambiguous_trend;  // waveform stays usable, sign unknown
        } else {
            throw;
        }
    }
    res.waveform = wave;

    // Biomarkers; I:E needs a resolved phase and at least one complete
    // breath, the others degrade independently.
    try {
        const BreathSegmentation seg =
            detect_breaths(wave, cfg.min_breath_dist_s, cfg.prominence_frac);
        res.report.n_breaths = static_cast<int>(seg.breaths.size());
        res.report.rr_bpm = respiratory_rate(seg);
        if (wave.sign_convention == SignConvention::oriented && !seg.breaths.empty())
            res.report.ie_ratio = ie_ratio(wave, seg);
        if (seg.breaths.size() >= 2)
            res.report.tv_variability = tv_variability(wave, seg);
        const std::vector<double> slow =
            decimate(wave.samples, wave.sample_rate_hz, cfg.apen_downsample_hz);
        if (slow.size() >= 50)
            res.report.apen = std::max(0.0, apen(slow, cfg.apen_m, cfg.apen_r_frac));
    } catch (const Error& e) {
        if (e.code() == Err::no_breaths_found) {
            res.reason = ReasonCode::no_breaths;
        } else {
            throw;
        }
    }
    return res;
}

std::vector<WindowResult> run_stream(const CsiTrace& trace, const PipelineConfig& cfg) {
    cfg.validate();
    trace.validate();
    const auto win = static_cast<std::size_t>(
        std::llround(cfg.window_s * trace.sample_rate_hz));
    const auto hop = static_cast<std::size_t>(
        std::llround(cfg.hop_s * trace.sample_rate_hz));
    if (win > trace.n_samples())
        throw Error(Err::dimension_mismatch, "trace shorter than one window");

    std::vector<WindowResult> out;
    for (std::size_t start = 0; start + win <= trace.n_samples(); start += hop)
        out.push_back(run_window(trace.slice(start, win), cfg));
    return out;
}

StitchedWaveform stitch_waveforms(const std::vector<WindowResult>& windows,
                                  const PipelineConfig& cfg, double sample_rate_hz) {
    StitchedWaveform out;
    const auto hop = static_cast<std::size_t>(std::llround(cfg.hop_s * sample_rate_hz));
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
        const WindowResult& w = windows[wi];
        const bool last = wi + 1 == windows.size();
        const auto win_len = static_cast<std::size_t>(
            std::llround(w.window_len_s * sample_rate_hz));
        const std::size_t take = last ? win_len : std::min(hop, win_len);
        for (std::size_t i = 0; i < take; ++i) {
            out.timestamps_s.push_back(w.window_start_s +
                                       static_cast<double>(i) / sample_rate_hz);
            if (w.waveform)
                out.samples.push_back(w.waveform->samples[i]);
            else
                out.samples.push_back(0.0);
        }
        if (!w.waveform || w.waveform->sign_convention != SignConvention::oriented)
            out.all_oriented = false;
    }
    return out;
}

BenchReport bench(const PipelineConfig& cfg, int n_subcarriers, double window_s,
                  double sample_rate_hz) {
    SceneSpec scene;
    scene.los = {std::complex<double>(1.0, 0.0), 2.0};
    scene.chest_rest = {std::complex<double>(0.35, 0.0), 3.2};
    scene.vartheta_rad = 0.4;
    scene.chest_delta_m = 0.005;
    scene.breath.rate_bpm = 17.0;
    scene.breath.ie_ratio = 0.8;
    scene.noise_snr_db = 20.0;

    PipelineConfig bcfg = cfg;
    bcfg.window_s = std::clamp(window_s, 15.0, 60.0);

    BenchReport rep;
    rep.n_subcarriers = n_subcarriers;

    auto run_stages = [&](int k, BenchReport* out) {
        const SimResult sim =
            simulate_trace(scene, bcfg.window_s, sample_rate_hz, k, 7);
        const CsiTrace& slice = sim.trace;
        if (out) out->window_samples = slice.n_samples();

        const double p0 = now_ms();
        const WaveformMatrix gm =
            extract_preliminary(slice, bcfg.sg_window, bcfg.sg_order, bcfg.lowess_span);
        if (out) out->preprocess_ms = now_ms() - p0;

        // The screen is a short stage; take the best of five repetitions
        // so the scaling ratio is not at the mercy of allocator noise.
        std::vector<double> ratios;
        BnrTable table;
        double select_best = std::numeric_limits<double>::infinity();
        for (int rep_i = 0; rep_i < 5; ++rep_i) {
            const double s0 = now_ms();
            ratios = screening_ratios(slice, gm, bcfg);
            table = select(ratios, bcfg.bnr_percentile, bcfg.bnr_floor);
            select_best = std::min(select_best, now_ms() - s0);
        }
        if (out)
            out->select_ms = select_best;
        else
            rep.select_ms_2k = select_best;
        if (!out) return;

        const double g0 = now_ms();
        const WaveformMatrix kept = gm.subset(table.retained);
        const SimilarityGraph graph = build_similarity(kept, bcfg.sim_threshold);
        const auto [g1, g2] = partition_groups(graph);
        const Partition part = refine(graph, g1, g2, bcfg.keep_fraction);
        Waveform wave = align_and_fuse(kept, part);
        out->group_ms = now_ms() - g0;

        const double ph0 = now_ms();
        const ContiguousRun run = longest_contiguous(part, kept.subcarrier_index_map);
        std::vector<std::vector<double>> amp_rows;
        for (int sc : run.original_indices)
            amp_rows.push_back(sg_column(slice, sc, bcfg.sg_window, bcfg.sg_order));
        const std::vector<double> profile =
            frequency_profile(amp_rows, bcfg.gaussian_sigma);
        auto [oriented, decision] = identify_and_orient(wave, run, profile);
        out->phase_ms = now_ms() - ph0;

        const double b0 = now_ms();
        const BreathSegmentation seg =
            detect_breaths(oriented, bcfg.min_breath_dist_s, bcfg.prominence_frac);
        respiratory_rate(seg);
        ie_ratio(oriented, seg);
        if (seg.breaths.size() >= 2) tv_variability(oriented, seg);
        const std::vector<double> slow =
            decimate(oriented.samples, oriented.sample_rate_hz, bcfg.apen_downsample_hz);
        if (slow.size() >= 50) apen(slow, bcfg.apen_m, bcfg.apen_r_frac);
        out->biomarker_ms = now_ms() - b0;
        out->total_ms = out->preprocess_ms + out->select_ms + out->group_ms +
                        out->phase_ms + out->biomarker_ms;
    };

    // Best of two full passes; a single pass is at the mercy of scheduler
    // and page-cache noise.
    run_stages(n_subcarriers, &rep);
    BenchReport second = rep;
    run_stages(n_subcarriers, &second);
    if (second.total_ms < rep.total_ms) rep = second;
    run_stages(2 * n_subcarriers, nullptr);  // fills select_ms_2k

    // Retained-empty path: with the chest return buried far under the
    // noise floor, the screen rejects all subcarriers and grouping never
    // runs.
    {
        SceneSpec empty = scene;
        empty.chest_rest.attenuation = {1e-9, 0.0};
        empty.noise_snr_db = -30.0;
        const SimResult sim =
            simulate_trace(empty, bcfg.window_s, sample_rate_hz, n_subcarriers, 7);
        double t0 = now_ms();
        const WindowResult w = run_window(sim.trace, bcfg);
        double t1 = now_ms();
        rep.group_ms_empty =
            w.reason == ReasonCode::no_viable_subcarriers ? 0.0 : t1 - t0;
    }
    return rep;
}

void write_window_reports(const std::vector<WindowResult>& windows,
                          const std::filesystem::path& path) {
    json arr = json::array();
    for (const WindowResult& w : windows) {
        json jw;
        jw["window_start_s"] = w.report.window_start_s;
        jw["window_len_s"] = w.report.window_len_s;
        jw["rr_bpm"] = optional_json(w.report.rr_bpm);
        jw["ie_ratio"] = optional_json(w.report.ie_ratio);
        jw["tv_variability"] = optional_json(w.report.tv_variability);
        jw["apen"] = optional_json(w.report.apen);
        jw["n_breaths"] = w.report.n_breaths;
        jw["reason"] = reason_name(w.reason);
        json diag;
        diag["n_subcarriers"] = w.diag.n_subcarriers;
        diag["n_rows"] = w.diag.n_rows;
        diag["n_retained"] = w.diag.n_retained;
        diag["group1_size"] = w.diag.group1_size;
        diag["group2_size"] = w.diag.group2_size;
        diag["n_discarded"] = w.diag.n_discarded;
        diag["bnr_threshold"] = w.diag.bnr_threshold;
        diag["degraded"] = w.diag.degraded;
        if (w.diag.phase) {
            const PhaseDecision& p = *w.diag.phase;
            json jp;
            jp["contiguous_set"] = p.contiguous_set;
            jp["slope_a1"] = p.slope_a1;
            jp["intercept_a2"] = p.intercept_a2;
            jp["source_group"] = p.source_group;
            jp["case"] = p.case_label == CaseLabel::case1   ? "case1"
                         : p.case_label == CaseLabel::case2 ? "case2"
                                                            : "case3";
            jp["flipped"] = p.flipped;
            diag["phase"] = std::move(jp);
        } else {
            diag["phase"] = nullptr;
        }
        jw["diagnostics"] = std::move(diag);
        arr.push_back(std::move(jw));
    }
    json j;
    j["windows"] = std::move(arr);
    std::ofstream out(path);
    if (!out)
        throw Error(Err::io_failure, "cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out)
        throw Error(Err::io_failure, "write failed: " + path.string());
}

void write_waveform_csv(const StitchedWaveform& w, double sample_rate_hz,
                        const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw Error(Err::io_failure, "cannot open " + path.string() + " for writing");
    char buf[40];
    out << "# respirfi-waveform v1\n";
    std::snprintf(buf, sizeof(buf), "%.17g", sample_rate_hz);
    out << "# sample_rate_hz=" << buf << '\n';
    std::snprintf(buf, sizeof(buf), "%.17g",
                  w.timestamps_s.empty() ? 0.0 : w.timestamps_s.front());
    out << "# start_s=" << buf << '\n';
    out << "# sign_convention=" << (w.all_oriented ? "oriented" : "ambiguous") << '\n';
    out << "t,value\n";
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", w.timestamps_s[i]);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", w.samples[i]);
        out << buf << '\n';
    }
    if (!out)
        throw Error(Err::io_failure, "write failed: " + path.string());
}

WaveformFile read_waveform_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Err::io_failure, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "# respirfi-waveform v1")
        throw Error(Err::malformed_header, "missing waveform magic line");

    WaveformFile wf;
    while (in.peek() == '#') {
        std::getline(in, line);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(Err::malformed_header, "bad waveform header line: " + line);
        const std::string key = line.substr(2, eq - 2);
        const std::string val = line.substr(eq + 1);
        if (key == "sample_rate_hz")
            wf.waveform.sample_rate_hz = std::stod(val);
        else if (key == "start_s")
            wf.start_s = std::stod(val);
        else if (key == "sign_convention")
            wf.waveform.sign_convention =
                val == "oriented" ? SignConvention::oriented : SignConvention::ambiguous;
        else
            throw Error(Err::malformed_header, "unknown waveform header key: " + key);
    }
    if (!std::getline(in, line) || line != "t,value")
        throw Error(Err::malformed_header, "missing waveform column header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw Error(Err::dimension_mismatch, "waveform row width mismatch");
        wf.waveform.samples.push_back(std::stod(line.substr(comma + 1)));
    }
    if (wf.waveform.sample_rate_hz <= 0.0)
        throw Error(Err::malformed_header, "waveform sample_rate_hz missing");
    return wf;
}

} // namespace respirfi
