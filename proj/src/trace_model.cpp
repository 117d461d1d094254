#include "respirfi/trace_model.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace respirfi {

namespace {

constexpr const char* kTraceMagic = "# respirfi-trace v1";
constexpr double kTimestampJitterS = 1e-6;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(std::string_view s, const char* what) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw Error(Err::malformed_header,
                    std::string("cannot parse number in ") + what + ": '" + std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(pos));
            break;
        }
        out.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return out;
}

void check_uniform_timestamps(const std::vector<double>& t) {
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] <= t[i - 1])
            throw Error(Err::non_monotonic_time, "timestamps not strictly increasing");
    if (t.size() < 2) return;
    const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    for (std::size_t i = 1; i < t.size(); ++i)
        if (std::abs((t[i] - t[i - 1]) - dt) > kTimestampJitterS)
            throw Error(Err::non_monotonic_time, "timestamp grid jitter exceeds 1e-6 s");
}

} // namespace

const char* err_name(Err code) {
    switch (code) {
        case Err::malformed_header: return "MalformedHeader";
        case Err::non_monotonic_time: return "NonMonotonicTime";
        case Err::freq_order: return "FreqOrder";
        case Err::dimension_mismatch: return "DimensionMismatch";
        case Err::invalid_value: return "InvalidValue";
        case Err::io_failure: return "IoFailure";
        case Err::bad_window: return "BadWindow";
        case Err::span_too_small: return "SpanTooSmall";
        case Err::zero_variance: return "ZeroVariance";
        case Err::too_short: return "TooShort";
        case Err::zero_norm: return "ZeroNorm";
        case Err::span_too_wide: return "SpanTooWide";
        case Err::invalid_scene: return "InvalidScene";
        case Err::all_subcarriers_degenerate: return "AllSubcarriersDegenerate";
        case Err::no_viable_subcarriers: return "NoViableSubcarriers";
        case Err::empty_partition: return "EmptyPartition";
        case Err::set_too_small: return "SetTooSmall";
        case Err::ambiguous_trend: return "AmbiguousTrend";
        case Err::no_breaths_found: return "NoBreathsFound";
        case Err::phase_unresolved: return "PhaseUnresolved";
        case Err::too_few: return "TooFew";
        case Err::no_overlap: return "NoOverlap";
    }
    return "Unknown";
}

void CsiTrace::validate() const {
    if (sample_rate_hz <= 0.0 || center_freq_hz <= 0.0 || bandwidth_hz <= 0.0)
        throw Error(Err::malformed_header, "rate/center/bandwidth must be positive");
    const std::size_t k = subcarrier_freqs_hz.size();
    const std::size_t l = timestamps_s.size();
    if (k < 8)
        throw Error(Err::dimension_mismatch, "need at least 8 subcarriers");
    for (std::size_t i = 1; i < k; ++i)
        if (subcarrier_freqs_hz[i] <= subcarrier_freqs_hz[i - 1])
            throw Error(Err::freq_order, "subcarrier frequencies not strictly increasing");
    if (static_cast<double>(l) < sample_rate_hz * 10.0)
        throw Error(Err::dimension_mismatch, "trace shorter than 10 s");
    check_uniform_timestamps(timestamps_s);
    const double dt = (timestamps_s.back() - timestamps_s.front()) /
                      static_cast<double>(l - 1);
    if (std::abs(dt - 1.0 / sample_rate_hz) > kTimestampJitterS)
        throw Error(Err::non_monotonic_time, "timestamp grid inconsistent with sample_rate_hz");
    if (amplitudes.size() != l)
        throw Error(Err::dimension_mismatch, "amplitude row count != timestamp count");
    for (const auto& row : amplitudes) {
        if (row.size() != k)
            throw Error(Err::dimension_mismatch, "amplitude row width != subcarrier count");
        for (double a : row)
            if (!std::isfinite(a) || a < 0.0)
                throw Error(Err::invalid_value, "amplitudes must be finite and >= 0");
    }
}

CsiTrace CsiTrace::slice(std::size_t first_sample, std::size_t count) const {
    if (first_sample + count > n_samples())
        throw Error(Err::dimension_mismatch, "slice out of range");
    CsiTrace out;
    out.sample_rate_hz = sample_rate_hz;
    out.center_freq_hz = center_freq_hz;
    out.bandwidth_hz = bandwidth_hz;
    out.subcarrier_freqs_hz = subcarrier_freqs_hz;
    out.timestamps_s.assign(timestamps_s.begin() + first_sample,
                            timestamps_s.begin() + first_sample + count);
    out.amplitudes.assign(amplitudes.begin() + first_sample,
                          amplitudes.begin() + first_sample + count);
    return out;
}

void GroundTruthTrace::validate() const {
    for (std::size_t i = 1; i < timestamps_s.size(); ++i)
        if (timestamps_s[i] <= timestamps_s[i - 1])
            throw Error(Err::non_monotonic_time, "truth timestamps not strictly increasing");
    if (displacement.size() != timestamps_s.size())
        throw Error(Err::dimension_mismatch, "truth column lengths differ");
    for (double d : displacement)
        if (!std::isfinite(d))
            throw Error(Err::invalid_value, "displacement must be finite");
}

void BiomarkerReport::validate() const {
    if (window_len_s <= 0.0)
        throw Error(Err::invalid_value, "window_len_s must be positive");
    if (rr_bpm && (*rr_bpm <= 0.0 || *rr_bpm > 60.0))
        throw Error(Err::invalid_value, "rr_bpm out of (0, 60]");
    if (ie_ratio && *ie_ratio <= 0.0)
        throw Error(Err::invalid_value, "ie_ratio must be positive");
    if (tv_variability && *tv_variability < 0.0)
        throw Error(Err::invalid_value, "tv_variability must be >= 0");
    if (apen && *apen < 0.0)
        throw Error(Err::invalid_value, "apen must be >= 0");
    if (n_breaths < 0)
        throw Error(Err::invalid_value, "n_breaths must be >= 0");
}

// --- trace CSV --------------------------------------------------------------

CsiTrace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Err::io_failure, "cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line) || line != kTraceMagic)
        throw Error(Err::malformed_header, "missing trace magic line");

    CsiTrace trace;
    bool have_center = false, have_bw = false, have_rate = false, have_freqs = false;
    while (in.peek() == '#') {
        std::getline(in, line);
        std::string_view sv(line);
        sv.remove_prefix(1);
        while (!sv.empty() && sv.front() == ' ') sv.remove_prefix(1);
        std::size_t eq = sv.find('=');
        if (eq == std::string_view::npos)
            throw Error(Err::malformed_header, "header line without key=value: " + line);
        std::string_view key = sv.substr(0, eq);
        std::string_view val = sv.substr(eq + 1);
        if (key == "center_freq_hz") {
            trace.center_freq_hz = parse_double(val, "center_freq_hz");
            have_center = true;
        } else if (key == "bandwidth_hz") {
            trace.bandwidth_hz = parse_double(val, "bandwidth_hz");
            have_bw = true;
        } else if (key == "sample_rate_hz") {
            trace.sample_rate_hz = parse_double(val, "sample_rate_hz");
            have_rate = true;
        } else if (key == "subcarrier_freqs_hz") {
            for (auto f : split_csv(val))
                trace.subcarrier_freqs_hz.push_back(parse_double(f, "subcarrier_freqs_hz"));
            have_freqs = true;
        } else {
            throw Error(Err::malformed_header, "unknown header key: " + std::string(key));
        }
    }
    if (!have_center || !have_bw || !have_rate || !have_freqs)
        throw Error(Err::malformed_header, "incomplete trace header");

    if (!std::getline(in, line))
        throw Error(Err::malformed_header, "missing column header");
    const std::size_t k = trace.subcarrier_freqs_hz.size();
    {
        auto cols = split_csv(line);
        if (cols.size() != k + 1 || cols[0] != "t")
            throw Error(Err::dimension_mismatch, "column header does not match subcarrier count");
    }

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != k + 1)
            throw Error(Err::dimension_mismatch, "data row width mismatch");
        trace.timestamps_s.push_back(parse_double(cells[0], "t"));
        std::vector<double> row(k);
        for (std::size_t j = 0; j < k; ++j)
            row[j] = parse_double(cells[j + 1], "amplitude");
        trace.amplitudes.push_back(std::move(row));
    }
    trace.validate();
    return trace;
}

void write_trace(const CsiTrace& trace, const std::filesystem::path& path) {
    trace.validate();
    std::ofstream out(path);
    if (!out)
        throw Error(Err::io_failure, "cannot open " + path.string() + " for writing");
    out << kTraceMagic << '\n';
    out << "# center_freq_hz=" << fmt_double(trace.center_freq_hz) << '\n';
    out << "# bandwidth_hz=" << fmt_double(trace.bandwidth_hz) << '\n';
    out << "# sample_rate_hz=" << fmt_double(trace.sample_rate_hz) << '\n';
    out << "# subcarrier_freqs_hz=";
    for (std::size_t i = 0; i < trace.subcarrier_freqs_hz.size(); ++i) {
        if (i) out << ',';
        out << fmt_double(trace.subcarrier_freqs_hz[i]);
    }
    out << '\n';
    out << 't';
    for (std::size_t i = 0; i < trace.n_subcarriers(); ++i)
        out << ",amp_" << i;
    out << '\n';
    std::string buf;
    for (std::size_t i = 0; i < trace.n_samples(); ++i) {
        buf.clear();
        buf += fmt_double(trace.timestamps_s[i]);
        for (double a : trace.amplitudes[i]) {
            buf += ',';
            buf += fmt_double(a);
        }
        buf += '\n';
        out << buf;
    }
    if (!out)
        throw Error(Err::io_failure, "write failed: " + path.string());
}

// --- truth CSV --------------------------------------------------------------

GroundTruthTrace read_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Err::io_failure, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "t,displacement")
        throw Error(Err::malformed_header, "missing truth column header");
    GroundTruthTrace truth;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv(line);
        if (cells.size() != 2)
            throw Error(Err::dimension_mismatch, "truth row width mismatch");
        truth.timestamps_s.push_back(parse_double(cells[0], "t"));
        truth.displacement.push_back(parse_double(cells[1], "displacement"));
    }
    truth.validate();
    return truth;
}

void write_truth(const GroundTruthTrace& truth, const std::filesystem::path& path) {
    truth.validate();
    std::ofstream out(path);
    if (!out)
        throw Error(Err::io_failure, "cannot open " + path.string() + " for writing");
    out << "t,displacement\n";
    for (std::size_t i = 0; i < truth.timestamps_s.size(); ++i)
        out << fmt_double(truth.timestamps_s[i]) << ','
            << fmt_double(truth.displacement[i]) << '\n';
    if (!out)
        throw Error(Err::io_failure, "write failed: " + path.string());
}

// --- report JSON -------------------------------------------------------------

std::vector<BiomarkerReport> read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Err::io_failure, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Err::malformed_header, std::string("bad report JSON: ") + e.what());
    }
    if (!j.contains("windows") || !j["windows"].is_array())
        throw Error(Err::malformed_header, "report JSON lacks a windows array");

    auto opt_field = [](const nlohmann::json& w, const char* key) -> std::optional<double> {
        if (!w.contains(key) || w[key].is_null()) return std::nullopt;
        return w[key].get<double>();
    };

    std::vector<BiomarkerReport> out;
    for (const auto& w : j["windows"]) {
        BiomarkerReport r;
        r.window_start_s = w.at("window_start_s").get<double>();
        r.window_len_s = w.at("window_len_s").get<double>();
        r.rr_bpm = opt_field(w, "rr_bpm");
        r.ie_ratio = opt_field(w, "ie_ratio");
        r.tv_variability = opt_field(w, "tv_variability");
        r.apen = opt_field(w, "apen");
        r.n_breaths = w.value("n_breaths", 0);
        r.validate();
        out.push_back(std::move(r));
    }
    return out;
}

void write_report(const std::vector<BiomarkerReport>& windows,
                  const std::filesystem::path& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : windows) {
        r.validate();
        nlohmann::json w;
        w["window_start_s"] = r.window_start_s;
        w["window_len_s"] = r.window_len_s;
        w["rr_bpm"] = r.rr_bpm ? nlohmann::json(*r.rr_bpm) : nlohmann::json(nullptr);
        w["ie_ratio"] = r.ie_ratio ? nlohmann::json(*r.ie_ratio) : nlohmann::json(nullptr);
        w["tv_variability"] =
            r.tv_variability ? nlohmann::json(*r.tv_variability) : nlohmann::json(nullptr);
        w["apen"] = r.apen ? nlohmann::json(*r.apen) : nlohmann::json(nullptr);
        w["n_breaths"] = r.n_breaths;
        arr.push_back(std::move(w));
    }
    nlohmann::json j;
    j["windows"] = std::move(arr);
    std::ofstream out(path);
    if (!out)
        throw Error(Err::io_failure, "cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out)
        throw Error(Err::io_failure, "write failed: " + path.string());
}

} // namespace respirfi
