#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "respirfi/dsp.hpp"
#include "respirfi/group_fuse.hpp"
#include "respirfi/subcarrier_select.hpp"
#include "scene_helpers.hpp"

using namespace respirfi;
using scenes::kPi;

namespace {

// Ternary graph with +1 inside the two planted blocks, -1 across, and a
// fraction of off-diagonal pairs sign-flipped.
SimilarityGraph planted_graph(std::size_t n1, std::size_t n2, double flip_prob,
                              std::mt19937_64& rng) {
    const std::size_t n = n1 + n2;
    SimilarityGraph g;
    g.sim_threshold = 0.5;
    g.w.assign(n, std::vector<double>(n, 0.0));
    g.w_disc.assign(n, std::vector<std::int8_t>(n, 0));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        g.w[i][i] = 1.0;
        g.w_disc[i][i] = 1;
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool same = (i < n1) == (j < n1);
            std::int8_t v = same ? 1 : -1;
            if (u(rng) < flip_prob) v = static_cast<std::int8_t>(-v);
            g.w_disc[i][j] = g.w_disc[j][i] = v;
            g.w[i][j] = g.w[j][i] = static_cast<double>(v);
        }
    }
    return g;
}

bool matches_planted(const std::vector<int>& g1, const std::vector<int>& g2,
                     std::size_t n1, std::size_t n2) {
    auto is_block = [](const std::vector<int>& g, std::size_t lo, std::size_t hi) {
        if (g.size() != hi - lo) return false;
        for (int v : g)
            if (static_cast<std::size_t>(v) < lo || static_cast<std::size_t>(v) >= hi)
                return false;
        return true;
    };
    return (is_block(g1, 0, n1) && is_block(g2, n1, n1 + n2)) ||
           (is_block(g2, 0, n1) && is_block(g1, n1, n1 + n2));
}

WaveformMatrix matrix_from_rows(std::vector<std::vector<double>> rows, double fs) {
    WaveformMatrix gm;
    gm.sample_rate_hz = fs;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        gm.rows.push_back(zscore(rows[i]));
        gm.subcarrier_index_map.push_back(static_cast<int>(i));
        gm.freqs_hz.push_back(6.0e9 + 1e6 * static_cast<double>(i));
    }
    return gm;
}

} // namespace

TEST_CASE("similarity of identical and mirrored rows") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> base(300);
    for (double& v : base) v = g(rng);
    std::vector<double> neg(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) neg[i] = -base[i];

    const WaveformMatrix gm = matrix_from_rows({base, base, neg}, 20.0);
    const SimilarityGraph graph = build_similarity(gm, 0.5);
    CHECK(graph.w[0][1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(graph.w_disc[0][1] == 1);
    CHECK(graph.w[0][2] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(graph.w_disc[0][2] == -1);
    for (std::size_t i = 0; i < graph.size(); ++i) CHECK(graph.w[i][i] == 1.0);
}

TEST_CASE("same-case subcarriers correlate, cross-case anticorrelate") {
    // Wide band at a path delta that sweeps well past a half period, so
    // both monotonic cases appear.
    const double f_c = 6.025e9;
    SceneSpec s = scenes::basic_scene(1.875, 0.0, 15.0);
    s.vartheta_rad = scenes::anchor_vartheta(f_c - 50e6, 1.875, s.chest_delta_m, 0.5 * kPi);
    const SimResult sim = simulate_trace(s, 30.0, 25.0, 64, 2);
    const WaveformMatrix gm = extract_preliminary(sim.trace);
    const SimilarityGraph graph = build_similarity(gm, 0.5);

    int checked = 0;
    for (std::size_t i = 0; i < gm.n_rows(); ++i) {
        const CaseLabel ci = case_of_subcarrier(s, gm.freqs_hz[i]);
        if (ci == CaseLabel::case3) continue;
        if (std::abs(oracle::pearson(gm.rows[i], sim.truth.displacement)) < 0.99) continue;
        for (std::size_t j = i + 1; j < gm.n_rows(); ++j) {
            const CaseLabel cj = case_of_subcarrier(s, gm.freqs_hz[j]);
            if (cj == CaseLabel::case3) continue;
            if (std::abs(oracle::pearson(gm.rows[j], sim.truth.displacement)) < 0.99)
                continue;
            ++checked;
            if (ci == cj)
                CHECK(graph.w[i][j] >= 0.9);
            else
                CHECK(graph.w[i][j] <= -0.9);
        }
    }
    CHECK(checked > 50);
}

TEST_CASE("partition recovers a clean planted 10+10 bipartition") {
    std::mt19937_64 rng(3);
    const SimilarityGraph g = planted_graph(10, 10, 0.0, rng);
    const auto [g1, g2] = partition_groups(g);
    CHECK(matches_planted(g1, g2, 10, 10));

    std::vector<int> x(20, 1);
    for (int i : g2) x[static_cast<std::size_t>(i)] = -1;
    CHECK(oracle::partition_objective(g.w_disc, x) ==
          doctest::Approx(oracle::brute_force_objective(g.w_disc)));
}

TEST_CASE("single subcarrier degenerates to group1") {
    SimilarityGraph g;
    g.w.assign(1, std::vector<double>(1, 1.0));
    g.w_disc.assign(1, std::vector<std::int8_t>(1, 1));
    const auto [g1, g2] = partition_groups(g);
    CHECK(g1 == std::vector<int>{0});
    CHECK(g2.empty());
}

TEST_CASE("all-zero discretization falls back to one group") {
    SimilarityGraph g;
    g.w.assign(4, std::vector<double>(4, 0.1));
    g.w_disc.assign(4, std::vector<std::int8_t>(4, 0));
    for (int i = 0; i < 4; ++i) g.w_disc[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1;
    const auto [g1, g2] = partition_groups(g);
    CHECK(g1.size() == 4);
    CHECK(g2.empty());
}

TEST_CASE("noisy planted split beats random assignments, 30 nodes") {
    std::mt19937_64 rng(4);
    const SimilarityGraph g = planted_graph(15, 15, 0.10, rng);
    const auto [g1, g2] = partition_groups(g);
    std::vector<int> x(30, 1);
    for (int i : g2) x[static_cast<std::size_t>(i)] = -1;
    const double ours = oracle::partition_objective(g.w_disc, x);

    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<int> r(30);
        for (int& v : r) v = coin(rng) ? 1 : -1;
        CHECK(ours >= oracle::partition_objective(g.w_disc, r));
    }
}

TEST_CASE("partition objective matches brute force on small noisy instances") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t n1 = 5 + rng() % 5;
        const std::size_t n2 = 5 + rng() % 5;
        const double flip = 0.02 * static_cast<double>(rng() % 6);
        const SimilarityGraph g = planted_graph(n1, n2, flip, rng);
        const auto [g1, g2] = partition_groups(g);
        std::vector<int> x(n1 + n2, 1);
        for (int i : g2) x[static_cast<std::size_t>(i)] = -1;
        CHECK(oracle::partition_objective(g.w_disc, x) ==
              doctest::Approx(oracle::brute_force_objective(g.w_disc)));
    }
}

TEST_CASE("planted recovery holds under 10% flips, 100 seeds") {
    std::mt19937_64 rng(6);
    int exact = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const std::size_t half = 10 + rng() % 41;
        const SimilarityGraph g = planted_graph(half, half, 0.10, rng);
        const auto [g1, g2] = partition_groups(g);
        if (matches_planted(g1, g2, half, half)) ++exact;
    }
    CHECK(exact >= 99);
}

TEST_CASE("refine keeps a uniform group intact") {
    std::mt19937_64 rng(7);
    const SimilarityGraph g = planted_graph(6, 0, 0.0, rng);
    const std::vector<int> all{0, 1, 2, 3, 4, 5};
    const Partition part = refine(g, all, {}, 0.5);
    CHECK(part.group1.size() == 6);
    CHECK(part.discarded.empty());
    for (int i : all)
        CHECK(part.scores[static_cast<std::size_t>(i)] == doctest::Approx(5.0));
}

TEST_CASE("refine discards a weak straggler") {
    // Rows 0-2 one tight block, rows 3-4 the opposite block, row 5 nearly
    // uncorrelated with everyone.
    SimilarityGraph g;
    const std::size_t n = 6;
    g.w.assign(n, std::vector<double>(n, 0.0));
    g.w_disc.assign(n, std::vector<std::int8_t>(n, 0));
    auto set = [&](std::size_t i, std::size_t j, double v) {
        g.w[i][j] = g.w[j][i] = v;
    };
    for (std::size_t i = 0; i < n; ++i) g.w[i][i] = 1.0;
    set(0, 1, 0.95);
    set(0, 2, 0.92);
    set(1, 2, 0.97);
    set(3, 4, 0.94);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 3; j < 5; ++j) set(i, j, -0.9);
    for (std::size_t i = 0; i < 5; ++i) set(i, 5, 0.05);

    const Partition part = refine(g, std::vector<int>{0, 1, 2, 5}, std::vector<int>{3, 4}, 0.5);
    CHECK(std::find(part.discarded.begin(), part.discarded.end(), 5) !=
          part.discarded.end());
    CHECK(part.group1.size() == 3);
    CHECK(part.group2.size() == 2);
}

TEST_CASE("keep_fraction zero keeps every positive-score subcarrier") {
    std::mt19937_64 rng(8);
    const SimilarityGraph g = planted_graph(5, 5, 0.0, rng);
    const Partition part =
        refine(g, std::vector<int>{0, 1, 2, 3, 4}, std::vector<int>{5, 6, 7, 8, 9}, 0.0);
    CHECK(part.discarded.empty());
    CHECK(part.group1.size() == 5);
    CHECK(part.group2.size() == 5);
}

TEST_CASE("refine never empties a group") {
    // Node 2 sits in group2 yet resembles group1: negative score, still kept
    // as its group's argmax.
    SimilarityGraph g;
    g.w.assign(3, std::vector<double>(3, 0.0));
    g.w_disc.assign(3, std::vector<std::int8_t>(3, 0));
    for (std::size_t i = 0; i < 3; ++i) g.w[i][i] = 1.0;
    g.w[0][1] = g.w[1][0] = 0.9;
    g.w[0][2] = g.w[2][0] = 0.8;
    g.w[1][2] = g.w[2][1] = 0.7;
    const Partition part = refine(g, std::vector<int>{0, 1}, std::vector<int>{2}, 0.5);
    CHECK(part.group2 == std::vector<int>{2});
}

TEST_CASE("fusing a mirrored pair reproduces the source row") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> base(400);
    for (double& v : base) v = gauss(rng);
    std::vector<double> neg(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) neg[i] = -base[i];
    const WaveformMatrix gm = matrix_from_rows({base, neg}, 20.0);

    Partition part;
    part.group1 = {0};
    part.group2 = {1};
    part.scores = {1.0, 1.0};
    const Waveform fused = align_and_fuse(gm, part);
    for (std::size_t i = 0; i < fused.samples.size(); ++i)
        CHECK(fused.samples[i] == doctest::Approx(gm.rows[0][i]).epsilon(1e-9));
    CHECK(fused.sign_convention == SignConvention::ambiguous);

    Partition empty;
    empty.group2 = {0, 1};
    CHECK_THROWS_AS(align_and_fuse(gm, empty), Error);
}

TEST_CASE("noiseless case mix fuses into the chest waveform") {
    const SceneSpec s = scenes::basic_scene(1.875, 0.45, 17.0);
    const SimResult sim = simulate_trace(s, 30.0, 25.0, 64, 10);
    const WaveformMatrix gm = extract_preliminary(sim.trace);
    const BnrTable table = select(bnr_all(gm));
    const WaveformMatrix kept = gm.subset(table.retained);
    const SimilarityGraph graph = build_similarity(kept, 0.5);
    const auto [g1, g2] = partition_groups(graph);
    const Partition part = refine(graph, g1, g2, 0.5);
    const Waveform fused = align_and_fuse(kept, part);
    CHECK(std::abs(oracle::pearson(fused.samples, sim.truth.displacement)) >= 0.99);
}

TEST_CASE("fusion beats the best single subcarrier at 10 dB, 100 seeds") {
    std::mt19937_64 rng(11);
    int wins = 0, ran = 0;
    const int trials = 100;
    for (int seed = 0; seed < trials; ++seed) {
        SceneSpec s = scenes::random_feasible_scene(rng);
        s.breath.rate_bpm = 12.0 + static_cast<double>(seed % 17);
        s.noise_snr_db = 10.0;
        const SimResult sim = simulate_trace(s, 30.0, 25.0, 128,
                                             static_cast<std::uint64_t>(900 + seed));
        const WaveformMatrix gm = extract_preliminary(sim.trace);
        BnrTable table;
        try {
            table = select(bnr_all(gm));
        } catch (const Error&) {
            continue;
        }
        const WaveformMatrix kept = gm.subset(table.retained);
        const SimilarityGraph graph = build_similarity(kept, 0.5);
        const auto [g1, g2] = partition_groups(graph);
        const Partition part = refine(graph, g1, g2, 0.5);
        Waveform fused;
        try {
            fused = align_and_fuse(kept, part);
        } catch (const Error&) {
            continue;
        }
        ++ran;
        const double fused_pcc =
            std::abs(oracle::pearson(fused.samples, sim.truth.displacement));
        double best_single = 0.0;
        for (const auto& row : kept.rows)
            best_single = std::max(
                best_single, std::abs(oracle::pearson(row, sim.truth.displacement)));
        if (fused_pcc > best_single) ++wins;
    }
    CHECK(ran >= 95);
    CHECK(wins * 100 >= ran * 90);
}

TEST_CASE("negating every row flips the groups but not the fused shape") {
    std::mt19937_64 rng(12);
    SceneSpec s = scenes::random_feasible_scene(rng);
    s.noise_snr_db = 20.0;
    const SimResult sim = simulate_trace(s, 20.0, 25.0, 32, 13);
    const WaveformMatrix gm = extract_preliminary(sim.trace);

    WaveformMatrix neg = gm;
    for (auto& row : neg.rows)
        for (double& v : row) v = -v;

    auto fuse_all = [](const WaveformMatrix& m) {
        const SimilarityGraph graph = build_similarity(m, 0.5);
        const auto [g1, g2] = partition_groups(graph);
        const Partition part = refine(graph, g1, g2, 0.5);
        return align_and_fuse(m, part);
    };
    const Waveform a = fuse_all(gm);
    const Waveform b = fuse_all(neg);
    const double r = oracle::pearson(a.samples, b.samples);
    CHECK(std::abs(r) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fused output is invariant to row order") {
    std::mt19937_64 rng(13);
    SceneSpec s = scenes::random_feasible_scene(rng);
    s.noise_snr_db = 15.0;
    const SimResult sim = simulate_trace(s, 20.0, 25.0, 24, 14);
    const WaveformMatrix gm = extract_preliminary(sim.trace);

    WaveformMatrix shuffled = gm;
    std::vector<std::size_t> perm(gm.n_rows());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        shuffled.rows[i] = gm.rows[perm[i]];
        shuffled.subcarrier_index_map[i] = gm.subcarrier_index_map[perm[i]];
        shuffled.freqs_hz[i] = gm.freqs_hz[perm[i]];
    }

    auto fuse_all = [](const WaveformMatrix& m) {
        const SimilarityGraph graph = build_similarity(m, 0.5);
        const auto [g1, g2] = partition_groups(graph);
        const Partition part = refine(graph, g1, g2, 0.5);
        return align_and_fuse(m, part);
    };
    const Waveform a = fuse_all(gm);
    const Waveform b = fuse_all(shuffled);
    REQUIRE(a.samples.size() == b.samples.size());
    const double r = oracle::pearson(a.samples, b.samples);
    CHECK(std::abs(r) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("partition objective never drops below the single-group baseline") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 4 + rng() % 20;
        SimilarityGraph g;
        g.w.assign(n, std::vector<double>(n, 0.0));
        g.w_disc.assign(n, std::vector<std::int8_t>(n, 0));
        std::uniform_int_distribution<int> tern(-1, 1);
        for (std::size_t i = 0; i < n; ++i) {
            g.w_disc[i][i] = 1;
            g.w[i][i] = 1.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                const auto v = static_cast<std::int8_t>(tern(rng));
                g.w_disc[i][j] = g.w_disc[j][i] = v;
                g.w[i][j] = g.w[j][i] = static_cast<double>(v);
            }
        }
        const auto [g1, g2] = partition_groups(g);
        std::vector<int> x(n, 1);
        for (int i : g2) x[static_cast<std::size_t>(i)] = -1;
        const std::vector<int> ones(n, 1);
        CHECK(oracle::partition_objective(g.w_disc, x) >=
              oracle::partition_objective(g.w_disc, ones));
    }
}
