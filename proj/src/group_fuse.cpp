#include "respirfi/group_fuse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "respirfi/dsp.hpp"

namespace respirfi {

namespace {

// Intra-minus-inter objective on the ternary matrix, x in {-1, +1},
// diagonal excluded: sum_{i != j} x_i x_j w_ij.
double ternary_objective(const std::vector<std::vector<std::int8_t>>& w,
                         const std::vector<int>& x) {
    const std::size_t n = w.size();
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            obj += 2.0 * static_cast<double>(x[i] * x[j]) * static_cast<double>(w[i][j]);
    return obj;
}

// Deterministic start vector for the eigensolve.
std::vector<double> seeded_start(std::size_t n) {
    std::uint64_t state = 0x243F6A8885A308D3ull;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        v[i] = (static_cast<double>(state >> 11) * 0x1.0p-53) - 0.5;
    }
    return v;
}

} // namespace

SimilarityGraph build_similarity(const WaveformMatrix& gm, double sim_threshold) {
    const std::size_t n = gm.n_rows();
    if (n < 1)
        throw Error(Err::too_few, "build_similarity: empty matrix");

    SimilarityGraph g;
    g.sim_threshold = sim_threshold;
    g.w.assign(n, std::vector<double>(n, 0.0));
    g.w_disc.assign(n, std::vector<std::int8_t>(n, 0));

    // Rows are z-scored, so cosine similarity is a plain scaled dot product.
    const std::size_t l = gm.n_samples();
    const double inv_l = 1.0 / static_cast<double>(l);
    for (std::size_t i = 0; i < n; ++i) {
        g.w[i][i] = 1.0;
        g.w_disc[i][i] = 1;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double* a = gm.rows[i].data();
            const double* b = gm.rows[j].data();
            double dot = 0.0;
            for (std::size_t s = 0; s < l; ++s) dot += a[s] * b[s];
            const double sim = dot * inv_l;  // unit population variance rows
            g.w[i][j] = g.w[j][i] = sim;
            std::int8_t d = 0;
            if (sim >= sim_threshold)
                d = 1;
            else if (sim <= -sim_threshold)
                d = -1;
            g.w_disc[i][j] = g.w_disc[j][i] = d;
        }
    }
    return g;
}

std::pair<std::vector<int>, std::vector<int>> partition_groups(const SimilarityGraph& graph) {
    const std::size_t n = graph.size();
    std::vector<int> g1, g2;
    if (n == 0) return {g1, g2};

    // Signed degrees; an edgeless discretization has no usable structure.
    std::vector<double> degree(n, 0.0);
    double max_degree = 0.0;
    bool any_edge = false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            degree[i] += std::abs(static_cast<double>(graph.w_disc[i][j]));
            any_edge = any_edge || graph.w_disc[i][j] != 0;
        }
        max_degree = std::max(max_degree, degree[i]);
    }
    if (!any_edge) {
        for (std::size_t i = 0; i < n; ++i) g1.push_back(static_cast<int>(i));
        return {g1, g2};
    }

    // Smallest eigenvector of Lbar = Dbar - W' via power iteration on the
    // spectral shift sigma*I - Lbar (Lbar is PSD with lambda_max <= 2*max
    // signed degree).
    const double sigma = 2.0 * max_degree + 1.0;
    std::vector<double> v = seeded_start(n);
    std::vector<double> next(n);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;

    // The flip ascent below tolerates an imperfect sign pattern, so the
    // iteration cap guards latency rather than accuracy.
    double lambda = 0.0;
    for (int iter = 0; iter < 2000; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = (sigma - degree[i]) * v[i];
            const std::int8_t* wi = graph.w_disc[i].data();
            for (std::size_t j = 0; j < n; ++j)
                if (j != i && wi[j] != 0) acc += static_cast<double>(wi[j]) * v[j];
            next[i] = acc;
        }
        lambda = 0.0;
        for (std::size_t i = 0; i < n; ++i) lambda += v[i] * next[i];
        double nn = 0.0;
        for (double x : next) nn += x * x;
        nn = std::sqrt(nn);
        double resid = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = next[i] - lambda * v[i];
            resid += r * r;
        }
        for (std::size_t i = 0; i < n; ++i) v[i] = next[i] / nn;
        if (std::sqrt(resid) < 1e-10 * std::max(1.0, std::abs(lambda))) break;
    }

    // Deterministic orientation: first nonzero component positive.
    for (double x : v) {
        if (x != 0.0) {
            if (x < 0.0)
                for (double& y : v) y = -y;
            break;
        }
    }

    std::vector<int> x(n, 1);
    for (std::size_t i = 0; i < n; ++i) x[i] = v[i] >= 0.0 ? 1 : -1;

    // Single-flip ascent on the partition objective; the eigenvector sign
    // pattern is a good start but not always the combinatorial optimum.
    std::vector<double> s(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                s[i] += static_cast<double>(graph.w_disc[i][j]) * static_cast<double>(x[j]);
    for (int sweep = 0; sweep < 200; ++sweep) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (static_cast<double>(x[i]) * s[i] < 0.0) {  // flipping i gains 4*|x_i s_i|
                x[i] = -x[i];
                for (std::size_t j = 0; j < n; ++j)
                    if (j != i)
                        s[j] += 2.0 * static_cast<double>(graph.w_disc[j][i]) *
                                static_cast<double>(x[i]);
                changed = true;
            }
        }
        if (!changed) break;
    }

    // Never fall below the everything-in-one-group baseline.
    std::vector<int> ones(n, 1);
    if (ternary_objective(graph.w_disc, x) < ternary_objective(graph.w_disc, ones)) x = ones;

    // Group1 takes +1 (and the eigenvector zeros, which mapped to +1).
    for (std::size_t i = 0; i < n; ++i)
        (x[i] > 0 ? g1 : g2).push_back(static_cast<int>(i));
    if (g1.empty()) std::swap(g1, g2);
    return {g1, g2};
}

Partition refine(const SimilarityGraph& graph, std::span<const int> group1,
                 std::span<const int> group2, double keep_fraction) {
    const std::size_t n = graph.size();
    Partition part;
    part.scores.assign(n, 0.0);

    std::vector<int> side(n, 0);  // 0 = unassigned, 1, 2
    for (int i : group1) side[static_cast<std::size_t>(i)] = 1;
    for (int i : group2) {
        if (side[static_cast<std::size_t>(i)] == 1)
            throw Error(Err::invalid_value, "refine: groups overlap");
        side[static_cast<std::size_t>(i)] = 2;
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (side[i] == 0) continue;
        double v = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || side[j] == 0) continue;
            v += (side[j] == side[i] ? 1.0 : -1.0) * graph.w[i][j];
        }
        part.scores[i] = v;
    }

    auto keep_from = [&](std::span<const int> group, std::vector<int>& kept) {
        if (group.empty()) return;
        double vmax = -std::numeric_limits<double>::infinity();
        int argmax = group[0];
        for (int i : group) {
            if (part.scores[static_cast<std::size_t>(i)] > vmax) {
                vmax = part.scores[static_cast<std::size_t>(i)];
                argmax = i;
            }
        }
        const double cutoff = keep_fraction * std::max(vmax, 0.0);
        for (int i : group) {
            if (i == argmax || part.scores[static_cast<std::size_t>(i)] >= cutoff)
                kept.push_back(i);
            else
                part.discarded.push_back(i);
        }
    };
    keep_from(group1, part.group1);
    keep_from(group2, part.group2);
    std::sort(part.discarded.begin(), part.discarded.end());
    return part;
}

Waveform align_and_fuse(const WaveformMatrix& gm, const Partition& part) {
    if (part.group1.empty())
        throw Error(Err::empty_partition, "align_and_fuse: group1 is empty");

    const std::size_t l = gm.n_samples();
    std::vector<double> acc(l, 0.0);
    for (int i : part.group1) {
        const auto& row = gm.rows[static_cast<std::size_t>(i)];
        for (std::size_t s = 0; s < l; ++s) acc[s] += row[s];
    }
    for (int i : part.group2) {
        const auto& row = gm.rows[static_cast<std::size_t>(i)];
        for (std::size_t s = 0; s < l; ++s) acc[s] -= row[s];
    }

    Waveform out;
    out.samples = zscore(acc);
    out.sample_rate_hz = gm.sample_rate_hz;
    out.sign_convention = SignConvention::ambiguous;
    return out;
}

} // namespace respirfi
