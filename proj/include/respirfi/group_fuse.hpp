#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "respirfi/preprocess.hpp"
#include "respirfi/trace_model.hpp"

namespace respirfi {

/// Pairwise cosine-similarity graph over retained subcarriers, plus its
/// ternary discretization: +1 at >= sim_threshold, -1 at <= -sim_threshold,
/// 0 between.
struct SimilarityGraph {
    std::vector<std::vector<double>> w;        // symmetric, unit diagonal
    std::vector<std::vector<std::int8_t>> w_disc;
    double sim_threshold = 0.5;

    std::size_t size() const { return w.size(); }
};

SimilarityGraph build_similarity(const WaveformMatrix& gm, double sim_threshold = 0.5);

/// Two-group split with per-node quality scores. group1, group2 and
/// discarded hold row indices of the graph/matrix they were built from.
struct Partition {
    std::vector<int> group1;
    std::vector<int> group2;
    std::vector<int> discarded;
    std::vector<double> scores;  // v_k for every row, kept or not
};

/// Signed-graph bi-partition: the sign pattern of the smallest-eigenvalue
/// eigenvector of the signed Laplacian of w_disc, followed by a
/// deterministic single-flip ascent on the intra-minus-inter similarity
/// objective. Zero eigenvector entries land in group1; an all-zero w_disc
/// degenerates to everything in group1. Deterministic for fixed input.
std::pair<std::vector<int>, std::vector<int>> partition_groups(const SimilarityGraph& graph);

/// Score v_k = sum of similarities to own group minus sum to the other
/// group (self excluded). Each group keeps nodes with
/// v_k >= keep_fraction * max(positive v of the group), never dropping its
/// argmax; the rest are discarded.
Partition refine(const SimilarityGraph& graph, std::span<const int> group1,
                 std::span<const int> group2, double keep_fraction = 0.5);

/// Flip group2 rows, average all kept rows, re-normalize. The result is an
/// ambiguous-sign waveform aligned with group1's trend.
Waveform align_and_fuse(const WaveformMatrix& gm, const Partition& part);

} // namespace respirfi
