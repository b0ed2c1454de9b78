#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdm/corpus.hpp"
#include "sdm/matrix.hpp"
#include "sdm/textproc.hpp"

namespace sdm {

struct KMeansOptions {
    int restarts = 10;
    int max_iterations = 300;
};

struct KMeansResult {
    Matrix centers;
    std::vector<int> labels;
    double inertia = 0.0;
};

/// Best of `restarts` Lloyd runs from k-means++ seeds drawn from `seed`.
/// `warm_start`, when given, contributes one extra run initialised from those
/// centers plus one k-means++ pick for each missing center.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options = {},
                    const Matrix* warm_start = nullptr);

using InertiaCurve = std::vector<std::pair<int, double>>;

struct ElbowResult {
    int k = 1;
    InertiaCurve curve;
};

/// Picks k in [k_min, k_max] maximising the second difference of K-means
/// inertia, normalised by the curve's range; ties go to the smaller k. The
/// curve is evaluated one step beyond each end so both endpoints can win.
/// k_max is clamped to rows - 1. All-identical input yields k = 1.
ElbowResult select_k_elbow(const Matrix& points, int k_min, int k_max, std::uint64_t seed,
                           const KMeansOptions& options = {});

/// Ward-linkage agglomerative clustering down to exactly k clusters. Labels
/// are numbered by first appearance.
std::vector<int> cluster_ward(const Matrix& points, int k);

/// Ward merges continue while the next merge height (Euclidean-equivalent
/// Ward distance) is at most `distance_threshold`.
std::vector<int> cluster_ward_threshold(const Matrix& points, double distance_threshold);

enum class ClusterMode { Ward, Threshold };

struct ClusteringOptions {
    std::optional<int> k_override;
    std::optional<int> k_min;
    std::optional<int> k_max;
    std::uint64_t seed = 0;
    ClusterMode mode = ClusterMode::Ward;
    double distance_threshold = 1.0;
    KMeansOptions kmeans;
};

struct ClusteringResult {
    int k = 1;
    std::vector<int> labels;
    InertiaCurve inertia_curve;
    std::string method_trace;
};

/// Shared topic space over the pooled prompt+answer embeddings: elbow-selected
/// k, then Ward labels.
ClusteringResult build_topic_space(const Matrix& pooled, const ClusteringOptions& options);

std::size_t count_distinct_rows(const Matrix& points);

struct LabeledSentences {
    std::vector<SentenceRecord> records;
    std::vector<int> prompt_labels;                    // L_P, in record order
    std::vector<int> answer_labels;                    // L_A, in record order
    std::vector<std::vector<int>> prompt_by_pair;      // [m] -> prompt labels of paraphrase m
    std::vector<std::vector<int>> answer_by_pair;      // [m] -> labels of all answers to paraphrase m
};

LabeledSentences assign_labels(const RunBundle& bundle, std::vector<SentenceRecord> sentences,
                               const ClusteringResult& result);

}  // namespace sdm
