#include <algorithm>
#include <cmath>
#include <sstream>

#include "sdm/error.hpp"
#include "sdm/topics.hpp"

namespace sdm {

ClusteringResult build_topic_space(const Matrix& pooled, const ClusteringOptions& options) {
    if (pooled.empty()) throw Error(ErrorKind::TooFewPoints, "no sentences to cluster");
    const auto rows = static_cast<int>(pooled.rows());
    const auto distinct = static_cast<int>(count_distinct_rows(pooled));

    ClusteringResult result;
    std::ostringstream trace;

    if (options.mode == ClusterMode::Threshold) {
        result.labels = cluster_ward_threshold(pooled, options.distance_threshold);
        result.k = *std::max_element(result.labels.begin(), result.labels.end()) + 1;
        trace << "ward-threshold distance=" << options.distance_threshold;
        result.method_trace = trace.str();
        return result;
    }

    if (options.k_override) {
        result.k = *options.k_override;
        if (result.k < 1 || result.k > rows) {
            throw Error(ErrorKind::TooFewPoints, "k override " + std::to_string(result.k) +
                                                     " outside [1, " + std::to_string(rows) + "]");
        }
        trace << "k=" << result.k << " (override)";
    } else if (distinct == 1) {
        result.k = 1;
        trace << "k=1 (all embeddings identical)";
    } else {
        const int k_min = options.k_min.value_or(2);
        const int default_max =
            std::max(k_min, std::min(10, static_cast<int>(std::floor(std::sqrt(static_cast<double>(rows))))));
        const int k_max = options.k_max.value_or(default_max);
        if (rows < k_min + 1) {
            result.k = distinct;
            trace << "k=" << result.k << " (too few sentences for elbow search)";
        } else {
            const ElbowResult elbow = select_k_elbow(pooled, k_min, k_max, options.seed, options.kmeans);
            result.k = elbow.k;
            result.inertia_curve = elbow.curve;
            trace << "k=" << elbow.k << " (elbow over [" << k_min << ", " << std::min(k_max, rows - 1)
                  << "], seed " << options.seed << ")";
        }
    }
    if (!options.k_override && result.k > distinct) {
        result.k = distinct;
        trace << ", capped at " << distinct << " distinct embeddings";
    }
    result.labels = cluster_ward(pooled, result.k);
    trace << "; ward linkage";
    result.method_trace = trace.str();
    return result;
}

LabeledSentences assign_labels(const RunBundle& bundle, std::vector<SentenceRecord> sentences,
                               const ClusteringResult& result) {
    if (sentences.size() != result.labels.size()) {
        throw Error(ErrorKind::LengthMismatch, std::to_string(sentences.size()) + " sentences but " +
                                                   std::to_string(result.labels.size()) + " labels");
    }
    LabeledSentences out;
    out.prompt_by_pair.resize(bundle.m());
    out.answer_by_pair.resize(bundle.m());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        auto& rec = sentences[i];
        const int label = result.labels[i];
        if (label < 0 || label >= result.k) {
            throw Error(ErrorKind::LengthMismatch, "label " + std::to_string(label) + " outside [0, k)");
        }
        if (rec.pair_index >= bundle.m()) {
            throw Error(ErrorKind::LengthMismatch, "sentence pair index beyond bundle size");
        }
        rec.topic = label;
        if (rec.role == SentenceRole::Prompt) {
            out.prompt_labels.push_back(label);
            out.prompt_by_pair[rec.pair_index].push_back(label);
        } else {
            out.answer_labels.push_back(label);
            out.answer_by_pair[rec.pair_index].push_back(label);
        }
    }
    out.records = std::move(sentences);
    return out;
}

}  // namespace sdm
