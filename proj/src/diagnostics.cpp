#include <cmath>
#include <map>

#include "sdm/diagnostics.hpp"
#include "sdm/error.hpp"

namespace sdm {

const char* to_string(AxisLevel level) { return level == AxisLevel::High ? "High" : "Low"; }

const char* to_string(Regime regime) {
    switch (regime) {
        case Regime::FaithfulFactualRecall: return "FaithfulFactualRecall";
        case Regime::FaithfulInterpretation: return "FaithfulInterpretation";
        case Regime::CreativeGeneration: return "CreativeGeneration";
        case Regime::ConvergentResponse: return "ConvergentResponse";
    }
    return "?";
}

Regime regime_for(AxisLevel instability, AxisLevel exploration) {
    if (instability == AxisLevel::High) {
        return exploration == AxisLevel::High ? Regime::CreativeGeneration : Regime::FaithfulFactualRecall;
    }
    return exploration == AxisLevel::High ? Regime::FaithfulInterpretation : Regime::ConvergentResponse;
}

SemanticBoxVerdict classify_semantic_box(double s_h, double kl_score, double s_star, double kl_star) {
    if (!(s_star > 0.0) || !(kl_star > 0.0)) {
        throw Error(ErrorKind::Config, "Semantic Box thresholds must be positive");
    }
    SemanticBoxVerdict v;
    v.s_star = s_star;
    v.kl_star = kl_star;
    v.s_h = s_h;
    v.kl_score = kl_score;
    v.instability = s_h > s_star ? AxisLevel::High : AxisLevel::Low;
    v.exploration = kl_score > kl_star ? AxisLevel::High : AxisLevel::Low;
    v.regime = regime_for(v.instability, v.exploration);
    return v;
}

nlohmann::json verdict_to_json(const SemanticBoxVerdict& v) {
    return {
        {"instability", to_string(v.instability)},
        {"exploration", to_string(v.exploration)},
        {"regime", to_string(v.regime)},
        {"thresholds", {{"s_star", v.s_star}, {"kl_star", v.kl_star}}},
        {"scores", {{"s_h", v.s_h}, {"kl_score", v.kl_score}}},
    };
}

std::vector<int> greedy_similarity_clusters(const Matrix& unit_rows, double threshold) {
    std::vector<int> labels(unit_rows.rows(), -1);
    std::vector<std::size_t> representatives;
    for (std::size_t i = 0; i < unit_rows.rows(); ++i) {
        for (std::size_t c = 0; c < representatives.size(); ++c) {
            const auto rep = unit_rows.row(representatives[c]);
            const auto row = unit_rows.row(i);
            double cos = 0.0;
            for (std::size_t d = 0; d < row.size(); ++d) cos += row[d] * rep[d];
            if (cos >= threshold) {
                labels[i] = static_cast<int>(c);
                break;
            }
        }
        if (labels[i] < 0) {
            labels[i] = static_cast<int>(representatives.size());
            representatives.push_back(i);
        }
    }
    return labels;
}

double cluster_entropy(const std::vector<int>& labels) {
    if (labels.empty()) return 0.0;
    std::map<int, std::size_t> sizes;
    for (int l : labels) ++sizes[l];
    std::vector<double> probs;
    for (const auto& [label, count] : sizes) {
        probs.push_back(static_cast<double>(count) / static_cast<double>(labels.size()));
    }
    return entropy(probs);
}

double semantic_entropy(const std::vector<std::string>& answers, double similarity_threshold,
                        const EmbeddingProviderConfig& cfg, EmbeddingProvider& provider,
                        EmbeddingCache* cache) {
    if (answers.empty()) throw Error(ErrorKind::EmptyLabels, "semantic entropy needs at least one answer");
    const Matrix emb = embed_sentences(answers, cfg, provider, cache);
    return cluster_entropy(greedy_similarity_clusters(emb, similarity_threshold));
}

SEResult se_suite(const RunBundle& bundle, double similarity_threshold, const EmbeddingProviderConfig& cfg,
                  EmbeddingProvider& provider, EmbeddingCache* cache) {
    bundle.validate();
    SEResult out;
    for (const auto& row : bundle.answers) {
        out.se_per_paraphrase.push_back(semantic_entropy(row, similarity_threshold, cfg, provider, cache));
    }
    out.se_original = out.se_per_paraphrase.front();
    double sum = 0.0;
    for (double v : out.se_per_paraphrase) sum += v;
    out.se_mean = sum / static_cast<double>(out.se_per_paraphrase.size());
    return out;
}

}  // namespace sdm
