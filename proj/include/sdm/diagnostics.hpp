#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdm/corpus.hpp"
#include "sdm/matrix.hpp"
#include "sdm/metrics.hpp"
#include "sdm/textproc.hpp"

namespace sdm {

// ---- heatmap -------------------------------------------------------------

/// k x k CSV: header "prompt_topic,answer_topic_0,...", then one
/// "prompt_topic_i,..." row per prompt topic, six decimals per cell.
std::string heatmap_csv(const Matrix& joint);
Matrix parse_heatmap_csv(const std::string& text);

/// Annotated cell grid, colour scale linear from 0 to the matrix maximum.
std::string heatmap_svg(const Matrix& joint, const std::string& title = {});

void render_heatmap(const JointTopicMatrix& joint, const std::filesystem::path& out_svg,
                    const std::filesystem::path& out_csv, const std::string& title = {});

/// Writes to a sibling temporary file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

// ---- Semantic Box --------------------------------------------------------

enum class AxisLevel { Low, High };

enum class Regime { FaithfulFactualRecall, FaithfulInterpretation, CreativeGeneration, ConvergentResponse };

const char* to_string(AxisLevel level);
const char* to_string(Regime regime);

inline constexpr double kDefaultSStar = 0.25;
inline constexpr double kDefaultKlStar = 2.0;

struct SemanticBoxVerdict {
    AxisLevel instability = AxisLevel::Low;
    AxisLevel exploration = AxisLevel::Low;
    Regime regime = Regime::ConvergentResponse;
    double s_star = kDefaultSStar;
    double kl_star = kDefaultKlStar;
    double s_h = 0.0;
    double kl_score = 0.0;
};

Regime regime_for(AxisLevel instability, AxisLevel exploration);

/// Strict comparisons: a score equal to its threshold is Low.
SemanticBoxVerdict classify_semantic_box(double s_h, double kl_score, double s_star = kDefaultSStar,
                                         double kl_star = kDefaultKlStar);

nlohmann::json verdict_to_json(const SemanticBoxVerdict& verdict);

// ---- Semantic Entropy baseline --------------------------------------------

inline constexpr double kDefaultSeThreshold = 0.92;
inline constexpr const char* kSeClusterMethod =
    "greedy cosine >= threshold to first member (embedding approximation of bidirectional entailment)";

/// Greedy clustering of unit-norm rows: each row joins the first cluster whose
/// representative (first member) has cosine similarity >= threshold.
std::vector<int> greedy_similarity_clusters(const Matrix& unit_rows, double threshold);

/// Shannon entropy (bits) of the cluster-size distribution.
double cluster_entropy(const std::vector<int>& labels);

double semantic_entropy(const std::vector<std::string>& answers, double similarity_threshold,
                        const EmbeddingProviderConfig& cfg, EmbeddingProvider& provider,
                        EmbeddingCache* cache = nullptr);

struct SEResult {
    double se_original = 0.0;
    std::vector<double> se_per_paraphrase;
    double se_mean = 0.0;
    std::string cluster_method = kSeClusterMethod;
};

SEResult se_suite(const RunBundle& bundle, double similarity_threshold, const EmbeddingProviderConfig& cfg,
                  EmbeddingProvider& provider, EmbeddingCache* cache = nullptr);

}  // namespace sdm
