#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "sdm/matrix.hpp"

namespace sdm {

/// Probability vector over k topics. All logarithms in this module are base 2.
struct TopicDistribution {
    std::vector<double> probs;
    std::size_t support_count = 0;

    std::size_t k() const { return probs.size(); }
};

/// k x k joint probabilities; rows index prompt topics, columns answer topics.
struct JointTopicMatrix {
    Matrix probs;
    std::size_t pair_count = 0;
    std::size_t skipped_pairs = 0;

    std::size_t k() const { return probs.rows(); }
};

TopicDistribution topic_distribution(std::span<const int> labels, int k);

double entropy(std::span<const double> probs);
inline double entropy(const TopicDistribution& dist) { return entropy(dist.probs); }

inline constexpr double kDefaultKlEpsilon = 1e-6;

/// KL(p || q) after adding epsilon to every entry of both and renormalising.
double kl_divergence(const TopicDistribution& p, const TopicDistribution& q,
                     double epsilon = kDefaultKlEpsilon);

/// Jensen-Shannon divergence in bits, bounded by [0, 1].
double jsd(const TopicDistribution& p, const TopicDistribution& q);

/// Local (per paraphrase) topic distributions. An unset side means that pair
/// produced no sentences on that side.
struct PairDistributions {
    std::optional<TopicDistribution> prompt;
    std::optional<TopicDistribution> answer;
};

struct EnsembleDivergences {
    double jsd = 0.0;
    double kl_ap = 0.0;  // mean KL(answer || prompt)
    double kl_pa = 0.0;  // mean KL(prompt || answer)
    std::size_t pairs_used = 0;
    std::size_t pairs_skipped = 0;
};

EnsembleDivergences ensemble_divergences(std::span<const PairDistributions> pairs,
                                         double epsilon = kDefaultKlEpsilon);

/// Prompt and answer topic labels of one paraphrase experiment.
struct PairLabels {
    std::vector<int> prompt;
    std::vector<int> answer;
};

/// Count table C[i][j] = (#prompt sentences in topic i) * (#answer sentences in
/// topic j): every prompt sentence co-occurs with every answer sentence of its pair.
Matrix local_contingency(const PairLabels& pair, int k);

/// Element-wise mean of the normalised local tables of all non-empty pairs.
JointTopicMatrix averaged_joint(std::span<const PairLabels> pairs, int k);

double mi_from_joint(const JointTopicMatrix& joint);
double mi_from_joint(const Matrix& joint);

/// H(Y|X) of a (not necessarily normalised) contingency table; rows are X.
double conditional_entropy(const Matrix& table);

struct EnsembleMutualInformation {
    double emi = 0.0;               // H(Y) - mean_m H(Y_m | X_m); may be negative
    double conditional_entropy = 0.0;
    std::size_t pairs_used = 0;
};

EnsembleMutualInformation ensemble_mi(const TopicDistribution& global_answer,
                                      std::span<const Matrix> pair_tables);

/// Exact 1-Wasserstein distance between uniform measures on the rows of the
/// two clouds, Euclidean ground cost. Solved as a transportation problem
/// with integer masses (|B| units per source, |A| per sink).
double wasserstein1(const Matrix& from, const Matrix& to);

inline constexpr double kZeroEntropyTolerance = 1e-12;

double phi_score(double h_answer, double mi, double h_prompt);
double s_h_score(double ensemble_jsd, double wasserstein, double h_prompt, double w_jsd = 0.7,
                 double w_wass = 0.3);
double kl_score(double ensemble_kl_ap, double h_prompt);

struct MetricOptions {
    double epsilon = kDefaultKlEpsilon;
    double w_jsd = 0.7;
    double w_wass = 0.3;
};

struct MetricsReport {
    int k = 0;
    std::size_t prompt_sentences = 0;
    std::size_t answer_sentences = 0;
    std::size_t pairs_used = 0;
    std::size_t pairs_skipped = 0;
    double epsilon = kDefaultKlEpsilon;

    double h_prompt = 0.0;
    double h_answer = 0.0;
    double entropy_diff = 0.0;
    double global_jsd = 0.0;
    double global_kl_pa = 0.0;
    double global_kl_ap = 0.0;
    double ensemble_jsd = 0.0;
    double ensemble_kl_ap = 0.0;
    double ensemble_kl_pa = 0.0;
    double averaged_mi = 0.0;
    double ensemble_mi = 0.0;
    double ensemble_cond_entropy = 0.0;
    double wasserstein = 0.0;

    double w_jsd = 0.7;
    double w_wass = 0.3;
    double phi = 0.0;
    double s_h = 0.0;
    double kl_score = 0.0;

    /// True when H(P) is zero and every numerator is zero too; the finals are
    /// then reported as 0 instead of 0/0.
    bool degenerate = false;

    std::optional<double> se_original;
    std::optional<double> se_mean;

    /// Recomputes phi, s_h and kl_score from the stored components.
    void finalize();
};

/// Global and ensemble metrics for one labelled run. `pairs[m]` holds the
/// labels of paraphrase m; the clouds are all prompt / all answer embeddings.
struct MetricsInput {
    int k = 0;
    std::vector<PairLabels> pairs;
    const Matrix* prompt_embeddings = nullptr;
    const Matrix* answer_embeddings = nullptr;
};

MetricsReport compute_metrics(const MetricsInput& input, const MetricOptions& options,
                              JointTopicMatrix* averaged = nullptr);

inline constexpr const char* kReportSchema = "sdm_report_v1";

nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& doc);

/// Display rows in canonical order: (json key, table label).
struct ReportRow {
    const char* key;
    const char* label;
};
std::span<const ReportRow> canonical_report_rows();

/// Two-column CSV "metric,value" following canonical_report_rows().
std::string report_to_csv(const MetricsReport& report);

}  // namespace sdm
