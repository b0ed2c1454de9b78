#include <algorithm>
#include <cmath>

#include "sdm/error.hpp"
#include "sdm/metrics.hpp"

namespace sdm {

namespace {

void require_same_k(const TopicDistribution& p, const TopicDistribution& q) {
    if (p.k() != q.k()) {
        throw Error(ErrorKind::DimensionMismatch, "distributions over " + std::to_string(p.k()) +
                                                      " and " + std::to_string(q.k()) + " topics");
    }
}

double plogp_ratio(double p, double q) { return p > 0.0 ? p * std::log2(p / q) : 0.0; }

}  // namespace

TopicDistribution topic_distribution(std::span<const int> labels, int k) {
    if (labels.empty()) throw Error(ErrorKind::EmptyLabels, "cannot build a distribution from no labels");
    if (k < 1) throw Error(ErrorKind::Config, "k must be >= 1");
    TopicDistribution dist;
    dist.probs.assign(static_cast<std::size_t>(k), 0.0);
    for (int label : labels) {
        if (label < 0 || label >= k) {
            throw Error(ErrorKind::LengthMismatch, "label " + std::to_string(label) + " outside [0, k)");
        }
        dist.probs[static_cast<std::size_t>(label)] += 1.0;
    }
    for (double& p : dist.probs) p /= static_cast<double>(labels.size());
    dist.support_count = labels.size();
    return dist;
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log2(p);
    }
    return h;
}

double kl_divergence(const TopicDistribution& p, const TopicDistribution& q, double epsilon) {
    require_same_k(p, q);
    if (!(epsilon > 0.0)) throw Error(ErrorKind::Config, "KL smoothing epsilon must be > 0");
    double p_total = 0.0;
    double q_total = 0.0;
    for (std::size_t i = 0; i < p.k(); ++i) {
        p_total += p.probs[i] + epsilon;
        q_total += q.probs[i] + epsilon;
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < p.k(); ++i) {
        kl += plogp_ratio((p.probs[i] + epsilon) / p_total, (q.probs[i] + epsilon) / q_total);
    }
    return std::max(0.0, kl);
}

double jsd(const TopicDistribution& p, const TopicDistribution& q) {
    require_same_k(p, q);
    double d = 0.0;
    for (std::size_t i = 0; i < p.k(); ++i) {
        const double m = 0.5 * (p.probs[i] + q.probs[i]);
        d += 0.5 * plogp_ratio(p.probs[i], m) + 0.5 * plogp_ratio(q.probs[i], m);
    }
    return std::clamp(d, 0.0, 1.0);
}

EnsembleDivergences ensemble_divergences(std::span<const PairDistributions> pairs, double epsilon) {
    EnsembleDivergences out;
    for (const auto& pair : pairs) {
        if (!pair.prompt || !pair.answer || pair.prompt->support_count == 0 ||
            pair.answer->support_count == 0) {
            ++out.pairs_skipped;
            continue;
        }
        out.jsd += jsd(*pair.prompt, *pair.answer);
        out.kl_ap += kl_divergence(*pair.answer, *pair.prompt, epsilon);
        out.kl_pa += kl_divergence(*pair.prompt, *pair.answer, epsilon);
        ++out.pairs_used;
    }
    if (out.pairs_used == 0) throw Error(ErrorKind::AllPairsEmpty, "no pair has both prompt and answer sentences");
    const auto used = static_cast<double>(out.pairs_used);
    out.jsd /= used;
    out.kl_ap /= used;
    out.kl_pa /= used;
    return out;
}

Matrix local_contingency(const PairLabels& pair, int k) {
    const auto kk = static_cast<std::size_t>(k);
    std::vector<double> px(kk, 0.0);
    std::vector<double> py(kk, 0.0);
    for (int l : pair.prompt) px.at(static_cast<std::size_t>(l)) += 1.0;
    for (int l : pair.answer) py.at(static_cast<std::size_t>(l)) += 1.0;
    Matrix table(kk, kk, 0.0);
    for (std::size_t i = 0; i < kk; ++i) {
        for (std::size_t j = 0; j < kk; ++j) table(i, j) = px[i] * py[j];
    }
    return table;
}

JointTopicMatrix averaged_joint(std::span<const PairLabels> pairs, int k) {
    const auto kk = static_cast<std::size_t>(k);
    JointTopicMatrix joint;
    joint.probs = Matrix(kk, kk, 0.0);
    for (const auto& pair : pairs) {
        if (pair.prompt.empty() || pair.answer.empty()) {
            ++joint.skipped_pairs;
            continue;
        }
        const Matrix table = local_contingency(pair, k);
        const double total = static_cast<double>(pair.prompt.size() * pair.answer.size());
        for (std::size_t i = 0; i < kk; ++i) {
            for (std::size_t j = 0; j < kk; ++j) joint.probs(i, j) += table(i, j) / total;
        }
        ++joint.pair_count;
    }
    if (joint.pair_count == 0) throw Error(ErrorKind::AllPairsEmpty, "no pair has both prompt and answer sentences");
    for (std::size_t i = 0; i < kk; ++i) {
        for (std::size_t j = 0; j < kk; ++j) joint.probs(i, j) /= static_cast<double>(joint.pair_count);
    }
    return joint;
}

double mi_from_joint(const Matrix& joint) {
    const std::size_t rows = joint.rows();
    const std::size_t cols = joint.cols();
    std::vector<double> px(rows, 0.0);
    std::vector<double> py(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            px[i] += joint(i, j);
            py[j] += joint(i, j);
        }
    }
    double mi = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double pij = joint(i, j);
            if (pij > 0.0) mi += pij * std::log2(pij / (px[i] * py[j]));
        }
    }
    return mi;
}

double mi_from_joint(const JointTopicMatrix& joint) { return mi_from_joint(joint.probs); }

double conditional_entropy(const Matrix& table) {
    double total = 0.0;
    for (double v : table.data()) total += v;
    if (!(total > 0.0)) return 0.0;
    double h = 0.0;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        double row_total = 0.0;
        for (double v : table.row(i)) row_total += v;
        if (!(row_total > 0.0)) continue;
        double row_h = 0.0;
        for (double v : table.row(i)) {
            if (v > 0.0) {
                const double p = v / row_total;
                row_h -= p * std::log2(p);
            }
        }
        h += (row_total / total) * row_h;
    }
    return h;
}

EnsembleMutualInformation ensemble_mi(const TopicDistribution& global_answer,
                                      std::span<const Matrix> pair_tables) {
    EnsembleMutualInformation out;
    for (const auto& table : pair_tables) {
        double total = 0.0;
        for (double v : table.data()) total += v;
        if (!(total > 0.0)) continue;
        out.conditional_entropy += conditional_entropy(table);
        ++out.pairs_used;
    }
    if (out.pairs_used == 0) throw Error(ErrorKind::AllPairsEmpty, "every contingency table is empty");
    out.conditional_entropy /= static_cast<double>(out.pairs_used);
    out.emi = entropy(global_answer) - out.conditional_entropy;
    return out;
}

double phi_score(double h_answer, double mi, double h_prompt) {
    if (!(h_prompt > kZeroEntropyTolerance)) {
        throw Error(ErrorKind::ZeroPromptEntropy, "prompt entropy is zero; phi is undefined");
    }
    return (h_answer - mi) / h_prompt;
}

double s_h_score(double ensemble_jsd, double wasserstein, double h_prompt, double w_jsd, double w_wass) {
    if (std::abs(w_jsd + w_wass - 1.0) > 1e-9) {
        throw Error(ErrorKind::Config, "S_H weights must sum to 1");
    }
    if (!(h_prompt > kZeroEntropyTolerance)) {
        throw Error(ErrorKind::ZeroPromptEntropy, "prompt entropy is zero; S_H is undefined");
    }
    return (w_jsd * ensemble_jsd + w_wass * wasserstein) / h_prompt;
}

double kl_score(double ensemble_kl_ap, double h_prompt) {
    if (!(h_prompt > kZeroEntropyTolerance)) {
        throw Error(ErrorKind::ZeroPromptEntropy, "prompt entropy is zero; KL score is undefined");
    }
    return ensemble_kl_ap / h_prompt;
}

}  // namespace sdm
