#include <array>
#include <cmath>
#include <sstream>

#include "sdm/error.hpp"
#include "sdm/metrics.hpp"

namespace sdm {

using nlohmann::json;

void MetricsReport::finalize() {
    entropy_diff = h_answer - h_prompt;
    if (h_prompt > kZeroEntropyTolerance) {
        degenerate = false;
        phi = phi_score(h_answer, ensemble_mi, h_prompt);
        s_h = s_h_score(ensemble_jsd, wasserstein, h_prompt, w_jsd, w_wass);
        kl_score = sdm::kl_score(ensemble_kl_ap, h_prompt);
        return;
    }
    constexpr double tol = 1e-9;
    const bool zero_numerators = std::abs(h_answer - ensemble_mi) <= tol &&
                                 std::abs(w_jsd * ensemble_jsd + w_wass * wasserstein) <= tol &&
                                 std::abs(ensemble_kl_ap) <= tol;
    if (!zero_numerators) {
        throw Error(ErrorKind::ZeroPromptEntropy,
                    "all prompt sentences share one topic while the answers diverge; the "
                    "entropy-normalised scores are undefined");
    }
    degenerate = true;
    phi = 0.0;
    s_h = 0.0;
    kl_score = 0.0;
}

MetricsReport compute_metrics(const MetricsInput& input, const MetricOptions& options,
                              JointTopicMatrix* averaged) {
    if (input.prompt_embeddings == nullptr || input.answer_embeddings == nullptr) {
        throw Error(ErrorKind::EmptyCloud, "embedding clouds not provided");
    }
    const int k = input.k;
    std::vector<int> all_prompt;
    std::vector<int> all_answer;
    std::vector<PairDistributions> local;
    std::vector<Matrix> tables;
    for (const auto& pair : input.pairs) {
        all_prompt.insert(all_prompt.end(), pair.prompt.begin(), pair.prompt.end());
        all_answer.insert(all_answer.end(), pair.answer.begin(), pair.answer.end());
        PairDistributions d;
        if (!pair.prompt.empty()) d.prompt = topic_distribution(pair.prompt, k);
        if (!pair.answer.empty()) d.answer = topic_distribution(pair.answer, k);
        local.push_back(std::move(d));
        tables.push_back(local_contingency(pair, k));
    }

    MetricsReport r;
    r.k = k;
    r.epsilon = options.epsilon;
    r.w_jsd = options.w_jsd;
    r.w_wass = options.w_wass;
    r.prompt_sentences = all_prompt.size();
    r.answer_sentences = all_answer.size();

    const TopicDistribution global_prompt = topic_distribution(all_prompt, k);
    const TopicDistribution global_answer = topic_distribution(all_answer, k);
    r.h_prompt = entropy(global_prompt);
    r.h_answer = entropy(global_answer);
    r.global_jsd = jsd(global_prompt, global_answer);
    r.global_kl_pa = kl_divergence(global_prompt, global_answer, options.epsilon);
    r.global_kl_ap = kl_divergence(global_answer, global_prompt, options.epsilon);

    const EnsembleDivergences ens = ensemble_divergences(local, options.epsilon);
    r.ensemble_jsd = ens.jsd;
    r.ensemble_kl_ap = ens.kl_ap;
    r.ensemble_kl_pa = ens.kl_pa;
    r.pairs_used = ens.pairs_used;
    r.pairs_skipped = ens.pairs_skipped;

    JointTopicMatrix joint = averaged_joint(input.pairs, k);
    r.averaged_mi = mi_from_joint(joint);
    const EnsembleMutualInformation emi = ensemble_mi(global_answer, tables);
    r.ensemble_mi = emi.emi;
    r.ensemble_cond_entropy = emi.conditional_entropy;

    r.wasserstein = wasserstein1(*input.prompt_embeddings, *input.answer_embeddings);
    r.finalize();
    if (averaged != nullptr) *averaged = std::move(joint);
    return r;
}

namespace {

constexpr std::array<ReportRow, 14> kRows = {{
    {"s_h", "SDM Score S_H"},
    {"phi", "Norm. Cond. Entropy Phi"},
    {"h_prompt", "Global Prompt Entropy H(P)"},
    {"global_jsd", "Global JSD"},
    {"global_kl_pa", "Global KL(P||A)"},
    {"global_kl_ap", "Global KL(A||P)"},
    {"entropy_diff", "Entropy Difference H(A) - H(P)"},
    {"ensemble_jsd", "Ensemble JSD"},
    {"kl_score", "Ensemble KL(A||P) / H(P)"},
    {"wasserstein", "Wasserstein Distance"},
    {"ensemble_mi", "Ensemble MI (bits)"},
    {"averaged_mi", "Averaged MI (bits)"},
    {"se_original", "SE (Original Prompt Only)"},
    {"se_mean", "Mean SE (Across Paraphrases)"},
}};

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& doc, const char* key) {
    if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
    return doc.at(key).get<double>();
}

}  // namespace

std::span<const ReportRow> canonical_report_rows() { return kRows; }

json report_to_json(const MetricsReport& r) {
    return {
        {"schema", kReportSchema},
        {"k", r.k},
        {"prompt_sentences", r.prompt_sentences},
        {"answer_sentences", r.answer_sentences},
        {"pairs_used", r.pairs_used},
        {"pairs_skipped", r.pairs_skipped},
        {"epsilon", r.epsilon},
        {"h_prompt", r.h_prompt},
        {"h_answer", r.h_answer},
        {"entropy_diff", r.entropy_diff},
        {"global_jsd", r.global_jsd},
        {"global_kl_pa", r.global_kl_pa},
        {"global_kl_ap", r.global_kl_ap},
        {"ensemble_jsd", r.ensemble_jsd},
        {"ensemble_kl_ap", r.ensemble_kl_ap},
        {"ensemble_kl_pa", r.ensemble_kl_pa},
        {"averaged_mi", r.averaged_mi},
        {"ensemble_mi", r.ensemble_mi},
        {"ensemble_cond_entropy", r.ensemble_cond_entropy},
        {"wasserstein", r.wasserstein},
        {"w_jsd", r.w_jsd},
        {"w_wass", r.w_wass},
        {"phi", r.phi},
        {"s_h", r.s_h},
        {"kl_score", r.kl_score},
        {"degenerate", r.degenerate},
        {"se_original", optional_number(r.se_original)},
        {"se_mean", optional_number(r.se_mean)},
    };
}

MetricsReport report_from_json(const json& doc) {
    if (!doc.is_object() || doc.value("schema", "") != kReportSchema) {
        throw Error(ErrorKind::Schema, "report is not " + std::string(kReportSchema));
    }
    MetricsReport r;
    try {
        r.k = doc.at("k").get<int>();
        r.prompt_sentences = doc.at("prompt_sentences").get<std::size_t>();
        r.answer_sentences = doc.at("answer_sentences").get<std::size_t>();
        r.pairs_used = doc.at("pairs_used").get<std::size_t>();
        r.pairs_skipped = doc.at("pairs_skipped").get<std::size_t>();
        r.epsilon = doc.at("epsilon").get<double>();
        r.h_prompt = doc.at("h_prompt").get<double>();
        r.h_answer = doc.at("h_answer").get<double>();
        r.entropy_diff = doc.at("entropy_diff").get<double>();
        r.global_jsd = doc.at("global_jsd").get<double>();
        r.global_kl_pa = doc.at("global_kl_pa").get<double>();
        r.global_kl_ap = doc.at("global_kl_ap").get<double>();
        r.ensemble_jsd = doc.at("ensemble_jsd").get<double>();
        r.ensemble_kl_ap = doc.at("ensemble_kl_ap").get<double>();
        r.ensemble_kl_pa = doc.at("ensemble_kl_pa").get<double>();
        r.averaged_mi = doc.at("averaged_mi").get<double>();
        r.ensemble_mi = doc.at("ensemble_mi").get<double>();
        r.ensemble_cond_entropy = doc.at("ensemble_cond_entropy").get<double>();
        r.wasserstein = doc.at("wasserstein").get<double>();
        r.w_jsd = doc.at("w_jsd").get<double>();
        r.w_wass = doc.at("w_wass").get<double>();
        r.phi = doc.at("phi").get<double>();
        r.s_h = doc.at("s_h").get<double>();
        r.kl_score = doc.at("kl_score").get<double>();
        r.degenerate = doc.at("degenerate").get<bool>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Schema, std::string("malformed report: ") + e.what());
    }
    r.se_original = read_optional(doc, "se_original");
    r.se_mean = read_optional(doc, "se_mean");
    return r;
}

std::string report_to_csv(const MetricsReport& report) {
    const json doc = report_to_json(report);
    std::ostringstream out;
    out << "metric,value\n";
    for (const auto& row : kRows) {
        const json& v = doc.at(row.key);
        out << '"' << row.label << "\"," << (v.is_null() ? std::string("n/a") : v.dump()) << '\n';
    }
    return out.str();
}

}  // namespace sdm
