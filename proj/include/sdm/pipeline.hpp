#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdm/corpus.hpp"
#include "sdm/diagnostics.hpp"
#include "sdm/metrics.hpp"
#include "sdm/textproc.hpp"
#include "sdm/topics.hpp"

namespace sdm {

enum class ChatBackend { Http, Echo };
enum class EmbeddingBackend { Http, Hashing };

struct RunConfig {
    std::string prompt;
    int m_paraphrases = 10;
    int n_answers = 4;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "runs";

    ChatBackend chat_backend = ChatBackend::Http;
    ProviderConfig provider;

    EmbeddingBackend embedding_backend = EmbeddingBackend::Http;
    EmbeddingProviderConfig embedding;
    std::uint64_t hashing_seed = 0;

    ClusteringOptions clustering;
    MetricOptions metrics;

    double s_star = kDefaultSStar;
    double kl_star = kDefaultKlStar;
    double se_threshold = kDefaultSeThreshold;
    bool semantic_entropy = true;

    std::optional<std::filesystem::path> from_bundle;

    void validate() const;
};

/// Parses the JSON config document (call validate() before running). Every string value may reference
/// environment variables as ${NAME}; relative paths resolve against base_dir.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Everything the pipeline derives from one bundle.
struct Analysis {
    std::vector<SentenceRecord> sentences;
    ClusteringResult clustering;
    MetricsReport report;
    JointTopicMatrix joint;
    SemanticBoxVerdict verdict;
    std::optional<SEResult> se;
};

/// Segment, embed, cluster and score a bundle. Pure given the bundle, the
/// provider's vectors and the seed.
Analysis analyze_bundle(const RunBundle& bundle, const RunConfig& config, EmbeddingProvider& embedder,
                        EmbeddingCache* cache);

/// Optional overrides for the providers the config would otherwise build.
struct Providers {
    ChatProvider* chat = nullptr;
    EmbeddingProvider* embedder = nullptr;
};

struct RunResult {
    std::filesystem::path run_dir;
    Analysis analysis;
};

/// Full run: generate (or replay) -> analyse -> write the run directory.
/// Stage failures rethrow with the stage name; files written before the
/// failure are kept.
RunResult run_pipeline(const RunConfig& config, Providers providers = {});

std::unique_ptr<ChatProvider> make_chat_provider(const RunConfig& config);
std::unique_ptr<EmbeddingProvider> make_embedding_provider(const RunConfig& config);

/// Cache namespace for the configured embedder; offline hashing vectors never
/// share keys with a real model.
std::string effective_embedding_model(const RunConfig& config);

std::string summary_markdown(const RunBundle& bundle, const Analysis& analysis);

// ---- run comparison -------------------------------------------------------

struct ComparisonTable {
    std::vector<std::string> runs;
    std::vector<std::string> labels;               // canonical row labels
    std::vector<std::vector<std::string>> cells;   // [row][run]
};

/// Accepts report.json files or run directories containing one.
ComparisonTable compare_runs(const std::vector<std::filesystem::path>& report_paths);
std::string comparison_csv(const ComparisonTable& table);
std::string comparison_markdown(const ComparisonTable& table);

}  // namespace sdm
