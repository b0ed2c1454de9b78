#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sdm/matrix.hpp"

namespace sdm {

enum class SentenceRole { Prompt, Answer };

struct SentenceRecord {
    std::string text;
    SentenceRole role = SentenceRole::Prompt;
    std::size_t pair_index = 0;
    std::optional<std::size_t> sample_index;  // unset for prompt sentences
    std::vector<double> embedding;
    std::optional<int> topic;
};

struct EmbeddingProviderConfig {
    std::string endpoint_url;
    std::string api_key_ref;
    std::string model_id = "Qwen/Qwen3-Embedding-0.6B";
    int dimension = 1024;
    std::filesystem::path cache_dir;
    int batch_size = 64;
    int max_parallel_requests = 4;
    int retry_budget = 2;
    double timeout_seconds = 120.0;

    void validate() const;
};

/// Splits on . ! ? followed by whitespace and a capital letter, or by end of
/// text. Known abbreviations and single-letter initials never end a sentence.
/// Fragments shorter than two characters after trimming are dropped.
std::vector<std::string> segment(const std::string& text);

/// The abbreviations the splitter refuses to break after (lower-case, with
/// their trailing period).
std::span<const std::string_view> abbreviation_guards();

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    /// One raw (not necessarily normalized) vector per input, in order.
    virtual std::vector<std::vector<double>> embed(std::span<const std::string> texts) = 0;
    virtual std::string name() const = 0;
};

/// OpenAI-compatible POST {endpoint}/embeddings.
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(EmbeddingProviderConfig cfg);
    std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;
    std::string name() const override { return "http:" + cfg_.endpoint_url; }

private:
    EmbeddingProviderConfig cfg_;
    std::string api_key_;
};

/// Offline embedding: sum of seeded pseudo-random vectors, one per lower-cased
/// word token. Texts sharing vocabulary land close together.
class HashingEmbeddingProvider final : public EmbeddingProvider {
public:
    HashingEmbeddingProvider(int dimension, std::uint64_t seed);
    std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;
    std::string name() const override { return "hashing"; }

    std::vector<double> embed_one(const std::string& text) const;

private:
    int dimension_;
    std::uint64_t seed_;
};

/// Content-addressed store of raw provider vectors, one JSON file per
/// SHA-256(model_id, text) key. An empty directory path disables persistence
/// but keeps an in-memory layer.
class EmbeddingCache {
public:
    EmbeddingCache(std::filesystem::path dir, std::string model_id);

    std::optional<std::vector<double>> get(const std::string& text);
    void put(const std::string& text, const std::vector<double>& vector);

    static std::string key(const std::string& model_id, const std::string& text);
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::string model_id_;
    std::mutex mutex_;
    std::unordered_map<std::string, std::vector<double>> memory_;
};

/// Rows are L2-normalized provider vectors for each sentence, in input order.
Matrix embed_sentences(std::span<const std::string> sentences, const EmbeddingProviderConfig& cfg,
                       EmbeddingProvider& provider, EmbeddingCache* cache = nullptr);

void normalize_in_place(std::span<double> v);

}  // namespace sdm
