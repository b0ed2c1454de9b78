#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "http_client.hpp"
#include "json.hpp"
#include "sdm/corpus.hpp"
#include "sdm/error.hpp"
#include "sdm/textproc.hpp"

namespace sdm {

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<std::string> word_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

}  // namespace

void EmbeddingProviderConfig::validate() const {
    if (dimension < 2) throw Error(ErrorKind::Config, "embedding dimension must be >= 2");
    if (batch_size < 1) throw Error(ErrorKind::Config, "embedding batch_size must be >= 1");
    if (max_parallel_requests < 1) throw Error(ErrorKind::Config, "max_parallel_requests must be >= 1");
}

void normalize_in_place(std::span<double> v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw Error(ErrorKind::Provider, "embedding vector has zero or non-finite norm");
    }
    for (double& x : v) x /= norm;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(EmbeddingProviderConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (!cfg_.api_key_ref.empty()) {
        const char* key = std::getenv(cfg_.api_key_ref.c_str());
        if (key == nullptr) {
            throw Error(ErrorKind::Config, "environment variable " + cfg_.api_key_ref + " is not set");
        }
        api_key_ = key;
    }
}

std::vector<std::vector<double>> HttpEmbeddingProvider::embed(std::span<const std::string> texts) {
    nlohmann::json body = {{"model", cfg_.model_id},
                           {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    const auto response = detail::post_json(cfg_.endpoint_url, "/embeddings", body, api_key_,
                                            cfg_.retry_budget, cfg_.timeout_seconds);
    std::vector<std::vector<double>> out(texts.size());
    try {
        const auto& data = response.at("data");
        if (data.size() != texts.size()) {
            throw Error(ErrorKind::Provider, "embedding response has " + std::to_string(data.size()) +
                                                 " items for " + std::to_string(texts.size()) + " inputs");
        }
        for (std::size_t i = 0; i < data.size(); ++i) {
            const std::size_t idx = data[i].value("index", i);
            if (idx >= out.size()) throw Error(ErrorKind::Provider, "embedding index out of range");
            out[idx] = data[i].at("embedding").get<std::vector<double>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Provider, std::string("unexpected embedding response shape: ") + e.what());
    }
    return out;
}

HashingEmbeddingProvider::HashingEmbeddingProvider(int dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
    if (dimension < 2) throw Error(ErrorKind::Config, "embedding dimension must be >= 2");
}

std::vector<double> HashingEmbeddingProvider::embed_one(const std::string& text) const {
    std::vector<double> v(static_cast<std::size_t>(dimension_), 0.0);
    auto tokens = word_tokens(text);
    if (tokens.empty()) tokens.push_back(text);
    for (const auto& tok : tokens) {
        const std::uint64_t base = fnv1a(tok) ^ seed_;
        for (std::size_t j = 0; j < v.size(); ++j) {
            const std::uint64_t bits = splitmix64(base + 0x632be59bd9b4e019ULL * (j + 1));
            v[j] += static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;  // uniform in [-1, 1)
        }
    }
    return v;
}

std::vector<std::vector<double>> HashingEmbeddingProvider::embed(std::span<const std::string> texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
}

EmbeddingCache::EmbeddingCache(std::filesystem::path dir, std::string model_id)
    : dir_(std::move(dir)), model_id_(std::move(model_id)) {
    if (!dir_.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw Error(ErrorKind::IO, "cannot create cache dir " + dir_.string() + ": " + ec.message());
    }
}

std::string EmbeddingCache::key(const std::string& model_id, const std::string& text) {
    std::string material = model_id;
    material.push_back('\0');
    material += text;
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(material.data(), material.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::IO, "SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        hex.push_back(kHex[digest[i] >> 4]);
        hex.push_back(kHex[digest[i] & 0xF]);
    }
    return hex;
}

std::optional<std::vector<double>> EmbeddingCache::get(const std::string& text) {
    const std::string k = key(model_id_, text);
    {
        std::lock_guard lock(mutex_);
        if (auto it = memory_.find(k); it != memory_.end()) return it->second;
    }
    if (dir_.empty()) return std::nullopt;
    std::ifstream in(dir_ / (k + ".json"));
    if (!in) return std::nullopt;
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Schema, "corrupt cache entry " + k + ": " + e.what());
    }
    auto vec = doc.at("vector").get<std::vector<double>>();
    std::lock_guard lock(mutex_);
    memory_.emplace(k, vec);
    return vec;
}

void EmbeddingCache::put(const std::string& text, const std::vector<double>& vector) {
    const std::string k = key(model_id_, text);
    {
        std::lock_guard lock(mutex_);
        memory_[k] = vector;
    }
    if (dir_.empty()) return;
    const nlohmann::json doc = {{"model_id", model_id_}, {"text", text}, {"vector", vector}};
    const auto final_path = dir_ / (k + ".json");
    auto tmp_path = final_path;
    tmp_path += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IO, "cannot write cache entry " + tmp_path.string());
        out << doc.dump() << '\n';
    }
    std::error_code ec;
    std::filesystem::rename(tmp_path, final_path, ec);
    if (ec) throw Error(ErrorKind::IO, "cannot commit cache entry: " + ec.message());
}

Matrix embed_sentences(std::span<const std::string> sentences, const EmbeddingProviderConfig& cfg,
                       EmbeddingProvider& provider, EmbeddingCache* cache) {
    cfg.validate();
    const auto dim = static_cast<std::size_t>(cfg.dimension);

    std::map<std::string, std::vector<double>> resolved;
    std::vector<std::string> missing;
    std::set<std::string> queued;
    for (const auto& s : sentences) {
        if (resolved.count(s) || queued.count(s)) continue;
        if (cache != nullptr) {
            if (auto hit = cache->get(s)) {
                resolved.emplace(s, std::move(*hit));
                continue;
            }
        }
        queued.insert(s);
        missing.push_back(s);
    }

    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    const std::size_t batches = (missing.size() + batch - 1) / batch;
    std::vector<std::vector<std::vector<double>>> fetched(batches);
    parallel_for(batches, cfg.max_parallel_requests, [&](std::size_t b) {
        const std::size_t from = b * batch;
        const std::size_t count = std::min(batch, missing.size() - from);
        fetched[b] = provider.embed(std::span<const std::string>(missing).subspan(from, count));
        if (fetched[b].size() != count) {
            throw Error(ErrorKind::Provider, "provider returned wrong number of embeddings");
        }
    });
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t i = 0; i < fetched[b].size(); ++i) {
            const std::string& text = missing[b * batch + i];
            if (cache != nullptr) cache->put(text, fetched[b][i]);
            resolved.emplace(text, std::move(fetched[b][i]));
        }
    }

    Matrix out(0, dim);
    for (const auto& s : sentences) {
        std::vector<double> row = resolved.at(s);
        if (row.size() != dim) {
            throw Error(ErrorKind::DimensionMismatch, "provider returned dimension " +
                                                          std::to_string(row.size()) + ", expected " +
                                                          std::to_string(dim));
        }
        normalize_in_place(row);
        out.append_row(row);
    }
    return out;
}

}  // namespace sdm
