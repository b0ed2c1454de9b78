#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include "sdm/error.hpp"
#include "sdm/pipeline.hpp"

namespace sdm {

using nlohmann::json;

namespace {

std::string interpolate(const std::string& s) {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s.compare(i, 2, "${") == 0) {
            const auto close = s.find('}', i + 2);
            if (close == std::string::npos) throw Error(ErrorKind::Config, "unterminated ${ in: " + s);
            const std::string name = s.substr(i + 2, close - i - 2);
            const char* value = std::getenv(name.c_str());
            if (value == nullptr) throw Error(ErrorKind::Config, "environment variable " + name + " is not set");
            out += value;
            i = close + 1;
        } else {
            out.push_back(s[i++]);
        }
    }
    return out;
}

json interpolate_all(const json& node) {
    if (node.is_string()) return interpolate(node.get<std::string>());
    if (node.is_object()) {
        json out = json::object();
        for (const auto& [key, value] : node.items()) out[key] = interpolate_all(value);
        return out;
    }
    if (node.is_array()) {
        json out = json::array();
        for (const auto& value : node) out.push_back(interpolate_all(value));
        return out;
    }
    return node;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw Error(ErrorKind::Config, where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw Error(ErrorKind::Config, "unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read(const json& obj, const char* key, T& target) {
    if (obj.contains(key) && !obj.at(key).is_null()) target = obj.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

void RunConfig::validate() const {
    if (!from_bundle && prompt.empty()) throw Error(ErrorKind::Config, "no prompt given");
    if (m_paraphrases < 1 || n_answers < 1) throw Error(ErrorKind::Config, "M and N must be >= 1");
    provider.validate();
    embedding.validate();
    if (std::abs(metrics.w_jsd + metrics.w_wass - 1.0) > 1e-9) {
        throw Error(ErrorKind::Config, "w_jsd + w_wass must equal 1");
    }
    if (!(metrics.epsilon > 0.0)) throw Error(ErrorKind::Config, "epsilon must be > 0");
    if (!(s_star > 0.0) || !(kl_star > 0.0)) throw Error(ErrorKind::Config, "thresholds must be > 0");
    if (clustering.k_min && *clustering.k_min < 2) throw Error(ErrorKind::Config, "k_min must be >= 2");
    if (clustering.k_override && *clustering.k_override < 1) throw Error(ErrorKind::Config, "k must be >= 1");
}

RunConfig parse_config(const json& raw, const std::filesystem::path& base_dir) {
    RunConfig cfg;
    try {
        const json doc = interpolate_all(raw);
        reject_unknown(doc,
                       {"prompt", "prompt_file", "m_paraphrases", "n_answers", "seed", "output_dir", "provider",
                        "embedding", "clustering", "metrics", "diagnostics", "from_bundle"},
                       "config");
        read(doc, "prompt", cfg.prompt);
        if (doc.contains("prompt_file")) {
            const auto path = resolve(base_dir, doc.at("prompt_file").get<std::string>());
            std::ifstream in(path, std::ios::binary);
            if (!in) throw Error(ErrorKind::Config, "cannot read prompt file " + path.string());
            cfg.prompt.assign(std::istreambuf_iterator<char>(in), {});
            while (!cfg.prompt.empty() && (cfg.prompt.back() == '\n' || cfg.prompt.back() == '\r')) {
                cfg.prompt.pop_back();
            }
        }
        read(doc, "m_paraphrases", cfg.m_paraphrases);
        read(doc, "n_answers", cfg.n_answers);
        read(doc, "seed", cfg.seed);
        cfg.clustering.seed = cfg.seed;
        if (doc.contains("output_dir")) cfg.output_dir = resolve(base_dir, doc.at("output_dir").get<std::string>());
        if (doc.contains("from_bundle")) cfg.from_bundle = resolve(base_dir, doc.at("from_bundle").get<std::string>());

        if (doc.contains("provider")) {
            const json& p = doc.at("provider");
            reject_unknown(p,
                           {"backend", "endpoint_url", "api_key_ref", "model_id", "answer_temperature",
                            "paraphrase_temperature", "max_parallel_requests", "retry_budget", "timeout_seconds"},
                           "provider");
            const std::string backend = p.value("backend", "http");
            if (backend == "http") {
                cfg.chat_backend = ChatBackend::Http;
            } else if (backend == "echo") {
                cfg.chat_backend = ChatBackend::Echo;
            } else {
                throw Error(ErrorKind::Config, "unknown provider backend: " + backend);
            }
            read(p, "endpoint_url", cfg.provider.endpoint_url);
            read(p, "api_key_ref", cfg.provider.api_key_ref);
            read(p, "model_id", cfg.provider.model_id);
            read(p, "answer_temperature", cfg.provider.answer_temperature);
            read(p, "paraphrase_temperature", cfg.provider.paraphrase_temperature);
            read(p, "max_parallel_requests", cfg.provider.max_parallel_requests);
            read(p, "retry_budget", cfg.provider.retry_budget);
            read(p, "timeout_seconds", cfg.provider.timeout_seconds);
        }
        if (doc.contains("embedding")) {
            const json& e = doc.at("embedding");
            reject_unknown(e,
                           {"backend", "endpoint_url", "api_key_ref", "model_id", "dimension", "cache_dir",
                            "batch_size", "max_parallel_requests", "retry_budget", "timeout_seconds",
                            "hashing_seed"},
                           "embedding");
            const std::string backend = e.value("backend", "http");
            if (backend == "http") {
                cfg.embedding_backend = EmbeddingBackend::Http;
            } else if (backend == "hashing") {
                cfg.embedding_backend = EmbeddingBackend::Hashing;
            } else {
                throw Error(ErrorKind::Config, "unknown embedding backend: " + backend);
            }
            read(e, "endpoint_url", cfg.embedding.endpoint_url);
            read(e, "api_key_ref", cfg.embedding.api_key_ref);
            read(e, "model_id", cfg.embedding.model_id);
            read(e, "dimension", cfg.embedding.dimension);
            if (e.contains("cache_dir")) cfg.embedding.cache_dir = resolve(base_dir, e.at("cache_dir").get<std::string>());
            read(e, "batch_size", cfg.embedding.batch_size);
            read(e, "max_parallel_requests", cfg.embedding.max_parallel_requests);
            read(e, "retry_budget", cfg.embedding.retry_budget);
            read(e, "timeout_seconds", cfg.embedding.timeout_seconds);
            read(e, "hashing_seed", cfg.hashing_seed);
        }
        if (doc.contains("clustering")) {
            const json& c = doc.at("clustering");
            reject_unknown(c, {"k", "k_min", "k_max", "mode", "distance_threshold", "kmeans_restarts"}, "clustering");
            if (c.contains("k") && !c.at("k").is_null()) cfg.clustering.k_override = c.at("k").get<int>();
            if (c.contains("k_min") && !c.at("k_min").is_null()) cfg.clustering.k_min = c.at("k_min").get<int>();
            if (c.contains("k_max") && !c.at("k_max").is_null()) cfg.clustering.k_max = c.at("k_max").get<int>();
            const std::string mode = c.value("mode", "ward");
            if (mode == "ward") {
                cfg.clustering.mode = ClusterMode::Ward;
            } else if (mode == "threshold") {
                cfg.clustering.mode = ClusterMode::Threshold;
            } else {
                throw Error(ErrorKind::Config, "unknown cluster mode: " + mode);
            }
            read(c, "distance_threshold", cfg.clustering.distance_threshold);
            read(c, "kmeans_restarts", cfg.clustering.kmeans.restarts);
        }
        if (doc.contains("metrics")) {
            const json& m = doc.at("metrics");
            reject_unknown(m, {"epsilon", "w_jsd", "w_wass"}, "metrics");
            read(m, "epsilon", cfg.metrics.epsilon);
            read(m, "w_jsd", cfg.metrics.w_jsd);
            read(m, "w_wass", cfg.metrics.w_wass);
        }
        if (doc.contains("diagnostics")) {
            const json& d = doc.at("diagnostics");
            reject_unknown(d, {"s_star", "kl_star", "se_threshold", "semantic_entropy"}, "diagnostics");
            read(d, "s_star", cfg.s_star);
            read(d, "kl_star", cfg.kl_star);
            read(d, "se_threshold", cfg.se_threshold);
            read(d, "semantic_entropy", cfg.semantic_entropy);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, std::string("bad config value: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, "config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(doc, path.parent_path());
}

}  // namespace sdm
