#include "sdm/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "http_client.hpp"
#include "sdm/error.hpp"

namespace sdm {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace

void ProviderConfig::validate() const {
    if (max_parallel_requests < 1) {
        throw Error(ErrorKind::Config, "max_parallel_requests must be >= 1");
    }
    if (retry_budget < 0) throw Error(ErrorKind::Config, "retry_budget must be >= 0");
    if (answer_temperature < 0 || paraphrase_temperature < 0) {
        throw Error(ErrorKind::Config, "temperatures must be >= 0");
    }
}

HttpChatProvider::HttpChatProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (!cfg_.api_key_ref.empty()) {
        const char* key = std::getenv(cfg_.api_key_ref.c_str());
        if (key == nullptr) {
            throw Error(ErrorKind::Config, "environment variable " + cfg_.api_key_ref + " is not set");
        }
        api_key_ = key;
    }
}

std::string HttpChatProvider::complete(const ChatRequest& request) {
    nlohmann::json body;
    body["model"] = request.model;
    body["temperature"] = request.temperature;
    body["messages"] = nlohmann::json::array();
    for (const auto& msg : request.messages) {
        body["messages"].push_back({{"role", msg.role}, {"content", msg.content}});
    }
    const auto response = detail::post_json(cfg_.endpoint_url, "/chat/completions", body, api_key_,
                                            cfg_.retry_budget, cfg_.timeout_seconds);
    try {
        return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Provider, std::string("unexpected chat response shape: ") + e.what());
    }
}

std::unique_ptr<ChatProvider> make_echo_provider() {
    return std::make_unique<ScriptedChatProvider>(
        [](const ChatRequest& req) -> std::string {
            const std::string& content = req.messages.back().content;
            if (req.slot.kind == RequestKind::Paraphrase) {
                const std::string prefix = kParaphraseTemplate;
                return content.substr(std::min(prefix.size(), content.size()));
            }
            return content;
        },
        "echo");
}

std::string format_timestamp(Timestamp t) {
    const std::time_t raw = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&raw, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

Timestamp parse_timestamp(const std::string& text) {
    std::tm tm{};
    std::istringstream in(text);
    in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    if (in.fail()) throw Error(ErrorKind::Schema, "bad timestamp: " + text);
    return Timestamp{std::chrono::seconds{timegm(&tm)}};
}

void RunBundle::validate() const {
    if (paraphrases.empty()) throw Error(ErrorKind::Schema, "bundle has no paraphrases");
    if (answers.size() != paraphrases.size()) {
        throw Error(ErrorKind::Schema, "answer grid has " + std::to_string(answers.size()) +
                                           " rows for " + std::to_string(paraphrases.size()) +
                                           " paraphrases");
    }
    for (const auto& p : paraphrases) {
        if (p.empty()) throw Error(ErrorKind::Schema, "empty paraphrase");
    }
    const std::size_t cols = answers.front().size();
    if (cols == 0) throw Error(ErrorKind::Schema, "answer grid has no columns");
    for (const auto& row : answers) {
        if (row.size() != cols) throw Error(ErrorKind::Schema, "ragged answer grid");
        for (const auto& cell : row) {
            if (cell.empty()) throw Error(ErrorKind::Schema, "empty answer cell");
        }
    }
}

std::string paraphrase_instruction(const std::string& prompt) {
    return std::string(kParaphraseTemplate) + prompt;
}

void parallel_for(std::size_t count, int parallelism,
                  const std::function<void(std::size_t)>& body) {
    const std::size_t workers =
        std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, parallelism)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<std::string> generate_paraphrases(const std::string& prompt, int m,
                                              const ProviderConfig& cfg,
                                              ChatProvider& provider) {
    if (trim(prompt).empty()) throw Error(ErrorKind::Config, "prompt is empty");
    if (m < 1) throw Error(ErrorKind::Config, "paraphrase count must be >= 1");
    cfg.validate();

    std::vector<std::string> out(static_cast<std::size_t>(m));
    out[0] = prompt;
    const std::string instruction = paraphrase_instruction(prompt);

    parallel_for(out.size() - 1, cfg.max_parallel_requests, [&](std::size_t i) {
        const std::size_t slot = i + 1;
        ChatRequest req;
        req.model = cfg.model_id;
        req.temperature = cfg.paraphrase_temperature;
        req.messages = {{"user", instruction}};
        req.slot = {RequestKind::Paraphrase, slot, 0};
        // One regeneration is allowed per slot, then the run aborts.
        for (int attempt = 0; attempt < 2; ++attempt) {
            std::string text = trim(provider.complete(req));
            if (!text.empty() && text != trim(instruction)) {
                out[slot] = std::move(text);
                return;
            }
        }
        throw Error(ErrorKind::DegenerateParaphrase,
                    "paraphrase " + std::to_string(slot) + " was empty or echoed the instruction twice");
    });
    return out;
}

RunBundle generate_answers(const std::vector<std::string>& paraphrases, int n,
                           const ProviderConfig& cfg, ChatProvider& provider) {
    if (paraphrases.empty()) throw Error(ErrorKind::Config, "no paraphrases given");
    if (n < 1) throw Error(ErrorKind::Config, "answer count must be >= 1");
    cfg.validate();

    const std::size_t rows = paraphrases.size();
    const auto cols = static_cast<std::size_t>(n);
    std::vector<std::vector<std::string>> grid(rows, std::vector<std::string>(cols));

    parallel_for(rows * cols, cfg.max_parallel_requests, [&](std::size_t idx) {
        const std::size_t m = idx / cols;
        const std::size_t j = idx % cols;
        ChatRequest req;
        req.model = cfg.model_id;
        req.temperature = cfg.answer_temperature;
        req.messages = {{"user", paraphrases[m]}};
        req.slot = {RequestKind::Answer, m, j};
        for (int attempt = 0; attempt <= cfg.retry_budget; ++attempt) {
            std::string text = trim(provider.complete(req));
            if (!text.empty()) {
                grid[m][j] = std::move(text);
                return;
            }
        }
        throw Error(ErrorKind::Provider, "empty completion for answer (" + std::to_string(m) + "," +
                                             std::to_string(j) + ")");
    });

    RunBundle bundle;
    bundle.original_prompt = paraphrases.front();
    bundle.paraphrases = paraphrases;
    bundle.answers = std::move(grid);
    bundle.model_id = cfg.model_id;
    bundle.sampling_temperature = cfg.answer_temperature;
    bundle.created_at =
        std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
    bundle.provider_trace = {{"provider", provider.name()},
                             {"paraphrase_template", kParaphraseTemplateVersion},
                             {"paraphrase_temperature", cfg.paraphrase_temperature}};
    bundle.validate();
    return bundle;
}

}  // namespace sdm
