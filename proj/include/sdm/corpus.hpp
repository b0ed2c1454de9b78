#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace sdm {

inline constexpr const char* kBundleSchema = "sdm_bundle_v1";
inline constexpr const char* kParaphraseTemplateVersion = "sdm_paraphrase_v1";
inline constexpr const char* kParaphraseTemplate =
    "Rewrite the following text preserving its exact meaning, length, and any "
    "output-format instructions:\n\n";

struct ProviderConfig {
    std::string endpoint_url;   // base URL, e.g. https://api.openai.com/v1
    std::string api_key_ref;    // name of the environment variable holding the key
    std::string model_id;
    double answer_temperature = 1.0;
    double paraphrase_temperature = 0.9;
    int max_parallel_requests = 4;
    int retry_budget = 2;
    double timeout_seconds = 120.0;

    void validate() const;
};

struct ChatMessage {
    std::string role;
    std::string content;
};

enum class RequestKind { Paraphrase, Answer };

/// Where a request sits in the M x N grid. Providers that talk to a real
/// endpoint ignore it; scripted providers use it to produce fixtures.
struct RequestSlot {
    RequestKind kind = RequestKind::Answer;
    std::size_t m = 0;
    std::size_t n = 0;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 1.0;
    RequestSlot slot;
};

/// Chat-completion backend. Implementations must be safe to call from
/// several threads at once.
class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

/// OpenAI-compatible POST {endpoint}/chat/completions.
class HttpChatProvider final : public ChatProvider {
public:
    explicit HttpChatProvider(ProviderConfig cfg);
    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "http:" + cfg_.endpoint_url; }

private:
    ProviderConfig cfg_;
    std::string api_key_;
};

/// Deterministic in-process provider driven by a callback.
class ScriptedChatProvider final : public ChatProvider {
public:
    using Script = std::function<std::string(const ChatRequest&)>;
    explicit ScriptedChatProvider(Script script, std::string label = "scripted")
        : script_(std::move(script)), label_(std::move(label)) {}
    std::string complete(const ChatRequest& request) override { return script_(request); }
    std::string name() const override { return label_; }

private:
    Script script_;
    std::string label_;
};

/// Paraphrases return the original prompt, answers echo the paraphrase.
std::unique_ptr<ChatProvider> make_echo_provider();

using Timestamp = std::chrono::sys_seconds;

std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(const std::string& text);

struct RunBundle {
    std::string original_prompt;
    std::vector<std::string> paraphrases;
    std::vector<std::vector<std::string>> answers;  // [m][n]
    std::string model_id;
    double sampling_temperature = 1.0;
    Timestamp created_at{};
    nlohmann::json provider_trace = nlohmann::json::object();

    std::size_t m() const { return paraphrases.size(); }
    std::size_t n() const { return answers.empty() ? 0 : answers.front().size(); }

    /// Throws Error(Schema) when the M x N shape or non-emptiness is violated.
    void validate() const;

    bool operator==(const RunBundle&) const = default;
};

std::string paraphrase_instruction(const std::string& prompt);

std::vector<std::string> generate_paraphrases(const std::string& prompt, int m,
                                              const ProviderConfig& cfg,
                                              ChatProvider& provider);

RunBundle generate_answers(const std::vector<std::string>& paraphrases, int n,
                           const ProviderConfig& cfg, ChatProvider& provider);

void write_bundle(const RunBundle& bundle, std::ostream& out);
RunBundle read_bundle(std::istream& in);
void save_bundle(const RunBundle& bundle, const std::filesystem::path& path);
RunBundle load_bundle(const std::filesystem::path& path);

/// Runs body(i) for i in [0, count) on up to `parallelism` threads. The first
/// exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t count, int parallelism,
                  const std::function<void(std::size_t)>& body);

}  // namespace sdm
