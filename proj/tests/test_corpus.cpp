#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "mock_server.hpp"
#include "sdm/corpus.hpp"
#include "sdm/error.hpp"
#include "support.hpp"

using namespace sdm;
using sdm::test::TempDir;

namespace {

ProviderConfig mock_cfg() {
    ProviderConfig cfg;
    cfg.model_id = "mock-model";
    cfg.max_parallel_requests = 4;
    cfg.retry_budget = 1;
    return cfg;
}

// "p#i" for paraphrase i, "ans(m,n)" for answers.
ScriptedChatProvider grid_provider() {
    return ScriptedChatProvider([](const ChatRequest& r) {
        if (r.slot.kind == RequestKind::Paraphrase) return "p#" + std::to_string(r.slot.m);
        return "ans(" + std::to_string(r.slot.m) + "," + std::to_string(r.slot.n) + ")";
    });
}

RunBundle sample_bundle() {
    RunBundle b;
    b.original_prompt = "Describe the telescope.";
    b.paraphrases = {"Describe the telescope.", "Tell me about the telescope."};
    b.answers = {{"It orbits Earth.", "It has a mirror.\nA \"big\" one."}, {"Unicode: café ✓", "x y"}};
    b.model_id = "m";
    b.sampling_temperature = 0.7;
    b.created_at = parse_timestamp("2025-03-04T05:06:07Z");
    b.provider_trace = {{"provider", "scripted"}, {"calls", 6}};
    return b;
}

int error_kind(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return static_cast<int>(e.kind());
    }
    return -1;
}

}  // namespace

TEST_CASE("generate_paraphrases: m=1 returns the prompt without calling the provider") {
    int calls = 0;
    ScriptedChatProvider p([&](const ChatRequest&) {
        ++calls;
        return std::string("x");
    });
    const auto out = generate_paraphrases("p", 1, mock_cfg(), p);
    CHECK(out == std::vector<std::string>{"p"});
    CHECK(calls == 0);
}

TEST_CASE("generate_paraphrases: mock provider yields p, p#1, p#2") {
    auto p = grid_provider();
    CHECK(generate_paraphrases("p", 3, mock_cfg(), p) == std::vector<std::string>{"p", "p#1", "p#2"});
}

TEST_CASE("generate_paraphrases: length and entry 0 for every m") {
    auto p = grid_provider();
    for (int m = 1; m <= 12; ++m) {
        const auto out = generate_paraphrases("The prompt.", m, mock_cfg(), p);
        REQUIRE(out.size() == static_cast<std::size_t>(m));
        CHECK(out[0] == "The prompt.");
    }
}

TEST_CASE("generate_paraphrases: request uses the pinned template and paraphrase temperature") {
    std::mutex mu;
    std::vector<ChatRequest> seen;
    ScriptedChatProvider p([&](const ChatRequest& r) {
        std::lock_guard lock(mu);
        seen.push_back(r);
        return std::string("reworded");
    });
    auto cfg = mock_cfg();
    cfg.paraphrase_temperature = 0.4;
    generate_paraphrases("Say hi.", 2, cfg, p);
    REQUIRE(seen.size() == 1);
    CHECK(seen[0].model == "mock-model");
    CHECK(seen[0].temperature == doctest::Approx(0.4));
    REQUIRE(seen[0].messages.size() == 1);
    CHECK(seen[0].messages[0].role == "user");
    CHECK(seen[0].messages[0].content == std::string(kParaphraseTemplate) + "Say hi.");
}

TEST_CASE("generate_paraphrases: degenerate output is regenerated once") {
    std::atomic<int> calls{0};
    ScriptedChatProvider p([&](const ChatRequest&) { return calls++ == 0 ? std::string("  ") : std::string("ok"); });
    const auto out = generate_paraphrases("p", 2, mock_cfg(), p);
    CHECK(out[1] == "ok");
    CHECK(calls == 2);
}

TEST_CASE("generate_paraphrases: persistent degenerate output aborts") {
    ScriptedChatProvider empty([](const ChatRequest&) { return std::string(); });
    CHECK(error_kind([&] { generate_paraphrases("p", 3, mock_cfg(), empty); }) ==
          static_cast<int>(ErrorKind::DegenerateParaphrase));

    ScriptedChatProvider parrot([](const ChatRequest& r) { return r.messages.back().content; });
    CHECK(error_kind([&] { generate_paraphrases("p", 2, mock_cfg(), parrot); }) ==
          static_cast<int>(ErrorKind::DegenerateParaphrase));
}

TEST_CASE("generate_answers: 1x1 grid from the echo provider") {
    auto echo = make_echo_provider();
    const auto b = generate_answers({"Only one."}, 1, mock_cfg(), *echo);
    CHECK(b.m() == 1);
    CHECK(b.n() == 1);
    CHECK(b.answers[0][0] == "Only one.");
    CHECK(b.original_prompt == "Only one.");
}

TEST_CASE("generate_answers: ans(m,n) placement for 2 x 3") {
    auto p = grid_provider();
    const auto b = generate_answers({"a", "b"}, 3, mock_cfg(), p);
    const std::vector<std::vector<std::string>> want = {{"ans(0,0)", "ans(0,1)", "ans(0,2)"},
                                                        {"ans(1,0)", "ans(1,1)", "ans(1,2)"}};
    CHECK(b.answers == want);
    CHECK(b.model_id == "mock-model");
    CHECK_NOTHROW(b.validate());
}

TEST_CASE("generate_answers: 10 x 4 grid and order independent of completion order") {
    std::vector<std::string> paras;
    for (int i = 0; i < 10; ++i) paras.push_back("para " + std::to_string(i));
    ScriptedChatProvider slow([](const ChatRequest& r) {
        // later cells finish first
        std::this_thread::sleep_for(std::chrono::microseconds(200 * (40 - (r.slot.m * 4 + r.slot.n))));
        return r.messages.back().content + " / " + std::to_string(r.slot.n);
    });
    auto cfg = mock_cfg();
    cfg.max_parallel_requests = 8;
    const auto b = generate_answers(paras, 4, cfg, slow);
    REQUIRE(b.m() == 10);
    REQUIRE(b.n() == 4);
    for (std::size_t m = 0; m < 10; ++m) {
        for (std::size_t n = 0; n < 4; ++n) CHECK(b.answers[m][n] == paras[m] + " / " + std::to_string(n));
    }
}

TEST_CASE("generate_answers: answer temperature is forwarded") {
    std::atomic<int> bad{0};
    ScriptedChatProvider p([&](const ChatRequest& r) {
        if (r.temperature != 1.3) ++bad;
        return std::string("a");
    });
    auto cfg = mock_cfg();
    cfg.answer_temperature = 1.3;
    const auto b = generate_answers({"x", "y"}, 2, cfg, p);
    CHECK(bad == 0);
    CHECK(b.sampling_temperature == doctest::Approx(1.3));
}

TEST_CASE("generate_answers: a failing cell aborts the whole grid") {
    ScriptedChatProvider p([](const ChatRequest& r) -> std::string {
        if (r.slot.m == 1 && r.slot.n == 2) throw Error(ErrorKind::Provider, "boom");
        return "fine";
    });
    CHECK(error_kind([&] { generate_answers({"a", "b"}, 3, mock_cfg(), p); }) ==
          static_cast<int>(ErrorKind::Provider));

    ScriptedChatProvider empty([](const ChatRequest& r) { return r.slot.n == 0 ? std::string() : std::string("x"); });
    CHECK(error_kind([&] { generate_answers({"a"}, 2, mock_cfg(), empty); }) ==
          static_cast<int>(ErrorKind::Provider));
}

TEST_CASE("bundle: save then load is identity") {
    TempDir dir;
    const auto b = sample_bundle();
    save_bundle(b, dir / "b.jsonl");
    CHECK(load_bundle(dir / "b.jsonl") == b);
}

TEST_CASE("bundle: persistence is byte-stable") {
    TempDir dir;
    const auto b = sample_bundle();
    save_bundle(b, dir / "one.jsonl");
    save_bundle(b, dir / "two.jsonl");
    std::ifstream f1(dir / "one.jsonl"), f2(dir / "two.jsonl");
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    const std::string text = s1.str();
    CHECK(text == s2.str());
    // header + one record per cell
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}

TEST_CASE("bundle: truncated file is a schema error") {
    TempDir dir;
    std::ostringstream out;
    write_bundle(sample_bundle(), out);
    const std::string full = out.str();

    SUBCASE("missing last record") {
        const auto cut = full.substr(0, full.rfind('\n', full.size() - 2) + 1);
        std::istringstream in(cut);
        CHECK(error_kind([&] { read_bundle(in); }) == static_cast<int>(ErrorKind::Schema));
    }
    SUBCASE("cut mid-record") {
        std::istringstream in(full.substr(0, full.size() - 10));
        CHECK(error_kind([&] { read_bundle(in); }) == static_cast<int>(ErrorKind::Schema));
    }
    SUBCASE("empty file") {
        std::istringstream in("");
        CHECK(error_kind([&] { read_bundle(in); }) == static_cast<int>(ErrorKind::Schema));
    }
}

TEST_CASE("bundle: wrong schema version is rejected") {
    std::ostringstream out;
    write_bundle(sample_bundle(), out);
    std::string text = out.str();
    for (auto pos = text.find("sdm_bundle_v1"); pos != std::string::npos; pos = text.find("sdm_bundle_v1")) {
        text.replace(pos, 13, "sdm_bundle_v9");
    }
    std::istringstream in(text);
    CHECK(error_kind([&] { read_bundle(in); }) == static_cast<int>(ErrorKind::Schema));
}

TEST_CASE("bundle: missing file is an IO error") {
    TempDir dir;
    CHECK(error_kind([&] { load_bundle(dir / "absent.jsonl"); }) == static_cast<int>(ErrorKind::IO));
}

TEST_CASE("bundle: committed Set-A shaped fixture loads as 10 x 4") {
    const auto b = load_bundle(sdm::test::fixture("set_a_shape.jsonl"));
    CHECK(b.m() == 10);
    CHECK(b.n() == 4);
    CHECK(b.paraphrases[0] == b.original_prompt);
    CHECK(format_timestamp(b.created_at) == "2025-01-01T00:00:00Z");
}

TEST_CASE("validate rejects ragged and empty grids") {
    auto b = sample_bundle();
    b.answers[1].pop_back();
    CHECK(error_kind([&] { b.validate(); }) == static_cast<int>(ErrorKind::Schema));
    b = sample_bundle();
    b.answers[0][0].clear();
    CHECK(error_kind([&] { b.validate(); }) == static_cast<int>(ErrorKind::Schema));
}

TEST_CASE("parallel_for visits every index once and rethrows") {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }),
                    std::runtime_error);
}

TEST_CASE("HttpChatProvider speaks the chat-completions wire format") {
    std::mutex mu;
    nlohmann::json last_body;
    std::string last_auth;
    sdm::test::MockServer server("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(mu);
        last_body = nlohmann::json::parse(req.body);
        last_auth = req.get_header_value("Authorization");
        nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "hello"}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    ::setenv("SDM_TEST_CHAT_KEY", "secret-123", 1);
    ProviderConfig cfg = mock_cfg();
    cfg.endpoint_url = server.base_url();
    cfg.api_key_ref = "SDM_TEST_CHAT_KEY";
    cfg.timeout_seconds = 5;
    HttpChatProvider provider(cfg);

    ChatRequest req;
    req.model = "mock-model";
    req.messages = {{"user", "hi"}};
    req.temperature = 0.5;
    CHECK(provider.complete(req) == "hello");
    CHECK(last_auth == "Bearer secret-123");
    CHECK(last_body["model"] == "mock-model");
    CHECK(last_body["temperature"].get<double>() == doctest::Approx(0.5));
    CHECK(last_body["messages"][0]["content"] == "hi");
    ::unsetenv("SDM_TEST_CHAT_KEY");
}

TEST_CASE("HttpChatProvider retries 5xx then succeeds, gives up on 401") {
    std::atomic<int> calls{0};
    sdm::test::MockServer server("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        if (calls++ == 0) {
            res.status = 503;
            return;
        }
        res.set_content(R"({"choices":[{"message":{"content":"late"}}]})", "application/json");
    });
    ProviderConfig cfg = mock_cfg();
    cfg.endpoint_url = server.base_url();
    cfg.retry_budget = 2;
    cfg.timeout_seconds = 5;
    HttpChatProvider provider(cfg);
    ChatRequest req;
    req.messages = {{"user", "hi"}};
    CHECK(provider.complete(req) == "late");
    CHECK(calls == 2);

    std::atomic<int> denied{0};
    sdm::test::MockServer locked("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++denied;
        res.status = 401;
    });
    cfg.endpoint_url = locked.base_url();
    HttpChatProvider refused(cfg);
    CHECK(error_kind([&] { refused.complete(req); }) == static_cast<int>(ErrorKind::Provider));
    CHECK(denied == 1);
}

TEST_CASE("HttpChatProvider: unreachable endpoint is a provider error") {
    ProviderConfig cfg = mock_cfg();
    cfg.endpoint_url = "http://127.0.0.1:1/v1";
    cfg.retry_budget = 0;
    cfg.timeout_seconds = 2;
    HttpChatProvider provider(cfg);
    ChatRequest req;
    req.messages = {{"user", "hi"}};
    CHECK(error_kind([&] { provider.complete(req); }) == static_cast<int>(ErrorKind::Provider));
}

TEST_CASE("HttpChatProvider: unset key variable is a config error") {
    ProviderConfig cfg = mock_cfg();
    cfg.endpoint_url = "http://127.0.0.1:1/v1";
    cfg.api_key_ref = "SDM_TEST_DEFINITELY_UNSET";
    CHECK(error_kind([&] { HttpChatProvider p(cfg); }) == static_cast<int>(ErrorKind::Config));
}

TEST_CASE("timestamps round-trip") {
    const auto t = parse_timestamp("2024-12-31T23:59:58Z");
    CHECK(format_timestamp(t) == "2024-12-31T23:59:58Z");
    CHECK(error_kind([] { parse_timestamp("yesterday"); }) == static_cast<int>(ErrorKind::Schema));
}
