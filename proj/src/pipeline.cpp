#include <algorithm>
#include <cstdio>
#include <sstream>

#include "sdm/error.hpp"
#include "sdm/pipeline.hpp"

namespace sdm {

namespace {

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string("stage '") + name + "': " + e.message());
    }
}

std::filesystem::path fresh_run_dir(const std::filesystem::path& root) {
    const auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
    std::string stamp = format_timestamp(now);
    std::erase(stamp, '-');
    std::erase(stamp, ':');
    std::filesystem::path dir = root / ("run-" + stamp);
    for (int suffix = 2; std::filesystem::exists(dir); ++suffix) {
        dir = root / ("run-" + stamp + "-" + std::to_string(suffix));
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IO, "cannot create run directory " + dir.string() + ": " + ec.message());
    return dir;
}

std::string fmt4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

std::string effective_embedding_model(const RunConfig& config) {
    if (config.embedding_backend == EmbeddingBackend::Hashing) {
        return "hashing:seed=" + std::to_string(config.hashing_seed) +
               ":d=" + std::to_string(config.embedding.dimension);
    }
    return config.embedding.model_id;
}

std::unique_ptr<ChatProvider> make_chat_provider(const RunConfig& config) {
    if (config.chat_backend == ChatBackend::Echo) return make_echo_provider();
    return std::make_unique<HttpChatProvider>(config.provider);
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const RunConfig& config) {
    if (config.embedding_backend == EmbeddingBackend::Hashing) {
        return std::make_unique<HashingEmbeddingProvider>(config.embedding.dimension, config.hashing_seed);
    }
    return std::make_unique<HttpEmbeddingProvider>(config.embedding);
}

Analysis analyze_bundle(const RunBundle& bundle, const RunConfig& config, EmbeddingProvider& embedder,
                        EmbeddingCache* cache) {
    bundle.validate();
    Analysis out;

    stage("segment", [&] {
        for (std::size_t m = 0; m < bundle.m(); ++m) {
            for (auto& s : segment(bundle.paraphrases[m])) {
                out.sentences.push_back({std::move(s), SentenceRole::Prompt, m, std::nullopt, {}, std::nullopt});
            }
        }
        for (std::size_t m = 0; m < bundle.m(); ++m) {
            for (std::size_t n = 0; n < bundle.n(); ++n) {
                for (auto& s : segment(bundle.answers[m][n])) {
                    out.sentences.push_back({std::move(s), SentenceRole::Answer, m, n, {}, std::nullopt});
                }
            }
        }
        const auto prompts = std::count_if(out.sentences.begin(), out.sentences.end(),
                                           [](const auto& r) { return r.role == SentenceRole::Prompt; });
        if (prompts == 0) throw Error(ErrorKind::EmptyLabels, "no prompt sentences survived segmentation");
        if (static_cast<std::size_t>(prompts) == out.sentences.size()) {
            throw Error(ErrorKind::EmptyLabels, "no answer sentences survived segmentation");
        }
    });

    Matrix pooled = stage("embed", [&] {
        std::vector<std::string> texts;
        texts.reserve(out.sentences.size());
        for (const auto& r : out.sentences) texts.push_back(r.text);
        return embed_sentences(texts, config.embedding, embedder, cache);
    });
    Matrix prompt_cloud(0, pooled.cols());
    Matrix answer_cloud(0, pooled.cols());
    for (std::size_t i = 0; i < out.sentences.size(); ++i) {
        const auto row = pooled.row(i);
        out.sentences[i].embedding.assign(row.begin(), row.end());
        (out.sentences[i].role == SentenceRole::Prompt ? prompt_cloud : answer_cloud).append_row(row);
    }

    LabeledSentences labeled = stage("cluster", [&] {
        ClusteringOptions opts = config.clustering;
        opts.seed = config.seed;
        out.clustering = build_topic_space(pooled, opts);
        return assign_labels(bundle, std::move(out.sentences), out.clustering);
    });
    out.sentences = std::move(labeled.records);

    stage("metrics", [&] {
        MetricsInput input;
        input.k = out.clustering.k;
        for (std::size_t m = 0; m < bundle.m(); ++m) {
            input.pairs.push_back({labeled.prompt_by_pair[m], labeled.answer_by_pair[m]});
        }
        input.prompt_embeddings = &prompt_cloud;
        input.answer_embeddings = &answer_cloud;
        out.report = compute_metrics(input, config.metrics, &out.joint);
    });

    if (config.semantic_entropy) {
        stage("semantic_entropy", [&] {
            out.se = se_suite(bundle, config.se_threshold, config.embedding, embedder, cache);
            out.report.se_original = out.se->se_original;
            out.report.se_mean = out.se->se_mean;
        });
    }

    out.verdict = stage("diagnostics", [&] {
        return classify_semantic_box(out.report.s_h, out.report.kl_score, config.s_star, config.kl_star);
    });
    return out;
}

std::string summary_markdown(const RunBundle& bundle, const Analysis& a) {
    const MetricsReport& r = a.report;
    std::ostringstream md;
    md << "# SDM run summary\n\n";
    md << "- model: `" << bundle.model_id << "`\n";
    md << "- ensemble: M=" << bundle.m() << " paraphrases x N=" << bundle.n() << " answers\n";
    md << "- sentences: " << r.prompt_sentences << " prompt, " << r.answer_sentences << " answer\n";
    md << "- topics: " << a.clustering.method_trace << "\n";
    md << "- pairs used: " << r.pairs_used << ", skipped: " << r.pairs_skipped << "\n\n";
    md << "## Semantic Box\n\n";
    md << "**" << to_string(a.verdict.regime) << "** (instability " << to_string(a.verdict.instability)
       << ": S_H " << fmt4(r.s_h) << " vs S* " << fmt4(a.verdict.s_star) << "; exploration "
       << to_string(a.verdict.exploration) << ": KL score " << fmt4(r.kl_score) << " vs KL* "
       << fmt4(a.verdict.kl_star) << ")\n\n";
    if (a.verdict.regime == Regime::ConvergentResponse) {
        md << "Convergent responses are either trivial echoes of a simple prompt or confident "
              "fabrications. Check the prompt's difficulty by hand before trusting this run.\n\n";
    }
    if (r.degenerate) {
        md << "All prompt sentences fell into one topic and nothing diverged; normalised scores are "
              "reported as 0.\n\n";
    }
    md << "## Metrics\n\n| Metric | Value |\n|---|---|\n";
    const nlohmann::json doc = report_to_json(r);
    for (const auto& row : canonical_report_rows()) {
        const auto& v = doc.at(row.key);
        md << "| " << row.label << " | " << (v.is_null() ? std::string("n/a") : fmt4(v.get<double>())) << " |\n";
    }
    if (a.se) {
        md << "\nSE rows are an approximation: answers are clustered by embedding similarity, not by an "
              "entailment model (" << a.se->cluster_method << ").\n";
    }
    return md.str();
}

RunResult run_pipeline(const RunConfig& config, Providers providers) {
    config.validate();
    RunResult result;
    result.run_dir = fresh_run_dir(config.output_dir);

    RunBundle bundle;
    if (config.from_bundle) {
        bundle = stage("load_bundle", [&] { return load_bundle(*config.from_bundle); });
    } else {
        std::unique_ptr<ChatProvider> owned_chat;
        ChatProvider* chat = providers.chat;
        if (chat == nullptr) {
            owned_chat = make_chat_provider(config);
            chat = owned_chat.get();
        }
        bundle = stage("generate", [&] {
            const auto paraphrases = generate_paraphrases(config.prompt, config.m_paraphrases, config.provider, *chat);
            return generate_answers(paraphrases, config.n_answers, config.provider, *chat);
        });
    }
    stage("save_bundle", [&] { save_bundle(bundle, result.run_dir / "bundle.jsonl"); });

    std::unique_ptr<EmbeddingProvider> owned_embedder;
    EmbeddingProvider* embedder = providers.embedder;
    if (embedder == nullptr) {
        owned_embedder = make_embedding_provider(config);
        embedder = owned_embedder.get();
    }
    const auto cache_dir =
        config.embedding.cache_dir.empty() ? result.run_dir / "embeddings.cache" : config.embedding.cache_dir;
    EmbeddingCache cache(cache_dir, effective_embedding_model(config));

    result.analysis = analyze_bundle(bundle, config, *embedder, &cache);
    const Analysis& a = result.analysis;

    stage("write_outputs", [&] {
        write_text_atomic(result.run_dir / "report.json", report_to_json(a.report).dump(2) + "\n");
        write_text_atomic(result.run_dir / "report.csv", report_to_csv(a.report));
        write_text_atomic(result.run_dir / "verdict.json", verdict_to_json(a.verdict).dump(2) + "\n");
        render_heatmap(a.joint, result.run_dir / "heatmap.svg", result.run_dir / "heatmap.csv",
                       "Averaged topic co-occurrence");
        write_text_atomic(result.run_dir / "summary.md", summary_markdown(bundle, a));
    });
    return result;
}

ComparisonTable compare_runs(const std::vector<std::filesystem::path>& report_paths) {
    if (report_paths.size() < 2) throw Error(ErrorKind::Config, "compare needs at least two reports");
    ComparisonTable table;
    std::vector<nlohmann::json> docs;
    for (auto path : report_paths) {
        if (std::filesystem::is_directory(path)) path /= "report.json";
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(read_text(path));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Schema, path.string() + ": " + e.what());
        }
        report_from_json(doc);  // schema check
        const auto parent = path.parent_path().filename().string();
        table.runs.push_back(parent.empty() ? path.stem().string() : parent);
        docs.push_back(std::move(doc));
    }
    for (const auto& row : canonical_report_rows()) {
        table.labels.emplace_back(row.label);
        std::vector<std::string> cells;
        for (const auto& doc : docs) {
            const auto& v = doc.contains(row.key) ? doc.at(row.key) : nlohmann::json(nullptr);
            cells.push_back(v.is_null() ? "n/a" : fmt4(v.get<double>()));
        }
        table.cells.push_back(std::move(cells));
    }
    return table;
}

std::string comparison_csv(const ComparisonTable& table) {
    std::ostringstream out;
    out << "metric";
    for (const auto& run : table.runs) out << ',' << '"' << run << '"';
    out << '\n';
    for (std::size_t r = 0; r < table.labels.size(); ++r) {
        out << '"' << table.labels[r] << '"';
        for (const auto& cell : table.cells[r]) out << ',' << cell;
        out << '\n';
    }
    return out.str();
}

std::string comparison_markdown(const ComparisonTable& table) {
    std::ostringstream out;
    out << "| Metric |";
    for (const auto& run : table.runs) out << ' ' << run << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < table.runs.size(); ++i) out << "---|";
    out << '\n';
    for (std::size_t r = 0; r < table.labels.size(); ++r) {
        out << "| " << table.labels[r] << " |";
        for (const auto& cell : table.cells[r]) out << ' ' << cell << " |";
        out << '\n';
    }
    return out.str();
}

}  // namespace sdm
