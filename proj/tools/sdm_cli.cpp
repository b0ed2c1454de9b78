// sdm: semantic divergence metrics for LLM prompt/response ensembles.
//
//   sdm run --config run.json
//   sdm replay --bundle runs/run-.../bundle.jsonl [--config run.json]
//   sdm compare runs/a runs/b [--format markdown]
//   sdm heatmap --csv heatmap.csv --svg heatmap.svg
//   sdm se-baseline --bundle bundle.jsonl [--config run.json]

#include <iostream>

#include "CLI11.hpp"
#include "sdm/error.hpp"
#include "sdm/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kProviderError = 3, kMetricError = 4 };

int exit_code_for(sdm::ErrorKind kind) {
    switch (kind) {
        case sdm::ErrorKind::Config:
        case sdm::ErrorKind::IO:
        case sdm::ErrorKind::Schema:
            return kConfigError;
        case sdm::ErrorKind::Provider:
        case sdm::ErrorKind::DegenerateParaphrase:
            return kProviderError;
        default:
            return kMetricError;
    }
}

struct Overrides {
    std::optional<int> k;
    std::optional<int> k_min;
    std::optional<int> k_max;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> cluster_mode;
    std::optional<double> distance_threshold;
    std::optional<double> s_star;
    std::optional<double> kl_star;
    std::optional<double> se_threshold;
    std::optional<std::string> output_dir;
    bool offline = false;

    void attach(CLI::App* app) {
        app->add_option("--k", k, "Fix the topic count instead of the elbow search");
        app->add_option("--k-min", k_min, "Smallest k considered by the elbow search");
        app->add_option("--k-max", k_max, "Largest k considered by the elbow search");
        app->add_option("--seed", seed, "K-means seed");
        app->add_option("--cluster-mode", cluster_mode, "ward or threshold")
            ->check(CLI::IsMember({"ward", "threshold"}));
        app->add_option("--distance-threshold", distance_threshold, "Merge height cut-off for threshold mode");
        app->add_option("--s-star", s_star, "Instability threshold on S_H");
        app->add_option("--kl-star", kl_star, "Exploration threshold on the KL score");
        app->add_option("--se-threshold", se_threshold, "Cosine similarity for the SE baseline clusters");
        app->add_option("--output-dir", output_dir, "Root directory for run directories");
    }

    void apply(sdm::RunConfig& cfg) const {
        if (k) cfg.clustering.k_override = *k;
        if (k_min) cfg.clustering.k_min = *k_min;
        if (k_max) cfg.clustering.k_max = *k_max;
        if (seed) cfg.seed = *seed;
        if (cluster_mode) {
            cfg.clustering.mode = *cluster_mode == "threshold" ? sdm::ClusterMode::Threshold : sdm::ClusterMode::Ward;
        }
        if (distance_threshold) cfg.clustering.distance_threshold = *distance_threshold;
        if (s_star) cfg.s_star = *s_star;
        if (kl_star) cfg.kl_star = *kl_star;
        if (se_threshold) cfg.se_threshold = *se_threshold;
        if (output_dir) cfg.output_dir = *output_dir;
        if (offline) cfg.embedding_backend = sdm::EmbeddingBackend::Hashing;
    }
};

sdm::RunConfig config_or_default(const std::string& path) {
    if (path.empty()) return sdm::RunConfig{};
    return sdm::load_config(path);
}

void print_run(const sdm::RunResult& result) {
    const auto& a = result.analysis;
    std::cout << "run directory: " << result.run_dir.string() << "\n"
              << "k=" << a.report.k << "  S_H=" << a.report.s_h << "  KL score=" << a.report.kl_score
              << "  phi=" << a.report.phi << "\n"
              << "Semantic Box: " << sdm::to_string(a.verdict.regime) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semantic divergence metrics for LLM prompt/response ensembles"};
    app.require_subcommand(1);

    std::string config_path;
    std::string bundle_path;
    Overrides overrides;

    auto* run = app.add_subcommand("run", "Generate an ensemble and score it");
    run->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    run->add_option("--from-bundle", bundle_path, "Score a stored bundle instead of calling the chat provider")
        ->check(CLI::ExistingFile);
    overrides.attach(run);

    auto* replay = app.add_subcommand("replay", "Score a stored bundle");
    replay->add_option("--bundle", bundle_path, "bundle.jsonl to replay")->required()->check(CLI::ExistingFile);
    replay->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    replay->add_flag("--offline", overrides.offline, "Use the hashing embedder instead of the configured endpoint");
    overrides.attach(replay);

    std::vector<std::string> reports;
    std::string format = "markdown";
    std::string compare_out;
    auto* compare = app.add_subcommand("compare", "Side-by-side table of several reports");
    compare->add_option("reports", reports, "report.json files or run directories")->required()->expected(2, -1);
    compare->add_option("--format", format, "markdown or csv")->check(CLI::IsMember({"markdown", "csv"}));
    compare->add_option("--out", compare_out, "Write the table here instead of stdout");

    std::string heatmap_csv_path;
    std::string heatmap_svg_path;
    std::string heatmap_title;
    auto* heatmap = app.add_subcommand("heatmap", "Render a heatmap CSV as SVG");
    heatmap->add_option("--csv", heatmap_csv_path, "k x k heatmap CSV")->required()->check(CLI::ExistingFile);
    heatmap->add_option("--svg", heatmap_svg_path, "Output SVG path")->required();
    heatmap->add_option("--title", heatmap_title, "Figure title");

    auto* se = app.add_subcommand("se-baseline", "Semantic Entropy baseline for a stored bundle");
    se->add_option("--bundle", bundle_path, "bundle.jsonl")->required()->check(CLI::ExistingFile);
    se->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    se->add_option("--se-threshold", overrides.se_threshold, "Cosine similarity threshold");
    se->add_flag("--offline", overrides.offline, "Use the hashing embedder instead of the configured endpoint");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (run->parsed() || replay->parsed()) {
            sdm::RunConfig cfg = config_or_default(config_path);
            if (replay->parsed() && config_path.empty()) {
                cfg.embedding_backend = sdm::EmbeddingBackend::Hashing;
                cfg.embedding.dimension = 256;
            }
            if (!bundle_path.empty()) cfg.from_bundle = bundle_path;
            overrides.apply(cfg);
            print_run(sdm::run_pipeline(cfg));
        } else if (compare->parsed()) {
            std::vector<std::filesystem::path> paths(reports.begin(), reports.end());
            const auto table = sdm::compare_runs(paths);
            const std::string text =
                format == "csv" ? sdm::comparison_csv(table) : sdm::comparison_markdown(table);
            if (compare_out.empty()) {
                std::cout << text;
            } else {
                sdm::write_text_atomic(compare_out, text);
            }
        } else if (heatmap->parsed()) {
            const sdm::Matrix joint = sdm::parse_heatmap_csv(sdm::read_text(heatmap_csv_path));
            sdm::write_text_atomic(heatmap_svg_path, sdm::heatmap_svg(joint, heatmap_title));
        } else if (se->parsed()) {
            sdm::RunConfig cfg = config_or_default(config_path);
            if (config_path.empty()) {
                cfg.embedding_backend = sdm::EmbeddingBackend::Hashing;
                cfg.embedding.dimension = 256;
            }
            overrides.apply(cfg);
            cfg.embedding.validate();
            const sdm::RunBundle bundle = sdm::load_bundle(bundle_path);
            auto embedder = sdm::make_embedding_provider(cfg);
            sdm::EmbeddingCache cache(cfg.embedding.cache_dir, sdm::effective_embedding_model(cfg));
            const auto result = sdm::se_suite(bundle, cfg.se_threshold, cfg.embedding, *embedder, &cache);
            nlohmann::json out = {{"se_original", result.se_original},
                                  {"se_per_paraphrase", result.se_per_paraphrase},
                                  {"se_mean", result.se_mean},
                                  {"cluster_method", result.cluster_method},
                                  {"threshold", cfg.se_threshold}};
            std::cout << out.dump(2) << "\n";
        }
    } catch (const sdm::Error& e) {
        std::cerr << "sdm: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "sdm: " << e.what() << "\n";
        return kMetricError;
    }
    return kOk;
}
