#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "sdm/error.hpp"
#include "sdm/metrics.hpp"
#include "support.hpp"

using namespace sdm;
using doctest::Approx;
using sdm::test::from_rows;

namespace {

TopicDistribution dist(std::vector<double> p) { return {std::move(p), 1}; }

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::Config;
}

// Replicates both clouds up to a common size and enumerates assignments.
double brute_w1(const Matrix& a, const Matrix& b) {
    const std::size_t n = std::lcm(a.rows(), b.rows());
    std::vector<std::size_t> src, dst;
    for (std::size_t i = 0; i < n; ++i) {
        src.push_back(i % a.rows());
        dst.push_back(i % b.rows());
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
        double cost = 0;
        for (std::size_t i = 0; i < n; ++i) cost += euclidean_distance(a.row(src[i]), b.row(dst[perm[i]]));
        best = std::min(best, cost / static_cast<double>(n));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

Matrix joint_from(std::vector<std::vector<double>> rows) { return from_rows(rows); }

}  // namespace

TEST_CASE("topic_distribution examples") {
    CHECK(topic_distribution(std::vector<int>{0, 0, 1, 1}, 2).probs == std::vector<double>{0.5, 0.5});
    CHECK(topic_distribution(std::vector<int>{2}, 3).probs == std::vector<double>{0, 0, 1});
    const auto d = topic_distribution(std::vector<int>{0, 1, 1, 2, 2, 2}, 3);
    CHECK(d.probs[0] == Approx(1.0 / 6));
    CHECK(d.probs[1] == Approx(2.0 / 6));
    CHECK(d.probs[2] == Approx(3.0 / 6));
    CHECK(d.support_count == 6);
    CHECK(kind_of([] { topic_distribution(std::vector<int>{}, 2); }) == ErrorKind::EmptyLabels);
}

TEST_CASE("entropy examples") {
    CHECK(entropy(dist({0.25, 0.25, 0.25, 0.25})) == Approx(2.0));
    CHECK(entropy(dist({0, 1, 0})) == 0.0);
    CHECK(entropy(dist({0.5, 0.25, 0.25})) == Approx(1.5));
}

TEST_CASE("kl_divergence examples against the oracle") {
    CHECK(kl_divergence(dist({0.3, 0.7}), dist({0.3, 0.7})) <= 1e-9);
    CHECK(kl_divergence(dist({1, 0}), dist({0.5, 0.5})) == Approx(0.9999786257769744).epsilon(1e-12));
    const double pq = kl_divergence(dist({0.8, 0.2}), dist({0.5, 0.5}));
    const double qp = kl_divergence(dist({0.5, 0.5}), dist({0.8, 0.2}));
    CHECK(pq == Approx(0.2780707051166608).epsilon(1e-12));
    CHECK(qp == Approx(0.32192647186213624).epsilon(1e-12));
    CHECK(pq != qp);
    CHECK(kind_of([] { kl_divergence(dist({1, 0}), dist({1, 0, 0})); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("jsd examples") {
    CHECK(jsd(dist({0.2, 0.8}), dist({0.2, 0.8})) == Approx(0.0));
    CHECK(jsd(dist({1, 0}), dist({0, 1})) == Approx(1.0));
    CHECK(jsd(dist({0.5, 0.5}), dist({1, 0})) == Approx(0.3112781244591328).epsilon(1e-12));
    CHECK(kind_of([] { jsd(dist({1, 0}), dist({1})); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("ensemble_divergences: means, skips and the three-pair fixture") {
    std::vector<PairDistributions> one{{dist({0.5, 0.5}), dist({1, 0})}};
    CHECK(ensemble_divergences(one).jsd == Approx(0.3112781244591328));

    const std::vector<std::pair<std::vector<int>, std::vector<int>>> fixture = {
        {{0, 0, 1}, {0, 1, 1, 2}}, {{1, 2}, {2, 2, 2}}, {{0, 1, 2}, {0, 0, 1, 2, 2, 2}}};
    std::vector<PairDistributions> pairs;
    for (const auto& [p, a] : fixture) pairs.push_back({topic_distribution(p, 3), topic_distribution(a, 3)});
    pairs.push_back({topic_distribution(std::vector<int>{0}, 3), std::nullopt});
    const auto e = ensemble_divergences(pairs);
    CHECK(e.jsd == Approx(0.18393094153822329).epsilon(1e-12));
    CHECK(e.kl_ap == Approx(1.849136964853724).epsilon(1e-12));
    CHECK(e.kl_pa == Approx(3.2841573055727076).epsilon(1e-12));
    CHECK(e.pairs_used == 3);
    CHECK(e.pairs_skipped == 1);

    std::vector<PairDistributions> empty{{std::nullopt, dist({1, 0})}};
    CHECK(kind_of([&] { ensemble_divergences(empty); }) == ErrorKind::AllPairsEmpty);
}

TEST_CASE("ensemble_divergences: arithmetic mean of two local JSDs") {
    // jsd([1,0],[0,1]) = 1 and jsd(p,p) = 0
    std::vector<PairDistributions> pairs{{dist({1, 0}), dist({0, 1})}, {dist({0.4, 0.6}), dist({0.4, 0.6})}};
    CHECK(ensemble_divergences(pairs).jsd == Approx(0.5));
}

TEST_CASE("averaged_joint examples") {
    const std::vector<PairLabels> single{{{0}, {1}}};
    const auto j = averaged_joint(single, 2);
    CHECK(j.probs == joint_from({{0, 1}, {0, 0}}));
    CHECK(j.pair_count == 1);

    const std::vector<PairLabels> twice{{{0, 1}, {1, 1, 0}}, {{0, 1}, {1, 1, 0}}};
    const std::vector<PairLabels> once{{{0, 1}, {1, 1, 0}}};
    CHECK(averaged_joint(twice, 2).probs == averaged_joint(once, 2).probs);

    const std::vector<PairLabels> half{{{0, 1}, {0}}};
    CHECK(averaged_joint(half, 2).probs == joint_from({{0.5, 0}, {0.5, 0}}));

    const std::vector<PairLabels> skipped{{{0}, {}}, {{1}, {1}}};
    const auto s = averaged_joint(skipped, 2);
    CHECK(s.skipped_pairs == 1);
    CHECK(s.probs == joint_from({{0, 0}, {0, 1}}));
}

TEST_CASE("local_contingency is the outer product of counts") {
    const auto c = local_contingency({{0, 0, 1}, {1, 2}}, 3);
    CHECK(c == joint_from({{0, 2, 2}, {0, 1, 1}, {0, 0, 0}}));
}

TEST_CASE("mi_from_joint examples") {
    CHECK(mi_from_joint(joint_from({{0.12, 0.28}, {0.18, 0.42}})) == Approx(0.0).epsilon(1e-12));
    CHECK(mi_from_joint(joint_from({{0.5, 0}, {0, 0.5}})) == Approx(1.0));
    Matrix diag4(4, 4);
    for (int i = 0; i < 4; ++i) diag4(i, i) = 0.25;
    CHECK(mi_from_joint(diag4) == Approx(2.0));
}

TEST_CASE("ensemble_mi examples") {
    // single pair whose answer marginal is the global answer distribution
    const PairLabels pair{{0, 1, 1}, {0, 2, 2, 1}};
    const Matrix table = local_contingency(pair, 3);
    const std::vector<Matrix> tables{table};
    const auto global = topic_distribution(pair.answer, 3);
    JointTopicMatrix joint = averaged_joint(std::vector<PairLabels>{pair}, 3);
    CHECK(ensemble_mi(global, tables).emi == Approx(mi_from_joint(joint)).epsilon(1e-12));

    // deterministic mapping: one prompt topic per table, one answer topic
    const std::vector<Matrix> det{local_contingency({{0}, {2, 2}}, 3), local_contingency({{1, 1}, {0}}, 3)};
    const auto g = topic_distribution(std::vector<int>{2, 2, 0}, 3);
    const auto e = ensemble_mi(g, det);
    CHECK(e.conditional_entropy == Approx(0.0));
    CHECK(e.emi == Approx(entropy(g)));

    const std::vector<std::pair<std::vector<int>, std::vector<int>>> fixture = {
        {{0, 0, 1}, {0, 1, 1, 2}}, {{1, 2}, {2, 2, 2}}, {{0, 1, 2}, {0, 0, 1, 2, 2, 2}}};
    std::vector<Matrix> fx;
    std::vector<int> answers;
    for (const auto& [p, a] : fixture) {
        fx.push_back(local_contingency({p, a}, 3));
        answers.insert(answers.end(), a.begin(), a.end());
    }
    const auto fe = ensemble_mi(topic_distribution(answers, 3), fx);
    CHECK(fe.conditional_entropy == Approx(0.9863826390090816).epsilon(1e-12));
    CHECK(fe.emi == Approx(0.47088327461430557).epsilon(1e-12));
}

TEST_CASE("wasserstein1 examples") {
    const Matrix a = from_rows({{0, 0}, {1, 0}, {0, 1}});
    CHECK(wasserstein1(a, a) == Approx(0.0));
    CHECK(wasserstein1(from_rows({{0, 0}}), from_rows({{0.7, 0}})) == Approx(0.7));
    const Matrix b = from_rows({{2, 2}, {0.5, -1}, {-1, 0.3}});
    CHECK(wasserstein1(a, b) == Approx(1.4660442057135799).epsilon(1e-12));
    CHECK(kind_of([&] { wasserstein1(Matrix(0, 2), b); }) == ErrorKind::EmptyCloud);
    CHECK(kind_of([&] { wasserstein1(a, from_rows({{1, 2, 3}})); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("wasserstein1: brute-force oracle, symmetry and triangle inequality") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(1, 5), dim(1, 6);
    for (int trial = 0; trial < 60; ++trial) {
        const int d = dim(rng);
        const int n = size(rng);
        const Matrix a = sdm::test::random_cloud(rng, n, d);
        const Matrix b = sdm::test::random_cloud(rng, n, d);
        const Matrix c = sdm::test::random_cloud(rng, n, d);
        const double ab = wasserstein1(a, b);
        CHECK(ab == Approx(brute_w1(a, b)).epsilon(1e-9));
        CHECK(ab == Approx(wasserstein1(b, a)).epsilon(1e-12));
        CHECK(ab <= wasserstein1(a, c) + wasserstein1(c, b) + 1e-9);
    }
}

TEST_CASE("wasserstein1: unequal cloud sizes") {
    std::mt19937_64 rng(7);
    const std::vector<std::pair<int, int>> shapes{{1, 4}, {2, 4}, {3, 6}, {2, 3}, {2, 6}, {6, 1}};
    for (const auto& [na, nb] : shapes) {
        const Matrix a = sdm::test::random_cloud(rng, na, 3);
        const Matrix b = sdm::test::random_cloud(rng, nb, 3);
        CHECK(wasserstein1(a, b) == Approx(brute_w1(a, b)).epsilon(1e-9));
    }
}

TEST_CASE("phi_score examples") {
    CHECK(phi_score(2, 0, 2) == Approx(1.0));
    CHECK(phi_score(2, 2, 1) == Approx(0.0));
    CHECK(phi_score(2.0014, 0.0174, 1.9165) == Approx(1.0352).epsilon(5e-5));
    CHECK(kind_of([] { phi_score(1, 0, 0); }) == ErrorKind::ZeroPromptEntropy);
}

TEST_CASE("s_h_score examples and properties") {
    CHECK(std::abs(s_h_score(0.4492, 0.8162, 1.9165) - 0.2918) <= 5e-4);
    CHECK(std::abs(s_h_score(0.6626, 0.8503, 1.2147) - 0.5919) <= 5e-4);
    CHECK(s_h_score(0, 0, 1.3) == 0.0);
    CHECK(kind_of([] { s_h_score(0.1, 0.1, 0.0); }) == ErrorKind::ZeroPromptEntropy);
    CHECK(kind_of([] { s_h_score(0.1, 0.1, 1.0, 0.6, 0.3); }) == ErrorKind::Config);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 2.0);
    for (int i = 0; i < 200; ++i) {
        const double j = u(rng), w = u(rng), h = u(rng), t = u(rng);
        CHECK(s_h_score(t * j, t * w, h) == Approx(t * s_h_score(j, w, h)).epsilon(1e-12));
        CHECK(s_h_score(j, w, h + 0.1) < s_h_score(j, w, h));
    }
}

TEST_CASE("kl_score examples") {
    CHECK(kl_score(0, 1.5) == 0.0);
    CHECK(kl_score(13.701, 1.9165) == Approx(7.149).epsilon(1e-2 / 7.149));
    CHECK(kl_score(2.0, 2.0) == Approx(1.0));
    CHECK(kind_of([] { kl_score(1.0, 0.0); }) == ErrorKind::ZeroPromptEntropy);
}

TEST_CASE("divergence properties on random distributions") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> kdist(1, 8);
    for (int i = 0; i < 300; ++i) {
        const auto k = static_cast<std::size_t>(kdist(rng));
        const auto p = sdm::test::random_distribution(rng, k);
        const auto q = sdm::test::random_distribution(rng, k);
        const double pq = jsd(p, q);
        CHECK(pq == Approx(jsd(q, p)).epsilon(1e-12));
        CHECK(pq >= -1e-15);
        CHECK(pq <= 1.0 + 1e-12);
        CHECK(kl_divergence(p, p) <= 1e-9);
        CHECK(kl_divergence(p, q) >= 0.0);
        std::vector<double> uniform(k, 1.0 / static_cast<double>(k));
        CHECK(entropy(uniform) == Approx(std::log2(static_cast<double>(k))).epsilon(1e-12));
    }
}

TEST_CASE("mi identity on random joints") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 200; ++i) {
        const std::size_t k = 1 + i % 6;
        const auto flat = sdm::test::random_distribution(rng, k * k, 0.3);
        Matrix j(k, k);
        std::vector<double> rows(k, 0.0), cols(k, 0.0);
        for (std::size_t r = 0; r < k; ++r) {
            for (std::size_t c = 0; c < k; ++c) {
                j(r, c) = flat.probs[r * k + c];
                rows[r] += j(r, c);
                cols[c] += j(r, c);
            }
        }
        CHECK(std::abs(mi_from_joint(j) - (entropy(rows) + entropy(cols) - entropy(flat))) <= 1e-9);
    }
}

TEST_CASE("compute_metrics: self-consistency and the three-pair fixture") {
    MetricsInput in;
    in.k = 3;
    in.pairs = {{{0, 0, 1}, {0, 1, 1, 2}}, {{1, 2}, {2, 2, 2}}, {{0, 1, 2}, {0, 0, 1, 2, 2, 2}}};
    const Matrix prompts = from_rows({{1, 0}, {0, 1}});
    const Matrix answers = from_rows({{1, 0}, {0.6, 0.8}});
    in.prompt_embeddings = &prompts;
    in.answer_embeddings = &answers;
    JointTopicMatrix joint;
    const auto r = compute_metrics(in, {}, &joint);
    CHECK(r.ensemble_jsd == Approx(0.18393094153822329).epsilon(1e-12));
    CHECK(r.ensemble_mi == Approx(0.47088327461430557).epsilon(1e-12));
    CHECK(r.pairs_used == 3);
    CHECK(r.prompt_sentences == 8);
    CHECK(r.answer_sentences == 13);
    CHECK(joint.pair_count == 3);

    MetricsReport copy = r;
    copy.finalize();
    CHECK(copy.s_h == r.s_h);
    CHECK(copy.phi == r.phi);
    CHECK(copy.kl_score == r.kl_score);
    CHECK(r.s_h == (r.w_jsd * r.ensemble_jsd + r.w_wass * r.wasserstein) / r.h_prompt);
    CHECK(r.entropy_diff == r.h_answer - r.h_prompt);
}

TEST_CASE("compute_metrics: zero prompt entropy") {
    const Matrix cloud = from_rows({{1, 0}});
    MetricsInput in;
    in.k = 1;
    in.pairs = {{{0}, {0}}};
    in.prompt_embeddings = &cloud;
    in.answer_embeddings = &cloud;
    const auto r = compute_metrics(in, {});
    CHECK(r.degenerate);
    CHECK(r.s_h == 0.0);
    CHECK(r.kl_score == 0.0);
    CHECK(r.phi == 0.0);

    in.k = 2;
    in.pairs = {{{0, 0}, {0, 1}}};
    CHECK(kind_of([&] { compute_metrics(in, {}); }) == ErrorKind::ZeroPromptEntropy);
}

TEST_CASE("report JSON round-trip and CSV layout") {
    MetricsReport r;
    r.k = 4;
    r.h_prompt = 1.9165;
    r.h_answer = 2.0014;
    r.ensemble_jsd = 0.4492;
    r.wasserstein = 0.8162;
    r.ensemble_kl_ap = 13.701;
    r.ensemble_mi = 0.0174;
    r.se_original = 1.5;
    r.finalize();
    const auto doc = report_to_json(r);
    CHECK(doc.at("schema") == kReportSchema);
    CHECK(doc.at("se_mean").is_null());
    const auto back = report_from_json(nlohmann::json::parse(doc.dump()));
    CHECK(report_to_json(back) == doc);
    CHECK(back.s_h == r.s_h);

    auto wrong = doc;
    wrong["schema"] = "sdm_report_v0";
    CHECK(kind_of([&] { report_from_json(wrong); }) == ErrorKind::Schema);

    const std::string csv = report_to_csv(r);
    CHECK(csv.rfind("metric,value\n", 0) == 0);
    CHECK(csv.find("n/a") != std::string::npos);
    CHECK(canonical_report_rows().size() == 14);
    CHECK(std::string(canonical_report_rows()[0].key) == "s_h");
}
