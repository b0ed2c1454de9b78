#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "sdm/error.hpp"
#include "sdm/topics.hpp"

namespace sdm {

namespace {

// mt19937_64 is fully specified by the standard; the distributions are not,
// so draws are converted by hand to stay identical across toolchains.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t nearest_center(const Matrix& centers, std::span<const double> x, double* dist_out) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.rows(); ++c) {
        const double d = squared_distance(centers.row(c), x);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    if (dist_out != nullptr) *dist_out = best_d;
    return best;
}

// Appends k-means++ picks to `centers` until it has k rows.
void plusplus_fill(const Matrix& points, Matrix& centers, int k, std::mt19937_64& rng) {
    const std::size_t n = points.rows();
    if (centers.empty()) {
        centers = Matrix(0, points.cols());
        centers.append_row(points.row(static_cast<std::size_t>(uniform01(rng) * n) % n));
    }
    std::vector<double> d2(n);
    while (static_cast<int>(centers.rows()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            nearest_center(centers, points.row(i), &d2[i]);
            total += d2[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = uniform01(rng) * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(uniform01(rng) * n) % n;
        }
        centers.append_row(points.row(pick));
    }
}

KMeansResult lloyd(const Matrix& points, Matrix centers, int max_iterations) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    const auto k = centers.rows();
    std::vector<int> labels(n, -1);
    std::vector<double> dist(n, 0.0);

    for (int iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<int>(nearest_center(centers, points.row(i), &dist[i]));
            if (c != labels[i]) {
                labels[i] = c;
                changed = true;
            }
        }
        if (!changed) break;

        Matrix sums(k, d, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto row = sums.row(static_cast<std::size_t>(labels[i]));
            const auto x = points.row(i);
            for (std::size_t j = 0; j < d; ++j) row[j] += x[j];
            ++counts[static_cast<std::size_t>(labels[i])];
        }
        std::vector<bool> taken(n, false);
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Empty cluster: move it onto the worst-served point.
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (!taken[i] && dist[i] > far_d) {
                        far_d = dist[i];
                        far = i;
                    }
                }
                taken[far] = true;
                dist[far] = 0.0;
                std::copy(points.row(far).begin(), points.row(far).end(), centers.row(c).begin());
                continue;
            }
            auto center = centers.row(c);
            const auto s = sums.row(c);
            for (std::size_t j = 0; j < d; ++j) center[j] = s[j] / static_cast<double>(counts[c]);
        }
    }

    KMeansResult result;
    result.labels.assign(n, 0);
    result.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double di = 0.0;
        result.labels[i] = static_cast<int>(nearest_center(centers, points.row(i), &di));
        result.inertia += di;
    }
    result.centers = std::move(centers);
    return result;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options,
                    const Matrix* warm_start) {
    if (k < 1) throw Error(ErrorKind::Config, "k must be >= 1");
    if (points.rows() < static_cast<std::size_t>(k)) {
        throw Error(ErrorKind::TooFewPoints, std::to_string(points.rows()) + " points for k=" +
                                                 std::to_string(k));
    }
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(k));
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    auto consider = [&](KMeansResult r) {
        if (r.inertia < best.inertia) best = std::move(r);
    };
    if (warm_start != nullptr && !warm_start->empty() &&
        warm_start->rows() <= static_cast<std::size_t>(k)) {
        Matrix centers = *warm_start;
        plusplus_fill(points, centers, k, rng);
        consider(lloyd(points, std::move(centers), options.max_iterations));
    }
    for (int r = 0; r < std::max(1, options.restarts); ++r) {
        Matrix centers;
        plusplus_fill(points, centers, k, rng);
        consider(lloyd(points, std::move(centers), options.max_iterations));
    }
    return best;
}

std::size_t count_distinct_rows(const Matrix& points) {
    std::set<std::vector<double>> seen;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        seen.emplace(points.row(i).begin(), points.row(i).end());
    }
    return seen.size();
}

ElbowResult select_k_elbow(const Matrix& points, int k_min, int k_max, std::uint64_t seed,
                           const KMeansOptions& options) {
    if (k_min < 2) throw Error(ErrorKind::Config, "k_min must be >= 2");
    if (k_max < k_min) throw Error(ErrorKind::Config, "k_max must be >= k_min");
    const auto rows = static_cast<int>(points.rows());
    if (rows < k_min + 1) {
        throw Error(ErrorKind::TooFewPoints, std::to_string(rows) + " points cannot support k_min=" +
                                                 std::to_string(k_min));
    }
    k_max = std::min(k_max, rows - 1);

    ElbowResult result;
    if (count_distinct_rows(points) == 1) {
        result.k = 1;
        result.curve.emplace_back(1, 0.0);
        return result;
    }

    const int lo = k_min - 1;
    const int hi = k_max + 1;
    Matrix previous;
    for (int k = lo; k <= hi; ++k) {
        KMeansResult fit = kmeans(points, k, seed, options, previous.empty() ? nullptr : &previous);
        result.curve.emplace_back(k, fit.inertia);
        previous = std::move(fit.centers);
    }

    const double range = result.curve.front().second - result.curve.back().second;
    result.k = k_min;
    if (!(range > 0.0)) return result;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = k_min; k <= k_max; ++k) {
        const auto idx = static_cast<std::size_t>(k - lo);
        const double curvature = (result.curve[idx - 1].second - 2.0 * result.curve[idx].second +
                                  result.curve[idx + 1].second) /
                                 range;
        if (curvature > best) {
            best = curvature;
            result.k = k;
        }
    }
    return result;
}

}  // namespace sdm
