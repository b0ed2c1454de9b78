#include <cmath>
#include <limits>
#include <map>

#include "sdm/error.hpp"
#include "sdm/topics.hpp"

namespace sdm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Agglomerative Ward clustering on merge costs
//   delta(A, B) = |A||B| / (|A|+|B|) * ||mean(A) - mean(B)||^2,
// updated with the Lance-Williams recurrence. Ties go to the pair with the
// lexicographically smallest (i, j).
class WardMerger {
public:
    explicit WardMerger(const Matrix& points)
        : n_(points.rows()), cost_(n_ * n_, 0.0), size_(n_, 1), parent_(n_), active_(n_, true),
          nn_(n_, 0), nn_cost_(n_, kInf), clusters_(n_) {
        for (std::size_t i = 0; i < n_; ++i) {
            parent_[i] = i;
            for (std::size_t j = i + 1; j < n_; ++j) {
                const double c = 0.5 * squared_distance(points.row(i), points.row(j));
                cost_[i * n_ + j] = c;
                cost_[j * n_ + i] = c;
            }
        }
        for (std::size_t i = 0; i < n_; ++i) refresh_nearest(i);
    }

    std::size_t clusters() const { return clusters_; }

    /// Cost of the next merge, or +inf when one cluster remains.
    double peek(std::size_t* a, std::size_t* b) const {
        double best = kInf;
        for (std::size_t i = 0; i < n_; ++i) {
            if (active_[i] && nn_cost_[i] < best) {
                best = nn_cost_[i];
                *a = i;
                *b = nn_[i];
            }
        }
        return best;
    }

    void merge(std::size_t a, std::size_t b) {
        if (b < a) std::swap(a, b);
        const double ab = cost(a, b);
        const double na = static_cast<double>(size_[a]);
        const double nb = static_cast<double>(size_[b]);
        for (std::size_t l = 0; l < n_; ++l) {
            if (!active_[l] || l == a || l == b) continue;
            const double nl = static_cast<double>(size_[l]);
            const double c = ((na + nl) * cost(a, l) + (nb + nl) * cost(b, l) - nl * ab) / (na + nb + nl);
            cost_[a * n_ + l] = c;
            cost_[l * n_ + a] = c;
        }
        size_[a] += size_[b];
        active_[b] = false;
        parent_[b] = a;
        --clusters_;

        refresh_nearest(a);
        for (std::size_t l = 0; l < n_; ++l) {
            if (!active_[l] || l == a) continue;
            if (nn_[l] == a || nn_[l] == b) {
                refresh_nearest(l);
            } else {
                const double c = cost(l, a);
                if (c < nn_cost_[l] || (c == nn_cost_[l] && a < nn_[l])) {
                    nn_cost_[l] = c;
                    nn_[l] = a;
                }
            }
        }
    }

    std::vector<int> labels() {
        std::map<std::size_t, int> renumber;
        std::vector<int> out(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t root = find(i);
            auto [it, inserted] = renumber.emplace(root, static_cast<int>(renumber.size()));
            out[i] = it->second;
        }
        return out;
    }

private:
    double cost(std::size_t i, std::size_t j) const { return cost_[i * n_ + j]; }

    std::size_t find(std::size_t i) {
        while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
        return i;
    }

    void refresh_nearest(std::size_t i) {
        nn_cost_[i] = kInf;
        for (std::size_t j = 0; j < n_; ++j) {
            if (j == i || !active_[j]) continue;
            if (cost(i, j) < nn_cost_[i]) {
                nn_cost_[i] = cost(i, j);
                nn_[i] = j;
            }
        }
    }

    std::size_t n_;
    std::vector<double> cost_;
    std::vector<std::size_t> size_;
    std::vector<std::size_t> parent_;
    std::vector<bool> active_;
    std::vector<std::size_t> nn_;
    std::vector<double> nn_cost_;
    std::size_t clusters_;
};

}  // namespace

std::vector<int> cluster_ward(const Matrix& points, int k) {
    if (k < 1) throw Error(ErrorKind::Config, "k must be >= 1");
    if (points.rows() < static_cast<std::size_t>(k)) {
        throw Error(ErrorKind::TooFewPoints, std::to_string(points.rows()) + " points for k=" +
                                                 std::to_string(k));
    }
    WardMerger merger(points);
    while (merger.clusters() > static_cast<std::size_t>(k)) {
        std::size_t a = 0;
        std::size_t b = 0;
        merger.peek(&a, &b);
        merger.merge(a, b);
    }
    return merger.labels();
}

std::vector<int> cluster_ward_threshold(const Matrix& points, double distance_threshold) {
    if (points.empty()) throw Error(ErrorKind::TooFewPoints, "no points to cluster");
    WardMerger merger(points);
    while (merger.clusters() > 1) {
        std::size_t a = 0;
        std::size_t b = 0;
        const double c = merger.peek(&a, &b);
        if (std::sqrt(2.0 * c) > distance_threshold) break;
        merger.merge(a, b);
    }
    return merger.labels();
}

}  // namespace sdm
