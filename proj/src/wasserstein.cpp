#include <algorithm>
#include <cstdint>
#include <limits>

#include "sdm/error.hpp"
#include "sdm/metrics.hpp"

namespace sdm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Successive shortest paths on the bipartite transportation network
//   source -> sources[i] (cap nb) -> sinks[j] (uncapacitated, cost c_ij) -> sink (cap na)
// with Dijkstra over reduced costs. The graph is dense, so Dijkstra is the
// O(V^2) array variant.
class Transport {
public:
    Transport(const Matrix& from, const Matrix& to)
        : na_(from.rows()), nb_(to.rows()), cost_(na_ * nb_), flow_(na_ * nb_, 0),
          supply_(na_, static_cast<std::int64_t>(nb_)), demand_(nb_, static_cast<std::int64_t>(na_)),
          potential_(node_count(), 0.0) {
        for (std::size_t i = 0; i < na_; ++i) {
            for (std::size_t j = 0; j < nb_; ++j) cost_[i * nb_ + j] = euclidean_distance(from.row(i), to.row(j));
        }
    }

    double solve() {
        std::int64_t remaining = static_cast<std::int64_t>(na_ * nb_);
        while (remaining > 0) {
            if (!shortest_path()) throw Error(ErrorKind::EmptyCloud, "transport network disconnected");
            remaining -= augment();
        }
        double total = 0.0;
        for (std::size_t idx = 0; idx < flow_.size(); ++idx) {
            if (flow_[idx] != 0) total += static_cast<double>(flow_[idx]) * cost_[idx];
        }
        return total / static_cast<double>(na_ * nb_);
    }

private:
    // Node ids: 0 = source, 1..na = left, na+1..na+nb = right, na+nb+1 = sink.
    std::size_t node_count() const { return na_ + nb_ + 2; }
    std::size_t left(std::size_t i) const { return 1 + i; }
    std::size_t right(std::size_t j) const { return 1 + na_ + j; }
    std::size_t sink() const { return na_ + nb_ + 1; }

    bool shortest_path() {
        const std::size_t v_count = node_count();
        dist_.assign(v_count, kInf);
        prev_.assign(v_count, SIZE_MAX);
        std::vector<bool> done(v_count, false);
        dist_[0] = 0.0;

        auto relax = [&](std::size_t u, std::size_t v, double edge_cost) {
            const double reduced = std::max(0.0, edge_cost + potential_[u] - potential_[v]);
            const double cand = dist_[u] + reduced;
            if (cand < dist_[v]) {
                dist_[v] = cand;
                prev_[v] = u;
            }
        };

        for (;;) {
            std::size_t u = SIZE_MAX;
            double best = kInf;
            for (std::size_t v = 0; v < v_count; ++v) {
                if (!done[v] && dist_[v] < best) {
                    best = dist_[v];
                    u = v;
                }
            }
            if (u == SIZE_MAX) break;
            done[u] = true;
            if (u == sink()) break;

            if (u == 0) {
                for (std::size_t i = 0; i < na_; ++i) {
                    if (supply_[i] > 0) relax(0, left(i), 0.0);
                }
            } else if (u <= na_) {
                const std::size_t i = u - 1;
                for (std::size_t j = 0; j < nb_; ++j) relax(u, right(j), cost_[i * nb_ + j]);
            } else {
                const std::size_t j = u - 1 - na_;
                for (std::size_t i = 0; i < na_; ++i) {
                    if (flow_[i * nb_ + j] > 0) relax(u, left(i), -cost_[i * nb_ + j]);
                }
                if (demand_[j] > 0) relax(u, sink(), 0.0);
            }
        }
        if (dist_[sink()] == kInf) return false;
        const double cap = dist_[sink()];
        for (std::size_t v = 0; v < v_count; ++v) potential_[v] += std::min(dist_[v], cap);
        return true;
    }

    std::int64_t augment() {
        // Walk back from the sink to find the bottleneck, then apply it.
        std::int64_t delta = std::numeric_limits<std::int64_t>::max();
        for (std::size_t v = sink(); v != 0; v = prev_[v]) {
            const std::size_t u = prev_[v];
            if (u == 0) {
                delta = std::min(delta, supply_[v - 1]);
            } else if (v == sink()) {
                delta = std::min(delta, demand_[u - 1 - na_]);
            } else if (u > na_) {  // right -> left uses a reverse edge
                delta = std::min(delta, flow_[(v - 1) * nb_ + (u - 1 - na_)]);
            }
        }
        for (std::size_t v = sink(); v != 0; v = prev_[v]) {
            const std::size_t u = prev_[v];
            if (u == 0) {
                supply_[v - 1] -= delta;
            } else if (v == sink()) {
                demand_[u - 1 - na_] -= delta;
            } else if (u <= na_) {
                flow_[(u - 1) * nb_ + (v - 1 - na_)] += delta;
            } else {
                flow_[(v - 1) * nb_ + (u - 1 - na_)] -= delta;
            }
        }
        return delta;
    }

    std::size_t na_;
    std::size_t nb_;
    std::vector<double> cost_;
    std::vector<std::int64_t> flow_;
    std::vector<std::int64_t> supply_;
    std::vector<std::int64_t> demand_;
    std::vector<double> potential_;
    std::vector<double> dist_;
    std::vector<std::size_t> prev_;
};

}  // namespace

double wasserstein1(const Matrix& from, const Matrix& to) {
    if (from.empty() || to.empty()) throw Error(ErrorKind::EmptyCloud, "Wasserstein needs two non-empty clouds");
    if (from.cols() != to.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "clouds of dimension " + std::to_string(from.cols()) +
                                                      " and " + std::to_string(to.cols()));
    }
    return Transport(from, to).solve();
}

}  // namespace sdm
