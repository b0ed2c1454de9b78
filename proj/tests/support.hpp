#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <random>
#include <string>
#include <vector>

#include "sdm/matrix.hpp"
#include "sdm/metrics.hpp"

namespace sdm::test {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(SDM_FIXTURE_DIR) / name;
}

/// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("sdm-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline TopicDistribution random_distribution(std::mt19937_64& rng, std::size_t k, double zero_prob = 0.2) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TopicDistribution d;
    d.probs.resize(k);
    double total = 0.0;
    for (auto& p : d.probs) {
        p = u(rng) < zero_prob ? 0.0 : u(rng);
        total += p;
    }
    if (total == 0.0) {
        d.probs[0] = 1.0;
        total = 1.0;
    }
    for (auto& p : d.probs) p /= total;
    d.support_count = 1;
    return d;
}

inline Matrix random_cloud(std::mt19937_64& rng, std::size_t rows, std::size_t dim) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(rows, dim);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < dim; ++j) m(i, j) = g(rng);
    }
    return m;
}

inline Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m;
    for (const auto& r : rows) m.append_row(r);
    return m;
}

/// Numeric CSV without header, one point per line.
inline Matrix load_points(const std::filesystem::path& path) {
    std::ifstream in(path);
    Matrix m;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
        m.append_row(row);
    }
    return m;
}

}  // namespace sdm::test
