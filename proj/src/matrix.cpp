#include "sdm/matrix.hpp"

#include <cmath>

#include "sdm/error.hpp"

namespace sdm {

void Matrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) {
        throw Error(ErrorKind::DimensionMismatch, "row of width " + std::to_string(values.size()) +
                                                      " appended to matrix of width " +
                                                      std::to_string(cols_));
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

Matrix Matrix::vstack(const Matrix& top, const Matrix& bottom) {
    if (top.empty()) return bottom;
    if (bottom.empty()) return top;
    if (top.cols() != bottom.cols()) throw Error(ErrorKind::DimensionMismatch, "vstack width mismatch");
    Matrix out = top;
    out.data_.insert(out.data_.end(), bottom.data_.begin(), bottom.data_.end());
    out.rows_ += bottom.rows_;
    return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

}  // namespace sdm
