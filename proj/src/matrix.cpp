#include "fne/matrix.hpp"

#include "fne/error.hpp"

#include <string>

namespace fne {

void Matrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && data_.empty()) {
        cols_ = values.size();
    }
    if (values.size() != cols_) {
        throw Error(Errc::dimension_mismatch, "row of length " + std::to_string(values.size()) +
                                                  " appended to matrix with " +
                                                  std::to_string(cols_) + " columns");
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

} // namespace fne
