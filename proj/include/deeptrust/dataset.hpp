#pragma once

#include <span>
#include <vector>

#include "deeptrust/matrix.hpp"

namespace deeptrust {

/// Feature rows with binary targets (1 = trusted, 0 = not trusted).
struct Dataset {
    Matrix x;
    std::vector<int> y;

    std::size_t size() const { return y.size(); }
    std::size_t dims() const { return x.cols(); }

    Dataset subset(std::span<const std::size_t> indices) const {
        Dataset out{x.select_rows(indices), {}};
        out.y.reserve(indices.size());
        for (auto i : indices) out.y.push_back(y[i]);
        return out;
    }
};

inline std::vector<double> targets_as_double(std::span<const int> y) { return {y.begin(), y.end()}; }

}  // namespace deeptrust
