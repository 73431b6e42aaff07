#pragma once

#include <span>
#include <vector>

#include "deeptrust/matrix.hpp"

namespace deeptrust {

/// Per-column z-score transform fitted on training rows only.
/// Columns with zero training variance map to 0.
struct Standardizer {
    std::vector<double> means;
    std::vector<double> stddevs;  // population stddev; 0 marks a constant column

    /// Needs at least 2 rows.
    static Standardizer fit(const Matrix& train);

    Matrix transform(const Matrix& x) const;
    std::vector<double> transform(std::span<const double> x) const;
    /// x * stddev + mean.
    Matrix inverse(const Matrix& z) const;

    std::size_t dims() const { return means.size(); }
    bool operator==(const Standardizer&) const = default;
};

struct StandardizedData {
    Matrix train;
    Matrix applied;
    Standardizer transform;
};

StandardizedData standardize(const Matrix& train, const Matrix& apply_to);

}  // namespace deeptrust
