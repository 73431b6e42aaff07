#include "deeptrust/standardize.hpp"

#include <cmath>

#include "deeptrust/error.hpp"

namespace deeptrust {

Standardizer Standardizer::fit(const Matrix& train) {
    if (train.rows() < 2) throw ValidationError("standardization needs at least 2 training vectors");
    const auto n = static_cast<double>(train.rows());
    Standardizer s;
    s.means.assign(train.cols(), 0.0);
    s.stddevs.assign(train.cols(), 0.0);
    for (std::size_t c = 0; c < train.cols(); ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < train.rows(); ++r) sum += train(r, c);
        const double mean = sum / n;
        double ss = 0.0;
        bool constant = true;
        for (std::size_t r = 0; r < train.rows(); ++r) {
            const double d = train(r, c) - mean;
            ss += d * d;
            constant = constant && train(r, c) == train(0, c);
        }
        s.means[c] = mean;
        s.stddevs[c] = constant ? 0.0 : std::sqrt(ss / n);
    }
    return s;
}

std::vector<double> Standardizer::transform(std::span<const double> x) const {
    if (x.size() != dims())
        throw ValidationError("standardizer expects " + std::to_string(dims()) + " features, got " +
                              std::to_string(x.size()));
    std::vector<double> out(x.size());
    for (std::size_t c = 0; c < x.size(); ++c) out[c] = stddevs[c] > 0.0 ? (x[c] - means[c]) / stddevs[c] : 0.0;
    return out;
}

Matrix Standardizer::transform(const Matrix& x) const {
    if (x.cols() != dims())
        throw ValidationError("standardizer expects " + std::to_string(dims()) + " features, got " +
                              std::to_string(x.cols()));
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c)
            out(r, c) = stddevs[c] > 0.0 ? (x(r, c) - means[c]) / stddevs[c] : 0.0;
    return out;
}

Matrix Standardizer::inverse(const Matrix& z) const {
    if (z.cols() != dims()) throw ValidationError("standardizer dimension mismatch");
    Matrix out(z.rows(), z.cols());
    for (std::size_t r = 0; r < z.rows(); ++r)
        for (std::size_t c = 0; c < z.cols(); ++c) out(r, c) = z(r, c) * stddevs[c] + means[c];
    return out;
}

StandardizedData standardize(const Matrix& train, const Matrix& apply_to) {
    auto s = Standardizer::fit(train);
    return {s.transform(train), s.transform(apply_to), std::move(s)};
}

}  // namespace deeptrust
