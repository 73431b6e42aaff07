#include "deeptrust/kernels.hpp"

#include <cstddef>

#include "deeptrust/error.hpp"

namespace deeptrust::kernels {
namespace {

void check_forward(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y) {
    if (x.cols() != w.rows() || bias.size() != w.cols())
        throw ValidationError("affine_forward: expected input width " + std::to_string(w.rows()) + ", got " +
                              std::to_string(x.cols()));
    if (y.rows() != x.rows() || y.cols() != w.cols()) y = Matrix(x.rows(), w.cols());
}

void check_params(const Matrix& x, const Matrix& dy, Matrix& dw, std::span<double> dbias) {
    if (x.rows() != dy.rows() || dw.rows() != x.cols() || dw.cols() != dy.cols() || dbias.size() != dy.cols())
        throw ValidationError("affine_backward_params: shape mismatch");
}

void check_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
    if (dy.cols() != w.cols()) throw ValidationError("affine_backward_input: shape mismatch");
    if (dx.rows() != dy.rows() || dx.cols() != w.rows()) dx = Matrix(dy.rows(), w.rows());
}

// One output row of y = x * w + b; the j loop vectorizes, the sum over i runs in order.
inline void forward_row(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y, std::size_t r) {
    auto out = y.row(r);
    const auto in = x.row(r);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = bias[j];
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double xi = in[i];
        const auto wi = w.row(i);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += xi * wi[j];
    }
}

inline void params_row(const Matrix& x, const Matrix& dy, Matrix& dw, std::size_t i) {
    auto out = dw.row(i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double xri = x(r, i);
        const auto g = dy.row(r);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += xri * g[j];
    }
}

inline double bias_entry(const Matrix& dy, std::size_t j) {
    double s = 0.0;
    for (std::size_t r = 0; r < dy.rows(); ++r) s += dy(r, j);
    return s;
}

inline void input_row(const Matrix& dy, const Matrix& w, Matrix& dx, std::size_t r) {
    const auto g = dy.row(r);
    auto out = dx.row(r);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto wi = w.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) s += g[j] * wi[j];
        out[i] = s;
    }
}

}  // namespace

namespace serial {

void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y) {
    check_forward(x, w, bias, y);
    for (std::size_t r = 0; r < x.rows(); ++r) forward_row(x, w, bias, y, r);
}

void affine_backward_params(const Matrix& x, const Matrix& dy, Matrix& dw, std::span<double> dbias) {
    check_params(x, dy, dw, dbias);
    for (std::size_t i = 0; i < dw.rows(); ++i) params_row(x, dy, dw, i);
    for (std::size_t j = 0; j < dbias.size(); ++j) dbias[j] = bias_entry(dy, j);
}

void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
    check_input(dy, w, dx);
    for (std::size_t r = 0; r < dy.rows(); ++r) input_row(dy, w, dx, r);
}

void sgd_update(std::span<double> params, std::span<const double> grads, double lr) {
    if (params.size() != grads.size()) throw ValidationError("sgd_update: gradient shape mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

}  // namespace serial

namespace omp {

void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y) {
    check_forward(x, w, bias, y);
    const auto rows = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) forward_row(x, w, bias, y, static_cast<std::size_t>(r));
}

void affine_backward_params(const Matrix& x, const Matrix& dy, Matrix& dw, std::span<double> dbias) {
    check_params(x, dy, dw, dbias);
    const auto rows = static_cast<std::ptrdiff_t>(dw.rows());
    const auto cols = static_cast<std::ptrdiff_t>(dbias.size());
#pragma omp parallel
    {
#pragma omp for schedule(static) nowait
        for (std::ptrdiff_t i = 0; i < rows; ++i) params_row(x, dy, dw, static_cast<std::size_t>(i));
#pragma omp for schedule(static)
        for (std::ptrdiff_t j = 0; j < cols; ++j)
            dbias[static_cast<std::size_t>(j)] = bias_entry(dy, static_cast<std::size_t>(j));
    }
}

void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
    check_input(dy, w, dx);
    const auto rows = static_cast<std::ptrdiff_t>(dy.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) input_row(dy, w, dx, static_cast<std::size_t>(r));
}

void sgd_update(std::span<double> params, std::span<const double> grads, double lr) {
    if (params.size() != grads.size()) throw ValidationError("sgd_update: gradient shape mismatch");
    const auto n = static_cast<std::ptrdiff_t>(params.size());
#pragma omp parallel for simd schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        params[static_cast<std::size_t>(i)] -= lr * grads[static_cast<std::size_t>(i)];
}

}  // namespace omp
}  // namespace deeptrust::kernels
