#pragma once

#include <span>

#include "deeptrust/matrix.hpp"

// Dense-layer kernels. Each output element is accumulated by one thread in a
// fixed order, so the OpenMP variants return bit-identical results to the
// serial reference for any thread count.
namespace deeptrust::kernels {

namespace serial {

/// y = x * w + bias  (x: batch x in, w: in x out, y: batch x out)
void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y);
/// dw = x^T * dy, dbias = column sums of dy
void affine_backward_params(const Matrix& x, const Matrix& dy, Matrix& dw, std::span<double> dbias);
/// dx = dy * w^T
void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx);
/// p -= lr * g
void sgd_update(std::span<double> params, std::span<const double> grads, double lr);

}  // namespace serial

namespace omp {

void affine_forward(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y);
void affine_backward_params(const Matrix& x, const Matrix& dy, Matrix& dw, std::span<double> dbias);
void affine_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx);
void sgd_update(std::span<double> params, std::span<const double> grads, double lr);

}  // namespace omp

// The kernels the library uses.
using omp::affine_backward_input;
using omp::affine_backward_params;
using omp::affine_forward;
using omp::sgd_update;

}  // namespace deeptrust::kernels
