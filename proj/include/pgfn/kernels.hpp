#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pgfn {

// Dense row-major matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  std::span<double> row(int r) {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }
  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
};

// Batched dense-layer kernels. Every output element is accumulated in the same
// fixed order in both variants, so the OpenMP kernels are bitwise identical to
// the serial reference for any thread count.
//
//   forward:        y[b,o]  = bias[o] + sum_i x[b,i] w[o,i]
//   backward_params dw[o,i] += sum_b dy[b,o] x[b,i];  dbias[o] += sum_b dy[b,o]
//   backward_input  dx[b,i]  = sum_o dy[b,o] w[o,i]
namespace kernels {

void affine_forward(std::span<const double> x, int batch, int in, std::span<const double> w,
                    std::span<const double> bias, int out, std::span<double> y);
void affine_backward_params(std::span<const double> dy, std::span<const double> x, int batch,
                            int in, int out, std::span<double> dw, std::span<double> dbias);
void affine_backward_input(std::span<const double> dy, std::span<const double> w, int batch,
                           int in, int out, std::span<double> dx);
void tanh_inplace(std::span<double> v);
// dy[j] *= 1 - y[j]^2
void tanh_backward(std::span<const double> y, std::span<double> dy);

namespace serial {
void affine_forward(std::span<const double> x, int batch, int in, std::span<const double> w,
                    std::span<const double> bias, int out, std::span<double> y);
void affine_backward_params(std::span<const double> dy, std::span<const double> x, int batch,
                            int in, int out, std::span<double> dw, std::span<double> dbias);
void affine_backward_input(std::span<const double> dy, std::span<const double> w, int batch,
                           int in, int out, std::span<double> dx);
void tanh_inplace(std::span<double> v);
void tanh_backward(std::span<const double> y, std::span<double> dy);
}  // namespace serial

int max_threads();

}  // namespace kernels
}  // namespace pgfn
