#include "pgfn/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pgfn::kernels {

namespace {

// Shared element formulas; both variants call these so the arithmetic is
// identical and only the loop scheduling differs.
inline double dot_row(const double* x, const double* w, double bias, int in) {
  double acc = bias;
  for (int i = 0; i < in; ++i) acc += x[i] * w[i];
  return acc;
}

inline void param_row(const double* dy, const double* x, int batch, int in, int out, int o,
                      double* dw_row, double* dbias) {
  for (int b = 0; b < batch; ++b) {
    const double g = dy[static_cast<std::size_t>(b) * out + o];
    if (g == 0.0) continue;
    const double* xb = x + static_cast<std::size_t>(b) * in;
    for (int i = 0; i < in; ++i) dw_row[i] += g * xb[i];
    *dbias += g;
  }
}

inline void input_row(const double* dy_b, const double* w, int in, int out, double* dx_b) {
  for (int i = 0; i < in; ++i) dx_b[i] = 0.0;
  for (int o = 0; o < out; ++o) {
    const double g = dy_b[o];
    if (g == 0.0) continue;
    const double* wo = w + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) dx_b[i] += g * wo[i];
  }
}

}  // namespace

void affine_forward(std::span<const double> x, int batch, int in, std::span<const double> w,
                    std::span<const double> bias, int out, std::span<double> y) {
#pragma omp parallel for schedule(static) if (batch * out > 4096)
  for (int b = 0; b < batch; ++b) {
    const double* xb = x.data() + static_cast<std::size_t>(b) * in;
    double* yb = y.data() + static_cast<std::size_t>(b) * out;
    for (int o = 0; o < out; ++o)
      yb[o] = dot_row(xb, w.data() + static_cast<std::size_t>(o) * in, bias[o], in);
  }
}

void affine_backward_params(std::span<const double> dy, std::span<const double> x, int batch,
                            int in, int out, std::span<double> dw, std::span<double> dbias) {
#pragma omp parallel for schedule(static) if (batch * out > 4096)
  for (int o = 0; o < out; ++o)
    param_row(dy.data(), x.data(), batch, in, out, o,
              dw.data() + static_cast<std::size_t>(o) * in, &dbias[o]);
}

void affine_backward_input(std::span<const double> dy, std::span<const double> w, int batch,
                           int in, int out, std::span<double> dx) {
#pragma omp parallel for schedule(static) if (batch * out > 4096)
  for (int b = 0; b < batch; ++b)
    input_row(dy.data() + static_cast<std::size_t>(b) * out, w.data(), in, out,
              dx.data() + static_cast<std::size_t>(b) * in);
}

void tanh_inplace(std::span<double> v) {
  const auto n = static_cast<long>(v.size());
#pragma omp parallel for schedule(static) if (n > 65536)
  for (long j = 0; j < n; ++j) v[j] = std::tanh(v[j]);
}

void tanh_backward(std::span<const double> y, std::span<double> dy) {
  const auto n = static_cast<long>(y.size());
#pragma omp parallel for schedule(static) if (n > 65536)
  for (long j = 0; j < n; ++j) dy[j] *= 1.0 - y[j] * y[j];
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void affine_forward(std::span<const double> x, int batch, int in, std::span<const double> w,
                    std::span<const double> bias, int out, std::span<double> y) {
  for (int b = 0; b < batch; ++b)
    for (int o = 0; o < out; ++o)
      y[static_cast<std::size_t>(b) * out + o] =
          dot_row(x.data() + static_cast<std::size_t>(b) * in,
                  w.data() + static_cast<std::size_t>(o) * in, bias[o], in);
}

void affine_backward_params(std::span<const double> dy, std::span<const double> x, int batch,
                            int in, int out, std::span<double> dw, std::span<double> dbias) {
  for (int o = 0; o < out; ++o)
    param_row(dy.data(), x.data(), batch, in, out, o,
              dw.data() + static_cast<std::size_t>(o) * in, &dbias[o]);
}

void affine_backward_input(std::span<const double> dy, std::span<const double> w, int batch,
                           int in, int out, std::span<double> dx) {
  for (int b = 0; b < batch; ++b)
    input_row(dy.data() + static_cast<std::size_t>(b) * out, w.data(), in, out,
              dx.data() + static_cast<std::size_t>(b) * in);
}

void tanh_inplace(std::span<double> v) {
  for (double& e : v) e = std::tanh(e);
}

void tanh_backward(std::span<const double> y, std::span<double> dy) {
  for (std::size_t j = 0; j < y.size(); ++j) dy[j] *= 1.0 - y[j] * y[j];
}

}  // namespace serial
}  // namespace pgfn::kernels
