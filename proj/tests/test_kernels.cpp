#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <vector>

#include "pgfn/kernels.hpp"
#include "pgfn/rng.hpp"

using namespace pgfn;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = 2.0 * rng.uniform() - 1.0;
  return v;
}

struct Shape {
  int batch, in, out;
};

// Sizes on both sides of the parallel thresholds.
const Shape kShapes[] = {{1, 3, 2}, {7, 5, 9}, {64, 48, 33}, {257, 128, 129}, {3, 300, 1}};

}  // namespace

TEST_CASE("forward matches a naive triple loop") {
  Rng rng(1);
  for (const auto& s : kShapes) {
    const auto x = random_vec(rng, static_cast<std::size_t>(s.batch) * s.in);
    const auto w = random_vec(rng, static_cast<std::size_t>(s.out) * s.in);
    const auto b = random_vec(rng, static_cast<std::size_t>(s.out));
    std::vector<double> y(static_cast<std::size_t>(s.batch) * s.out);
    kernels::affine_forward(x, s.batch, s.in, w, b, s.out, y);
    for (int r = 0; r < s.batch; ++r)
      for (int o = 0; o < s.out; ++o) {
        long double acc = b[o];
        for (int i = 0; i < s.in; ++i) acc += static_cast<long double>(x[r * s.in + i]) * w[o * s.in + i];
        CHECK(y[r * s.out + o] == doctest::Approx(static_cast<double>(acc)).epsilon(1e-12));
      }
  }
}

TEST_CASE("parallel kernels are bitwise equal to the serial reference") {
  const int saved = omp_get_max_threads();
  for (int threads : {1, 2, 4, 7}) {
    omp_set_num_threads(threads);
    Rng rng(static_cast<std::uint64_t>(threads));
    for (const auto& s : kShapes) {
      const auto nb = static_cast<std::size_t>(s.batch);
      const auto x = random_vec(rng, nb * s.in);
      const auto w = random_vec(rng, static_cast<std::size_t>(s.out) * s.in);
      const auto b = random_vec(rng, static_cast<std::size_t>(s.out));
      const auto dy = random_vec(rng, nb * s.out);

      std::vector<double> y1(nb * s.out), y2(nb * s.out);
      kernels::affine_forward(x, s.batch, s.in, w, b, s.out, y1);
      kernels::serial::affine_forward(x, s.batch, s.in, w, b, s.out, y2);
      CHECK(y1 == y2);

      // Accumulating form: start both from the same nonzero buffers.
      auto dw1 = random_vec(rng, w.size()), db1 = random_vec(rng, b.size());
      auto dw2 = dw1, db2 = db1;
      kernels::affine_backward_params(dy, x, s.batch, s.in, s.out, dw1, db1);
      kernels::serial::affine_backward_params(dy, x, s.batch, s.in, s.out, dw2, db2);
      CHECK(dw1 == dw2);
      CHECK(db1 == db2);

      std::vector<double> dx1(x.size()), dx2(x.size());
      kernels::affine_backward_input(dy, w, s.batch, s.in, s.out, dx1);
      kernels::serial::affine_backward_input(dy, w, s.batch, s.in, s.out, dx2);
      CHECK(dx1 == dx2);

      auto t1 = y1, t2 = y1;
      kernels::tanh_inplace(t1);
      kernels::serial::tanh_inplace(t2);
      CHECK(t1 == t2);
      auto g1 = dy, g2 = dy;
      kernels::tanh_backward(t1, g1);
      kernels::serial::tanh_backward(t2, g2);
      CHECK(g1 == g2);
    }
  }
  omp_set_num_threads(saved);
}

TEST_CASE("backward kernels are the transposes of forward") {
  // <dy, W x> = <W^T dy, x> and the parameter gradient of <dy, Wx + b>.
  Rng rng(5);
  const int batch = 6, in = 4, out = 3;
  const auto x = random_vec(rng, batch * in);
  const auto w = random_vec(rng, out * in);
  const std::vector<double> zero_b(out, 0.0);
  const auto dy = random_vec(rng, batch * out);
  std::vector<double> y(batch * out), dx(batch * in), dw(out * in, 0.0), db(out, 0.0);
  kernels::affine_forward(x, batch, in, w, zero_b, out, y);
  kernels::affine_backward_input(dy, w, batch, in, out, dx);
  kernels::affine_backward_params(dy, x, batch, in, out, dw, db);
  double lhs = 0.0, rhs = 0.0, wdot = 0.0, bsum = 0.0, dysum = 0.0;
  for (int i = 0; i < batch * out; ++i) lhs += dy[i] * y[i], dysum += dy[i];
  for (int i = 0; i < batch * in; ++i) rhs += dx[i] * x[i];
  for (int i = 0; i < out * in; ++i) wdot += dw[i] * w[i];
  for (int o = 0; o < out; ++o) bsum += db[o];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  CHECK(lhs == doctest::Approx(wdot).epsilon(1e-12));
  CHECK(bsum == doctest::Approx(dysum).epsilon(1e-12));
}

TEST_CASE("tanh helpers") {
  std::vector<double> v{-2.0, 0.0, 0.5};
  kernels::tanh_inplace(v);
  CHECK(v[0] == doctest::Approx(std::tanh(-2.0)));
  std::vector<double> g{1.0, 1.0, 2.0};
  kernels::tanh_backward(v, g);
  CHECK(g[1] == doctest::Approx(1.0));
  CHECK(g[2] == doctest::Approx(2.0 * (1.0 - std::tanh(0.5) * std::tanh(0.5))));
  CHECK(kernels::max_threads() >= 1);
}
