#include <doctest.h>

#include <cmath>
#include <vector>

#include "statn/errors.hpp"
#include "statn/gradcheck.hpp"
#include "statn/layers.hpp"
#include "statn/rng.hpp"
#include "statn/tensor.hpp"

using namespace statn;

TEST_CASE("tensor construction and access") {
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.dim(0) == 2);
  t(1, 2) = 5.0;
  CHECK(t[5] == 5.0);
  CHECK_THROWS_AS(Tensor({2, 0}), config_error);
  CHECK_THROWS_AS(Tensor({2}, {1.0, 2.0, 3.0}), config_error);

  Tensor r = reshaped(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}), {3, 2});
  CHECK(r(2, 1) == 6.0);
  CHECK_THROWS_AS(reshaped(Tensor({2, 3}), {4, 2}), config_error);
}

TEST_CASE("rng is deterministic and reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng c(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng d(7);
  for (int i = 0; i < 1000; ++i) CHECK(d.uniform_index(13) < 13);
  // gaussian moments, loose bounds
  Rng e(3);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double g = e.gaussian();
    sum += g;
    sq += g * g;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("conv2d identity and constant cases") {
  // 1x1 input, 1x1 identity kernel, zero bias -> output equals input
  const Tensor in({1, 1, 1}, {0.73});
  const Tensor w({1, 1, 1, 1}, {1.0});
  const Tensor b({1}, {0.0});
  CHECK(conv2d(in, w, b)[0] == 0.73);

  // all-zero weights, bias c -> constant c
  const Tensor in2({4, 5, 2}, std::vector<double>(40, 0.3));
  const Tensor w2 = Tensor::zeros({3, 3, 2, 3});
  const Tensor b2({3}, {1.5, -0.2, 0.0});
  const Tensor out = conv2d(in2, w2, b2, 1, 1);
  CHECK(out.dim(0) == 4);
  CHECK(out.dim(1) == 5);
  CHECK(out.dim(2) == 3);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) {
      CHECK(out(y, x, 0) == 1.5);
      CHECK(out(y, x, 1) == -0.2);
      CHECK(out(y, x, 2) == 0.0);
    }
}

TEST_CASE("conv2d matches a brute-force cross-correlation oracle") {
  Rng rng(11);
  const int h = 5, w = 5, cin = 2, k = 3, cout = 4, stride = 2, pad = 1;
  Tensor in({h, w, cin}), weights({k, k, cin, cout}), bias({cout});
  for (double& v : in.data) v = rng.gaussian();
  for (double& v : weights.data) v = rng.gaussian();
  for (double& v : bias.data) v = rng.gaussian();

  const Tensor out = conv2d(in, weights, bias, stride, pad);
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (w + 2 * pad - k) / stride + 1;
  REQUIRE(out.dim(0) == oh);
  REQUIRE(out.dim(1) == ow);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox)
      for (int oc = 0; oc < cout; ++oc) {
        double acc = bias[oc];
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx)
            for (int ic = 0; ic < cin; ++ic) {
              const int iy = oy * stride - pad + ky;
              const int ix = ox * stride - pad + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += in(iy, ix, ic) * weights(ky, kx, ic, oc);
            }
        CHECK(out(oy, ox, oc) == doctest::Approx(acc).epsilon(1e-13));
      }
}

TEST_CASE("relu and maxpool basics") {
  const Tensor in({1, 2, 1}, {-2.0, 3.0});
  const Tensor out = relu(in);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 3.0);

  const Tensor cmap = Tensor::full({4, 4, 3}, 0.9);
  const Tensor pooled = maxpool(cmap, 2);
  CHECK(pooled.dim(0) == 2);
  CHECK(pooled.dim(1) == 2);
  for (double v : pooled.data) CHECK(v == 0.9);

  // ties resolve to the first maximum in row-major window order
  const Tensor tie({2, 2, 1}, {1.0, 1.0, 1.0, 1.0});
  Tensor din = Tensor::zeros({2, 2, 1});
  maxpool_backward(tie, 2, Tensor({1, 1, 1}, {1.0}), &din);
  CHECK(din[0] == 1.0);
  CHECK(din[1] == 0.0);
  CHECK(din[2] == 0.0);
  CHECK(din[3] == 0.0);
}

TEST_CASE("relu backward uses the 0-at-kink subgradient") {
  const Tensor in({3}, {-1.0, 0.0, 1.0});
  Tensor din = Tensor::zeros({3});
  relu_backward(in, Tensor({3}, {1.0, 1.0, 1.0}), &din);
  CHECK(din[0] == 0.0);
  CHECK(din[1] == 0.0);
  CHECK(din[2] == 1.0);
}

TEST_CASE("fully connected passthrough with identity weights") {
  Tensor w = Tensor::zeros({3, 3});
  for (int i = 0; i < 3; ++i) w(i, i) = 1.0;
  const Tensor in({3}, {0.4, -1.2, 2.0});
  const Tensor out = fully_connected(in, w, Tensor::zeros({3}));
  for (int i = 0; i < 3; ++i) CHECK(out[i] == in[i]);
}

TEST_CASE("softmax cross entropy closed forms") {
  // uniform logits -> ln C
  const int C = 7;
  const Tensor uniform = Tensor::full({C}, 0.42);
  CHECK(softmax_cross_entropy(uniform, 2) == doctest::Approx(std::log(double(C))).epsilon(1e-12));

  // extreme logits stay finite (stabilised)
  const Tensor extreme({2}, {1000.0, -1000.0});
  const double loss = softmax_cross_entropy(extreme, 0);
  CHECK(std::isfinite(loss));
  CHECK(loss == doctest::Approx(0.0));
  CHECK(std::isfinite(softmax_cross_entropy(extreme, 1)));
}

TEST_CASE("softmax cross entropy matches a high-precision oracle") {
  Rng rng(5);
  Tensor logits({9});
  for (double& v : logits.data) v = rng.uniform(-4.0, 4.0);
  const int label = 3;

  long double denom = 0.0L;
  for (double v : logits.data) denom += expl(static_cast<long double>(v));
  const long double expect =
      -(static_cast<long double>(logits[label]) - logl(denom));
  CHECK(softmax_cross_entropy(logits, label) ==
        doctest::Approx(static_cast<double>(expect)).epsilon(1e-12));

  // gradient = softmax - one_hot
  const Tensor g = softmax_cross_entropy_backward(logits, label);
  const Tensor p = softmax(logits);
  double gsum = 0.0;
  for (int i = 0; i < 9; ++i) {
    CHECK(g[i] == doctest::Approx(p[i] - (i == label ? 1.0 : 0.0)).epsilon(1e-12));
    gsum += g[i];
  }
  CHECK(gsum == doctest::Approx(0.0));
}

TEST_CASE("finite difference harness calibration") {
  // exact for linear maps
  Rng rng(17);
  std::vector<double> a(6), x(6), g(6);
  for (auto& v : a) v = rng.gaussian();
  for (auto& v : x) v = rng.gaussian();
  g = a;
  const auto lin = [&](const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += a[i] * p[i];
    return s;
  };
  CHECK(finite_diff_check(lin, x, g) < 1e-9);

  // smooth nonlinearity at a generic point
  const auto f = [](const std::vector<double>& p) { return std::sin(p[0]) * p[1]; };
  const std::vector<double> pt{0.3, 1.7};
  const std::vector<double> grad{std::cos(0.3) * 1.7, std::sin(0.3)};
  CHECK(finite_diff_check(f, pt, grad) < 1e-6);
}

TEST_CASE("layer stack composes and infers shapes") {
  Rng rng(23);
  LayerStack stack = LayerStack::build(
      {LayerSpec::conv(3, 4, 1, 1), LayerSpec::relu(), LayerSpec::maxpool(2),
       LayerSpec::fc(5)},
      {6, 6, 2}, rng);
  CHECK(stack.output_shape == std::vector<int>{5});

  Tensor in({6, 6, 2});
  Rng rng2(29);
  for (double& v : in.data) v = rng2.gaussian();
  std::vector<Tensor> acts;
  const Tensor out = stack.forward(in, &acts);
  CHECK(out.dim(0) == 5);
  CHECK(acts.size() == 5);  // input + 4 layer outputs

  // forward equals composing the layers by hand
  Tensor h = conv2d(in, stack.params[0].value, stack.params[1].value, 1, 1);
  h = relu(h);
  h = maxpool(h, 2);
  h = fully_connected(h, stack.params[2].value, stack.params[3].value);
  CHECK(max_abs_diff(out, h) == 0.0);
}

TEST_CASE("layer stack rejects invalid configurations") {
  Rng rng(1);
  CHECK_THROWS_AS(LayerStack::build({LayerSpec::conv(9, 2)}, {4, 4, 1}, rng),
                  config_error);
  CHECK_THROWS_AS(LayerStack::build({LayerSpec::maxpool(5)}, {4, 4, 1}, rng),
                  config_error);
}
