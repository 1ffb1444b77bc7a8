// Copyright 2026 The modsynth Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include "modsynth/autograd.hpp"
#include "support.hpp"

using namespace modsynth;
using modsynth::testing::gradient_error;
using modsynth::testing::random_tensor;

namespace {

constexpr double kTol = 1e-6;

// Scalar probe mean((y + w - 0.3)^2) with a fixed random w, so every output
// element gets its own upstream gradient.
ag::Var probe(const ag::Var& y, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  const Tensor w = random_tensor(y.shape(), rng);
  ag::Var shifted = ag::add(y, ag::Var::constant(w));
  return ag::mean_squared_to(shifted, 0.3);
}

}  // namespace

TEST_CASE("conv2d: known values") {
  // 1x1x3x3 input, 2x2 kernel of ones, stride 1, no pad: window sums.
  Tensor x({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor w({1, 1, 2, 2}, 1.0);
  Tensor b({1, 1, 1, 1}, 0.5);
  ag::NoGradGuard g;
  const auto y = ag::conv2d(ag::Var::constant(x), ag::Var::constant(w), ag::Var::constant(b), 1, 0);
  REQUIRE(y.shape() == Shape4{1, 1, 2, 2});
  CHECK(y.value()[0] == 12.5);
  CHECK(y.value()[1] == 16.5);
  CHECK(y.value()[2] == 24.5);
  CHECK(y.value()[3] == 28.5);
}

TEST_CASE("conv_transpose2d: output size and adjointness") {
  std::mt19937_64 rng(1);
  // <conv(x), y> == <x, convT(y)> with shared weights and zero bias.
  const Tensor x = random_tensor({2, 3, 8, 8}, rng);
  const Tensor w = random_tensor({4, 3, 3, 3}, rng);  // conv: Cout=4, Cin=3
  const Tensor y = random_tensor({2, 4, 4, 4}, rng);
  ag::NoGradGuard g;
  const auto cx = ag::conv2d(ag::Var::constant(x), ag::Var::constant(w),
                             ag::Var::constant(Tensor({1, 4, 1, 1})), 2, 1);
  REQUIRE(cx.shape() == Shape4{2, 4, 4, 4});
  // convT weight layout (Cin=4, Cout=3, k, k) is the same memory as conv's.
  Tensor wt({4, 3, 3, 3});
  std::copy(w.data().begin(), w.data().end(), wt.data().begin());
  const auto ty = ag::conv_transpose2d(ag::Var::constant(y), ag::Var::constant(wt),
                                       ag::Var::constant(Tensor({1, 3, 1, 1})), 2, 1, 1);
  REQUIRE(ty.shape() == Shape4{2, 3, 8, 8});
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += cx.value()[i] * y[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * ty.value()[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("pad2d: reflect and zero") {
  Tensor x({1, 1, 2, 3}, {1, 2, 3, 4, 5, 6});
  ag::NoGradGuard g;
  const auto r = ag::pad2d(ag::Var::constant(x), {1, 1, 2, 2}, ag::PadMode::kReflect);
  REQUIRE(r.shape() == Shape4{1, 1, 4, 7});
  const std::vector<double> row0 = {6, 5, 4, 5, 6, 5, 4};  // reflects row 1
  for (int i = 0; i < 7; ++i) CHECK(r.value().at(0, 0, 0, i) == row0[i]);
  const std::vector<double> row1 = {3, 2, 1, 2, 3, 2, 1};
  for (int i = 0; i < 7; ++i) CHECK(r.value().at(0, 0, 1, i) == row1[i]);
  const auto z = ag::pad2d(ag::Var::constant(x), {0, 1, 1, 0}, ag::PadMode::kZero);
  REQUIRE(z.shape() == Shape4{1, 1, 3, 4});
  CHECK(z.value().at(0, 0, 0, 0) == 0.0);
  CHECK(z.value().at(0, 0, 0, 1) == 1.0);
  CHECK(z.value().at(0, 0, 2, 3) == 0.0);
}

TEST_CASE("instance_norm: zero mean, unit variance per plane") {
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor({2, 3, 5, 5}, rng, -4, 9);
  ag::NoGradGuard g;
  const auto y = ag::instance_norm(ag::Var::constant(x));
  for (int n = 0; n < 2; ++n) {
    for (int c = 0; c < 3; ++c) {
      double m = 0, v = 0;
      for (double a : y.value().plane(n, c)) m += a;
      m /= 25;
      for (double a : y.value().plane(n, c)) v += (a - m) * (a - m);
      v /= 25;
      CHECK(m == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(v == doctest::Approx(1.0).epsilon(1e-3));
    }
  }
}

TEST_CASE("scalar losses: values") {
  Tensor a({1, 2, 2, 2}, 0.0), b({1, 2, 2, 2}, 0.0);
  for (int i = 0; i < 4; ++i) b[i] = 0.5;      // channel 0 differs by 0.5
  for (int i = 4; i < 8; ++i) b[i] = 100.0;    // channel 1 differs a lot
  const int on[] = {1, 0};
  ag::NoGradGuard g;
  CHECK(ag::masked_mean_abs_diff(ag::Var::constant(a), ag::Var::constant(b), on).item() == 0.5);
  CHECK(ag::mean_squared_to(ag::Var::constant(Tensor({1, 1, 2, 2}, 0.5)), 1.0).item() == 0.25);
  const ag::Var terms[] = {ag::Var::constant(Tensor({1, 1, 1, 1}, 2.0)),
                           ag::Var::constant(Tensor({1, 1, 1, 1}, 3.0))};
  const double weights[] = {0.5, 10.0};
  CHECK(ag::weighted_sum(terms, weights).item() == 31.0);
}

TEST_CASE("no-grad guard records nothing") {
  auto p = ag::Var::parameter(Tensor({1, 1, 2, 2}, 1.0));
  {
    ag::NoGradGuard g;
    CHECK_FALSE(ag::grad_enabled());
    const auto y = ag::relu(p);
    CHECK_FALSE(y.requires_grad());
  }
  CHECK(ag::grad_enabled());
  CHECK(ag::relu(p).requires_grad());
}

TEST_CASE("gradient accumulates across uses") {
  auto p = ag::Var::parameter(Tensor({1, 1, 1, 2}, {0.2, -0.4}));
  const auto y = ag::add(p, p);  // 2p
  ag::backward(ag::mean_squared_to(y, 0.0));  // mean(4p^2): grad = 4p
  CHECK(p.grad()[0] == doctest::Approx(0.8));
  CHECK(p.grad()[1] == doctest::Approx(-1.6));
}

TEST_CASE("gradient check: conv2d") {
  std::mt19937_64 rng(3);
  for (int stride : {1, 2}) {
    for (int pad : {0, 1}) {
      auto x = ag::Var::parameter(random_tensor({2, 3, 7, 7}, rng));
      auto w = ag::Var::parameter(random_tensor({4, 3, 3, 3}, rng));
      auto b = ag::Var::parameter(random_tensor({1, 4, 1, 1}, rng));
      auto f = [&] { return probe(ag::conv2d(x, w, b, stride, pad)); };
      CHECK(gradient_error(f, x) < kTol);
      CHECK(gradient_error(f, w) < kTol);
      CHECK(gradient_error(f, b) < kTol);
    }
  }
}

TEST_CASE("gradient check: conv2d k4 s2 p1 and 1x1") {
  std::mt19937_64 rng(4);
  auto x = ag::Var::parameter(random_tensor({1, 2, 8, 8}, rng));
  auto w = ag::Var::parameter(random_tensor({3, 2, 4, 4}, rng));
  auto b = ag::Var::parameter(random_tensor({1, 3, 1, 1}, rng));
  auto f = [&] { return probe(ag::conv2d(x, w, b, 2, 1)); };
  CHECK(gradient_error(f, x) < kTol);
  CHECK(gradient_error(f, w) < kTol);
  auto w1 = ag::Var::parameter(random_tensor({5, 2, 1, 1}, rng));
  auto b1 = ag::Var::parameter(random_tensor({1, 5, 1, 1}, rng));
  auto f1 = [&] { return probe(ag::conv2d(x, w1, b1, 1, 0)); };
  CHECK(gradient_error(f1, x) < kTol);
  CHECK(gradient_error(f1, w1) < kTol);
}

TEST_CASE("gradient check: conv_transpose2d") {
  std::mt19937_64 rng(5);
  auto x = ag::Var::parameter(random_tensor({2, 3, 4, 4}, rng));
  auto w = ag::Var::parameter(random_tensor({3, 2, 3, 3}, rng));
  auto b = ag::Var::parameter(random_tensor({1, 2, 1, 1}, rng));
  auto f = [&] { return probe(ag::conv_transpose2d(x, w, b, 2, 1, 1)); };
  CHECK(gradient_error(f, x) < kTol);
  CHECK(gradient_error(f, w) < kTol);
  CHECK(gradient_error(f, b) < kTol);
}

TEST_CASE("gradient check: padding") {
  std::mt19937_64 rng(6);
  auto x = ag::Var::parameter(random_tensor({1, 2, 5, 6}, rng));
  auto fr = [&] { return probe(ag::pad2d(x, {3, 3, 3, 3}, ag::PadMode::kReflect)); };
  CHECK(gradient_error(fr, x) < kTol);
  auto fa = [&] { return probe(ag::pad2d(x, {1, 2, 1, 2}, ag::PadMode::kReflect)); };
  CHECK(gradient_error(fa, x) < kTol);
  auto fz = [&] { return probe(ag::pad2d(x, {1, 2, 0, 3}, ag::PadMode::kZero)); };
  CHECK(gradient_error(fz, x) < kTol);
}

TEST_CASE("gradient check: pointwise ops and norm") {
  std::mt19937_64 rng(7);
  auto x = ag::Var::parameter(random_tensor({2, 3, 4, 4}, rng));
  auto y = ag::Var::parameter(random_tensor({2, 3, 4, 4}, rng));
  auto z = ag::Var::parameter(random_tensor({2, 2, 4, 4}, rng));
  CHECK(gradient_error([&] { return probe(ag::instance_norm(x)); }, x) < kTol);
  CHECK(gradient_error([&] { return probe(ag::relu(x)); }, x) < kTol);
  CHECK(gradient_error([&] { return probe(ag::leaky_relu(x, 0.2)); }, x) < kTol);
  CHECK(gradient_error([&] { return probe(ag::tanh(x)); }, x) < kTol);
  CHECK(gradient_error([&] { return probe(ag::add(x, y)); }, y) < kTol);
  CHECK(gradient_error([&] { return probe(ag::concat_channels(x, z)); }, x) < kTol);
  CHECK(gradient_error([&] { return probe(ag::concat_channels(x, z)); }, z) < kTol);
  const int bits[] = {1, 0, 1};
  CHECK(gradient_error([&] { return probe(ag::mask_channels(x, bits, -1.0)); }, x) < kTol);
}

TEST_CASE("gradient check: scalar reductions") {
  std::mt19937_64 rng(8);
  auto a = ag::Var::parameter(random_tensor({2, 3, 8, 8}, rng));
  auto b = ag::Var::parameter(random_tensor({2, 3, 8, 8}, rng));
  const int on[] = {0, 1, 1};
  CHECK(gradient_error([&] { return ag::masked_mean_abs_diff(a, b, on); }, a) < kTol);
  CHECK(gradient_error([&] { return ag::masked_mean_abs_diff(a, b, on); }, b) < kTol);
  CHECK(gradient_error([&] { return ag::mean_squared_to(a, 0.7); }, a) < kTol);
  auto f = [&] {
    const ag::Var t[] = {ag::mean_squared_to(a, 1.0), ag::masked_mean_abs_diff(a, b, on)};
    const double w[] = {0.3, 10.0};
    return ag::weighted_sum(t, w);
  };
  CHECK(gradient_error(f, a) < kTol);
}
