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

// Helpers shared by the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "modsynth/autograd.hpp"
#include "modsynth/dataio.hpp"
#include "modsynth/fsutil.hpp"

namespace modsynth::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("modsynth_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Tensor random_tensor(Shape4 shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(shape);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

inline SliceStack random_stack(int c, int h, int w, std::mt19937_64& rng, float lo = -1.0f,
                               float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  SliceStack s(c, h, w);
  for (auto& v : s.data) v = u(rng);
  return s;
}

/// ||a - b|| / max(||a||, ||b||, floor). The floor keeps gradients that are
/// zero up to rounding (e.g. biases feeding a normalisation) from dividing
/// finite-difference noise by nothing.
inline double relative_error(std::span<const double> a, std::span<const double> b,
                             double floor = 1e-5) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

/// Central difference of f at x[i]. When the one-sided slopes disagree the
/// step straddles a kink (ReLU), so the step shrinks until they agree.
inline double central_difference(const std::function<double()>& f, Tensor& x, std::size_t i,
                                 double base, double h) {
  const double saved = x[i];
  double estimate = 0.0;
  for (double step = h; step >= h * 1e-3; step /= 10.0) {
    x[i] = saved + step;
    const double up = f();
    x[i] = saved - step;
    const double down = f();
    x[i] = saved;
    const double fwd = (up - base) / step;
    const double bwd = (base - down) / step;
    estimate = (up - down) / (2.0 * step);
    if (std::abs(fwd - bwd) <= 1e-2 * std::max(std::abs(fwd), std::abs(bwd)) + 1e-6) break;
  }
  return estimate;
}

/// Finite-difference gradient of a scalar function with respect to every
/// element of `x`. `x` is restored afterwards.
inline std::vector<double> numeric_gradient(const std::function<double()>& f, Tensor& x,
                                            double h = 1e-6) {
  const double base = f();
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = central_difference(f, x, i, base, h);
  return g;
}

/// Compares the analytic gradient of `loss` with respect to `wrt` against
/// finite differences; returns the relative error.
inline double gradient_error(const std::function<ag::Var()>& loss, ag::Var& wrt,
                             double h = 1e-6) {
  wrt.zero_grad();
  wrt.set_requires_grad(true);
  ag::backward(loss());
  const Tensor analytic = wrt.grad().empty() ? Tensor(wrt.shape()) : wrt.grad();
  const auto numeric = numeric_gradient(
      [&] {
        ag::NoGradGuard guard;
        return loss().item();
      },
      wrt.mutable_value(), h);
  return relative_error(analytic.data(), numeric);
}

/// Like gradient_error but probes at most `max_probes` randomly chosen
/// elements of `wrt` (all of them when it is small enough).
inline double sampled_gradient_error(const std::function<ag::Var()>& loss, ag::Var& wrt,
                                     std::size_t max_probes, std::mt19937_64& rng,
                                     double h = 1e-6) {
  wrt.zero_grad();
  wrt.set_requires_grad(true);
  ag::backward(loss());
  const Tensor analytic = wrt.grad().empty() ? Tensor(wrt.shape()) : wrt.grad();
  std::vector<std::size_t> idx(analytic.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (idx.size() > max_probes) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(max_probes);
  }
  auto f = [&] {
    ag::NoGradGuard guard;
    return loss().item();
  };
  const double base = f();
  std::vector<double> a, n;
  for (std::size_t i : idx) {
    a.push_back(analytic[i]);
    n.push_back(central_difference(f, wrt.mutable_value(), i, base, h));
  }
  return relative_error(a, n);
}

}  // namespace modsynth::testing
