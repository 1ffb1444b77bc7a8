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

#include "modsynth/nets.hpp"

#include <algorithm>

#include "modsynth/error.hpp"

namespace modsynth {
namespace {

Tensor gaussian(Shape4 shape, std::mt19937_64& rng) {
  Tensor t(shape);
  std::normal_distribution<double> dist(0.0, kInitStddev);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

void require_input(const ag::Var& x, int channels, const char* who) {
  if (x.shape().c != channels) {
    fail(ErrorCode::kShape, std::string(who) + ": expected " +
                                std::to_string(channels) + " input channels, got " +
                                to_string(x.shape()));
  }
}

}  // namespace

void GeneratorSpec::validate() const {
  if (in_channels <= 0 || out_channels <= 0 || cond_channels <= 0) {
    fail(ErrorCode::kArgument, "generator channel counts must be positive");
  }
  if (base_width <= 0 || n_res_blocks < 1) {
    fail(ErrorCode::kArgument, "generator needs base_width > 0 and at least one residual block");
  }
  if (canonical_size < 8 || canonical_size % 4 != 0) {
    fail(ErrorCode::kArgument, "generator input size must be a multiple of 4 and at least 8");
  }
}

void DiscriminatorSpec::validate() const {
  if (in_channels <= 0 || base_width <= 0 || n_layers < 1) {
    fail(ErrorCode::kArgument, "discriminator spec fields must be positive");
  }
}

void Module::set_trainable(bool on) {
  for (auto& p : params_) p.var.set_requires_grad(on);
}

void Module::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

void Module::fill_parameters(double value) {
  for (auto& p : params_) p.var.mutable_value().fill(value);
}

std::size_t Module::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.var.value().size();
  return n;
}

ag::Var Module::add_parameter(std::string name, Tensor value) {
  ag::Var v = ag::Var::parameter(std::move(value));
  params_.push_back({std::move(name), v});
  return v;
}

// -- Generator ----------------------------------------------------------------

Generator::Conv Generator::make_conv(const std::string& name, int cin, int cout,
                                     int k, int stride, int pad,
                                     std::mt19937_64& rng) {
  Conv c;
  c.weight = add_parameter(name + ".weight", gaussian({cout, cin, k, k}, rng));
  c.bias = add_parameter(name + ".bias", Tensor({1, cout, 1, 1}));
  c.stride = stride;
  c.pad = pad;
  return c;
}

Generator::Conv Generator::make_deconv(const std::string& name, int cin, int cout,
                                       int k, std::mt19937_64& rng) {
  Conv c;
  c.weight = add_parameter(name + ".weight", gaussian({cin, cout, k, k}, rng));
  c.bias = add_parameter(name + ".bias", Tensor({1, cout, 1, 1}));
  c.stride = 2;
  c.pad = 1;
  return c;
}

Generator::Encoder Generator::make_encoder(const std::string& name, int cin,
                                           std::mt19937_64& rng) {
  const int w = spec_.base_width;
  Encoder e;
  e.stem = make_conv(name + ".stem", cin, w, 7, 1, 0, rng);
  e.down1 = make_conv(name + ".down1", w, 2 * w, 3, 2, 1, rng);
  e.down2 = make_conv(name + ".down2", 2 * w, 4 * w, 3, 2, 1, rng);
  return e;
}

Generator::Generator(GeneratorSpec spec, std::mt19937_64& rng) : spec_(spec) {
  spec_.validate();
  const int w = spec_.base_width;
  image_stream_ = make_encoder("image_stream", spec_.in_channels, rng);
  cond_stream_ = make_encoder("cond_stream", spec_.cond_channels, rng);
  fuse_ = make_conv("fuse", 8 * w, 4 * w, 1, 1, 0, rng);
  for (int i = 0; i < spec_.n_res_blocks; ++i) {
    const std::string n = "res" + std::to_string(i);
    blocks_.push_back({make_conv(n + ".conv_a", 4 * w, 4 * w, 3, 1, 0, rng),
                       make_conv(n + ".conv_b", 4 * w, 4 * w, 3, 1, 0, rng)});
  }
  up1_ = make_deconv("up1", 4 * w, 2 * w, 3, rng);
  up2_ = make_deconv("up2", 2 * w, w, 3, rng);
  head_ = make_conv("head", w, spec_.out_channels, 7, 1, 0, rng);
}

ag::Var Generator::encode(const Encoder& e, const ag::Var& x, bool normalize) const {
  using namespace ag;
  // Condition stream: no instance norm.
  auto norm = [normalize](const Var& v) { return normalize ? instance_norm(v) : v; };
  Var h = pad2d(x, {3, 3, 3, 3}, PadMode::kReflect);
  h = relu(norm(conv2d(h, e.stem.weight, e.stem.bias, 1, 0)));
  h = relu(norm(conv2d(h, e.down1.weight, e.down1.bias, 2, 1)));
  h = relu(norm(conv2d(h, e.down2.weight, e.down2.bias, 2, 1)));
  return h;
}

ag::Var Generator::forward(const ag::Var& images, const ag::Var& cond) const {
  using namespace ag;
  require_input(images, spec_.in_channels, "generator images");
  require_input(cond, spec_.cond_channels, "generator condition");
  const Shape4 is = images.shape();
  const Shape4 cs = cond.shape();
  if (is.n != cs.n || is.h != cs.h || is.w != cs.w) {
    fail(ErrorCode::kShape, "generator: images " + to_string(is) +
                                " and condition " + to_string(cs) + " disagree");
  }
  if (is.h % 4 != 0 || is.w % 4 != 0 || is.h < 8 || is.w < 8) {
    fail(ErrorCode::kShape, "generator: spatial size must be a multiple of 4 and >= 8, got " +
                                to_string(is));
  }

  Var h = concat_channels(encode(image_stream_, images, true),
                          encode(cond_stream_, cond, false));
  h = relu(conv2d(h, fuse_.weight, fuse_.bias, 1, 0));
  for (const ResBlock& b : blocks_) {
    Var r = pad2d(h, {1, 1, 1, 1}, PadMode::kReflect);
    r = relu(instance_norm(conv2d(r, b.a.weight, b.a.bias, 1, 0)));
    r = pad2d(r, {1, 1, 1, 1}, PadMode::kReflect);
    r = instance_norm(conv2d(r, b.b.weight, b.b.bias, 1, 0));
    h = add(h, r);
  }
  h = relu(instance_norm(conv_transpose2d(h, up1_.weight, up1_.bias, 2, 1, 1)));
  h = relu(instance_norm(conv_transpose2d(h, up2_.weight, up2_.bias, 2, 1, 1)));
  h = pad2d(h, {3, 3, 3, 3}, PadMode::kReflect);
  return ag::tanh(conv2d(h, head_.weight, head_.bias, 1, 0));
}

Tensor Generator::infer(const Tensor& images, const Tensor& cond) const {
  ag::NoGradGuard guard;
  return forward(ag::Var::constant(images), ag::Var::constant(cond)).value();
}

// -- Discriminator ------------------------------------------------------------

Discriminator::Discriminator(DiscriminatorSpec spec, std::mt19937_64& rng)
    : spec_(spec) {
  spec_.validate();
  int cin = spec_.in_channels;
  auto width = [&](int i) { return spec_.base_width * std::min(1 << i, 8); };
  for (int i = 0; i <= spec_.n_layers; ++i) {
    const bool strided = i < spec_.n_layers;
    const int cout = width(i);
    const std::string name = "layer" + std::to_string(i);
    Layer l;
    l.weight = add_parameter(name + ".weight", gaussian({cout, cin, 4, 4}, rng));
    l.bias = add_parameter(name + ".bias", Tensor({1, cout, 1, 1}));
    l.stride = strided ? 2 : 1;
    l.norm = i > 0;
    layers_.push_back(l);
    cin = cout;
  }
  Layer out;
  const std::string name = "layer" + std::to_string(spec_.n_layers + 1);
  out.weight = add_parameter(name + ".weight", gaussian({1, cin, 4, 4}, rng));
  out.bias = add_parameter(name + ".bias", Tensor({1, 1, 1, 1}));
  out.stride = 1;
  out.norm = false;
  out.activation = false;
  layers_.push_back(out);
}

ag::Var Discriminator::forward(const ag::Var& images) const {
  using namespace ag;
  require_input(images, spec_.in_channels, "discriminator");
  const int factor = 1 << spec_.n_layers;
  if (images.shape().h % factor != 0 || images.shape().w % factor != 0) {
    fail(ErrorCode::kShape, "discriminator: spatial size must be divisible by " +
                                std::to_string(factor) + ", got " +
                                to_string(images.shape()));
  }
  Var h = images;
  for (const Layer& l : layers_) {
    if (l.stride == 2) {
      h = conv2d(h, l.weight, l.bias, 2, 1);
    } else {
      // 4×4 stride-1 convolution with "same" output extent.
      h = conv2d(pad2d(h, {1, 2, 1, 2}, PadMode::kZero), l.weight, l.bias, 1, 0);
    }
    if (l.norm) h = instance_norm(h);
    if (l.activation) h = leaky_relu(h, 0.2);
  }
  return h;
}

Tensor Discriminator::infer(const Tensor& images) const {
  ag::NoGradGuard guard;
  return forward(ag::Var::constant(images)).value();
}

}  // namespace modsynth
