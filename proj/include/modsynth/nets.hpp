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

#pragma once

#include <random>
#include <string>
#include <vector>

#include "modsynth/autograd.hpp"

namespace modsynth {

/// Two-stream conditional encoder/decoder generator.
struct GeneratorSpec {
  int in_channels = 3;
  int out_channels = 1;
  int cond_channels = 3;  // one condition plane per input modality
  int base_width = 64;
  int n_res_blocks = 6;
  int canonical_size = 240;

  void validate() const;
  bool operator==(const GeneratorSpec&) const = default;
};

/// PatchGAN classifier; the score map is downsampled by 2^n_layers.
struct DiscriminatorSpec {
  int in_channels = 1;
  int base_width = 64;
  int n_layers = 3;

  void validate() const;
  bool operator==(const DiscriminatorSpec&) const = default;
};

struct NamedParameter {
  std::string name;
  ag::Var var;
};

/// Owns a flat list of named parameters. Subclasses register them in
/// construction order, which fixes checkpoint key order.
class Module {
 public:
  virtual ~Module() = default;

  std::vector<NamedParameter>& parameters() { return params_; }
  const std::vector<NamedParameter>& parameters() const { return params_; }

  /// Toggles gradient tracking for every parameter.
  void set_trainable(bool on);
  void zero_grad();
  void fill_parameters(double value);
  std::size_t parameter_count() const;

 protected:
  ag::Var add_parameter(std::string name, Tensor value);

 private:
  std::vector<NamedParameter> params_;
};

/// Initial weights are N(0, 0.02); biases start at zero.
inline constexpr double kInitStddev = 0.02;

class Generator : public Module {
 public:
  Generator(GeneratorSpec spec, std::mt19937_64& rng);

  const GeneratorSpec& spec() const { return spec_; }

  /// images: N×in×H×W, cond: N×cond×H×W. Returns N×out×H×W in (-1, 1).
  ag::Var forward(const ag::Var& images, const ag::Var& cond) const;
  /// Graph-free forward pass.
  Tensor infer(const Tensor& images, const Tensor& cond) const;

 private:
  struct Conv {
    ag::Var weight;
    ag::Var bias;
    int stride = 1;
    int pad = 0;
  };
  struct Encoder {
    Conv stem, down1, down2;
  };
  struct ResBlock {
    Conv a, b;
  };

  Conv make_conv(const std::string& name, int cin, int cout, int k, int stride,
                 int pad, std::mt19937_64& rng);
  Conv make_deconv(const std::string& name, int cin, int cout, int k,
                   std::mt19937_64& rng);
  Encoder make_encoder(const std::string& name, int cin, std::mt19937_64& rng);
  ag::Var encode(const Encoder& e, const ag::Var& x, bool normalize) const;

  GeneratorSpec spec_;
  Encoder image_stream_;
  Encoder cond_stream_;
  Conv fuse_;
  std::vector<ResBlock> blocks_;
  Conv up1_, up2_, head_;
};

class Discriminator : public Module {
 public:
  Discriminator(DiscriminatorSpec spec, std::mt19937_64& rng);

  const DiscriminatorSpec& spec() const { return spec_; }

  /// N×in×H×W images to N×1×(H/2^n)×(W/2^n) unbounded patch scores.
  ag::Var forward(const ag::Var& images) const;
  Tensor infer(const Tensor& images) const;

 private:
  struct Layer {
    ag::Var weight;
    ag::Var bias;
    int stride = 2;
    bool norm = true;
    bool activation = true;
  };

  DiscriminatorSpec spec_;
  std::vector<Layer> layers_;
};

}  // namespace modsynth
