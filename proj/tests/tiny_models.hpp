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

// Tiny generator/discriminator quartet and the full objectives built from
// public pieces, for gradient and masking checks.

#pragma once

#include <memory>
#include <random>

#include "modsynth/conditioning.hpp"
#include "modsynth/losses.hpp"
#include "modsynth/nets.hpp"
#include "support.hpp"

namespace modsynth::testing {

struct TinyModels {
  std::unique_ptr<Generator> g1, g2;
  std::unique_ptr<Discriminator> d1, d2;

  TinyModels(int n, int size, std::uint64_t seed, int base = 4) {
    std::mt19937_64 rng(seed);
    g1 = std::make_unique<Generator>(GeneratorSpec{n, 1, n, base, 1, size}, rng);
    g2 = std::make_unique<Generator>(GeneratorSpec{1, n, n, base, 1, size}, rng);
    d1 = std::make_unique<Discriminator>(DiscriminatorSpec{n, base, 2}, rng);
    d2 = std::make_unique<Discriminator>(DiscriminatorSpec{1, base, 2}, rng);
  }

  CycleOutputs cycle(const ag::Var& masked_inputs, const ag::Var& target,
                     const ConditionVector& c) const {
    const Generator& a = *g1;
    const Generator& b = *g2;
    return multimodal_cycle_loss(
        masked_inputs, target, c,
        [&a](const ag::Var& x, const ag::Var& k) { return a.forward(x, k); },
        [&b](const ag::Var& x, const ag::Var& k) { return b.forward(x, k); });
  }

  /// adv_g + lambda * (rec_forward + rec_backward)
  ag::Var generator_objective(const ag::Var& masked_inputs, const ag::Var& target,
                              const ConditionVector& c, double lambda) const {
    const CycleOutputs cyc = cycle(masked_inputs, target, c);
    const ag::Var terms[] = {lsgan_g_loss(d2->forward(cyc.fake_target)),
                             lsgan_g_loss(d1->forward(cyc.fake_inputs)), cyc.rec_forward,
                             cyc.rec_backward};
    const double w[] = {1.0, 1.0, lambda, lambda};
    return ag::weighted_sum(terms, w);
  }

  /// Discriminator objective on given real and fake batches.
  ag::Var discriminator_objective(const ag::Var& real_inputs, const ag::Var& fake_inputs,
                                  const ag::Var& real_target,
                                  const ag::Var& fake_target) const {
    const ag::Var terms[] = {lsgan_d_loss(d1->forward(real_inputs), d1->forward(fake_inputs)),
                             lsgan_d_loss(d2->forward(real_target), d2->forward(fake_target))};
    const double w[] = {1.0, 1.0};
    return ag::weighted_sum(terms, w);
  }

  std::vector<Module*> modules() { return {g1.get(), g2.get(), d1.get(), d2.get()}; }
};

}  // namespace modsynth::testing
