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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "modsynth/dataio.hpp"
#include "modsynth/error.hpp"

namespace modsynth {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return std::mt19937_64(splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b));
}

// Intensity of each tissue class per contrast, indexed by Tissue. Every input
// contrast confuses one pair of classes that the target separates, so only
// combinations of inputs pin the target down.
//                                       bg    csf   grey  white lesion
constexpr std::array<double, 5> kT1 = {0.0, 0.20, 0.55, 0.85, 0.55};
constexpr std::array<double, 5> kT2 = {0.0, 1.00, 0.65, 0.45, 1.00};
constexpr std::array<double, 5> kFlair = {0.0, 0.15, 0.60, 0.60, 0.95};
constexpr std::array<double, 5> kDir = {0.0, 0.05, 0.55, 0.10, 1.00};
constexpr std::array<const std::array<double, 5>*, 4> kContrasts = {
    &kT1, &kT2, &kFlair, &kDir};
constexpr std::array<double, 4> kNoise = {0.03, 0.03, 0.03, 0.01};

struct Anatomy {
  double ax, ay, theta, cx, cy;
  double sulcus_phase, ventricle_scale;
};

struct Lesion {
  double u, v, radius;
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<std::uint8_t> draw_labels(const Anatomy& a,
                                      const std::vector<Lesion>& lesions,
                                      double z, int size) {
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(size) * size);
  const double shrink = std::sqrt(std::max(0.05, 1.0 - 0.6 * z * z));
  const double ct = std::cos(a.theta);
  const double st = std::sin(a.theta);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u0 = (x + 0.5) / size * 2.0 - 1.0 - a.cx;
      const double v0 = (y + 0.5) / size * 2.0 - 1.0 - a.cy;
      const double u = ct * u0 + st * v0;
      const double v = -st * u0 + ct * v0;
      const double eu = u / (a.ax * shrink);
      const double ev = v / (a.ay * shrink);
      const double r = std::sqrt(eu * eu + ev * ev);
      const double angle = std::atan2(ev, eu);
      Tissue t = Tissue::kBackground;
      if (r <= 1.0) {
        const double grey_edge = 0.78 + 0.04 * std::sin(8.0 * angle + a.sulcus_phase);
        if (r > 0.92) {
          t = Tissue::kCsf;
        } else if (r > grey_edge) {
          t = Tissue::kGrey;
        } else {
          t = Tissue::kWhite;
        }
        // Paired ventricles shrink towards the ends of the slab.
        const double vs = a.ventricle_scale * std::max(0.0, 1.0 - std::abs(z));
        for (double side : {-1.0, 1.0}) {
          const double du = (eu - side * 0.14) / (0.08 * vs + 1e-9);
          const double dv = (ev + 0.05) / (0.28 * vs + 1e-9);
          if (du * du + dv * dv <= 1.0) t = Tissue::kCsf;
        }
        if (t == Tissue::kWhite || t == Tissue::kGrey) {
          for (const Lesion& l : lesions) {
            const double du = eu - l.u;
            const double dv = ev - l.v;
            if (du * du + dv * dv <= l.radius * l.radius) t = Tissue::kLesion;
          }
        }
      }
      labels[static_cast<std::size_t>(y) * size + x] = static_cast<std::uint8_t>(t);
    }
  }
  return labels;
}

std::vector<std::uint8_t> translate(const std::vector<std::uint8_t>& labels,
                                    int size, int dx, int dy) {
  std::vector<std::uint8_t> out(labels.size(), 0);
  for (int y = 0; y < size; ++y) {
    const int sy = y - dy;
    if (sy < 0 || sy >= size) continue;
    for (int x = 0; x < size; ++x) {
      const int sx = x - dx;
      if (sx < 0 || sx >= size) continue;
      out[static_cast<std::size_t>(y) * size + x] =
          labels[static_cast<std::size_t>(sy) * size + sx];
    }
  }
  return out;
}

std::string subject_id(int subject) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sub-%03d", subject);
  return buf;
}

}  // namespace

PhantomSlice render_phantom_slice(std::uint64_t seed, int subject, int slice,
                                  int n_slices, int size, bool misalign) {
  if (size < 8) fail(ErrorCode::kDimension, "phantom size must be at least 8");

  auto subj_rng = stream(seed, 0x51ULL + static_cast<std::uint64_t>(subject), 0);
  Anatomy a{};
  a.ax = uniform(subj_rng, 0.70, 0.84);
  a.ay = uniform(subj_rng, 0.80, 0.92);
  a.theta = uniform(subj_rng, -0.15, 0.15);
  a.cx = uniform(subj_rng, -0.03, 0.03);
  a.cy = uniform(subj_rng, -0.03, 0.03);
  a.sulcus_phase = uniform(subj_rng, 0.0, 2.0 * std::numbers::pi);
  a.ventricle_scale = uniform(subj_rng, 0.8, 1.2);
  // Per-subject, per-contrast linear bias field coefficients.
  std::array<std::array<double, 2>, 4> bias{};
  for (auto& b : bias) {
    b[0] = uniform(subj_rng, -0.05, 0.05);
    b[1] = uniform(subj_rng, -0.05, 0.05);
  }

  auto slice_rng = stream(seed, 0x51ULL + static_cast<std::uint64_t>(subject),
                          1 + static_cast<std::uint64_t>(slice));
  const double z =
      n_slices > 1 ? -0.8 + 1.6 * slice / static_cast<double>(n_slices - 1) : 0.0;
  std::vector<Lesion> lesions;
  const int n_lesions = std::uniform_int_distribution<int>(2, 4)(slice_rng);
  while (static_cast<int>(lesions.size()) < n_lesions) {
    Lesion l{uniform(slice_rng, -0.55, 0.55), uniform(slice_rng, -0.6, 0.6),
             uniform(slice_rng, 0.09, 0.15)};
    // Keep lesions in deep white matter, clear of the ventricles.
    if (std::hypot(l.u, l.v) < 0.6 && std::abs(l.u) > 0.28) lesions.push_back(l);
  }

  PhantomSlice out;
  out.labels = draw_labels(a, lesions, z, size);

  std::vector<std::string> names = kPhantomInputs;
  names.emplace_back(kPhantomTarget);
  SliceStack raw(static_cast<int>(names.size()), size, size, names);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int max_shift = std::max(1, size / 40);
  for (int m = 0; m < raw.channels; ++m) {
    const std::vector<std::uint8_t>* labels = &out.labels;
    std::vector<std::uint8_t> shifted;
    if (misalign) {
      std::uniform_int_distribution<int> shift(-max_shift, max_shift);
      const int dx = shift(slice_rng);
      const int dy = shift(slice_rng);
      shifted = translate(out.labels, size, dx, dy);
      labels = &shifted;
    }
    const auto& lut = *kContrasts[m];
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const auto t = (*labels)[static_cast<std::size_t>(y) * size + x];
        // The noise draw happens for every pixel so the stream stays aligned.
        const double noise = kNoise[m] * gauss(slice_rng);
        if (t == 0) {
          raw.at(m, y, x) = 0.0f;
          continue;
        }
        const double u = (x + 0.5) / size * 2.0 - 1.0;
        const double v = (y + 0.5) / size * 2.0 - 1.0;
        const double field = 1.0 + bias[m][0] * u + bias[m][1] * v;
        raw.at(m, y, x) = static_cast<float>(std::max(0.01, lut[t] * field + noise));
      }
    }
  }
  out.stack = preprocess(raw, size);
  return out;
}

PhantomCorpus generate_phantom_corpus(const PhantomOptions& options,
                                      const std::filesystem::path& out_dir) {
  if (options.n_subjects <= 0 || options.n_slices <= 0) {
    fail(ErrorCode::kArgument, "phantom corpus needs positive subject and slice counts");
  }
  if (options.val_fraction < 0 || options.test_fraction < 0 ||
      options.val_fraction + options.test_fraction >= 1.0) {
    fail(ErrorCode::kArgument, "split fractions must be non-negative and sum below 1");
  }
  const int n = options.n_subjects;
  int n_test = static_cast<int>(std::lround(options.test_fraction * n));
  int n_val = static_cast<int>(std::lround(options.val_fraction * n));
  while (n - n_test - n_val < 1) {
    if (n_val > 0) {
      --n_val;
    } else {
      --n_test;
    }
  }
  const int n_train = n - n_test - n_val;

  std::vector<std::string> modalities = kPhantomInputs;
  modalities.emplace_back(kPhantomTarget);

  PhantomCorpus corpus;
  for (CorpusManifest* m : {&corpus.train, &corpus.val, &corpus.test}) {
    m->modalities = modalities;
    m->base_dir = out_dir;
  }
  corpus.train.split = "train";
  corpus.val.split = "val";
  corpus.test.split = "test";

  for (int s = 0; s < n; ++s) {
    CorpusManifest& m =
        s < n_train ? corpus.train : (s < n_train + n_val ? corpus.val : corpus.test);
    const std::string sid = subject_id(s);
    m.subjects.push_back(sid);
    for (int k = 0; k < options.n_slices; ++k) {
      PhantomSlice ps = render_phantom_slice(options.seed, s, k, options.n_slices,
                                             options.size, options.misalign);
      ManifestEntry entry{sid, k, {}};
      for (int c = 0; c < ps.stack.channels; ++c) {
        char name[96];
        std::snprintf(name, sizeof(name), "slices/%s_slice-%02d_%s.msl",
                      sid.c_str(), k, modalities[c].c_str());
        write_slice_file(out_dir / name, ps.stack.channel(c));
        entry.files[modalities[c]] = name;
      }
      m.entries.push_back(std::move(entry));
    }
  }
  save_manifest(out_dir / "train.json", corpus.train);
  save_manifest(out_dir / "val.json", corpus.val);
  save_manifest(out_dir / "test.json", corpus.test);
  return corpus;
}

}  // namespace modsynth
