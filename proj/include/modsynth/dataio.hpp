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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "modsynth/tensor.hpp"

namespace modsynth {

/// A C×H×W stack of co-registered slices, one channel per modality.
/// Channel-major, row-major float32 storage, the same order as MSL files.
struct SliceStack {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;
  std::vector<std::string> modality_names;

  SliceStack() = default;
  SliceStack(int c, int h, int w, std::vector<std::string> names = {});

  float& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(height) * width;
  }

  /// Checks length and name-uniqueness invariants; throws on violation.
  void validate() const;

  /// Extracts channel `c` as a single-channel stack.
  SliceStack channel(int c) const;

  /// 1×C×H×W double tensor view of the data.
  Tensor to_tensor() const;
  static SliceStack from_tensor(const Tensor& t, int sample = 0,
                                std::vector<std::string> names = {});

  bool operator==(const SliceStack&) const = default;
};

/// Single-channel target modality slice.
using TargetSlice = SliceStack;

// -- MSL slice files ---------------------------------------------------------

inline constexpr char kMslMagic[4] = {'M', 'M', 'S', 'L'};
inline constexpr std::uint32_t kMslVersion = 1;

std::vector<std::uint8_t> encode_msl(const SliceStack& stack);
SliceStack decode_msl(const std::vector<std::uint8_t>& bytes);

void write_slice_file(const std::filesystem::path& path,
                      const SliceStack& stack);
SliceStack read_slice_file(const std::filesystem::path& path);

// -- Preprocessing -----------------------------------------------------------

inline constexpr int kCanonicalSize = 240;

/// Center-crops or symmetrically zero-pads to size×size and min-max rescales
/// each channel to [-1, 1]. Rescaling happens on the cropped window, before
/// padding, so the pad border stays exactly 0. Constant channels map to -1.
SliceStack preprocess(const SliceStack& slice, int canonical_size = kCanonicalSize);

// -- Corpus manifest ---------------------------------------------------------

struct ManifestEntry {
  std::string subject;
  int slice = 0;
  std::map<std::string, std::string> files;  // modality -> path

  bool operator==(const ManifestEntry&) const = default;
};

struct CorpusManifest {
  std::vector<std::string> subjects;
  std::vector<std::string> modalities;
  std::vector<ManifestEntry> entries;
  std::string split = "train";
  /// Directory that relative file paths are resolved against.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& file) const;
  /// Checks split name, key uniqueness, modality coverage and (optionally)
  /// that every file exists and parses.
  void validate(bool check_files = true) const;
};

CorpusManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path,
                   const CorpusManifest& manifest);

/// Reads the listed modalities of one entry into a stack, channels in the
/// given order.
SliceStack load_entry(const CorpusManifest& manifest, const ManifestEntry& entry,
                      const std::vector<std::string>& modalities);

// -- Phantom corpus ----------------------------------------------------------

struct PhantomOptions {
  int n_subjects = 10;
  int n_slices = 8;
  std::uint64_t seed = 0;
  int size = kCanonicalSize;
  bool misalign = false;
  double val_fraction = 0.1;
  double test_fraction = 0.2;
};

/// Tissue classes drawn into the shared anatomy label map.
enum class Tissue : std::uint8_t {
  kBackground = 0,
  kCsf = 1,
  kGrey = 2,
  kWhite = 3,
  kLesion = 4,
};

/// Input contrasts followed by the lesion-enhancing target contrast.
inline const std::vector<std::string> kPhantomInputs = {"t1", "t2", "flair"};
inline constexpr const char* kPhantomTarget = "dir";

struct PhantomSlice {
  std::vector<std::uint8_t> labels;  // size×size Tissue values
  SliceStack stack;                  // inputs then target, preprocessed
};

/// Draws one slice of one subject. Deterministic in (seed, subject, slice).
PhantomSlice render_phantom_slice(std::uint64_t seed, int subject, int slice,
                                  int n_slices, int size, bool misalign);

struct PhantomCorpus {
  CorpusManifest train;
  CorpusManifest val;
  CorpusManifest test;
};

/// Writes one MSL file per (subject, slice, modality) under `out_dir/slices`
/// plus train/val/test manifests. Paths inside manifests are relative.
PhantomCorpus generate_phantom_corpus(const PhantomOptions& options,
                                      const std::filesystem::path& out_dir);

}  // namespace modsynth
