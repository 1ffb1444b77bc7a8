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

#include <cstring>
#include <fstream>
#include <random>

#include "modsynth/dataio.hpp"
#include "modsynth/error.hpp"
#include "modsynth/fsutil.hpp"
#include "support.hpp"

using namespace modsynth;
using modsynth::testing::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kFormat;
}

std::vector<std::uint8_t> bytes_of(const std::filesystem::path& p) { return read_file_bytes(p); }

}  // namespace

TEST_CASE("msl: zero stack round-trips") {
  TempDir dir("msl");
  SliceStack s(3, 4, 4);
  write_slice_file(dir / "z.msl", s);
  CHECK(read_slice_file(dir / "z.msl") == s);
}

TEST_CASE("msl: header layout is bit-exact") {
  SliceStack s(2, 3, 5);
  s.data[0] = 1.5f;
  const auto b = encode_msl(s);
  REQUIRE(b.size() == 20 + 2 * 3 * 5 * 4);
  CHECK(std::memcmp(b.data(), "MMSL", 4) == 0);
  const std::uint8_t header[] = {1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 5, 0, 0, 0};
  CHECK(std::memcmp(b.data() + 4, header, 16) == 0);
  // 1.5f = 0x3fc00000, little endian
  const std::uint8_t first[] = {0x00, 0x00, 0xc0, 0x3f};
  CHECK(std::memcmp(b.data() + 20, first, 4) == 0);
}

TEST_CASE("msl: bad magic is a format error") {
  SliceStack s(1, 2, 2);
  auto b = encode_msl(s);
  std::memcpy(b.data(), "XXXX", 4);
  CHECK(code_of([&] { decode_msl(b); }) == ErrorCode::kFormat);
}

TEST_CASE("msl: bad version is a format error") {
  auto b = encode_msl(SliceStack(1, 2, 2));
  b[4] = 2;
  CHECK(code_of([&] { decode_msl(b); }) == ErrorCode::kFormat);
}

TEST_CASE("msl: truncated payload is a length error") {
  auto b = encode_msl(SliceStack(1, 4, 4));
  b.resize(b.size() - 3);
  CHECK(code_of([&] { decode_msl(b); }) == ErrorCode::kLength);
  b.resize(12);
  CHECK(code_of([&] { decode_msl(b); }) == ErrorCode::kLength);
}

TEST_CASE("msl: 240x240 ramp reads back at full precision") {
  TempDir dir("msl");
  SliceStack s(1, 240, 240);
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    s.data[i] = static_cast<float>(i) / static_cast<float>(s.data.size()) * 3.7f - 1.3f;
  }
  write_slice_file(dir / "ramp.msl", s);
  const auto back = read_slice_file(dir / "ramp.msl");
  REQUIRE(back.data.size() == s.data.size());
  CHECK(std::memcmp(back.data.data(), s.data.data(), s.data.size() * sizeof(float)) == 0);
}

TEST_CASE("msl: round-trip property over random stacks") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> dim(1, 9);
    SliceStack s = modsynth::testing::random_stack(dim(rng), dim(rng), dim(rng), rng, -1e6f, 1e6f);
    s.data[0] = -0.0f;
    const auto back = decode_msl(encode_msl(s));
    CHECK(std::memcmp(back.data.data(), s.data.data(), s.data.size() * sizeof(float)) == 0);
    CHECK(back.channels == s.channels);
  }
}

TEST_CASE("msl: missing file is an io error") {
  CHECK(code_of([] { read_slice_file("/nonexistent/x.msl"); }) == ErrorCode::kIo);
}

TEST_CASE("slice stack: invariants") {
  SliceStack s(2, 2, 2, {"a", "a"});
  CHECK(code_of([&] { s.validate(); }) == ErrorCode::kArgument);
  SliceStack t(2, 2, 2);
  t.data.pop_back();
  CHECK(code_of([&] { t.validate(); }) == ErrorCode::kLength);
}

TEST_CASE("preprocess: canonical input in [-1, 1] is unchanged") {
  std::mt19937_64 rng(1);
  SliceStack s = modsynth::testing::random_stack(1, 240, 240, rng);
  s.data[17] = -1.0f;
  s.data[4000] = 1.0f;
  CHECK(preprocess(s, 240) == s);
}

TEST_CASE("preprocess: 250x250 keeps the centre window") {
  std::mt19937_64 rng(2);
  SliceStack s = modsynth::testing::random_stack(1, 250, 250, rng);
  const SliceStack p = preprocess(s, 240);
  REQUIRE(p.height == 240);
  // Explicit slice [5, 245) and the same min-max rescale.
  float lo = 1e9f, hi = -1e9f;
  for (int y = 5; y < 245; ++y) {
    for (int x = 5; x < 245; ++x) {
      lo = std::min(lo, s.at(0, y, x));
      hi = std::max(hi, s.at(0, y, x));
    }
  }
  for (int y = 0; y < 240; ++y) {
    for (int x = 0; x < 240; ++x) {
      const double want = 2.0 * (static_cast<double>(s.at(0, y + 5, x + 5)) - lo) / (hi - lo) - 1.0;
      REQUIRE(p.at(0, y, x) == doctest::Approx(want).epsilon(1e-6));
    }
  }
}

TEST_CASE("preprocess: 200x200 gains a 20-pixel zero border") {
  std::mt19937_64 rng(3);
  const SliceStack s = modsynth::testing::random_stack(2, 200, 200, rng, 0.0f, 50.0f);
  const SliceStack p = preprocess(s, 240);
  for (int c = 0; c < 2; ++c) {
    double border = 0.0;
    float inner_min = 1.0f, inner_max = -1.0f;
    for (int y = 0; y < 240; ++y) {
      for (int x = 0; x < 240; ++x) {
        const bool inside = y >= 20 && y < 220 && x >= 20 && x < 220;
        if (inside) {
          inner_min = std::min(inner_min, p.at(c, y, x));
          inner_max = std::max(inner_max, p.at(c, y, x));
        } else {
          border += std::abs(p.at(c, y, x));
        }
      }
    }
    CHECK(border == 0.0);
    CHECK(inner_min == -1.0f);
    CHECK(inner_max == 1.0f);
  }
}

TEST_CASE("preprocess: constant channels map to -1") {
  SliceStack s(2, 10, 10);
  std::fill(s.data.begin(), s.data.begin() + 100, 7.0f);
  for (int i = 100; i < 200; ++i) s.data[i] = static_cast<float>(i);
  const SliceStack p = preprocess(s, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) CHECK(p.at(0, y, x) == -1.0f);
  }
}

TEST_CASE("preprocess: empty slice is a dimension error") {
  CHECK(code_of([] { preprocess(SliceStack(), 240); }) == ErrorCode::kDimension);
}

TEST_CASE("preprocess: idempotent and bounded over random shapes") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> dim(3, 40);
  for (int trial = 0; trial < 60; ++trial) {
    SliceStack s = modsynth::testing::random_stack(2, dim(rng), dim(rng), rng, -300.0f, 900.0f);
    if (trial % 5 == 0) std::fill(s.data.begin(), s.data.begin() + s.plane_size(), 3.0f);
    const SliceStack p = preprocess(s, 24);
    for (float v : p.data) REQUIRE((v >= -1.0f && v <= 1.0f));
    CHECK(preprocess(p, 24) == p);
  }
}

TEST_CASE("phantom: identical seeds give byte-identical corpora") {
  TempDir a("ph"), b("ph");
  PhantomOptions o;
  o.n_subjects = 4;
  o.n_slices = 3;
  o.seed = 7;
  o.size = 32;
  generate_phantom_corpus(o, a.path());
  generate_phantom_corpus(o, b.path());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a.path())) {
    if (e.is_regular_file()) files.push_back(std::filesystem::relative(e.path(), a.path()));
  }
  CHECK(files.size() == 4 * 3 * 4 + 3);
  for (const auto& f : files) {
    CAPTURE(f);
    CHECK(bytes_of(a.path() / f) == bytes_of(b.path() / f));
  }
  o.seed = 8;
  TempDir c("ph");
  generate_phantom_corpus(o, c.path());
  CHECK(bytes_of(a / "slices/sub-000_slice-00_dir.msl") !=
        bytes_of(c / "slices/sub-000_slice-00_dir.msl"));
}

TEST_CASE("phantom: aligned channels share the support mask") {
  for (int subject = 0; subject < 3; ++subject) {
    const PhantomSlice ps = render_phantom_slice(11, subject, 1, 4, 48, false);
    const SliceStack& s = ps.stack;
    REQUIRE(s.channels == 4);
    for (int c = 0; c < s.channels; ++c) {
      for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
          const bool label_support =
              ps.labels[y * s.width + x] != static_cast<std::uint8_t>(Tissue::kBackground);
          REQUIRE((s.at(c, y, x) > -1.0f) == label_support);
        }
      }
    }
  }
}

TEST_CASE("phantom: target is brighter inside lesions") {
  for (int subject = 0; subject < 5; ++subject) {
    const PhantomSlice ps = render_phantom_slice(3, subject, 2, 5, 64, false);
    double in = 0, out = 0;
    int n_in = 0, n_out = 0;
    for (int i = 0; i < 64 * 64; ++i) {
      const float v = ps.stack.data[3 * 64 * 64 + i];
      if (ps.labels[i] == static_cast<std::uint8_t>(Tissue::kLesion)) {
        in += v;
        ++n_in;
      } else {
        out += v;
        ++n_out;
      }
    }
    REQUIRE(n_in > 0);
    CHECK(in / n_in > out / n_out);
  }
}

TEST_CASE("phantom: misalignment shifts inputs but keeps ranges") {
  const PhantomSlice a = render_phantom_slice(5, 0, 0, 2, 80, false);
  const PhantomSlice b = render_phantom_slice(5, 0, 0, 2, 80, true);
  CHECK(a.labels == b.labels);
  CHECK(a.stack.data != b.stack.data);
  for (float v : b.stack.data) REQUIRE((v >= -1.0f && v <= 1.0f));
}

TEST_CASE("phantom: split manifests") {
  TempDir dir("ph");
  PhantomOptions o;
  o.n_subjects = 10;
  o.n_slices = 2;
  o.size = 16;
  const PhantomCorpus corpus = generate_phantom_corpus(o, dir.path());
  CHECK(corpus.train.entries.size() + corpus.val.entries.size() + corpus.test.entries.size() == 20);
  CHECK(corpus.test.subjects.size() == 2);
  CHECK(corpus.val.subjects.size() == 1);
  const CorpusManifest test = load_manifest(dir / "test.json");
  CHECK(test.split == "test");
  CHECK(test.entries == corpus.test.entries);
  CHECK(test.modalities == std::vector<std::string>{"t1", "t2", "flair", "dir"});
  test.validate(true);
  const SliceStack st = load_entry(test, test.entries[0], {"flair", "dir"});
  CHECK(st.channels == 2);
  CHECK(st.modality_names == std::vector<std::string>{"flair", "dir"});
}

TEST_CASE("phantom: bad counts") {
  TempDir dir("ph");
  PhantomOptions o;
  o.n_subjects = 0;
  CHECK(code_of([&] { generate_phantom_corpus(o, dir.path()); }) == ErrorCode::kArgument);
}

TEST_CASE("manifest: duplicate keys and bad splits are rejected") {
  TempDir dir("mf");
  CorpusManifest m;
  m.split = "train";
  m.modalities = {"t1"};
  m.subjects = {"s"};
  write_slice_file(dir / "a.msl", SliceStack(1, 4, 4));
  m.entries = {{"s", 0, {{"t1", "a.msl"}}}, {"s", 0, {{"t1", "a.msl"}}}};
  save_manifest(dir / "m.json", m);
  CHECK(code_of([&] { load_manifest(dir / "m.json").validate(true); }) == ErrorCode::kFormat);
  m.entries.pop_back();
  m.split = "holdout";
  save_manifest(dir / "m.json", m);
  CHECK(code_of([&] { load_manifest(dir / "m.json").validate(true); }) == ErrorCode::kFormat);
  m.split = "val";
  m.entries[0].files["t1"] = "missing.msl";
  save_manifest(dir / "m.json", m);
  CHECK_THROWS_AS(load_manifest(dir / "m.json").validate(true), Error);
  CHECK_NOTHROW(load_manifest(dir / "m.json").validate(false));
}

TEST_CASE("manifest: garbage json") {
  TempDir dir("mf");
  write_file_atomic(dir / "bad.json", std::string_view("{not json"));
  CHECK(code_of([&] { load_manifest(dir / "bad.json"); }) == ErrorCode::kFormat);
}
