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

#include <json.hpp>
#include <set>

#include "modsynth/dataio.hpp"
#include "modsynth/error.hpp"
#include "modsynth/fsutil.hpp"

namespace modsynth {

using nlohmann::json;

std::filesystem::path CorpusManifest::resolve(const std::string& file) const {
  std::filesystem::path p(file);
  return p.is_absolute() ? p : base_dir / p;
}

void CorpusManifest::validate(bool check_files) const {
  if (split != "train" && split != "val" && split != "test") {
    fail(ErrorCode::kFormat, "manifest split must be train, val or test, got '" +
                                 split + "'");
  }
  std::set<std::pair<std::string, int>> keys;
  for (const auto& e : entries) {
    if (!keys.emplace(e.subject, e.slice).second) {
      fail(ErrorCode::kFormat, "duplicate manifest entry " + e.subject + "/" +
                                   std::to_string(e.slice));
    }
    for (const auto& m : modalities) {
      if (!e.files.count(m)) {
        fail(ErrorCode::kFormat, "entry " + e.subject + "/" +
                                     std::to_string(e.slice) +
                                     " lacks modality " + m);
      }
    }
    if (check_files) {
      for (const auto& [m, f] : e.files) {
        const SliceStack s = read_slice_file(resolve(f));
        if (s.channels != 1) {
          fail(ErrorCode::kFormat, "modality file " + f + " has " +
                                       std::to_string(s.channels) + " channels");
        }
      }
    }
  }
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file_text(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, "manifest " + path.string() + ": " + e.what());
  }
  CorpusManifest m;
  try {
    m.subjects = doc.at("subjects").get<std::vector<std::string>>();
    m.modalities = doc.at("modalities").get<std::vector<std::string>>();
    m.split = doc.at("split").get<std::string>();
    for (const auto& e : doc.at("entries")) {
      ManifestEntry entry;
      entry.subject = e.at("subject").get<std::string>();
      entry.slice = e.at("slice").get<int>();
      entry.files = e.at("files").get<std::map<std::string, std::string>>();
      m.entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, "manifest " + path.string() + ": " + e.what());
  }
  m.base_dir = path.parent_path();
  return m;
}

void save_manifest(const std::filesystem::path& path, const CorpusManifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"subject", e.subject}, {"slice", e.slice}, {"files", e.files}});
  }
  json doc = {{"split", m.split},
              {"subjects", m.subjects},
              {"modalities", m.modalities},
              {"entries", entries}};
  write_file_atomic(path, doc.dump(2) + "\n");
}

SliceStack load_entry(const CorpusManifest& manifest, const ManifestEntry& entry,
                      const std::vector<std::string>& modalities) {
  SliceStack out;
  for (std::size_t i = 0; i < modalities.size(); ++i) {
    auto it = entry.files.find(modalities[i]);
    if (it == entry.files.end()) {
      fail(ErrorCode::kArgument, "entry " + entry.subject + " has no modality " +
                                     modalities[i]);
    }
    SliceStack ch = read_slice_file(manifest.resolve(it->second));
    if (ch.channels != 1) {
      fail(ErrorCode::kFormat, it->second + " is not single-channel");
    }
    if (i == 0) {
      out = SliceStack(static_cast<int>(modalities.size()), ch.height, ch.width,
                       modalities);
    } else if (ch.height != out.height || ch.width != out.width) {
      fail(ErrorCode::kShape, "modality " + modalities[i] + " of " +
                                  entry.subject + " has a different size");
    }
    std::copy(ch.data.begin(), ch.data.end(), out.data.begin() + i * out.plane_size());
  }
  return out;
}

}  // namespace modsynth
