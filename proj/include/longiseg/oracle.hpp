// Copyright 2026 the longiseg authors
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

#include <span>

#include "longiseg/components.hpp"
#include "longiseg/segmenter.hpp"
#include "longiseg/volume.hpp"

namespace longiseg {

struct OracleConfig {
  // HU band that counts as lesion tissue on phantom-style scans.
  double lesion_band_lo = 40.0;
  double lesion_band_hi = 120.0;
  // Below 1.0 so probability statistics over a mask are non-degenerate.
  double prob_level = 0.9;
  // How far a click may sit from a component and still claim it.
  double attach_radius_mm = 10.0;
};

/// Deterministic stand-in for a trained guided segmenter, operating on
/// phantom-style HU volumes. Unguided mode marks every voxel in the lesion
/// band, i.e. every lesion-like object, distractors included. Guided mode
/// keeps only the 26-connected in-band components the clicks indicate
/// (containing a click, or nearest within the attach radius).
class OracleBackend final : public SegmenterBackend {
 public:
  OracleBackend() = default;
  explicit OracleBackend(OracleConfig cfg) : cfg_(cfg) {}

  const OracleConfig& config() const { return cfg_; }

  Volume unguided(const Volume& scan) override {
    Volume out(scan.dims(), scan.spacing(), scan.origin(), ElementKind::PROB_FLOAT);
    const float level = static_cast<float>(cfg_.prob_level);
    for (std::size_t i = 0; i < scan.size(); ++i)
      if (in_band(scan.data()[i])) out.data()[i] = level;
    return out;
  }

  Volume guided(const Volume& scan, std::span<const Click> clicks) override {
    if (clicks.empty()) return unguided(scan);

    Volume band(scan.dims(), scan.spacing(), scan.origin(), ElementKind::LABEL_UINT);
    for (std::size_t i = 0; i < scan.size(); ++i)
      if (in_band(scan.data()[i])) band.data()[i] = 1.0f;

    const std::vector<Component> comps = connected_components(band);
    const auto selected = select_components_for_clicks(comps, clicks, scan, cfg_.attach_radius_mm);

    Volume out(scan.dims(), scan.spacing(), scan.origin(), ElementKind::PROB_FLOAT);
    const float level = static_cast<float>(cfg_.prob_level);
    for (const Component* c : selected)
      for (std::uint32_t v : c->voxels) out.data()[v] = level;
    return out;
  }

  std::string name() const override { return "oracle"; }

 private:
  bool in_band(float hu) const { return hu >= cfg_.lesion_band_lo && hu <= cfg_.lesion_band_hi; }

  OracleConfig cfg_;
};

}  // namespace longiseg
