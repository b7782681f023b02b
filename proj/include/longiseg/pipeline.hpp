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

#include <atomic>
#include <filesystem>
#include <future>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "longiseg/cvc.hpp"
#include "longiseg/error.hpp"
#include "longiseg/forest.hpp"
#include "longiseg/landmarks.hpp"
#include "longiseg/manifest.hpp"
#include "longiseg/metrics.hpp"
#include "longiseg/oracle.hpp"
#include "longiseg/resample.hpp"
#include "longiseg/rigid.hpp"
#include "longiseg/rng.hpp"
#include "longiseg/segmenter.hpp"
#include "longiseg/version.hpp"
#include "longiseg/volume_io.hpp"

#include <json.hpp>

namespace longiseg {

struct PipelineConfig {
  int m_samples = 25;          // clicks sampled from the source mask
  int n_clicks = 5;            // clicks kept after CVC filtering
  double cvc_threshold = 0.5;  // validity probability cut
  std::uint64_t seed = 0;
  Vec3 standard_spacing{1.5, 1.5, 2.0};
  double binarize_threshold = 0.5;
  double guidance_sigma_vox = 2.0;
  double attach_radius_mm = 10.0;
  double residual_warn_mm = 15.0;
  std::string backend = "oracle";
  std::filesystem::path cvc_model_path;
  std::filesystem::path bone_map_path;  // empty: built-in default map

  void validate() const {
    if (m_samples < 1 || n_clicks < 1 || n_clicks > m_samples)
      throw invalid_argument_error("pipeline config: need 1 <= n_clicks <= m_samples");
    if (!(cvc_threshold > 0.0 && cvc_threshold < 1.0))
      throw invalid_argument_error("pipeline config: cvc_threshold must lie in (0,1)");
    if (!(standard_spacing.x > 0 && standard_spacing.y > 0 && standard_spacing.z > 0))
      throw invalid_argument_error("pipeline config: standard_spacing must be positive");
  }

  nlohmann::json to_json() const {
    return {{"m_samples", m_samples},
            {"n_clicks", n_clicks},
            {"cvc_threshold", cvc_threshold},
            {"seed", seed},
            {"standard_spacing", {standard_spacing.x, standard_spacing.y, standard_spacing.z}},
            {"binarize_threshold", binarize_threshold},
            {"guidance_sigma_vox", guidance_sigma_vox},
            {"attach_radius_mm", attach_radius_mm},
            {"residual_warn_mm", residual_warn_mm},
            {"backend", backend},
            {"cvc_model_path", cvc_model_path.string()},
            {"bone_map_path", bone_map_path.string()}};
  }

  static PipelineConfig from_json(const nlohmann::json& j) {
    PipelineConfig c;
    c.m_samples = j.value("m_samples", c.m_samples);
    c.n_clicks = j.value("n_clicks", c.n_clicks);
    c.cvc_threshold = j.value("cvc_threshold", c.cvc_threshold);
    c.seed = j.value("seed", c.seed);
    if (j.contains("standard_spacing")) {
      const auto& a = j.at("standard_spacing");
      if (!a.is_array() || a.size() != 3)
        throw format_error("pipeline config: \"standard_spacing\" must be [3]");
      c.standard_spacing = {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
    }
    c.binarize_threshold = j.value("binarize_threshold", c.binarize_threshold);
    c.guidance_sigma_vox = j.value("guidance_sigma_vox", c.guidance_sigma_vox);
    c.attach_radius_mm = j.value("attach_radius_mm", c.attach_radius_mm);
    c.residual_warn_mm = j.value("residual_warn_mm", c.residual_warn_mm);
    c.backend = j.value("backend", c.backend);
    if (j.contains("cvc_model_path")) c.cvc_model_path = j.at("cvc_model_path").get<std::string>();
    if (j.contains("bone_map_path")) c.bone_map_path = j.at("bone_map_path").get<std::string>();
    c.validate();
    return c;
  }
};

/// Either a guidance click or a radiologist-provided mask for the source scan.
using SourceInput = std::variant<Click, TumourMask>;

// ---------------------------------------------------------------------------
// Scan context: one scan of a study, loaded and resampled onto the standard
// grid, with landmarks extracted and the unguided probability map cached.
// ---------------------------------------------------------------------------

struct ScanContext {
  std::string scan_id;
  Volume image;
  Volume labels;
  std::vector<Landmark> landmarks;  // visibility-filtered
  std::map<std::string, Volume> gt_masks;
  Volume unguided_prob;
  bool has_unguided = false;
  std::filesystem::path unguided_cache_path;  // set when a workspace caches it
};

inline ScanContext load_scan_context(const ScanEntry& entry, const PipelineConfig& cfg,
                                     const BoneLabelMap& bone_map) {
  ScanContext ctx;
  ctx.scan_id = entry.scan_id;
  ctx.image = resample_to_standard(load_volume(entry.image_path), cfg.standard_spacing,
                                   Interp::TRILINEAR);
  ctx.labels = resample_to_standard(load_volume(entry.bone_labels_path), cfg.standard_spacing,
                                    Interp::NEAREST);
  if (!ctx.labels.same_grid(ctx.image))
    throw grid_mismatch_error(entry.scan_id + ": bone labels do not share the image grid");
  ctx.landmarks = visibility_filter(ctx.labels, bone_map, compute_landmarks(ctx.labels, bone_map));
  for (const auto& [tid, path] : entry.ground_truth_masks) {
    Volume m = resample_to_standard(load_volume(path), cfg.standard_spacing, Interp::NEAREST);
    if (!m.same_grid(ctx.image))
      throw grid_mismatch_error(entry.scan_id + ": ground-truth mask \"" + tid +
                                "\" does not share the image grid");
    ctx.gt_masks.emplace(tid, std::move(m));
  }
  return ctx;
}

/// Unguided probability map for a scan, computed once. With a workspace the
/// map is also cached on disk, keyed by the backend name and the scan's
/// content hash (the CVC needs it for every pair of the study). Reuse a
/// workspace only with the same backend configuration.
inline const Volume& ensure_unguided(ScanContext& ctx, SegmenterBackend& backend,
                                     const std::filesystem::path& workspace = {}) {
  if (ctx.has_unguided) return ctx.unguided_prob;
  namespace fs = std::filesystem;
  fs::path cache;
  if (!workspace.empty()) {
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(content_hash(ctx.image)));
    cache = workspace / ("unguided_" + backend.name() + "_" + hex + ".nii");
    ctx.unguided_cache_path = cache;
    if (fs::exists(cache)) {
      Volume cached = load_nifti(cache);
      if (cached.same_grid(ctx.image)) {
        ctx.unguided_prob = std::move(cached);
        ctx.has_unguided = true;
        return ctx.unguided_prob;
      }
    }
  }
  ctx.unguided_prob = backend.unguided(ctx.image);
  ctx.has_unguided = true;
  if (!cache.empty()) {
    static std::atomic<std::uint64_t> tmp_counter{0};
    const fs::path tmp = cache.string() + ".tmp" + std::to_string(::getpid()) + "-" +
                         std::to_string(tmp_counter.fetch_add(1));
    save_nifti(ctx.unguided_prob, tmp);
    std::error_code ec;
    fs::rename(tmp, cache, ec);
  }
  return ctx.unguided_prob;
}

// ---------------------------------------------------------------------------
// Pipeline operations
// ---------------------------------------------------------------------------

/// Uniformly sample m distinct voxels of a tumour mask without replacement
/// (all of them when the mask is smaller). Deterministic per seed; output in
/// canonical (ascending linear index) order.
inline std::vector<Click> sample_clicks(const TumourMask& mask, int m, std::uint64_t seed) {
  std::vector<std::uint32_t> fg;
  for (std::size_t i = 0; i < mask.mask.size(); ++i)
    if (mask.mask.data()[i] != 0.0f) fg.push_back(static_cast<std::uint32_t>(i));
  if (fg.empty()) throw empty_mask_error("sample_clicks: mask \"" + mask.tumour_id + "\" is empty");

  std::vector<std::uint32_t> chosen;
  if (fg.size() <= static_cast<std::size_t>(m)) {
    chosen = fg;
  } else {
    Rng rng(seed);
    for (std::size_t pick : rng.sample_without_replacement(fg.size(), static_cast<std::size_t>(m)))
      chosen.push_back(fg[pick]);
    std::sort(chosen.begin(), chosen.end());
  }

  std::vector<Click> clicks;
  clicks.reserve(chosen.size());
  for (std::uint32_t v : chosen)
    clicks.push_back({world_from_index(mask.mask, mask.mask.delinear(v)), mask.scan_id,
                      mask.tumour_id, std::nullopt});
  return clicks;
}

/// Turn the source input into a source tumour mask: radiologist masks pass
/// through; a click seeds a guided segmentation restricted to the component
/// at (or nearest within the attach radius of) the click.
inline TumourMask resolve_source_mask(const Volume& src_scan, const SourceInput& input,
                                      SegmenterBackend& backend, const PipelineConfig& cfg,
                                      const std::string& scan_id, const std::string& tumour_id) {
  if (const auto* provided = std::get_if<TumourMask>(&input)) {
    if (!provided->mask.same_grid(src_scan))
      throw grid_mismatch_error("source mask is not on the scan's grid");
    TumourMask out = *provided;
    out.scan_id = scan_id;
    out.tumour_id = tumour_id;
    for (auto& v : out.mask.data()) v = v != 0.0f ? 1.0f : 0.0f;  // nonzero = tumour
    return out;
  }

  const Click& click = std::get<Click>(input);
  const Volume prob = backend.guided(src_scan, std::span<const Click>(&click, 1));
  const Volume bin = binarize(prob, cfg.binarize_threshold);
  const auto comps = connected_components(bin);
  const auto selected =
      select_components_for_clicks(comps, std::span<const Click>(&click, 1), src_scan,
                                   cfg.attach_radius_mm);
  if (selected.empty())
    throw no_tumour_at_click_error("guided segmentation found no tumour at click (" +
                                   std::to_string(click.pos_mm.x) + ", " +
                                   std::to_string(click.pos_mm.y) + ", " +
                                   std::to_string(click.pos_mm.z) + ") in scan " + scan_id);
  return {components_to_mask(src_scan, selected), tumour_id, scan_id};
}

/// Map clicks through the fitted rigid transform; clicks landing outside the
/// destination grid are dropped and counted, never clamped.
inline std::vector<Click> propagate_clicks(std::span<const Click> clicks, const RigidTransform& T,
                                           const Volume& dst_grid, int* dropped = nullptr) {
  std::vector<Click> out;
  int lost = 0;
  for (const Click& c : clicks) {
    Click moved = c;
    moved.pos_mm = T.apply(c.pos_mm);
    moved.validity_prob.reset();
    Index3 idx;
    if (try_index_from_world(dst_grid, moved.pos_mm, idx))
      out.push_back(std::move(moved));
    else
      ++lost;
  }
  if (dropped) *dropped = lost;
  return out;
}

/// Annotate every click with its CVC validity probability (in place), keep
/// those above the threshold, and return the n most probable of them,
/// descending; ties resolve to the earlier click in canonical order. May
/// return fewer than n, or none.
inline std::vector<Click> filter_clicks(std::vector<Click>& clicks,
                                        std::span<const CvcFeatures> features,
                                        const RandomForest& forest, double threshold, int n) {
  if (features.size() != clicks.size())
    throw invalid_argument_error("filter_clicks: one feature row per click required");
  std::vector<std::size_t> surviving;
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    const auto arr = features[i].as_array();
    clicks[i].validity_prob = forest.predict_proba(arr);
    if (*clicks[i].validity_prob > threshold) surviving.push_back(i);
  }
  std::stable_sort(surviving.begin(), surviving.end(), [&](std::size_t a, std::size_t b) {
    return *clicks[a].validity_prob > *clicks[b].validity_prob;
  });
  if (surviving.size() > static_cast<std::size_t>(n)) surviving.resize(static_cast<std::size_t>(n));

  std::vector<Click> kept;
  kept.reserve(surviving.size());
  for (std::size_t i : surviving) kept.push_back(clicks[i]);
  return kept;
}

// ---------------------------------------------------------------------------
// run_pair / run_study
// ---------------------------------------------------------------------------

struct PropagationResult {
  std::string src_scan_id;
  std::string dst_scan_id;
  std::string tumour_id;
  RigidTransform transform;
  TumourMask mask;
  std::vector<Click> clicks_used;
  std::vector<Click> click_audit;  // every propagated click, annotated
  int clicks_dropped = 0;
  bool fallback_unguided = false;
  bool tumour_absent = false;
  bool multi_component = false;
  bool residual_warning = false;
  std::optional<double> dice_vs_gt;
  std::optional<double> unguided_dice_vs_gt;
  std::string dst_unguided_file;  // cached unguided map, when a workspace exists
};

namespace detail {

inline std::uint64_t stream_for(const std::string& tumour_id) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : tumour_id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

/// The full source-to-destination chain: fit the rigid transform on the two
/// scans' landmark sets, resolve the source mask, sample and propagate
/// clicks, filter them with the CVC, and segment. With no surviving clicks
/// the result is the binarized unguided segmentation, flagged tumour_absent.
inline PropagationResult run_pair(ScanContext& src, ScanContext& dst, const SourceInput& input,
                                  const PipelineConfig& cfg, SegmenterBackend& backend,
                                  const RandomForest& forest, const std::string& tumour_id,
                                  const std::filesystem::path& workspace = {}) {
  cfg.validate();
  PropagationResult res;
  res.src_scan_id = src.scan_id;
  res.dst_scan_id = dst.scan_id;
  res.tumour_id = tumour_id;

  const std::string pair_ctx = "registration " + src.scan_id + " -> " + dst.scan_id + ": ";
  try {
    res.transform = fit_rigid(match_landmarks(src.landmarks, dst.landmarks));
  } catch (const insufficient_landmarks_error& e) {
    throw insufficient_landmarks_error(pair_ctx + e.what());
  } catch (const degenerate_geometry_error& e) {
    throw degenerate_geometry_error(pair_ctx + e.what());
  }
  res.residual_warning =
      res.transform.rms_residual > cfg.residual_warn_mm || res.transform.quality_warning;

  const TumourMask src_mask =
      resolve_source_mask(src.image, input, backend, cfg, src.scan_id, tumour_id);

  const std::uint64_t seed =
      Rng::derive(cfg.seed, detail::stream_for(tumour_id)).next_u64();
  const std::vector<Click> sampled = sample_clicks(src_mask, cfg.m_samples, seed);

  std::vector<Click> propagated =
      propagate_clicks(sampled, res.transform, dst.image, &res.clicks_dropped);

  const Volume& src_unguided = ensure_unguided(src, backend, workspace);
  const Volume& dst_unguided = ensure_unguided(dst, backend, workspace);

  std::vector<CvcFeatures> features;
  features.reserve(propagated.size());
  for (const Click& c : propagated)
    features.push_back(
        extract_features(src.image, src_mask.mask, src_unguided, dst.image, dst_unguided, c));

  res.clicks_used = filter_clicks(propagated, features, forest, cfg.cvc_threshold, cfg.n_clicks);
  res.click_audit = propagated;

  if (res.clicks_used.empty()) {
    res.fallback_unguided = true;
    res.tumour_absent = true;
    res.mask = {binarize(dst_unguided, cfg.binarize_threshold), tumour_id, dst.scan_id};
  } else {
    const Volume guided_prob = backend.guided(dst.image, res.clicks_used);
    const Volume bin = binarize(guided_prob, cfg.binarize_threshold);
    const auto comps = connected_components(bin);
    const auto selected =
        select_components_for_clicks(comps, res.clicks_used, dst.image, cfg.attach_radius_mm);
    res.multi_component = selected.size() > 1;
    res.mask = {components_to_mask(dst.image, selected), tumour_id, dst.scan_id};
  }

  auto gt = dst.gt_masks.find(tumour_id);
  if (gt != dst.gt_masks.end()) {
    res.dice_vs_gt = dice(res.mask.mask, gt->second);
    res.unguided_dice_vs_gt = dice(binarize(dst_unguided, cfg.binarize_threshold), gt->second);
  }
  res.dst_unguided_file = dst.unguided_cache_path.filename().string();
  return res;
}

struct PairFailure {
  std::string dst_scan_id;
  std::string tumour_id;
  std::string message;
};

struct StudyResult {
  std::vector<PropagationResult> results;
  std::vector<PairFailure> failures;
  nlohmann::json report;
};

namespace detail {

inline nlohmann::json click_json(const Click& c, bool kept) {
  nlohmann::json j{{"pos_mm", {c.pos_mm.x, c.pos_mm.y, c.pos_mm.z}}, {"kept", kept}};
  if (c.validity_prob) j["validity_prob"] = *c.validity_prob;
  return j;
}

inline nlohmann::json pair_json(const PropagationResult& r, const std::string& mask_path) {
  std::set<std::string> kept_keys;
  auto key = [](const Click& c) {
    return std::to_string(c.pos_mm.x) + "/" + std::to_string(c.pos_mm.y) + "/" +
           std::to_string(c.pos_mm.z);
  };
  for (const Click& c : r.clicks_used) kept_keys.insert(key(c));
  nlohmann::json clicks = nlohmann::json::array();
  for (const Click& c : r.click_audit) clicks.push_back(click_json(c, kept_keys.count(key(c)) > 0));

  nlohmann::json j{{"src", r.src_scan_id},
                   {"dst", r.dst_scan_id},
                   {"tumour_id", r.tumour_id},
                   {"transform", r.transform.to_json()},
                   {"clicks", clicks},
                   {"clicks_dropped", r.clicks_dropped},
                   {"fallback_unguided", r.fallback_unguided},
                   {"tumour_absent", r.tumour_absent},
                   {"multi_component", r.multi_component},
                   {"residual_warning", r.residual_warning},
                   {"mask_path", mask_path}};
  if (r.dice_vs_gt) j["dice"] = *r.dice_vs_gt;
  if (r.unguided_dice_vs_gt) j["unguided_dice"] = *r.unguided_dice_vs_gt;
  if (!r.dst_unguided_file.empty()) j["unguided_prob_path"] = r.dst_unguided_file;
  return j;
}

}  // namespace detail

/// Run the pipeline from one source scan to every other scan in the study,
/// independently per tumour. Per-pair failures are recorded in the report
/// without aborting the remaining pairs. Results are written to `out_dir`:
/// one mask per (scan, tumour), the cached unguided maps, and report.json.
inline StudyResult run_study(const StudyManifest& manifest, const std::string& source_scan_id,
                             const std::map<std::string, SourceInput>& sources,
                             const PipelineConfig& cfg, SegmenterBackend& backend,
                             const RandomForest& forest, const std::filesystem::path& out_dir,
                             int jobs = 1) {
  namespace fs = std::filesystem;
  cfg.validate();
  manifest.validate();
  if (!manifest.has_scan(source_scan_id))
    throw invalid_argument_error("run_study: source scan \"" + source_scan_id +
                                 "\" is not in the manifest");
  if (sources.empty()) throw invalid_argument_error("run_study: no source inputs given");
  fs::create_directories(out_dir);

  const BoneLabelMap bone_map = cfg.bone_map_path.empty()
                                    ? BoneLabelMap::default_map()
                                    : [&] {
                                        std::ifstream f(cfg.bone_map_path);
                                        if (!f)
                                          throw format_error("cannot open bone map: " +
                                                             cfg.bone_map_path.string());
                                        nlohmann::json j;
                                        f >> j;
                                        return BoneLabelMap::from_json(j);
                                      }();

  ScanContext src = load_scan_context(manifest.scan(source_scan_id), cfg, bone_map);
  ensure_unguided(src, backend, out_dir);

  StudyResult study;

  struct ScanOutcome {
    std::vector<PropagationResult> results;
    std::vector<PairFailure> failures;
  };
  std::vector<const ScanEntry*> destinations;
  for (const ScanEntry& entry : manifest.scans)
    if (entry.scan_id != source_scan_id) destinations.push_back(&entry);

  auto process = [&](const ScanEntry& entry) {
    ScanOutcome outcome;
    ScanContext dst;
    try {
      dst = load_scan_context(entry, cfg, bone_map);
    } catch (const std::exception& e) {
      for (const auto& [tid, in] : sources)
        outcome.failures.push_back({entry.scan_id, tid, e.what()});
      return outcome;
    }
    for (const auto& [tumour_id, input] : sources) {
      try {
        outcome.results.push_back(
            run_pair(src, dst, input, cfg, backend, forest, tumour_id, out_dir));
      } catch (const std::exception& e) {
        outcome.failures.push_back({entry.scan_id, tumour_id, e.what()});
      }
    }
    return outcome;
  };

  std::vector<ScanOutcome> outcomes(destinations.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < destinations.size(); ++i) outcomes[i] = process(*destinations[i]);
  } else {
    std::vector<std::future<ScanOutcome>> futures;
    futures.reserve(destinations.size());
    for (const ScanEntry* entry : destinations)
      futures.push_back(std::async(std::launch::async, process, std::cref(*entry)));
    for (std::size_t i = 0; i < futures.size(); ++i) outcomes[i] = futures[i].get();
  }

  nlohmann::json pairs = nlohmann::json::array();
  for (auto& outcome : outcomes) {
    for (auto& r : outcome.results) {
      const fs::path mask_path =
          out_dir / ("mask_" + r.dst_scan_id + "_" + r.tumour_id + ".nii");
      save_nifti(r.mask.mask, mask_path);
      pairs.push_back(detail::pair_json(r, mask_path.filename().string()));
      study.results.push_back(std::move(r));
    }
    for (auto& f : outcome.failures) study.failures.push_back(std::move(f));
  }

  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : study.failures)
    failures.push_back({{"dst", f.dst_scan_id}, {"tumour_id", f.tumour_id}, {"error", f.message}});

  double dice_sum = 0.0;
  std::size_t dice_n = 0, fallback_n = 0;
  for (const auto& r : study.results) {
    if (r.dice_vs_gt) {
      dice_sum += *r.dice_vs_gt;
      ++dice_n;
    }
    fallback_n += r.fallback_unguided;
  }
  nlohmann::json summary{{"n_pairs", study.results.size()},
                         {"n_failures", study.failures.size()},
                         {"n_fallback_unguided", fallback_n}};
  if (dice_n > 0) summary["mean_dice"] = dice_sum / static_cast<double>(dice_n);

  study.report = {{"tool_version", kVersion},
                  {"patient_id", manifest.patient_id},
                  {"source_scan_id", source_scan_id},
                  {"config", cfg.to_json()},
                  {"pairs", pairs},
                  {"failures", failures},
                  {"summary", summary}};
  {
    std::ofstream f(out_dir / "report.json", std::ios::trunc);
    f << study.report.dump(2) << "\n";
  }
  return study;
}

// ---------------------------------------------------------------------------
// CVC training-data generation
// ---------------------------------------------------------------------------

/// Label propagated clicks against ground-truth destination masks: for every
/// ordered scan pair and every tumour annotated at both ends, sample clicks
/// from the source ground-truth mask, propagate them through the fitted
/// transform, and label 1 iff the click voxel lies inside the destination
/// tumour mask.
inline std::vector<LabeledFeatures> generate_cvc_training_data(const StudyManifest& manifest,
                                                               const PipelineConfig& cfg,
                                                               SegmenterBackend& backend) {
  cfg.validate();
  manifest.validate();
  const BoneLabelMap bone_map = BoneLabelMap::default_map();

  std::vector<ScanContext> ctxs;
  for (const ScanEntry& entry : manifest.scans)
    ctxs.push_back(load_scan_context(entry, cfg, bone_map));
  for (auto& c : ctxs) ensure_unguided(c, backend);

  std::vector<LabeledFeatures> out;
  std::uint64_t pair_stream = 0;
  for (std::size_t i = 0; i < ctxs.size(); ++i) {
    for (std::size_t j = 0; j < ctxs.size(); ++j) {
      if (i == j) continue;
      ScanContext& src = ctxs[i];
      ScanContext& dst = ctxs[j];
      const RigidTransform T = fit_rigid(match_landmarks(src.landmarks, dst.landmarks));

      for (const auto& [tumour_id, src_gt] : src.gt_masks) {
        ++pair_stream;
        auto dst_gt = dst.gt_masks.find(tumour_id);
        if (dst_gt == dst.gt_masks.end()) continue;

        TumourMask src_mask{src_gt, tumour_id, src.scan_id};
        std::vector<Click> sampled;
        try {
          sampled = sample_clicks(src_mask, cfg.m_samples,
                                  Rng::derive(cfg.seed, pair_stream).next_u64());
        } catch (const empty_mask_error&) {
          continue;  // tumour absent at the source time point
        }
        const std::vector<Click> propagated = propagate_clicks(sampled, T, dst.image);

        for (const Click& c : propagated) {
          const CvcFeatures f = extract_features(src.image, src_mask.mask, src.unguided_prob,
                                                 dst.image, dst.unguided_prob, c);
          const Index3 cv = index_from_world(dst.image, c.pos_mm);
          const int label = dst_gt->second.at(cv) != 0.0f ? 1 : 0;
          out.push_back({f, label});
        }
      }
    }
  }
  return out;
}

}  // namespace longiseg
