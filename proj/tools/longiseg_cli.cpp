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

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "longiseg/longiseg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

longiseg::Vec3 parse_triple(const std::string& s, const char* what) {
  longiseg::Vec3 v;
  if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &v.x, &v.y, &v.z) != 3)
    throw longiseg::invalid_argument_error(std::string(what) + ": expected \"x,y,z\", got \"" + s +
                                           "\"");
  return v;
}

longiseg::Index3 parse_voxel(const std::string& s) {
  longiseg::Index3 v;
  if (std::sscanf(s.c_str(), "%d,%d,%d", &v.x, &v.y, &v.z) != 3)
    throw longiseg::invalid_argument_error("--click-voxel: expected \"i,j,k\", got \"" + s + "\"");
  return v;
}

json load_json(const fs::path& path, const char* what) {
  std::ifstream f(path);
  if (!f) throw longiseg::format_error(std::string("cannot open ") + what + ": " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw longiseg::format_error(path.string() + ": invalid JSON: " + e.what());
  }
  return j;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw longiseg::format_error("cannot open for write: " + path.string());
  f << j.dump(2) << "\n";
}

/// Flags shared by the commands that run the pipeline.
struct PipelineFlags {
  std::string config_path;
  std::string cvc_path;
  std::string backend = "oracle";
  std::string backend_cmd;
  std::string bone_map_path;
  std::string spacing;
  std::optional<std::uint64_t> seed;
  std::optional<int> m_samples;
  std::optional<int> n_clicks;
  std::optional<double> cvc_threshold;

  void attach(CLI::App* cmd, bool with_cvc = true) {
    cmd->add_option("--config", config_path, "pipeline config JSON (flag values override it)");
    if (with_cvc) cmd->add_option("--cvc", cvc_path, "trained CVC forest JSON");
    cmd->add_option("--backend", backend, "segmenter backend: oracle | external")
        ->check(CLI::IsMember({"oracle", "external"}));
    cmd->add_option("--backend-cmd", backend_cmd,
                    "command prefix for the external backend protocol");
    cmd->add_option("--bone-map", bone_map_path, "bone label map JSON (default: built-in)");
    cmd->add_option("--spacing", spacing, "standard spacing as \"x,y,z\" mm");
    cmd->add_option("--seed", seed, "seed for everything random");
    cmd->add_option("--m-samples", m_samples, "clicks sampled from the source mask");
    cmd->add_option("--n-clicks", n_clicks, "clicks kept after CVC filtering");
    cmd->add_option("--cvc-threshold", cvc_threshold, "validity probability cut");
  }

  longiseg::PipelineConfig resolve() const {
    longiseg::PipelineConfig cfg;
    if (!config_path.empty())
      cfg = longiseg::PipelineConfig::from_json(load_json(config_path, "pipeline config"));
    if (!cvc_path.empty()) cfg.cvc_model_path = cvc_path;
    if (!backend.empty()) cfg.backend = backend;
    if (!bone_map_path.empty()) cfg.bone_map_path = bone_map_path;
    if (!spacing.empty()) cfg.standard_spacing = parse_triple(spacing, "--spacing");
    if (seed) cfg.seed = *seed;
    if (m_samples) cfg.m_samples = *m_samples;
    if (n_clicks) cfg.n_clicks = *n_clicks;
    if (cvc_threshold) cfg.cvc_threshold = *cvc_threshold;
    cfg.validate();
    return cfg;
  }

  std::unique_ptr<longiseg::SegmenterBackend> make_backend() const {
    if (backend == "external") {
      if (backend_cmd.empty())
        throw longiseg::invalid_argument_error("--backend external requires --backend-cmd");
      return std::make_unique<longiseg::ExternalBackend>(backend_cmd);
    }
    return std::make_unique<longiseg::OracleBackend>();
  }
};

longiseg::BoneLabelMap load_bone_map(const std::string& path) {
  if (path.empty()) return longiseg::BoneLabelMap::default_map();
  return longiseg::BoneLabelMap::from_json(load_json(path, "bone map"));
}

longiseg::RandomForest load_cvc(const longiseg::PipelineConfig& cfg) {
  if (cfg.cvc_model_path.empty())
    throw longiseg::invalid_argument_error(
        "no CVC model given; pass --cvc or set cvc_model_path in the config");
  return longiseg::load_forest(cfg.cvc_model_path);
}

/// Source inputs from repeated --click/--click-voxel/--mask flags. Tumour
/// ids default to tumour_01, tumour_02, ... in flag order (masks use their
/// file stem) and can be overridden with --tumour-ids.
std::map<std::string, longiseg::SourceInput> resolve_sources(
    const std::vector<std::string>& clicks, const std::vector<std::string>& click_voxels,
    const std::vector<std::string>& masks, const std::string& tumour_ids_csv,
    const longiseg::StudyManifest& manifest, const std::string& source_scan_id,
    const longiseg::PipelineConfig& cfg) {
  std::vector<std::string> ids;
  if (!tumour_ids_csv.empty()) {
    std::string cur;
    for (char c : tumour_ids_csv + ",") {
      if (c == ',') {
        if (!cur.empty()) ids.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
  }

  std::map<std::string, longiseg::SourceInput> out;
  std::size_t n = 0;
  auto next_id = [&](const std::string& fallback) {
    const std::string id = n < ids.size() ? ids[n] : fallback;
    ++n;
    return id;
  };
  auto add = [&](const std::string& id, longiseg::SourceInput in) {
    if (!out.emplace(id, std::move(in)).second)
      throw longiseg::invalid_argument_error("duplicate tumour id \"" + id + "\"");
  };

  char buf[16];
  for (const std::string& c : clicks) {
    std::snprintf(buf, sizeof(buf), "tumour_%02zu", n + 1);
    add(next_id(buf),
        longiseg::Click{parse_triple(c, "--click"), source_scan_id, "", std::nullopt});
  }
  if (!click_voxels.empty()) {
    // Voxel clicks refer to the source image's native grid.
    const longiseg::Volume native =
        longiseg::load_volume(manifest.scan(source_scan_id).image_path);
    for (const std::string& c : click_voxels) {
      const longiseg::Index3 v = parse_voxel(c);
      if (!native.contains(v))
        throw longiseg::out_of_bounds_error("--click-voxel " + c + " outside the source image");
      std::snprintf(buf, sizeof(buf), "tumour_%02zu", n + 1);
      add(next_id(buf), longiseg::Click{longiseg::world_from_index(native, v), source_scan_id, "",
                                        std::nullopt});
    }
  }
  for (const std::string& m : masks) {
    longiseg::Volume mask = longiseg::resample_to_standard(
        longiseg::load_volume(m), cfg.standard_spacing, longiseg::Interp::NEAREST);
    const std::string id = next_id(fs::path(m).stem().string());
    add(id, longiseg::TumourMask{std::move(mask), id, source_scan_id});
  }
  if (out.empty())
    throw longiseg::invalid_argument_error("give at least one --click, --click-voxel or --mask");
  return out;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_gen_phantom(const std::string& config_path, const std::string& out_dir,
                    std::optional<std::uint64_t> seed, const std::string& patient_id) {
  longiseg::PhantomConfig cfg;
  if (!config_path.empty())
    cfg = longiseg::PhantomConfig::from_json(load_json(config_path, "phantom config"));
  if (seed) cfg.seed = *seed;
  const longiseg::GeneratedStudy study = longiseg::generate_study(cfg, out_dir, patient_id);
  std::cerr << "phantom study \"" << study.manifest.patient_id << "\": "
            << study.manifest.scans.size() << " time points -> " << study.manifest_path.string()
            << "\n";
  return 0;
}

int cmd_landmarks(const std::string& labels_path, const std::string& map_path,
                  const std::string& spacing, bool keep_occluded, const std::string& out_path) {
  const longiseg::BoneLabelMap map = load_bone_map(map_path);
  longiseg::Vec3 target{1.5, 1.5, 2.0};
  if (!spacing.empty()) target = parse_triple(spacing, "--spacing");
  const longiseg::Volume labels = longiseg::resample_to_standard(
      longiseg::load_volume(labels_path), target, longiseg::Interp::NEAREST);
  std::vector<int> unknown;
  auto lms = longiseg::compute_landmarks(labels, map, &unknown);
  for (int u : unknown) std::cerr << "ignoring unknown label value " << u << "\n";
  if (!keep_occluded) lms = longiseg::visibility_filter(labels, map, lms);
  write_json(longiseg::landmarks_to_json(lms), out_path);
  std::cerr << lms.size() << " landmarks -> " << out_path << "\n";
  return 0;
}

int cmd_register(const std::string& src_path, const std::string& dst_path,
                 const std::string& out_path) {
  const auto src = longiseg::landmarks_from_json(load_json(src_path, "source landmarks"));
  const auto dst = longiseg::landmarks_from_json(load_json(dst_path, "destination landmarks"));
  const longiseg::RigidTransform T = longiseg::fit_rigid(longiseg::match_landmarks(src, dst));
  write_json(T.to_json(), out_path);
  std::cerr << "fit over " << T.n_pairs << " pairs, rms residual " << T.rms_residual << " mm\n";
  if (T.quality_warning) std::cerr << "warning: data preferred a reflection; check your inputs\n";
  return 0;
}

int cmd_propagate(const std::string& manifest_path, const std::string& source_id,
                  const std::string& dest_id, const PipelineFlags& flags,
                  const std::vector<std::string>& clicks,
                  const std::vector<std::string>& click_voxels,
                  const std::vector<std::string>& masks, const std::string& tumour_ids,
                  const std::string& out_dir) {
  const longiseg::StudyManifest manifest = longiseg::load_manifest(manifest_path);
  const longiseg::PipelineConfig cfg = flags.resolve();
  const auto backend = flags.make_backend();
  const longiseg::RandomForest forest = load_cvc(cfg);
  const auto sources =
      resolve_sources(clicks, click_voxels, masks, tumour_ids, manifest, source_id, cfg);
  const longiseg::BoneLabelMap map = load_bone_map(cfg.bone_map_path.string());

  fs::create_directories(out_dir);
  longiseg::ScanContext src = longiseg::load_scan_context(manifest.scan(source_id), cfg, map);
  longiseg::ScanContext dst = longiseg::load_scan_context(manifest.scan(dest_id), cfg, map);

  json pairs = json::array();
  for (const auto& [tumour_id, input] : sources) {
    const longiseg::PropagationResult res =
        longiseg::run_pair(src, dst, input, cfg, *backend, forest, tumour_id, out_dir);
    const fs::path mask_path = fs::path(out_dir) / ("mask_" + dest_id + "_" + tumour_id + ".nii");
    longiseg::save_nifti(res.mask.mask, mask_path);
    pairs.push_back(longiseg::detail::pair_json(res, mask_path.filename().string()));
  }
  write_json(json{{"tool_version", longiseg::kVersion},
                  {"config", cfg.to_json()},
                  {"pairs", pairs}},
             fs::path(out_dir) / "pair_report.json");
  std::cerr << pairs.size() << " propagation(s) -> " << out_dir << "\n";
  return 0;
}

int cmd_run_study(const std::string& manifest_path, const std::string& source_id,
                  const PipelineFlags& flags, const std::vector<std::string>& clicks,
                  const std::vector<std::string>& click_voxels,
                  const std::vector<std::string>& masks, const std::string& tumour_ids,
                  const std::string& out_dir, int jobs) {
  const longiseg::StudyManifest manifest = longiseg::load_manifest(manifest_path);
  const longiseg::PipelineConfig cfg = flags.resolve();
  const auto backend = flags.make_backend();
  const longiseg::RandomForest forest = load_cvc(cfg);
  const auto sources =
      resolve_sources(clicks, click_voxels, masks, tumour_ids, manifest, source_id, cfg);

  const longiseg::StudyResult result =
      longiseg::run_study(manifest, source_id, sources, cfg, *backend, forest, out_dir, jobs);
  std::cerr << result.results.size() << " pair result(s), " << result.failures.size()
            << " failure(s) -> " << (fs::path(out_dir) / "report.json").string() << "\n";
  for (const auto& f : result.failures)
    std::cerr << "failed: " << f.dst_scan_id << "/" << f.tumour_id << ": " << f.message << "\n";
  return result.results.empty() && !result.failures.empty() ? 1 : 0;
}

int cmd_train_cvc(const std::vector<std::string>& data_paths,
                  const std::vector<std::string>& manifest_paths, const PipelineFlags& flags,
                  const longiseg::ForestConfig& forest_cfg_in, const std::string& dump_path,
                  const std::string& out_path) {
  std::vector<longiseg::LabeledFeatures> rows;
  for (const auto& p : data_paths) {
    const auto more = longiseg::read_training_jsonl(p);
    rows.insert(rows.end(), more.begin(), more.end());
  }
  if (!manifest_paths.empty()) {
    const longiseg::PipelineConfig cfg = flags.resolve();
    const auto backend = flags.make_backend();
    for (const auto& p : manifest_paths) {
      const auto more =
          longiseg::generate_cvc_training_data(longiseg::load_manifest(p), cfg, *backend);
      rows.insert(rows.end(), more.begin(), more.end());
      std::cerr << p << ": " << more.size() << " labelled clicks\n";
    }
  }
  if (rows.empty())
    throw longiseg::invalid_argument_error("no training data; pass --data and/or --manifest");
  if (!dump_path.empty()) longiseg::write_training_jsonl(rows, dump_path);

  longiseg::ForestConfig fc = forest_cfg_in;
  if (flags.seed) fc.seed = *flags.seed;
  const longiseg::RandomForest forest = longiseg::RandomForest::train(longiseg::to_dataset(rows), fc);
  longiseg::save_forest(forest, out_path);
  std::cerr << "trained " << fc.n_trees << " trees on " << rows.size() << " rows -> " << out_path
            << "\n";
  return 0;
}

int cmd_eval(const std::string& manifest_path, const std::string& report_path,
             const std::string& pred_path, const std::string& gt_path, double fp_diameter,
             const std::string& out_path, const std::string& csv_path) {
  std::vector<longiseg::EvalRow> rows;
  json extras = json::object();

  if (!pred_path.empty() || !gt_path.empty()) {
    if (pred_path.empty() || gt_path.empty())
      throw longiseg::invalid_argument_error("--pred and --gt must be given together");
    const longiseg::Volume pred = longiseg::load_volume(pred_path);
    const longiseg::Volume gt = longiseg::load_volume(gt_path);
    rows.push_back({fs::path(pred_path).stem().string(), "-", longiseg::dice(pred, gt),
                    longiseg::count_false_positives(pred, gt, fp_diameter), "pred"});
  } else {
    if (manifest_path.empty() || report_path.empty())
      throw longiseg::invalid_argument_error("eval needs --manifest and --report (or --pred/--gt)");
    const longiseg::StudyManifest manifest = longiseg::load_manifest(manifest_path);
    const json report = load_json(report_path, "study report");
    const fs::path report_dir = fs::absolute(report_path).parent_path();
    const longiseg::PipelineConfig cfg =
        longiseg::PipelineConfig::from_json(report.at("config"));

    std::vector<double> guided_dice, unguided_dice;
    for (const auto& pair : report.at("pairs")) {
      const std::string dst = pair.at("dst").get<std::string>();
      const std::string tumour = pair.at("tumour_id").get<std::string>();
      const auto& entry = manifest.scan(dst);
      auto gt_it = entry.ground_truth_masks.find(tumour);
      if (gt_it == entry.ground_truth_masks.end()) continue;
      const longiseg::Volume gt = longiseg::resample_to_standard(
          longiseg::load_volume(gt_it->second), cfg.standard_spacing, longiseg::Interp::NEAREST);

      const longiseg::Volume mask =
          longiseg::load_volume(report_dir / pair.at("mask_path").get<std::string>());
      const double d = longiseg::dice(mask, gt);
      rows.push_back({dst, tumour, d, longiseg::count_false_positives(mask, gt, fp_diameter),
                      "guided"});
      guided_dice.push_back(d);

      if (pair.contains("unguided_prob_path")) {
        const longiseg::Volume prob =
            longiseg::load_volume(report_dir / pair.at("unguided_prob_path").get<std::string>());
        const longiseg::Volume umask = longiseg::binarize(prob, cfg.binarize_threshold);
        const double ud = longiseg::dice(umask, gt);
        rows.push_back({dst, tumour, ud,
                        longiseg::count_false_positives(umask, gt, fp_diameter), "unguided"});
        unguided_dice.push_back(ud);
      }
    }
    if (guided_dice.size() == unguided_dice.size() && guided_dice.size() >= 2) {
      try {
        const longiseg::PairedT t =
            longiseg::paired_t_statistic(guided_dice, unguided_dice);
        extras["paired_t_guided_vs_unguided"] = {{"t", t.t}, {"df", t.df}};
      } catch (const longiseg::invalid_argument_error&) {
        // zero-variance differences; nothing to report
      }
    }
  }

  json out = longiseg::eval_report_json(rows);
  out["fp_min_diameter_mm"] = fp_diameter;
  for (auto& [k, v] : extras.items()) out[k] = v;
  write_json(out, out_path);
  if (!csv_path.empty()) {
    std::ofstream f(csv_path, std::ios::trunc);
    f << longiseg::eval_report_csv(rows);
  }
  std::cerr << rows.size() << " eval row(s) -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"longiseg: longitudinal lesion segmentation by click propagation"};
  app.set_version_flag("--version", longiseg::kVersion);
  app.require_subcommand(1);
  std::function<int()> run;

  // gen-phantom
  {
    auto* cmd = app.add_subcommand("gen-phantom", "generate a synthetic longitudinal study");
    auto config = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto patient = std::make_shared<std::string>("phantom");
    auto seed = std::make_shared<std::optional<std::uint64_t>>();
    cmd->add_option("--config", *config, "phantom config JSON (defaults used when omitted)");
    cmd->add_option("--out", *out, "output directory")->required();
    cmd->add_option("--patient-id", *patient, "patient id written to the manifest");
    cmd->add_option("--seed", *seed, "seed override");
    cmd->callback([=, &run] {
      run = [=] { return cmd_gen_phantom(*config, *out, *seed, *patient); };
    });
  }

  // landmarks
  {
    auto* cmd = app.add_subcommand("landmarks", "extract skeletal landmarks from a bone label volume");
    auto labels = std::make_shared<std::string>();
    auto map = std::make_shared<std::string>();
    auto spacing = std::make_shared<std::string>();
    auto keep = std::make_shared<bool>(false);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--labels", *labels, "bone label volume (.nii/.nii.gz/.json)")->required();
    cmd->add_option("--map", *map, "bone label map JSON (default: built-in)");
    cmd->add_option("--spacing", *spacing, "standard spacing \"x,y,z\" mm (default 1.5,1.5,2.0)");
    cmd->add_flag("--keep-occluded", *keep, "skip the visibility filter");
    cmd->add_option("--out", *out, "output landmark JSON")->required();
    cmd->callback([=, &run] {
      run = [=] { return cmd_landmarks(*labels, *map, *spacing, *keep, *out); };
    });
  }

  // register
  {
    auto* cmd = app.add_subcommand("register", "fit the rigid transform between two landmark sets");
    auto src = std::make_shared<std::string>();
    auto dst = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--src", *src, "source landmark JSON")->required();
    cmd->add_option("--dst", *dst, "destination landmark JSON")->required();
    cmd->add_option("--out", *out, "output transform JSON")->required();
    cmd->callback([=, &run] { run = [=] { return cmd_register(*src, *dst, *out); }; });
  }

  // propagate
  {
    auto* cmd = app.add_subcommand("propagate", "propagate guidance from one scan to one other scan");
    auto manifest = std::make_shared<std::string>();
    auto source = std::make_shared<std::string>();
    auto dest = std::make_shared<std::string>();
    auto flags = std::make_shared<PipelineFlags>();
    auto clicks = std::make_shared<std::vector<std::string>>();
    auto click_voxels = std::make_shared<std::vector<std::string>>();
    auto masks = std::make_shared<std::vector<std::string>>();
    auto tumour_ids = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--manifest", *manifest, "study manifest JSON")->required();
    cmd->add_option("--source", *source, "source scan id")->required();
    cmd->add_option("--dest", *dest, "destination scan id")->required();
    cmd->add_option("--click", *clicks, "source click \"x,y,z\" in mm (repeatable)");
    cmd->add_option("--click-voxel", *click_voxels, "source click \"i,j,k\" in native voxels");
    cmd->add_option("--mask", *masks, "radiologist source mask volume (repeatable)");
    cmd->add_option("--tumour-ids", *tumour_ids, "comma-separated tumour ids for the inputs");
    cmd->add_option("--out", *out, "output directory")->required();
    flags->attach(cmd);
    cmd->callback([=, &run] {
      run = [=] {
        return cmd_propagate(*manifest, *source, *dest, *flags, *clicks, *click_voxels, *masks,
                             *tumour_ids, *out);
      };
    });
  }

  // run-study
  {
    auto* cmd = app.add_subcommand("run-study", "propagate guidance to every scan of a study");
    auto manifest = std::make_shared<std::string>();
    auto source = std::make_shared<std::string>();
    auto flags = std::make_shared<PipelineFlags>();
    auto clicks = std::make_shared<std::vector<std::string>>();
    auto click_voxels = std::make_shared<std::vector<std::string>>();
    auto masks = std::make_shared<std::vector<std::string>>();
    auto tumour_ids = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto jobs = std::make_shared<int>(1);
    cmd->add_option("--manifest", *manifest, "study manifest JSON")->required();
    cmd->add_option("--source", *source, "source scan id")->required();
    cmd->add_option("--click", *clicks, "source click \"x,y,z\" in mm (repeatable)");
    cmd->add_option("--click-voxel", *click_voxels, "source click \"i,j,k\" in native voxels");
    cmd->add_option("--mask", *masks, "radiologist source mask volume (repeatable)");
    cmd->add_option("--tumour-ids", *tumour_ids, "comma-separated tumour ids for the inputs");
    cmd->add_option("--out", *out, "output directory")->required();
    cmd->add_option("--jobs", *jobs, "parallel destination scans (default 1)")
        ->check(CLI::PositiveNumber);
    flags->attach(cmd);
    cmd->callback([=, &run] {
      run = [=] {
        return cmd_run_study(*manifest, *source, *flags, *clicks, *click_voxels, *masks,
                             *tumour_ids, *out, *jobs);
      };
    });
  }

  // train-cvc
  {
    auto* cmd = app.add_subcommand("train-cvc", "train the click validity classifier");
    auto data = std::make_shared<std::vector<std::string>>();
    auto manifests = std::make_shared<std::vector<std::string>>();
    auto flags = std::make_shared<PipelineFlags>();
    auto fc = std::make_shared<longiseg::ForestConfig>();
    auto dump = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--data", *data, "training JSONL of {features, label} (repeatable)");
    cmd->add_option("--manifest", *manifests,
                    "annotated study manifest to label clicks from (repeatable)");
    cmd->add_option("--trees", fc->n_trees, "number of trees (default 100)");
    cmd->add_option("--max-depth", fc->max_depth, "maximum tree depth (default 8)");
    cmd->add_option("--min-leaf", fc->min_leaf, "minimum samples per leaf (default 2)");
    cmd->add_option("--features-per-split", fc->features_per_split,
                    "random features per split (default 3)");
    cmd->add_option("--dump-data", *dump, "also write the assembled training JSONL here");
    cmd->add_option("--out", *out, "output forest JSON")->required();
    flags->attach(cmd, /*with_cvc=*/false);
    cmd->callback([=, &run] {
      run = [=] { return cmd_train_cvc(*data, *manifests, *flags, *fc, *dump, *out); };
    });
  }

  // eval
  {
    auto* cmd = app.add_subcommand("eval", "score masks against ground truth");
    auto manifest = std::make_shared<std::string>();
    auto report = std::make_shared<std::string>();
    auto pred = std::make_shared<std::string>();
    auto gt = std::make_shared<std::string>();
    auto fp = std::make_shared<double>(10.0);
    auto out = std::make_shared<std::string>();
    auto csv = std::make_shared<std::string>();
    cmd->add_option("--manifest", *manifest, "study manifest JSON");
    cmd->add_option("--report", *report, "run-study report JSON");
    cmd->add_option("--pred", *pred, "single predicted mask volume");
    cmd->add_option("--gt", *gt, "single ground-truth mask volume");
    cmd->add_option("--fp-diameter", *fp, "false-positive diameter threshold in mm (default 10)");
    cmd->add_option("--out", *out, "output eval JSON")->required();
    cmd->add_option("--csv", *csv, "also write rows as CSV");
    cmd->callback([=, &run] {
      run = [=] { return cmd_eval(*manifest, *report, *pred, *gt, *fp, *out, *csv); };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // exits 0 with help text
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage error
  }

  try {
    return run ? run() : 2;
  } catch (const longiseg::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
