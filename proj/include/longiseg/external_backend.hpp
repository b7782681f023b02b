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

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>

#include "longiseg/error.hpp"
#include "longiseg/segmenter.hpp"
#include "longiseg/volume_io.hpp"

namespace longiseg {

/// Adapter for real segmentation models living in another process. Protocol:
///
///   <cmd> --input <scan.nii> --clicks <clicks.json> --output <prob.nii>
///
/// clicks.json is {"clicks": [{"pos_mm": [x,y,z]}, ...], "mode": "guided"|
/// "unguided"}; the output must be a float32 NIfTI on the input grid. Each
/// call gets its own workspace directory, so concurrent calls do not collide.
class ExternalBackend final : public SegmenterBackend {
 public:
  explicit ExternalBackend(std::string cmd_template,
                           std::filesystem::path work_root = std::filesystem::temp_directory_path())
      : cmd_(std::move(cmd_template)), work_root_(std::move(work_root)) {
    if (cmd_.empty()) throw invalid_argument_error("external backend: empty command template");
  }

  Volume unguided(const Volume& scan) override { return run(scan, {}, "unguided"); }

  Volume guided(const Volume& scan, std::span<const Click> clicks) override {
    if (clicks.empty()) return unguided(scan);
    return run(scan, clicks, "guided");
  }

  std::string name() const override { return "external"; }

 private:
  Volume run(const Volume& scan, std::span<const Click> clicks, const char* mode) {
    namespace fs = std::filesystem;
    static std::atomic<std::uint64_t> counter{0};
    const fs::path dir = work_root_ / ("segjob-" + std::to_string(::getpid()) + "-" +
                                       std::to_string(counter.fetch_add(1)));
    fs::create_directories(dir);

    const fs::path scan_path = dir / "scan.nii";
    const fs::path clicks_path = dir / "clicks.json";
    const fs::path out_path = dir / "prob.nii";
    save_nifti(scan, scan_path);
    {
      std::ofstream f(clicks_path, std::ios::trunc);
      f << clicks_to_json(clicks, mode).dump(2) << "\n";
    }

    const std::string cmdline = cmd_ + " --input " + scan_path.string() + " --clicks " +
                                clicks_path.string() + " --output " + out_path.string() +
                                " 2>&1";
    std::string output;
    int exit_code = -1;
    {
      FILE* pipe = ::popen(cmdline.c_str(), "r");
      if (!pipe) throw backend_error("external backend: cannot launch: " + cmdline);
      char buf[4096];
      std::size_t n;
      while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, n);
      const int status = ::pclose(pipe);
      if (WIFEXITED(status)) exit_code = WEXITSTATUS(status);
    }

    if (exit_code != 0)
      throw backend_error("external backend exited with code " + std::to_string(exit_code) +
                          "\ncommand: " + cmdline + "\noutput:\n" + output);
    if (!fs::exists(out_path))
      throw backend_error("external backend produced no output file " + out_path.string() +
                          "\noutput:\n" + output);

    Volume prob = load_nifti(out_path);
    if (prob.kind() != ElementKind::PROB_FLOAT)
      throw backend_error("external backend: output must be float32, got " +
                          std::string(to_string(prob.kind())));
    if (!prob.same_grid(scan, 1e-4))
      throw backend_error("external backend: output grid does not match the input scan");

    std::error_code ec;
    fs::remove_all(dir, ec);  // keep nothing on success; failures returned above keep the dir
    return prob;
  }

  std::string cmd_;
  std::filesystem::path work_root_;
};

}  // namespace longiseg
