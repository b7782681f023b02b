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

#include <stdexcept>
#include <string>

namespace longiseg {

/// Base of every error thrown by the library.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A precondition on an argument was violated.
class invalid_argument_error : public error {
 public:
  using error::error;
};

/// A file could not be parsed: malformed header, bad schema, size mismatch.
/// The message names the offending field.
class format_error : public error {
 public:
  using error::error;
};

/// A coordinate fell outside the volume grid.
class out_of_bounds_error : public error {
 public:
  using error::error;
};

/// Two volumes that must share a grid do not.
class grid_mismatch_error : public error {
 public:
  using error::error;
};

/// Fewer than 3 landmark correspondences between two scans.
class insufficient_landmarks_error : public error {
 public:
  using error::error;
};

/// Correspondences are (near-)collinear; no unique rigid fit exists.
class degenerate_geometry_error : public error {
 public:
  using error::error;
};

/// An operation over a mask requires at least one foreground voxel.
class empty_mask_error : public error {
 public:
  using error::error;
};

/// A source click landed where the guided segmenter found nothing.
class no_tumour_at_click_error : public error {
 public:
  using error::error;
};

/// The external segmenter process failed; message carries its output.
class backend_error : public error {
 public:
  using error::error;
};

/// Random-forest training cannot proceed (e.g. single-class dataset).
class training_error : public error {
 public:
  using error::error;
};

/// Phantom generation produced an inconsistent scene.
class generation_error : public error {
 public:
  using error::error;
};

}  // namespace longiseg
