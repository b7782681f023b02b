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

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "longiseg/error.hpp"
#include "longiseg/volume.hpp"

#include <json.hpp>

namespace longiseg {

static_assert(std::endian::native == std::endian::little,
              "volume I/O assumes a little-endian host");

namespace nifti {

// NIfTI-1, single-file variant. Only the subset this project needs: 3D,
// little-endian, datatypes uint8/int16/float32, axis-aligned geometry.
#pragma pack(push, 1)
struct Header {
  std::int32_t sizeof_hdr = 348;
  char data_type[10] = {};
  char db_name[18] = {};
  std::int32_t extents = 0;
  std::int16_t session_error = 0;
  char regular = 'r';
  char dim_info = 0;
  std::int16_t dim[8] = {};
  float intent_p1 = 0, intent_p2 = 0, intent_p3 = 0;
  std::int16_t intent_code = 0;
  std::int16_t datatype = 0;
  std::int16_t bitpix = 0;
  std::int16_t slice_start = 0;
  float pixdim[8] = {};
  float vox_offset = 352;
  float scl_slope = 1;
  float scl_inter = 0;
  std::int16_t slice_end = 0;
  char slice_code = 0;
  char xyzt_units = 2;  // millimetres
  float cal_max = 0, cal_min = 0;
  float slice_duration = 0, toffset = 0;
  std::int32_t glmax = 0, glmin = 0;
  char descrip[80] = {};
  char aux_file[24] = {};
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 1;
  float quatern_b = 0, quatern_c = 0, quatern_d = 0;
  float qoffset_x = 0, qoffset_y = 0, qoffset_z = 0;
  float srow_x[4] = {};
  float srow_y[4] = {};
  float srow_z[4] = {};
  char intent_name[16] = {};
  char magic[4] = {};
};
#pragma pack(pop)
static_assert(sizeof(Header) == 348, "NIfTI-1 header must be 348 bytes");

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;

}  // namespace nifti

namespace detail {

/// Read a whole file into memory; gzip streams are inflated transparently
/// (zlib's gz layer also passes plain files through unchanged).
inline std::vector<unsigned char> read_file_maybe_gz(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw format_error("cannot open file: " + path.string());
  std::vector<unsigned char> out;
  unsigned char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) out.insert(out.end(), buf, buf + n);
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw format_error("gzip stream error in " + path.string());
  return out;
}

inline void write_file_maybe_gz(const std::filesystem::path& path, const void* data,
                                std::size_t size, bool gzip) {
  if (gzip) {
    gzFile f = gzopen(path.string().c_str(), "wb6");
    if (!f) throw format_error("cannot open file for write: " + path.string());
    const auto* p = static_cast<const unsigned char*>(data);
    std::size_t off = 0;
    while (off < size) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(size - off, 1u << 20));
      if (gzwrite(f, p + off, chunk) != static_cast<int>(chunk)) {
        gzclose(f);
        throw format_error("gzip write error: " + path.string());
      }
      off += chunk;
    }
    gzclose(f);
  } else {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw format_error("cannot open file for write: " + path.string());
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!f) throw format_error("short write: " + path.string());
  }
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

/// Parse a NIfTI-1 single file (optionally gzipped) already read into memory.
inline Volume parse_nifti(const std::vector<unsigned char>& bytes, const std::string& name) {
  if (bytes.size() < sizeof(nifti::Header))
    throw format_error(name + ": file shorter than the 348-byte NIfTI-1 header");
  nifti::Header h;
  std::memcpy(&h, bytes.data(), sizeof(h));

  if (h.sizeof_hdr != 348) {
    // 1543569408 is 348 byte-swapped: a big-endian file.
    if (h.sizeof_hdr == 1543569408)
      throw format_error(name + ": sizeof_hdr indicates a big-endian file (unsupported)");
    throw format_error(name + ": sizeof_hdr is " + std::to_string(h.sizeof_hdr) + ", expected 348");
  }
  if (std::memcmp(h.magic, "n+1", 4) != 0)
    throw format_error(name + ": magic is not \"n+1\\0\" (only single-file NIfTI-1 is supported)");
  if (h.dim[0] < 3 || h.dim[0] > 7)
    throw format_error(name + ": dim[0] = " + std::to_string(h.dim[0]) + ", expected a 3D volume");
  for (int i = 4; i <= h.dim[0]; ++i)
    if (h.dim[i] > 1)
      throw format_error(name + ": dim[" + std::to_string(i) + "] > 1 (4D volumes unsupported)");

  ElementKind kind;
  std::size_t elem_size;
  switch (h.datatype) {
    case nifti::kDtInt16: kind = ElementKind::HU_INT; elem_size = 2; break;
    case nifti::kDtFloat32: kind = ElementKind::PROB_FLOAT; elem_size = 4; break;
    case nifti::kDtUint8: kind = ElementKind::LABEL_UINT; elem_size = 1; break;
    default:
      throw format_error(name + ": datatype " + std::to_string(h.datatype) +
                         " unsupported (want uint8/int16/float32)");
  }

  const Index3 dims{h.dim[1], h.dim[2], h.dim[3]};
  if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0)
    throw format_error(name + ": non-positive dim");
  const Vec3 spacing{h.pixdim[1], h.pixdim[2], h.pixdim[3]};
  if (!(spacing.x > 0 && spacing.y > 0 && spacing.z > 0))
    throw format_error(name + ": pixdim must be positive");

  if (!((h.scl_slope == 0.0f || h.scl_slope == 1.0f) && h.scl_inter == 0.0f))
    throw format_error(name + ": scl_slope/scl_inter rescaling unsupported");

  Vec3 origin{0, 0, 0};
  if (h.sform_code > 0) {
    const float* rows[3] = {h.srow_x, h.srow_y, h.srow_z};
    const double sp[3] = {spacing.x, spacing.y, spacing.z};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        const double v = rows[r][c];
        if (r == c) {
          if (std::abs(v - sp[r]) > 1e-3 * sp[r])
            throw format_error(name + ": srow diagonal does not match positive pixdim " +
                               "(flipped or scaled sform unsupported)");
        } else if (std::abs(v) > 1e-3 * sp[r]) {
          throw format_error(name + ": srow has off-diagonal terms (non-axis-aligned sform rejected)");
        }
      }
    }
    origin = {h.srow_x[3], h.srow_y[3], h.srow_z[3]};
  }

  const std::size_t offset = static_cast<std::size_t>(h.vox_offset);
  if (h.vox_offset < 348 || static_cast<float>(offset) != h.vox_offset)
    throw format_error(name + ": vox_offset " + std::to_string(h.vox_offset) + " is invalid");
  const std::size_t n = static_cast<std::size_t>(dims.x) * dims.y * dims.z;
  if (bytes.size() < offset + n * elem_size)
    throw format_error(name + ": payload truncated, need " + std::to_string(n * elem_size) +
                       " bytes at vox_offset");

  std::vector<float> data(n);
  const unsigned char* p = bytes.data() + offset;
  switch (h.datatype) {
    case nifti::kDtInt16: {
      for (std::size_t i = 0; i < n; ++i) {
        std::int16_t v;
        std::memcpy(&v, p + 2 * i, 2);
        data[i] = static_cast<float>(v);
      }
      break;
    }
    case nifti::kDtFloat32:
      std::memcpy(data.data(), p, n * 4);
      break;
    case nifti::kDtUint8:
      for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<float>(p[i]);
      break;
  }

  Volume vol(dims, spacing, origin, kind, std::move(data));
  vol.validate_values();
  return vol;
}

inline Volume load_nifti(const std::filesystem::path& path) {
  return parse_nifti(detail::read_file_maybe_gz(path), path.filename().string());
}

/// Serialize to the NIfTI-1 single-file subset. HU_INT data is quantized to
/// int16 with round-to-nearest (CT volumes are integral natively, so save
/// then load is bit-exact for them).
inline std::vector<unsigned char> serialize_nifti(const Volume& vol) {
  nifti::Header h;
  std::memcpy(h.magic, "n+1", 4);
  h.dim[0] = 3;
  h.dim[1] = static_cast<std::int16_t>(vol.dims().x);
  h.dim[2] = static_cast<std::int16_t>(vol.dims().y);
  h.dim[3] = static_cast<std::int16_t>(vol.dims().z);
  for (int i = 4; i < 8; ++i) h.dim[i] = 1;
  h.pixdim[0] = 1;
  h.pixdim[1] = static_cast<float>(vol.spacing().x);
  h.pixdim[2] = static_cast<float>(vol.spacing().y);
  h.pixdim[3] = static_cast<float>(vol.spacing().z);
  h.sform_code = 1;
  h.srow_x[0] = h.pixdim[1];
  h.srow_y[1] = h.pixdim[2];
  h.srow_z[2] = h.pixdim[3];
  h.srow_x[3] = static_cast<float>(vol.origin().x);
  h.srow_y[3] = static_cast<float>(vol.origin().y);
  h.srow_z[3] = static_cast<float>(vol.origin().z);

  std::size_t elem_size;
  switch (vol.kind()) {
    case ElementKind::HU_INT: h.datatype = nifti::kDtInt16; h.bitpix = 16; elem_size = 2; break;
    case ElementKind::PROB_FLOAT: h.datatype = nifti::kDtFloat32; h.bitpix = 32; elem_size = 4; break;
    case ElementKind::LABEL_UINT: h.datatype = nifti::kDtUint8; h.bitpix = 8; elem_size = 1; break;
    default: throw invalid_argument_error("serialize_nifti: bad element kind");
  }

  const std::size_t n = vol.size();
  std::vector<unsigned char> out(352 + n * elem_size, 0);
  std::memcpy(out.data(), &h, sizeof(h));
  unsigned char* p = out.data() + 352;
  switch (vol.kind()) {
    case ElementKind::HU_INT:
      for (std::size_t i = 0; i < n; ++i) {
        const long r = std::lrintf(vol.data()[i]);
        if (r < -32768 || r > 32767)
          throw format_error("serialize_nifti: HU value " + std::to_string(vol.data()[i]) +
                             " out of int16 range");
        const std::int16_t v = static_cast<std::int16_t>(r);
        std::memcpy(p + 2 * i, &v, 2);
      }
      break;
    case ElementKind::PROB_FLOAT:
      std::memcpy(p, vol.data().data(), n * 4);
      break;
    case ElementKind::LABEL_UINT:
      for (std::size_t i = 0; i < n; ++i) {
        const float v = vol.data()[i];
        if (v < 0.0f || v > 255.0f || v != std::floor(v))
          throw format_error("serialize_nifti: label value " + std::to_string(v) +
                             " not representable as uint8");
        p[i] = static_cast<unsigned char>(v);
      }
      break;
  }
  return out;
}

inline void save_nifti(const Volume& vol, const std::filesystem::path& path) {
  const auto bytes = serialize_nifti(vol);
  detail::write_file_maybe_gz(path, bytes.data(), bytes.size(),
                              detail::ends_with(path.string(), ".gz"));
}

// ---------------------------------------------------------------------------
// Raw + JSON sidecar: <name>.json describing a dense <name>.raw payload.
// Canonical fixture format; trivially diffable and endian-explicit.
// ---------------------------------------------------------------------------

inline const char* dtype_for_kind(ElementKind k) {
  switch (k) {
    case ElementKind::HU_INT: return "int16";
    case ElementKind::PROB_FLOAT: return "float32";
    case ElementKind::LABEL_UINT: return "uint8";
  }
  return "?";
}

inline Volume load_raw_json(const std::filesystem::path& json_path) {
  std::ifstream f(json_path);
  if (!f) throw format_error("cannot open sidecar: " + json_path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw format_error(json_path.string() + ": invalid JSON: " + e.what());
  }

  auto require = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw format_error(json_path.string() + ": missing field \"" + key + "\"");
    return j.at(key);
  };

  const auto& jd = require("dims");
  const auto& js = require("spacing");
  const auto& jo = require("origin");
  if (!jd.is_array() || jd.size() != 3) throw format_error(json_path.string() + ": field \"dims\" must be [3]");
  if (!js.is_array() || js.size() != 3) throw format_error(json_path.string() + ": field \"spacing\" must be [3]");
  if (!jo.is_array() || jo.size() != 3) throw format_error(json_path.string() + ": field \"origin\" must be [3]");
  const Index3 dims{jd[0].get<int>(), jd[1].get<int>(), jd[2].get<int>()};
  const Vec3 spacing{js[0].get<double>(), js[1].get<double>(), js[2].get<double>()};
  const Vec3 origin{jo[0].get<double>(), jo[1].get<double>(), jo[2].get<double>()};

  const ElementKind kind = element_kind_from_string(require("element_kind").get<std::string>());
  const std::string dtype = require("data_dtype").get<std::string>();
  if (dtype != dtype_for_kind(kind))
    throw format_error(json_path.string() + ": data_dtype \"" + dtype + "\" does not match element_kind " +
                       to_string(kind));
  if (require("byte_order").get<std::string>() != "LE")
    throw format_error(json_path.string() + ": byte_order must be \"LE\"");

  const std::filesystem::path data_path =
      json_path.parent_path() / require("data_file").get<std::string>();
  std::ifstream rf(data_path, std::ios::binary);
  if (!rf) throw format_error("cannot open data_file: " + data_path.string());
  std::vector<unsigned char> payload((std::istreambuf_iterator<char>(rf)),
                                     std::istreambuf_iterator<char>());

  if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0)
    throw format_error(json_path.string() + ": field \"dims\" must be positive");
  const std::size_t n = static_cast<std::size_t>(dims.x) * dims.y * dims.z;
  const std::size_t elem_size = kind == ElementKind::HU_INT ? 2 : (kind == ElementKind::PROB_FLOAT ? 4 : 1);
  if (payload.size() != n * elem_size)
    throw format_error(json_path.string() + ": data_file length " + std::to_string(payload.size()) +
                       " does not match dims product (" + std::to_string(n * elem_size) + " bytes)");

  std::vector<float> data(n);
  switch (kind) {
    case ElementKind::HU_INT:
      for (std::size_t i = 0; i < n; ++i) {
        std::int16_t v;
        std::memcpy(&v, payload.data() + 2 * i, 2);
        data[i] = static_cast<float>(v);
      }
      break;
    case ElementKind::PROB_FLOAT:
      std::memcpy(data.data(), payload.data(), n * 4);
      break;
    case ElementKind::LABEL_UINT:
      for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<float>(payload[i]);
      break;
  }
  Volume vol(dims, spacing, origin, kind, std::move(data));
  vol.validate_values();
  return vol;
}

inline void save_raw_json(const Volume& vol, const std::filesystem::path& json_path) {
  const std::string stem = json_path.stem().string();
  const std::filesystem::path raw_path = json_path.parent_path() / (stem + ".raw");

  nlohmann::json j;
  j["dims"] = {vol.dims().x, vol.dims().y, vol.dims().z};
  j["spacing"] = {vol.spacing().x, vol.spacing().y, vol.spacing().z};
  j["origin"] = {vol.origin().x, vol.origin().y, vol.origin().z};
  j["element_kind"] = to_string(vol.kind());
  j["data_file"] = stem + ".raw";
  j["data_dtype"] = dtype_for_kind(vol.kind());
  j["byte_order"] = "LE";

  const std::size_t n = vol.size();
  std::vector<unsigned char> payload;
  switch (vol.kind()) {
    case ElementKind::HU_INT: {
      payload.resize(n * 2);
      for (std::size_t i = 0; i < n; ++i) {
        const long r = std::lrintf(vol.data()[i]);
        if (r < -32768 || r > 32767)
          throw format_error("save_raw_json: HU value out of int16 range");
        const std::int16_t v = static_cast<std::int16_t>(r);
        std::memcpy(payload.data() + 2 * i, &v, 2);
      }
      break;
    }
    case ElementKind::PROB_FLOAT:
      payload.resize(n * 4);
      std::memcpy(payload.data(), vol.data().data(), n * 4);
      break;
    case ElementKind::LABEL_UINT:
      payload.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const float v = vol.data()[i];
        if (v < 0.0f || v > 255.0f || v != std::floor(v))
          throw format_error("save_raw_json: label value not representable as uint8");
        payload[i] = static_cast<unsigned char>(v);
      }
      break;
  }

  detail::write_file_maybe_gz(raw_path, payload.data(), payload.size(), false);
  std::ofstream jf(json_path, std::ios::trunc);
  if (!jf) throw format_error("cannot open sidecar for write: " + json_path.string());
  jf << j.dump(2) << "\n";
}

/// Load a volume, dispatching on extension: .nii / .nii.gz -> NIfTI,
/// .json -> raw/JSON sidecar.
inline Volume load_volume(const std::filesystem::path& path) {
  const std::string s = path.string();
  if (detail::ends_with(s, ".nii") || detail::ends_with(s, ".nii.gz")) return load_nifti(path);
  if (detail::ends_with(s, ".json")) return load_raw_json(path);
  throw format_error("load_volume: unsupported extension on " + s);
}

inline void save_volume(const Volume& vol, const std::filesystem::path& path) {
  const std::string s = path.string();
  if (detail::ends_with(s, ".nii") || detail::ends_with(s, ".nii.gz")) {
    save_nifti(vol, path);
    return;
  }
  if (detail::ends_with(s, ".json")) {
    save_raw_json(vol, path);
    return;
  }
  throw format_error("save_volume: unsupported extension on " + s);
}

}  // namespace longiseg
