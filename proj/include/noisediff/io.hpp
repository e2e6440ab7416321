// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "noisediff/gaussian_mixture.hpp"
#include "noisediff/highdim_stats.hpp"
#include "noisediff/mlp_score.hpp"

namespace noisediff::io {

namespace fs = std::filesystem;

/// Tensor file layout (all integers little-endian):
///
///   offset  size        field
///   0       4           magic "NDTN"
///   4       4           format version (u32, currently 1)
///   8       4           ndims (u32, >= 1)
///   12      8 * ndims   dims (u64 each, all > 0)
///   ...     8 * count   payload, row-major IEEE-754 binary64
///
/// A 2x3 tensor therefore occupies 4 + 4 + 4 + 16 + 48 = 76 bytes.
inline constexpr char tensor_magic[4] = {'N', 'D', 'T', 'N'};
inline constexpr std::uint32_t tensor_format_version = 1;

void write_tensor_record(std::ostream& out, const Tensor& t);
/// Reads one record. Throws FormatError with kind bad_magic, unsupported_version,
/// bad_header, truncated_payload or non_finite; never returns a partial tensor.
Tensor read_tensor_record(std::istream& in);

void write_tensor(const fs::path& path, const Tensor& t);
Tensor read_tensor(const fs::path& path);

/// Binary PGM (P5) for [H, W] or PPM (P6) for [H, W, 3]; values are clamped to
/// [0, 1] and quantized as floor(255 v + 0.5).
void write_image(const fs::path& path, const Tensor& t);
std::vector<unsigned char> encode_image(const Tensor& t);
/// Reads P5/P6 with maxval <= 255 into [0, 1].
Tensor read_image(const fs::path& path);

/// Loads a tensor from either format, chosen by extension (.pgm/.ppm images, anything else NDTN).
Tensor load_any(const fs::path& path);

/// Writes `bytes` to a sibling temporary file and renames it over `path`, so readers never
/// see a partially written file.
void write_file_atomic(const fs::path& path, const std::string& bytes);

/// Mixture description:
///   { "delta": 0.05, "weights": [..], "centers": [ "center_0.ndtn" | {"shape": [..], "data": [..]} ] }
/// String centers are tensor file paths relative to the JSON file.
GaussianMixture load_mixture(const fs::path& path);
GaussianMixture mixture_from_json(const nlohmann::json& j, const fs::path& base_dir);
/// Writes the JSON plus one tensor file per center (`center_<k>.ndtn` next to it).
void save_mixture(const fs::path& path, const GaussianMixture& model);

/// Checkpoint = consecutive tensor records in this order:
///   meta [4] = {data_dim, hidden, embed_width, data_std}, W1 [hidden, data_dim + 16], b1 [hidden],
///   W2 [hidden, hidden], b2 [hidden], W3 [data_dim, hidden], b3 [data_dim].
void save_checkpoint(const fs::path& path, const ScoreNetParams& params);
ScoreNetParams load_checkpoint(const fs::path& path);

std::string report_csv_header();
std::string report_csv_row(const StatReport& report);
nlohmann::json report_json(const StatReport& report);

}  // namespace noisediff::io
