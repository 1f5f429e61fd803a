#pragma once

#include "corgs/gaussian_field.hpp"

#include <filesystem>
#include <iosfwd>

namespace corgs {

inline constexpr int kFieldFormatVersion = 1;

/// Field files are a single JSON header line followed by raw little-endian
/// arrays in header order:
///
///   {"format":"corgs-field","version":1,"count":N,"arrays":[
///     {"name":"positions","dtype":"<f8","shape":[N,3]}, ...]}\n
///   <positions><log_scales><rotations><opacities><colors>
///
/// Values are the stored (pre-activation) parameters. The reader accepts
/// "<f4" and "<f8" arrays; the writer always emits "<f8" so round trips are
/// bit-exact.
void save_field(const GaussianField& field, std::ostream& out);
void save_field(const GaussianField& field, const std::filesystem::path& path);

/// Throws FormatError (with byte offset) on malformed headers, version
/// mismatch or truncated payloads.
GaussianField load_field(std::istream& in);
GaussianField load_field(const std::filesystem::path& path);

}  // namespace corgs
