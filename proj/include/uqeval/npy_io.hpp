#pragma once

#include <filesystem>

#include "uqeval/volume.hpp"

namespace uqeval {

// npy v1.0 reader/writer for 3D arrays.
//
// Written files are always little-endian, C-order, version 1.0:
// probability/uncertainty volumes as '<f4', binary volumes as '|u1'.
// The reader accepts exactly those dtypes ('|u1' only for binary masks)
// and validates values against the requested kind.

Volume3D load_array(const std::filesystem::path& path, VolumeKind kind);

void save_array(const Volume3D& volume, const std::filesystem::path& path);

} // namespace uqeval
