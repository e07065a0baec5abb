#pragma once

#include <filesystem>

#include "fusiongen/trial.hpp"

namespace fusiongen {

// On-disk container: a directory with manifest.json plus one raw file per
// trial (C*T IEEE-754 float32 little-endian, channel-major). Trial files with
// a .csv extension are imported as C rows x T comma-separated columns.

/// Writes the dataset under `dir` (created if needed). Values are stored at
/// 32-bit precision, so load(save(ds)) equals ds at float precision.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// Reads a dataset written by save_dataset (or a hand-exported container).
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace fusiongen
