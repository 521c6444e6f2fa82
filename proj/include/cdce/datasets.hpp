#pragma once

#include <string>

#include "cdce/config.hpp"
#include "cdce/image.hpp"
#include "cdce/motion.hpp"

namespace cdce {

struct Dataset {
  DatasetConfig cfg;
  Image I1, I2;
  GroundTruth gt;
  bool has_gt = false;
  bool synthetic = false;
};

// Per-dataset defaults (window, ground-truth scale, tuned energy weights).
// Known names: venus, tsukuba, yosemite, grove, mequon.
DatasetConfig default_dataset_config(const std::string& name);

// Loads the configured files when paths are set; otherwise builds the named
// deterministic stand-in scene (same resolution, displacement range and
// ground-truth conventions as the original data).
Dataset load_dataset(const DatasetConfig& cfg);

Dataset synthesize_dataset(const std::string& name, std::uint64_t seed);

}  // namespace cdce
