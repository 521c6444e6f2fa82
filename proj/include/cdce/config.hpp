#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdce/energy.hpp"
#include "cdce/reconstruct.hpp"
#include "cdce/sensing.hpp"

namespace cdce {

struct DatasetConfig {
  std::string name = "venus";
  bool stereo = true;
  std::string left, right, gt;  // empty: registry stand-in for `name`
  int gt_scale = 8;
  int wx = 20, wy = 0;
  int block = 4;
  double lambda = 1.0, tau = 2.0;
  std::uint64_t synth_seed = 7;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::vector<double> rates{0.1, 0.2, 0.3, 0.5, 0.7, 0.9};
  std::vector<std::uint64_t> seeds{1};
  MatrixKind kind = MatrixKind::ScrambledOrthonormal;
  bool same_matrix = false;
  std::vector<int> quantize_bits{0};
  ReconParams recon;
  std::string out_dir = "out";
  int threads = 2;
  int max_sweeps = 5;

  EnergyParams energy(Granularity g) const;
  void validate() const;
  std::string dump() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_text(const std::string& text, const std::string& origin = "<text>");

}  // namespace cdce
