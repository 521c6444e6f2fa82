#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cdce/energy.hpp"
#include "cdce/motion.hpp"
#include "cdce/sensing.hpp"

namespace cdce {

struct LabelSpace {
  std::vector<std::pair<int, int>> labels;  // (mh, mv)

  // Nonnegative disparities d in [0, wx] (signed adds [-wx, -1]).
  static LabelSpace stereo(int wx, bool signed_disparities = false);
  // All pairs with |mh| <= wx, |mv| <= wy.
  static LabelSpace flow(int wx, int wy);

  void validate() const;  // non-empty, contains (0,0), no duplicates
};

// min(|dmh|+|dmv|, tau) is a metric on the label set; checked exhaustively
// before every optimizer run so each expansion graph stays submodular.
void verify_label_metric(const LabelSpace& L, double tau);

enum class OptimizeMode { AlphaExpansion, Icm, Exhaustive };
OptimizeMode mode_from_name(const std::string& name);

struct TraceRecord {
  int iteration = 0;
  int mh = 0, mv = 0;   // label expanded ("sweep" rows use the current zero label)
  bool accepted = false;
  double exact_energy = 0.0;
  double elapsed_ms = 0.0;
};

struct OptimizerTrace {
  std::vector<TraceRecord> records;
  double wall_ms = 0.0;

  bool accepted_energies_non_increasing() const;
};

void save_trace_csv(const std::string& path, const OptimizerTrace& t);

struct OptimizeResult {
  MotionField field;
  OptimizerTrace trace;
};

// Minimizes data_cost_compressed + lambda * smoothness over the label space.
OptimizeResult optimize(const MeasurementSet& Y1, const MeasurementSet& Y2,
                        const SensingMatrix& S1, const SensingMatrix& S2,
                        const EnergyParams& p, const LabelSpace& L,
                        OptimizeMode mode, int max_sweeps = 5);

// Same machinery with the exact per-pixel image-domain data cost.
OptimizeResult image_domain_optimize(const Image& I1, const Image& I2,
                                     const EnergyParams& p, const LabelSpace& L,
                                     OptimizeMode mode, int max_sweeps = 5);

}  // namespace cdce
