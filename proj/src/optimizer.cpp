#include "cdce/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <set>

#include "cdce/errors.hpp"
#include "cdce/max_flow.hpp"
#include "cdce/warp.hpp"

namespace cdce {

LabelSpace LabelSpace::stereo(int wx, bool signed_disparities) {
  LabelSpace L;
  for (int d = signed_disparities ? -wx : 0; d <= wx; ++d) L.labels.emplace_back(d, 0);
  return L;
}

LabelSpace LabelSpace::flow(int wx, int wy) {
  LabelSpace L;
  for (int mv = -wy; mv <= wy; ++mv)
    for (int mh = -wx; mh <= wx; ++mh) L.labels.emplace_back(mh, mv);
  return L;
}

void LabelSpace::validate() const {
  if (labels.empty()) throw ConfigError("LabelSpace: empty");
  const std::set<std::pair<int, int>> uniq(labels.begin(), labels.end());
  if (uniq.size() != labels.size()) throw ConfigError("LabelSpace: duplicate labels");
  if (!uniq.count({0, 0})) throw ConfigError("LabelSpace: must contain (0,0)");
}

namespace {

double pair_cost(std::pair<int, int> a, std::pair<int, int> b, double tau) {
  return std::min<double>(std::abs(a.first - b.first) + std::abs(a.second - b.second), tau);
}

}  // namespace

void verify_label_metric(const LabelSpace& L, double tau) {
  for (const auto& a : L.labels)
    for (const auto& b : L.labels)
      for (const auto& c : L.labels)
        if (pair_cost(a, c, tau) > pair_cost(a, b, tau) + pair_cost(b, c, tau) + 1e-12)
          throw NumericalError("label metric violates the triangle inequality");
}

OptimizeMode mode_from_name(const std::string& name) {
  if (name == "alpha-expansion") return OptimizeMode::AlphaExpansion;
  if (name == "icm") return OptimizeMode::Icm;
  if (name == "exhaustive") return OptimizeMode::Exhaustive;
  throw ConfigError("unknown optimizer mode: " + name);
}

bool OptimizerTrace::accepted_energies_non_increasing() const {
  double last = std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    if (!r.accepted) continue;
    if (r.exact_energy > last) return false;
    last = r.exact_energy;
  }
  return true;
}

void save_trace_csv(const std::string& path, const OptimizerTrace& t) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << "iteration,label,accepted,exact_energy,elapsed_ms\n";
  out.precision(12);
  for (const auto& r : t.records)
    out << r.iteration << "," << r.mh << ";" << r.mv << "," << (r.accepted ? 1 : 0) << ","
        << r.exact_energy << "," << r.elapsed_ms << "\n";
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Data-term interface the move-making engines run against. Smoothness is
// handled by the engine itself; models only see the data cost.
class DataModel {
 public:
  virtual ~DataModel() = default;
  virtual double exact_data(const MotionField& field) const = 0;
  // Change of the data cost when cell (cr, cc) alone switches to (mh, mv),
  // all other cells frozen at `field`.
  virtual double cell_flip_delta(const MotionField& field, int cr, int cc, int mh,
                                 int mv) const = 0;
  // Per-cell flip deltas for a whole expansion on one label.
  virtual Eigen::MatrixXd flip_deltas(const MotionField& field, int mh, int mv) const = 0;
  // Cached state follows the new field (called after accepted moves).
  virtual void commit(const MotionField& field) = 0;
  // Incremental state update for a single-cell move (ICM path).
  virtual void apply_cell_move(const MotionField& field, int cr, int cc, int mh, int mv) = 0;
};

// Compressed-domain model: residuals of Y2 against Phi2 * warp(preimage(Y1)).
// Single-pixel flips are rank-one residual updates through one column of
// phi2^k; cross terms between pixels flipped together are dropped and the
// exact-energy safeguard in the engine rejects any move they mislead.
class CompressedModel : public DataModel {
 public:
  CompressedModel(const MeasurementSet& Y1, const MeasurementSet& Y2,
                  const SensingMatrix& S1, const SensingMatrix& S2)
      : eval_(Y1, Y2, S1, S2),
        S2_(&S2),
        y2_rows_(Y2.y.reshaped(S2.M, S2.N1)),
        col_norms_(S2.column_norms_squared()) {}

  const Image& pre1() const { return eval_.preimage1(); }

  double exact_data(const MotionField& field) const override {
    return eval_.data_cost(field);
  }

  void commit(const MotionField& field) override {
    warped_ = predict(build_warp(field), eval_.preimage1());
    res_ = y2_rows_ - measure(warped_, *S2_).y.reshaped(S2_->M, S2_->N1);
    // G(k,l) = phi2^k column l  dot  residual row k.
    G_ = preimage_rows(res_, *S2_);
  }

  Eigen::MatrixXd flip_deltas(const MotionField& field, int mh, int mv) const override {
    const Image& pre = eval_.preimage1();
    const int n1 = static_cast<int>(pre.rows()), n2 = static_cast<int>(pre.cols());
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(field.cell_rows(), field.cell_cols());
    for (int k = 0; k < n1; ++k) {
      const int sr = std::clamp(k + mv, 0, n1 - 1);
      const int ck = field.cell_row_of(k);
      for (int l = 0; l < n2; ++l) {
        const double dv = pre(sr, std::clamp(l + mh, 0, n2 - 1)) - warped_(k, l);
        if (dv == 0.0) continue;
        cost(ck, field.cell_col_of(l)) += dv * dv * col_norms_(k, l) - 2.0 * dv * G_(k, l);
      }
    }
    return cost;
  }

  double cell_flip_delta(const MotionField& field, int cr, int cc, int mh,
                         int mv) const override {
    const Image& pre = eval_.preimage1();
    const int n1 = static_cast<int>(pre.rows()), n2 = static_cast<int>(pre.cols());
    const int b = field.granularity == Granularity::Pixel ? 1 : field.block;
    const int k0 = cr * b, l0 = cc * b;
    const int k1 = std::min(n1, k0 + b), l1 = std::min(n2, l0 + b);
    double delta = 0.0;
    Eigen::VectorXd d(S2_->M);
    for (int k = k0; k < k1; ++k) {
      // d = sum_l phi2^k[:,l] * dv_l over the cell's columns, exactly.
      d.setZero();
      const int sr = std::clamp(k + mv, 0, n1 - 1);
      bool touched = false;
      for (int l = l0; l < l1; ++l) {
        const double dv = pre(sr, std::clamp(l + mh, 0, n2 - 1)) - warped_(k, l);
        if (dv == 0.0) continue;
        touched = true;
        add_column(k, l, dv, d);
      }
      if (touched) delta += d.squaredNorm() - 2.0 * res_.col(k).dot(d);
    }
    return delta;
  }

  // res_k -= d after an ICM cell move; keeps G for expansions stale-free by
  // recomputing on commit only (ICM does not read G).
  void apply_cell_move(const MotionField& field, int cr, int cc, int mh, int mv) override {
    const Image& pre = eval_.preimage1();
    const int n1 = static_cast<int>(pre.rows()), n2 = static_cast<int>(pre.cols());
    const int b = field.granularity == Granularity::Pixel ? 1 : field.block;
    const int k0 = cr * b, l0 = cc * b;
    const int k1 = std::min(n1, k0 + b), l1 = std::min(n2, l0 + b);
    Eigen::VectorXd d(S2_->M);
    for (int k = k0; k < k1; ++k) {
      d.setZero();
      const int sr = std::clamp(k + mv, 0, n1 - 1);
      for (int l = l0; l < l1; ++l) {
        const double v = pre(sr, std::clamp(l + mh, 0, n2 - 1));
        const double dv = v - warped_(k, l);
        if (dv == 0.0) continue;
        add_column(k, l, dv, d);
        warped_(k, l) = v;
      }
      res_.col(k) -= d;
    }
  }

 private:
  void add_column(int k, int l, double scale, Eigen::VectorXd& acc) const {
    if (S2_->kind == MatrixKind::ScrambledOrthonormal) {
      const double s = scale * S2_->signs(l, k);
      for (int i = 0; i < S2_->M; ++i) acc(i) += s * S2_->dct(S2_->select(i, k), l);
    } else {
      acc += scale * S2_->blocks[static_cast<size_t>(k)].col(l);
    }
  }

  CompressedEval eval_;
  const SensingMatrix* S2_;
  Eigen::MatrixXd y2_rows_;   // M x N1
  Eigen::MatrixXd col_norms_; // N1 x N2
  Image warped_;              // current warp of the pre-image
  Eigen::MatrixXd res_;       // M x N1 residuals
  Eigen::MatrixXd G_;         // N1 x N2 column/residual dots
};

// Image-domain model: the data term is per-pixel separable and exact.
class ImageModel : public DataModel {
 public:
  ImageModel(const Image& I1, const Image& I2) : I1_(&I1), I2_(&I2) {
    if (I1.rows() != I2.rows() || I1.cols() != I2.cols())
      throw ShapeError("image_domain_optimize: image dimensions differ");
  }

  double exact_data(const MotionField& field) const override {
    return data_cost_image(field, *I1_, *I2_);
  }

  void commit(const MotionField& field) override {
    const int n1 = static_cast<int>(I1_->rows()), n2 = static_cast<int>(I1_->cols());
    cur_.resize(n1, n2);
    for (int k = 0; k < n1; ++k)
      for (int l = 0; l < n2; ++l) cur_(k, l) = pixel_cost(k, l, field.mh_at(k, l), field.mv_at(k, l));
  }

  Eigen::MatrixXd flip_deltas(const MotionField& field, int mh, int mv) const override {
    const int n1 = static_cast<int>(I1_->rows()), n2 = static_cast<int>(I1_->cols());
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(field.cell_rows(), field.cell_cols());
    for (int k = 0; k < n1; ++k) {
      const int ck = field.cell_row_of(k);
      for (int l = 0; l < n2; ++l)
        cost(ck, field.cell_col_of(l)) += pixel_cost(k, l, mh, mv) - cur_(k, l);
    }
    return cost;
  }

  double cell_flip_delta(const MotionField& field, int cr, int cc, int mh,
                         int mv) const override {
    const int n1 = static_cast<int>(I1_->rows()), n2 = static_cast<int>(I1_->cols());
    const int b = field.granularity == Granularity::Pixel ? 1 : field.block;
    const int k0 = cr * b, l0 = cc * b;
    double delta = 0.0;
    for (int k = k0; k < std::min(n1, k0 + b); ++k)
      for (int l = l0; l < std::min(n2, l0 + b); ++l)
        delta += pixel_cost(k, l, mh, mv) - cur_(k, l);
    return delta;
  }

  void apply_cell_move(const MotionField& field, int cr, int cc, int mh, int mv) override {
    const int n1 = static_cast<int>(I1_->rows()), n2 = static_cast<int>(I1_->cols());
    const int b = field.granularity == Granularity::Pixel ? 1 : field.block;
    const int k0 = cr * b, l0 = cc * b;
    for (int k = k0; k < std::min(n1, k0 + b); ++k)
      for (int l = l0; l < std::min(n2, l0 + b); ++l) cur_(k, l) = pixel_cost(k, l, mh, mv);
  }

 private:
  double pixel_cost(int k, int l, int mh, int mv) const {
    const int sr = std::clamp(k + mv, 0, static_cast<int>(I1_->rows()) - 1);
    const int sc = std::clamp(l + mh, 0, static_cast<int>(I1_->cols()) - 1);
    const double e = (*I2_)(k, l) - (*I1_)(sr, sc);
    return e * e;
  }

  const Image* I1_;
  const Image* I2_;
  Eigen::MatrixXd cur_;
};

constexpr double kCapScale = 65536.0;  // double -> int64 fixed point

std::int64_t to_cap(double v) {
  const double scaled = v * kCapScale;
  const double lim = 4e15;
  return static_cast<std::int64_t>(std::llround(std::clamp(scaled, -lim, lim)));
}

struct EngineSetup {
  const EnergyParams* p;
  std::vector<std::pair<int, int>> labels;  // sweep order
  int max_sweeps;
};

class MoveEngine {
 public:
  MoveEngine(DataModel& model, const EngineSetup& setup, MotionField field)
      : model_(model), setup_(setup), field_(std::move(field)), t0_(Clock::now()) {
    model_.commit(field_);
    energy_ = exact_total(field_);
  }

  OptimizeResult run_alpha_expansion() {
    int iter = 0;
    for (int sweep = 0; sweep < setup_.max_sweeps; ++sweep) {
      bool any = false;
      for (const auto& [mh, mv] : setup_.labels) any |= expand(mh, mv, ++iter);
      if (!any) break;
    }
    return finish();
  }

  OptimizeResult run_icm() {
    const int cr = field_.cell_rows(), cc = field_.cell_cols();
    for (int sweep = 0; sweep < setup_.max_sweeps; ++sweep) {
      bool changed = false;
      for (int r = 0; r < cr; ++r)
        for (int c = 0; c < cc; ++c) changed |= icm_cell(r, c);
      energy_ = exact_total(field_);  // guards against incremental drift
      trace_.records.push_back({sweep + 1, 0, 0, changed, energy_, ms_since(t0_)});
      if (!changed) break;
    }
    return finish();
  }

  OptimizeResult run_exhaustive() {
    const int cells = field_.cell_rows() * field_.cell_cols();
    const int n_labels = static_cast<int>(setup_.labels.size());
    if (cells > 256 || n_labels > 32)
      throw ConfigError("exhaustive: instance larger than 256 cells x 32 labels");
    double combos = 1.0;
    for (int i = 0; i < cells; ++i) {
      combos *= n_labels;
      if (combos > double(1 << 22))
        throw ConfigError("exhaustive: assignment count exceeds enumeration budget");
    }
    std::vector<int> assign(static_cast<size_t>(cells), 0);
    MotionField best = field_, cand = field_;
    double best_e = std::numeric_limits<double>::infinity();
    while (true) {
      for (int i = 0; i < cells; ++i) {
        cand.mh(i / cand.cell_cols(), i % cand.cell_cols()) = setup_.labels[assign[i]].first;
        cand.mv(i / cand.cell_cols(), i % cand.cell_cols()) = setup_.labels[assign[i]].second;
      }
      const double e = exact_total(cand);
      if (e < best_e) {
        best_e = e;
        best = cand;
      }
      int i = 0;
      while (i < cells && ++assign[i] == n_labels) assign[i++] = 0;
      if (i == cells) break;
    }
    field_ = best;
    energy_ = best_e;
    model_.commit(field_);
    trace_.records.push_back({1, 0, 0, true, energy_, ms_since(t0_)});
    return finish();
  }

 private:
  double exact_total(const MotionField& f) const {
    return model_.exact_data(f) + setup_.p->lambda * smoothness_cost(f, *setup_.p);
  }

  bool expand(int amh, int amv, int iter) {
    const Eigen::MatrixXd deltas = model_.flip_deltas(field_, amh, amv);
    const int cr = field_.cell_rows(), cc = field_.cell_cols();
    const int n = cr * cc;
    const double lam = setup_.p->lambda, tau = setup_.p->tau;
    const std::pair<int, int> alpha{amh, amv};

    FlowGraph g(n);
    std::vector<double> lin(static_cast<size_t>(n));
    for (int r = 0; r < cr; ++r)
      for (int c = 0; c < cc; ++c) lin[static_cast<size_t>(r) * cc + c] = deltas(r, c);

    // Pairwise terms, decomposed into linear parts plus one submodular arc.
    auto add_pair = [&](int pr, int pc, int qr, int qc) {
      const std::pair<int, int> fp{field_.mh(pr, pc), field_.mv(pr, pc)};
      const std::pair<int, int> fq{field_.mh(qr, qc), field_.mv(qr, qc)};
      const double e00 = lam * pair_cost(fp, fq, tau);
      const double e01 = lam * pair_cost(fp, alpha, tau);
      const double e10 = lam * pair_cost(alpha, fq, tau);
      const double e11 = 0.0;
      const int p = pr * cc + pc, q = qr * cc + qc;
      lin[static_cast<size_t>(p)] += e10 - e00;
      lin[static_cast<size_t>(q)] += e11 - e10;
      const std::int64_t cap = to_cap(e01 + e10 - e00 - e11);
      if (cap > 0) g.add_edge(p, q, cap);  // cut when p keeps and q flips
    };
    for (int r = 0; r < cr; ++r)
      for (int c = 0; c < cc; ++c) {
        if (c + 1 < cc) add_pair(r, c, r, c + 1);
        if (r + 1 < cr) add_pair(r, c, r + 1, c);
      }

    for (int v = 0; v < n; ++v) {
      const std::int64_t cap = to_cap(lin[static_cast<size_t>(v)]);
      if (cap >= 0)
        g.add_terminal(v, cap, 0);  // cost on the flip side
      else
        g.add_terminal(v, 0, -cap);  // cost on the keep side
    }
    g.max_flow();

    MotionField cand = field_;
    bool any_flip = false;
    for (int r = 0; r < cr; ++r)
      for (int c = 0; c < cc; ++c)
        if (!g.source_side(r * cc + c)) {
          if (cand.mh(r, c) != amh || cand.mv(r, c) != amv) any_flip = true;
          cand.mh(r, c) = amh;
          cand.mv(r, c) = amv;
        }

    // The cut optimizes the diagonal surrogate, which under-counts coherent
    // flips; a constant-field proposal covers exactly that regime. Both
    // candidates are judged by the exact energy.
    bool accepted = false;
    double best_e = energy_;
    MotionField* best = nullptr;
    MotionField uniform = field_;
    uniform.mh.setConstant(amh);
    uniform.mv.setConstant(amv);
    if (any_flip) {
      const double e = exact_total(cand);
      if (e < best_e) {
        best_e = e;
        best = &cand;
      }
    }
    if (uniform.mh != field_.mh || uniform.mv != field_.mv) {
      const double e = exact_total(uniform);
      if (e < best_e) {
        best_e = e;
        best = &uniform;
      }
    }
    if (best != nullptr) {
      field_ = std::move(*best);
      energy_ = best_e;
      model_.commit(field_);
      accepted = true;
    }
    trace_.records.push_back({iter, amh, amv, accepted, energy_, ms_since(t0_)});
    return accepted;
  }

  bool icm_cell(int r, int c) {
    const std::pair<int, int> cur{field_.mh(r, c), field_.mv(r, c)};
    int best_mh = cur.first, best_mv = cur.second;
    double best_delta = 0.0;
    for (const auto& [mh, mv] : setup_.labels) {
      if (mh == cur.first && mv == cur.second) continue;
      const double d =
          model_.cell_flip_delta(field_, r, c, mh, mv) + smooth_delta(r, c, mh, mv);
      if (d < best_delta) {
        best_delta = d;
        best_mh = mh;
        best_mv = mv;
      }
    }
    if (best_mh == cur.first && best_mv == cur.second) return false;
    model_.apply_cell_move(field_, r, c, best_mh, best_mv);
    field_.mh(r, c) = best_mh;
    field_.mv(r, c) = best_mv;
    return true;
  }

  double smooth_delta(int r, int c, int mh, int mv) const {
    const double lam = setup_.p->lambda, tau = setup_.p->tau;
    const std::pair<int, int> cur{field_.mh(r, c), field_.mv(r, c)};
    const std::pair<int, int> cand{mh, mv};
    double d = 0.0;
    const int cr = field_.cell_rows(), cc = field_.cell_cols();
    const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};
    for (int i = 0; i < 4; ++i) {
      const int nr = r + dr[i], nc = c + dc[i];
      if (nr < 0 || nr >= cr || nc < 0 || nc >= cc) continue;
      const std::pair<int, int> nb{field_.mh(nr, nc), field_.mv(nr, nc)};
      d += lam * (pair_cost(cand, nb, tau) - pair_cost(cur, nb, tau));
    }
    return d;
  }

  OptimizeResult finish() {
    trace_.wall_ms = ms_since(t0_);
    return {field_, trace_};
  }

  DataModel& model_;
  const EngineSetup& setup_;
  MotionField field_;
  double energy_ = 0.0;
  OptimizerTrace trace_;
  Clock::time_point t0_;
};

EngineSetup make_setup(const EnergyParams& p, const LabelSpace& L, int max_sweeps) {
  p.validate();
  L.validate();
  verify_label_metric(L, p.tau);
  for (const auto& [mh, mv] : L.labels)
    if (std::abs(mh) > p.wx || std::abs(mv) > p.wy)
      throw ConfigError("label space exceeds the search window");
  EngineSetup s;
  s.p = &p;
  s.labels = L.labels;
  std::stable_sort(s.labels.begin(), s.labels.end(), [](auto a, auto b) {
    const int sa = std::abs(a.first) + std::abs(a.second);
    const int sb = std::abs(b.first) + std::abs(b.second);
    return sa != sb ? sa < sb : a < b;
  });
  s.max_sweeps = max_sweeps;
  return s;
}

OptimizeResult run(DataModel& model, const EngineSetup& setup, MotionField init,
                   OptimizeMode mode) {
  MoveEngine engine(model, setup, std::move(init));
  switch (mode) {
    case OptimizeMode::AlphaExpansion: return engine.run_alpha_expansion();
    case OptimizeMode::Icm: return engine.run_icm();
    case OptimizeMode::Exhaustive: return engine.run_exhaustive();
  }
  throw ConfigError("unknown optimizer mode");
}

MotionField initial_field(const EnergyParams& p, int rows, int cols) {
  return MotionField::zero(p.granularity, p.block, rows, cols, p.wx, p.wy);
}

}  // namespace

OptimizeResult optimize(const MeasurementSet& Y1, const MeasurementSet& Y2,
                        const SensingMatrix& S1, const SensingMatrix& S2,
                        const EnergyParams& p, const LabelSpace& L,
                        OptimizeMode mode, int max_sweeps) {
  const EngineSetup setup = make_setup(p, L, max_sweeps);
  CompressedModel model(Y1, Y2, S1, S2);
  return run(model, setup, initial_field(p, S1.N1, S1.N2), mode);
}

OptimizeResult image_domain_optimize(const Image& I1, const Image& I2,
                                     const EnergyParams& p, const LabelSpace& L,
                                     OptimizeMode mode, int max_sweeps) {
  const EngineSetup setup = make_setup(p, L, max_sweeps);
  ImageModel model(I1, I2);
  return run(model, setup, initial_field(p, static_cast<int>(I1.rows()),
                                         static_cast<int>(I1.cols())),
             mode);
}

}  // namespace cdce
