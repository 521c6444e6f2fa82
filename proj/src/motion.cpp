#include "cdce/motion.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cdce/errors.hpp"

namespace cdce {

MotionField MotionField::zero(Granularity g, int block, int rows, int cols, int wx, int wy) {
  MotionField f;
  f.granularity = g;
  f.block = (g == Granularity::Pixel) ? 1 : block;
  f.rows = rows;
  f.cols = cols;
  f.wx = wx;
  f.wy = wy;
  f.mh = Eigen::MatrixXi::Zero(f.cell_rows(), f.cell_cols());
  f.mv = Eigen::MatrixXi::Zero(f.cell_rows(), f.cell_cols());
  return f;
}

MotionField MotionField::to_pixel() const {
  if (granularity == Granularity::Pixel) return *this;
  MotionField f = zero(Granularity::Pixel, 1, rows, cols, wx, wy);
  for (int k = 0; k < rows; ++k)
    for (int l = 0; l < cols; ++l) {
      f.mh(k, l) = mh_at(k, l);
      f.mv(k, l) = mv_at(k, l);
    }
  return f;
}

MotionField MotionField::to_block(int b) const {
  MotionField f = zero(Granularity::Block, b, rows, cols, wx, wy);
  for (int ck = 0; ck < f.cell_rows(); ++ck)
    for (int cl = 0; cl < f.cell_cols(); ++cl) {
      double sh = 0.0, sv = 0.0;
      int n = 0;
      for (int k = ck * b; k < std::min(rows, (ck + 1) * b); ++k)
        for (int l = cl * b; l < std::min(cols, (cl + 1) * b); ++l) {
          sh += mh_at(k, l);
          sv += mv_at(k, l);
          ++n;
        }
      f.mh(ck, cl) = static_cast<int>(std::lround(sh / n));
      f.mv(ck, cl) = static_cast<int>(std::lround(sv / n));
    }
  return f;
}

GroundTruth ground_truth_from_disparity(const Image& disp, int scale_divisor, int wx) {
  GroundTruth gt;
  gt.scale_divisor = scale_divisor;
  gt.field = MotionField::zero(Granularity::Pixel, 1, static_cast<int>(disp.rows()),
                               static_cast<int>(disp.cols()), wx, 0);
  gt.known = MaskXb(disp.rows(), disp.cols());
  for (Eigen::Index k = 0; k < disp.rows(); ++k)
    for (Eigen::Index l = 0; l < disp.cols(); ++l) {
      const int stored = static_cast<int>(std::lround(disp(k, l)));
      gt.field.mh(k, l) = stored;
      gt.known(k, l) = stored != 0;
    }
  return gt;
}

GroundTruth ground_truth_from_motion(const MotionField& f, int scale_divisor) {
  GroundTruth gt;
  gt.field = f.to_pixel();
  gt.scale_divisor = scale_divisor;
  gt.known = MaskXb::Constant(gt.field.cell_rows(), gt.field.cell_cols(), true);
  return gt;
}

void save_motion_csv(const std::string& path, const MotionField& f) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << "granularity,block,wx,wy,rows,cols\n";
  out << (f.granularity == Granularity::Pixel ? "pixel" : "block") << ","
      << f.block << "," << f.wx << "," << f.wy << "," << f.rows << "," << f.cols << "\n";
  out << "row,col,mh,mv\n";
  for (int r = 0; r < f.cell_rows(); ++r)
    for (int c = 0; c < f.cell_cols(); ++c)
      out << r << "," << c << "," << f.mh(r, c) << "," << f.mv(r, c) << "\n";
  if (!out) throw ParseError(path + ": write failed");
}

namespace {
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}
}  // namespace

MotionField load_motion_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line) || split_csv(line).size() < 6)
    throw ParseError(path + ": missing motion header");
  if (!std::getline(in, line)) throw ParseError(path + ": missing motion header row");
  const auto head = split_csv(line);
  if (head.size() < 6) throw ParseError(path + ": bad motion header row");

  MotionField f;
  f.granularity = head[0] == "pixel" ? Granularity::Pixel : Granularity::Block;
  f.block = std::stoi(head[1]);
  f.wx = std::stoi(head[2]);
  f.wy = std::stoi(head[3]);
  f.rows = std::stoi(head[4]);
  f.cols = std::stoi(head[5]);
  f.mh = Eigen::MatrixXi::Zero(f.cell_rows(), f.cell_cols());
  f.mv = Eigen::MatrixXi::Zero(f.cell_rows(), f.cell_cols());

  if (!std::getline(in, line)) throw ParseError(path + ": missing record header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto rec = split_csv(line);
    if (rec.size() < 4) throw ParseError(path + ": bad record: " + line);
    const int r = std::stoi(rec[0]), c = std::stoi(rec[1]);
    if (r < 0 || r >= f.cell_rows() || c < 0 || c >= f.cell_cols())
      throw ParseError(path + ": record out of range: " + line);
    f.mh(r, c) = std::stoi(rec[2]);
    f.mv(r, c) = std::stoi(rec[3]);
  }
  return f;
}

}  // namespace cdce
