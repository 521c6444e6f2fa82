#include "cdce/wavelet.hpp"

#include <cmath>
#include <vector>

#include "cdce/errors.hpp"

namespace cdce {

WaveletFamily wavelet_from_name(const std::string& name) {
  if (name == "haar") return WaveletFamily::Haar;
  if (name == "db4") return WaveletFamily::Daubechies4;
  throw ConfigError("unknown wavelet family: " + name);
}

namespace {

std::vector<double> lowpass(WaveletFamily f) {
  static const double r2 = std::sqrt(2.0);
  if (f == WaveletFamily::Haar) return {1.0 / r2, 1.0 / r2};
  const double s3 = std::sqrt(3.0);
  const double d = 4.0 * r2;
  return {(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d};
}

std::vector<double> highpass(const std::vector<double>& h) {
  std::vector<double> g(h.size());
  for (size_t k = 0; k < h.size(); ++k)
    g[k] = (k % 2 == 0 ? 1.0 : -1.0) * h[h.size() - 1 - k];
  return g;
}

// One periodic analysis step along a length-n vector (n even):
// first n/2 outputs approximation, last n/2 detail.
void analyze_1d(const double* x, double* out, int n, const std::vector<double>& h,
                const std::vector<double>& g) {
  const int half = n / 2;
  const int taps = static_cast<int>(h.size());
  for (int i = 0; i < half; ++i) {
    double s = 0.0, d = 0.0;
    for (int t = 0; t < taps; ++t) {
      const double v = x[(2 * i + t) % n];
      s += h[static_cast<size_t>(t)] * v;
      d += g[static_cast<size_t>(t)] * v;
    }
    out[i] = s;
    out[half + i] = d;
  }
}

void synthesize_1d(const double* c, double* out, int n, const std::vector<double>& h,
                   const std::vector<double>& g) {
  const int half = n / 2;
  const int taps = static_cast<int>(h.size());
  for (int i = 0; i < n; ++i) out[i] = 0.0;
  for (int i = 0; i < half; ++i)
    for (int t = 0; t < taps; ++t)
      out[(2 * i + t) % n] += h[static_cast<size_t>(t)] * c[i] + g[static_cast<size_t>(t)] * c[half + i];
}

}  // namespace

int padded_dim(int n, int levels) {
  const int m = 1 << levels;
  return ((n + m - 1) / m) * m;
}

SparsityBasis make_basis(WaveletFamily family, int levels, int rows, int cols) {
  if (levels < 1) throw ConfigError("make_basis: levels must be >= 1");
  const int m = 1 << levels;
  if (rows % m != 0 || cols % m != 0)
    throw ConfigError("make_basis: dims must be divisible by 2^levels");
  return SparsityBasis{family, levels, rows, cols};
}

Eigen::MatrixXd SparsityBasis::analysis(const Image& img) const {
  if (img.rows() != rows || img.cols() != cols)
    throw ShapeError("wavelet analysis: dims mismatch");
  const auto h = lowpass(family);
  const auto g = highpass(h);
  Eigen::MatrixXd c = img;
  std::vector<double> buf_in, buf_out;
  int r = rows, q = cols;
  for (int lev = 0; lev < levels; ++lev) {
    buf_in.resize(static_cast<size_t>(std::max(r, q)));
    buf_out.resize(buf_in.size());
    for (int i = 0; i < r; ++i) {  // rows
      for (int j = 0; j < q; ++j) buf_in[static_cast<size_t>(j)] = c(i, j);
      analyze_1d(buf_in.data(), buf_out.data(), q, h, g);
      for (int j = 0; j < q; ++j) c(i, j) = buf_out[static_cast<size_t>(j)];
    }
    for (int j = 0; j < q; ++j) {  // columns
      for (int i = 0; i < r; ++i) buf_in[static_cast<size_t>(i)] = c(i, j);
      analyze_1d(buf_in.data(), buf_out.data(), r, h, g);
      for (int i = 0; i < r; ++i) c(i, j) = buf_out[static_cast<size_t>(i)];
    }
    r /= 2;
    q /= 2;
  }
  return c;
}

Image SparsityBasis::synthesis(const Eigen::MatrixXd& coeffs) const {
  if (coeffs.rows() != rows || coeffs.cols() != cols)
    throw ShapeError("wavelet synthesis: dims mismatch");
  const auto h = lowpass(family);
  const auto g = highpass(h);
  Eigen::MatrixXd c = coeffs;
  std::vector<double> buf_in, buf_out;
  for (int lev = levels - 1; lev >= 0; --lev) {
    const int r = rows >> lev, q = cols >> lev;
    buf_in.resize(static_cast<size_t>(std::max(r, q)));
    buf_out.resize(buf_in.size());
    for (int j = 0; j < q; ++j) {  // columns first (reverse of analysis)
      for (int i = 0; i < r; ++i) buf_in[static_cast<size_t>(i)] = c(i, j);
      synthesize_1d(buf_in.data(), buf_out.data(), r, h, g);
      for (int i = 0; i < r; ++i) c(i, j) = buf_out[static_cast<size_t>(i)];
    }
    for (int i = 0; i < r; ++i) {  // rows
      for (int j = 0; j < q; ++j) buf_in[static_cast<size_t>(j)] = c(i, j);
      synthesize_1d(buf_in.data(), buf_out.data(), q, h, g);
      for (int j = 0; j < q; ++j) c(i, j) = buf_out[static_cast<size_t>(j)];
    }
  }
  return c;
}

}  // namespace cdce
