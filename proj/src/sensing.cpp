#include "cdce/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "cdce/errors.hpp"
#include "cdce/rng.hpp"

namespace cdce {

const char* kind_name(MatrixKind k) {
  switch (k) {
    case MatrixKind::ScrambledOrthonormal: return "scrambled";
    case MatrixKind::GaussianOrthonormalized: return "gaussian";
    case MatrixKind::Bernoulli: return "bernoulli";
  }
  return "?";
}

MatrixKind kind_from_name(const std::string& name) {
  if (name == "scrambled") return MatrixKind::ScrambledOrthonormal;
  if (name == "gaussian") return MatrixKind::GaussianOrthonormalized;
  if (name == "bernoulli") return MatrixKind::Bernoulli;
  throw ConfigError("unknown matrix kind: " + name);
}

namespace {

Eigen::MatrixXd orthonormal_dct(int n) {
  Eigen::MatrixXd f(n, n);
  const double c0 = std::sqrt(1.0 / n), c = std::sqrt(2.0 / n);
  for (int j = 0; j < n; ++j)
    for (int t = 0; t < n; ++t)
      f(j, t) = (j == 0 ? c0 : c) * std::cos(M_PI * j * (2 * t + 1) / (2.0 * n));
  return f;
}

// First M entries of a seeded Fisher-Yates shuffle of 0..n-1, sorted.
Eigen::VectorXi pick_rows(int m, int n, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < m; ++i) {
    const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
  }
  std::sort(idx.begin(), idx.begin() + m);
  return Eigen::Map<Eigen::VectorXi>(idx.data(), m);
}

Eigen::MatrixXd gram_schmidt_rows(Eigen::MatrixXd a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j)
      a.row(i) -= a.row(i).dot(a.row(j)) * a.row(j);
    const double n = a.row(i).norm();
    if (n < 1e-12) throw NumericalError("gram_schmidt: degenerate row", n);
    a.row(i) /= n;
  }
  return a;
}

}  // namespace

SensingMatrix build_sensing(MatrixKind kind, int M, int N1, int N2, std::uint64_t seed) {
  if (M < 1 || M > N2) throw ConfigError("build_sensing: need 1 <= M <= N2");
  if (N1 < 1) throw ConfigError("build_sensing: need N1 >= 1");

  SensingMatrix S;
  S.kind = kind;
  S.M = M;
  S.N1 = N1;
  S.N2 = N2;
  S.seed = seed;
  S.orthonormal_rows = kind != MatrixKind::Bernoulli;

  switch (kind) {
    case MatrixKind::ScrambledOrthonormal: {
      S.dct = orthonormal_dct(N2);
      S.select.resize(M, N1);
      S.signs.resize(N2, N1);
      for (int k = 0; k < N1; ++k) {
        Rng rng(sub_seed(seed, static_cast<std::uint64_t>(k)));
        S.select.col(k) = pick_rows(M, N2, rng);
        for (int t = 0; t < N2; ++t) S.signs(t, k) = rng.next_sign();
      }
      break;
    }
    case MatrixKind::GaussianOrthonormalized: {
      S.blocks.resize(static_cast<size_t>(N1));
      for (int k = 0; k < N1; ++k) {
        Rng rng(sub_seed(seed, static_cast<std::uint64_t>(k)));
        Eigen::MatrixXd b(M, N2);
        for (int i = 0; i < M; ++i)
          for (int j = 0; j < N2; ++j) b(i, j) = rng.next_normal();
        S.blocks[static_cast<size_t>(k)] = gram_schmidt_rows(std::move(b));
      }
      break;
    }
    case MatrixKind::Bernoulli: {
      S.blocks.resize(static_cast<size_t>(N1));
      const double s = 1.0 / std::sqrt(static_cast<double>(N2));
      for (int k = 0; k < N1; ++k) {
        Rng rng(sub_seed(seed, static_cast<std::uint64_t>(k)));
        Eigen::MatrixXd b(M, N2);
        for (int i = 0; i < M; ++i)
          for (int j = 0; j < N2; ++j) b(i, j) = s * rng.next_sign();
        S.blocks[static_cast<size_t>(k)] = std::move(b);
      }
      break;
    }
  }
  return S;
}

Eigen::VectorXd SensingMatrix::apply_row(int k, const Eigen::VectorXd& x) const {
  if (x.size() != N2) throw ShapeError("apply_row: length mismatch");
  if (kind == MatrixKind::ScrambledOrthonormal) {
    const Eigen::VectorXd full = dct * signs.col(k).cwiseProduct(x);
    Eigen::VectorXd y(M);
    for (int i = 0; i < M; ++i) y(i) = full(select(i, k));
    return y;
  }
  return blocks[static_cast<size_t>(k)] * x;
}

Eigen::VectorXd SensingMatrix::adjoint_row(int k, const Eigen::VectorXd& y) const {
  if (y.size() != M) throw ShapeError("adjoint_row: length mismatch");
  if (kind == MatrixKind::ScrambledOrthonormal) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(N2);
    for (int i = 0; i < M; ++i) full(select(i, k)) = y(i);
    return signs.col(k).cwiseProduct(dct.transpose() * full);
  }
  return blocks[static_cast<size_t>(k)].transpose() * y;
}

Eigen::MatrixXd SensingMatrix::dense_row_block(int k) const {
  if (kind != MatrixKind::ScrambledOrthonormal) return blocks[static_cast<size_t>(k)];
  Eigen::MatrixXd b(M, N2);
  for (int i = 0; i < M; ++i)
    b.row(i) = signs.col(k).transpose().cwiseProduct(dct.row(select(i, k)));
  return b;
}

Eigen::MatrixXd SensingMatrix::column_norms_squared() const {
  Eigen::MatrixXd c(N1, N2);
  if (kind == MatrixKind::ScrambledOrthonormal) {
    const Eigen::MatrixXd dct_sq = dct.array().square();
    for (int k = 0; k < N1; ++k) {
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(N2);
      for (int i = 0; i < M; ++i) acc += dct_sq.row(select(i, k));
      c.row(k) = acc;  // signs square to one
    }
  } else {
    for (int k = 0; k < N1; ++k)
      c.row(k) = blocks[static_cast<size_t>(k)].colwise().squaredNorm();
  }
  return c;
}

MeasurementSet measure(const Image& img, const SensingMatrix& S) {
  if (img.rows() != S.N1 || img.cols() != S.N2)
    throw ShapeError("measure: image does not match sensing dims");
  MeasurementSet Y;
  Y.kind = S.kind;
  Y.M = S.M;
  Y.N1 = S.N1;
  Y.N2 = S.N2;
  Y.seed = S.seed;
  Y.y.resize(S.measurement_count());
  if (S.kind == MatrixKind::ScrambledOrthonormal) {
    // One GEMM for all rows: columns of P are the scrambled image rows.
    const Eigen::MatrixXd p = img.transpose().cwiseProduct(S.signs);
    const Eigen::MatrixXd full = S.dct * p;  // N2 x N1
    for (int k = 0; k < S.N1; ++k)
      for (int i = 0; i < S.M; ++i)
        Y.y(static_cast<Eigen::Index>(k) * S.M + i) = full(S.select(i, k), k);
  } else {
    for (int k = 0; k < S.N1; ++k)
      Y.y.segment(static_cast<Eigen::Index>(k) * S.M, S.M) =
          S.blocks[static_cast<size_t>(k)] * img.row(k).transpose();
  }
  return Y;
}

Image preimage_rows(const Eigen::MatrixXd& y_rows, const SensingMatrix& S) {
  if (y_rows.rows() != S.M || y_rows.cols() != S.N1)
    throw ShapeError("preimage_rows: segment shape mismatch");
  Image out(S.N1, S.N2);
  if (S.kind == MatrixKind::ScrambledOrthonormal) {
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(S.N2, S.N1);
    for (int k = 0; k < S.N1; ++k)
      for (int i = 0; i < S.M; ++i) full(S.select(i, k), k) = y_rows(i, k);
    out = (S.dct.transpose() * full).cwiseProduct(S.signs).transpose();
  } else {
    for (int k = 0; k < S.N1; ++k)
      out.row(k) = (S.blocks[static_cast<size_t>(k)].transpose() * y_rows.col(k)).transpose();
  }
  return out;
}

Image preimage(const MeasurementSet& Y, const SensingMatrix& S) {
  if (!Y.matches(S)) throw ConfigError("preimage: measurement/matrix provenance mismatch");
  return preimage_rows(Y.y.reshaped(S.M, S.N1), S);
}

MeasurementSet quantize(const MeasurementSet& Y, int bits) {
  if (bits < 2 || bits > 16) throw ConfigError("quantize: bits must be in [2, 16]");
  MeasurementSet Q = Y;
  if (Y.quantizer.bits == bits) return Q;  // already on this midpoint grid
  const double lo = Y.y.minCoeff(), hi = Y.y.maxCoeff();
  if (hi <= lo) return Q;  // constant vector: degenerate single-cell range
  Q.quantizer = Quantizer{bits, lo, hi};
  const double step = Q.quantizer.step();
  const double levels = static_cast<double>(1u << bits);
  for (Eigen::Index i = 0; i < Q.y.size(); ++i) {
    double cell = std::floor((Y.y(i) - lo) / step);
    cell = std::min(std::max(cell, 0.0), levels - 1.0);
    Q.y(i) = lo + (cell + 0.5) * step;
  }
  return Q;
}

std::vector<std::uint16_t> quantizer_codes(const MeasurementSet& Y) {
  if (Y.quantizer.bits == 0) throw ConfigError("quantizer_codes: set is unquantized");
  const double step = Y.quantizer.step();
  std::vector<std::uint16_t> codes(static_cast<size_t>(Y.y.size()));
  for (Eigen::Index i = 0; i < Y.y.size(); ++i)
    codes[static_cast<size_t>(i)] =
        static_cast<std::uint16_t>(std::lround((Y.y(i) - Y.quantizer.lo) / step - 0.5));
  return codes;
}

Eigen::VectorXd dequantize_codes(const std::vector<std::uint16_t>& codes, const Quantizer& q) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(codes.size()));
  const double step = q.step();
  for (size_t i = 0; i < codes.size(); ++i)
    y(static_cast<Eigen::Index>(i)) = q.lo + (codes[i] + 0.5) * step;
  return y;
}

namespace {
template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& in, const std::string& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ParseError(path + ": truncated measurement file");
  return v;
}
}  // namespace

void save_measurements(const std::string& path, const MeasurementSet& Y) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out.write("CDCE", 4);
  put<std::uint16_t>(out, 1);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(Y.kind));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(Y.N1));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(Y.N2));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(Y.M));
  put<std::uint64_t>(out, Y.seed);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(Y.quantizer.bits));
  put<double>(out, Y.quantizer.lo);
  put<double>(out, Y.quantizer.hi);
  if (Y.quantizer.bits == 0) {
    out.write(reinterpret_cast<const char*>(Y.y.data()),
              static_cast<std::streamsize>(sizeof(double) * Y.y.size()));
  } else {
    const auto codes = quantizer_codes(Y);
    out.write(reinterpret_cast<const char*>(codes.data()),
              static_cast<std::streamsize>(sizeof(std::uint16_t) * codes.size()));
  }
  if (!out) throw ParseError(path + ": write failed");
}

MeasurementSet load_measurements(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CDCE", 4) != 0)
    throw ParseError(path + ": bad magic");
  const auto version = get<std::uint16_t>(in, path);
  if (version != 1) throw UnsupportedFormat(path + ": unknown version");
  MeasurementSet Y;
  Y.kind = static_cast<MatrixKind>(get<std::uint8_t>(in, path));
  Y.N1 = static_cast<int>(get<std::uint32_t>(in, path));
  Y.N2 = static_cast<int>(get<std::uint32_t>(in, path));
  Y.M = static_cast<int>(get<std::uint32_t>(in, path));
  Y.seed = get<std::uint64_t>(in, path);
  Y.quantizer.bits = static_cast<int>(get<std::uint8_t>(in, path));
  Y.quantizer.lo = get<double>(in, path);
  Y.quantizer.hi = get<double>(in, path);
  const Eigen::Index K = static_cast<Eigen::Index>(Y.M) * Y.N1;
  if (Y.quantizer.bits == 0) {
    Y.y.resize(K);
    in.read(reinterpret_cast<char*>(Y.y.data()),
            static_cast<std::streamsize>(sizeof(double) * K));
    if (!in) throw ParseError(path + ": truncated payload");
  } else {
    std::vector<std::uint16_t> codes(static_cast<size_t>(K));
    in.read(reinterpret_cast<char*>(codes.data()),
            static_cast<std::streamsize>(sizeof(std::uint16_t) * K));
    if (!in) throw ParseError(path + ": truncated payload");
    Y.y = dequantize_codes(codes, Y.quantizer);
  }
  return Y;
}

}  // namespace cdce
