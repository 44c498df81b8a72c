#include "isearch/matstore.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "isearch/errors.hpp"

namespace isearch {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::ZeroColumn: return "ZeroColumn";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::Unconverged: return "Unconverged";
    case ErrorKind::SizeLimit: return "SizeLimit";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::IsolatedNode: return "IsolatedNode";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

SubspaceBasis::SubspaceBasis(Eigen::MatrixXd basis) : basis_(std::move(basis)) {
  if (basis_.cols() < 1 || basis_.rows() < basis_.cols()) {
    throw InvalidInput("SubspaceBasis: need 1 <= dim <= ambient dimension");
  }
  const Eigen::MatrixXd gram = basis_.transpose() * basis_;
  const double dev =
      (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (!(dev <= 1e-10)) {
    throw InvalidInput("SubspaceBasis: columns are not orthonormal (deviation " +
                       std::to_string(dev) + ")");
  }
}

SubspaceBasis SubspaceBasis::from_span(const Eigen::MatrixXd& spanning,
                                       double rel_tol) {
  if (spanning.cols() == 0) throw InvalidInput("from_span: empty matrix");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(spanning);
  const Eigen::MatrixXd& r = qr.matrixR();
  const Eigen::Index k = std::min(spanning.rows(), spanning.cols());
  const double lead = std::abs(r(0, 0));
  if (!(lead > 0.0)) throw InvalidInput("from_span: matrix is zero");
  Eigen::Index rank = 0;
  while (rank < k && std::abs(r(rank, rank)) > rel_tol * lead) ++rank;
  Eigen::MatrixXd q = qr.householderQ() *
                      Eigen::MatrixXd::Identity(spanning.rows(), rank);
  return SubspaceBasis(std::move(q));
}

Eigen::MatrixXd SubspaceBasis::projector() const {
  return basis_ * basis_.transpose();
}

bool all_finite(const DataMatrix& m) { return m.allFinite(); }

ThinSvd svd_thin(const DataMatrix& m) {
  if (m.size() == 0) throw InvalidInput("svd_thin: empty matrix");
  if (!m.allFinite()) throw InvalidInput("svd_thin: non-finite entries");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return ThinSvd{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Vector column_norms(const DataMatrix& m) {
  return m.colwise().norm().transpose();
}

DataMatrix normalize_columns_unit(const DataMatrix& m) {
  if (!m.allFinite()) throw InvalidInput("normalize_columns_unit: non-finite entries");
  DataMatrix out = m;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double n = out.col(j).norm();
    if (n < 1e-14) throw ZeroColumn(static_cast<std::size_t>(j));
    out.col(j) /= n;
  }
  return out;
}

DataMatrix sample_gaussian(RandomSource& rng, int rows, int cols) {
  if (rows < 1 || cols < 0) throw InvalidInput("sample_gaussian: bad shape");
  DataMatrix g(rows, cols);
  // Column-major fill so a column's entries are consecutive draws.
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
  }
  return g;
}

DataMatrix sample_unit_sphere(RandomSource& rng, int dim, int count) {
  if (dim < 1) throw InvalidInput("sample_unit_sphere: dim must be >= 1");
  if (count < 1) throw InvalidInput("sample_unit_sphere: count must be >= 1");
  DataMatrix g(dim, count);
  for (Eigen::Index j = 0; j < count; ++j) {
    double n = 0.0;
    // A zero Gaussian vector has probability zero; redraw if it happens.
    do {
      for (Eigen::Index i = 0; i < dim; ++i) g(i, j) = rng.normal();
      n = g.col(j).norm();
    } while (n < 1e-300);
    g.col(j) /= n;
  }
  return g;
}

SubspaceBasis random_subspace(RandomSource& rng, int ambient, int dim) {
  if (dim < 1 || dim > ambient) {
    throw InvalidInput("random_subspace: need 1 <= dim <= ambient");
  }
  const DataMatrix g = sample_gaussian(rng, ambient, dim);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(ambient, dim);
  return SubspaceBasis(std::move(q));
}

DataMatrix parse_matrix_csv(const std::string& text) {
  std::vector<double> values;
  Eigen::Index rows = 0;
  Eigen::Index cols = -1;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Eigen::Index count = 0;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t next = line.find(',', pos);
      const std::string field =
          line.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        throw IoError("matrix csv line " + std::to_string(line_no) +
                      ": cannot parse '" + field + "'");
      }
      if (field.find_first_not_of(" \t", used) != std::string::npos) {
        throw IoError("matrix csv line " + std::to_string(line_no) +
                      ": trailing characters in '" + field + "'");
      }
      values.push_back(v);
      ++count;
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (cols < 0) cols = count;
    if (count != cols) {
      throw IoError("matrix csv line " + std::to_string(line_no) + ": expected " +
                    std::to_string(cols) + " values, got " + std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) throw IoError("matrix csv: no data");
  DataMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = values[i * cols + j];
  }
  return m;
}

DataMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_matrix_csv(buf.str());
}

std::string format_matrix_csv(const DataMatrix& m) {
  std::ostringstream out;
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  return out.str();
}

void write_matrix_csv(const std::filesystem::path& path, const DataMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_matrix_csv(m);
  if (!out) throw IoError("write failed for " + path.string());
}

DataMatrix select_columns(const DataMatrix& m, std::span<const std::size_t> order) {
  DataMatrix out(m.rows(), static_cast<Eigen::Index>(order.size()));
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = m.col(static_cast<Eigen::Index>(order[i]));
  }
  return out;
}

}  // namespace isearch
