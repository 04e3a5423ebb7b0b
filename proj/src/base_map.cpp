#include "flowlab/base_map.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "flowlab/errors.hpp"

namespace flowlab {

namespace {

// frac(a * x) for integer a and x in [0, 1), evaluated in extended precision.
long double frac_product(long long a, double x) {
  long double v = static_cast<long double>(a) * static_cast<long double>(x);
  return v - std::floor(v);
}

IntMatrix integer_power(const IntMatrix& m, long long n) {
  IntMatrix result = IntMatrix::Identity(m.rows(), m.cols());
  IntMatrix base = m;
  while (n > 0) {
    if (n & 1) result = result * base;
    base = base * base;
    n >>= 1;
  }
  return result;
}

// Entries of A^n overflow long long past this; beyond it iterate stepwise.
constexpr long long kMaxExactPower = 40;

}  // namespace

long long integer_determinant(const IntMatrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::InvalidArgument, "determinant of non-square matrix");
  const Eigen::Index n = m.rows();
  if (n == 0) return 1;
  IntMatrix a = m;
  long long sign = 1;
  long long prev = 1;
  for (Eigen::Index k = 0; k < n - 1; ++k) {
    if (a(k, k) == 0) {
      Eigen::Index swap = -1;
      for (Eigen::Index i = k + 1; i < n; ++i) {
        if (a(i, k) != 0) {
          swap = i;
          break;
        }
      }
      if (swap < 0) return 0;
      a.row(k).swap(a.row(swap));
      sign = -sign;
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      for (Eigen::Index j = k + 1; j < n; ++j) {
        a(i, j) = (a(i, j) * a(k, k) - a(i, k) * a(k, j)) / prev;
      }
    }
    prev = a(k, k);
  }
  return sign * a(n - 1, n - 1);
}

IntMatrix integer_adjugate(const IntMatrix& m) {
  const Eigen::Index n = m.rows();
  IntMatrix adj(n, n);
  if (n == 1) {
    adj(0, 0) = 1;
    return adj;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      IntMatrix minor(n - 1, n - 1);
      for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
        if (r == i) continue;
        for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
          if (c == j) continue;
          minor(rr, cc++) = m(r, c);
        }
        ++rr;
      }
      const long long cof = ((i + j) % 2 == 0 ? 1 : -1) * integer_determinant(minor);
      adj(j, i) = cof;
    }
  }
  return adj;
}

BaseMap BaseMap::toral_automorphism(const IntMatrix& matrix) {
  if (matrix.rows() != matrix.cols() || matrix.rows() < 1 || matrix.rows() > kMaxTorusDim) {
    throw Error(ErrorCode::InvalidArgument, "toral automorphism needs a square matrix of size 1..16");
  }
  const long long det = integer_determinant(matrix);
  if (det != 1 && det != -1) {
    throw Error(ErrorCode::InvalidArgument, "toral automorphism needs |det| = 1, got " + std::to_string(det));
  }
  BaseMap f;
  f.kind_ = BaseMapKind::ToralAutomorphism;
  f.dim_ = static_cast<int>(matrix.rows());
  f.matrix_ = matrix;
  f.inverse_ = integer_adjugate(matrix) * det;  // det = ±1, so 1/det = det

  Eigen::EigenSolver<Eigen::MatrixXd> es(matrix.cast<double>(), false);
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double modulus = std::abs(es.eigenvalues()(i));
    if (modulus > 1.0) entropy += std::log(modulus);
  }
  f.known_entropy_ = entropy;
  return f;
}

BaseMap BaseMap::rotation(const Eigen::VectorXd& angles) {
  if (angles.size() < 1 || angles.size() > kMaxTorusDim) {
    throw Error(ErrorCode::InvalidArgument, "rotation needs 1..16 angles");
  }
  BaseMap f;
  f.kind_ = BaseMapKind::Rotation;
  f.dim_ = static_cast<int>(angles.size());
  f.angles_ = wrap_point(angles);
  f.matrix_ = IntMatrix::Identity(f.dim_, f.dim_);
  f.inverse_ = f.matrix_;
  f.known_entropy_ = 0.0;
  return f;
}

BaseMap BaseMap::identity(int dim) { return rotation(Eigen::VectorXd::Zero(dim)); }

BaseMap BaseMap::cat_map() {
  IntMatrix a(2, 2);
  a << 2, 1, 1, 1;
  return toral_automorphism(a);
}

BaseMap BaseMap::golden_rotation() {
  Eigen::VectorXd angle(1);
  angle << (std::sqrt(5.0) - 1.0) / 2.0;
  return rotation(angle);
}

TorusPoint BaseMap::apply(const TorusPoint& x, long long n) const {
  if (x.size() != dim_) throw Error(ErrorCode::InvalidArgument, "dimension mismatch in apply_base");
  if (kind_ == BaseMapKind::Rotation) {
    TorusPoint out(dim_);
    for (int i = 0; i < dim_; ++i) {
      long double shift = static_cast<long double>(n) * static_cast<long double>(angles_(i));
      shift -= std::floor(shift);
      out(i) = wrap_unit(static_cast<double>(static_cast<long double>(x(i)) + shift));
    }
    return out;
  }

  const long long steps = n < 0 ? -n : n;
  const IntMatrix& base = n < 0 ? inverse_ : matrix_;
  TorusPoint cur = wrap_point(x);
  long long done = 0;
  while (done < steps) {
    const long long chunk = std::min(kMaxExactPower, steps - done);
    const IntMatrix power = integer_power(base, chunk);
    TorusPoint next(dim_);
    for (int i = 0; i < dim_; ++i) {
      long double acc = 0.0L;
      for (int j = 0; j < dim_; ++j) acc += frac_product(power(i, j), cur(j));
      next(i) = wrap_unit(static_cast<double>(acc - std::floor(acc)));
    }
    cur = next;
    done += chunk;
  }
  return cur;
}

namespace {

void linear_step(const IntMatrix& a, int dim, const double* x, double* out) {
  double tmp[kMaxTorusDim];
  for (int i = 0; i < dim; ++i) {
    double acc = 0.0;
    for (int j = 0; j < dim; ++j) acc += static_cast<double>(a(i, j)) * x[j];
    tmp[i] = wrap_unit(acc);
  }
  for (int i = 0; i < dim; ++i) out[i] = tmp[i];
}

}  // namespace

void BaseMap::step(const double* x, double* out) const {
  if (kind_ == BaseMapKind::Rotation) {
    for (int i = 0; i < dim_; ++i) out[i] = wrap_unit(x[i] + angles_(i));
    return;
  }
  linear_step(matrix_, dim_, x, out);
}

void BaseMap::step_inverse(const double* x, double* out) const {
  if (kind_ == BaseMapKind::Rotation) {
    for (int i = 0; i < dim_; ++i) out[i] = wrap_unit(x[i] - angles_(i));
    return;
  }
  linear_step(inverse_, dim_, x, out);
}

std::string BaseMap::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (kind_ == BaseMapKind::Rotation) {
    os << "rotation(";
    for (int i = 0; i < dim_; ++i) os << (i ? "," : "") << angles_(i);
    os << ")";
  } else {
    os << "toral_automorphism[";
    for (int i = 0; i < dim_; ++i) {
      os << (i ? ";" : "");
      for (int j = 0; j < dim_; ++j) os << (j ? "," : "") << matrix_(i, j);
    }
    os << "]";
  }
  return os.str();
}

}  // namespace flowlab
