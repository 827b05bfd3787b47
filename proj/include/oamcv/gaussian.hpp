#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "oamcv/errors.hpp"

namespace oamcv {

template <class Scalar>
using Mat4 = Eigen::Matrix<Scalar, 4, 4>;
template <class Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;

// Vacuum quadrature variance; all covariance matrices use this normalization,
// i.e. the vacuum state is 0.5 * I.
inline constexpr double kShotNoiseVariance = 0.5;

// Quadrature ordering of every 4x4 covariance matrix in this library.
inline constexpr const char* kQuadratureBasis[4] = {"Xa", "Ya", "Xb", "Yb"};

// Standard symplectic form Omega in the (Xa, Ya, Xb, Yb) ordering.
template <class Scalar = double>
Mat4<Scalar> symplecticForm() {
  Mat4<Scalar> omega = Mat4<Scalar>::Zero();
  omega(0, 1) = Scalar(1);
  omega(1, 0) = Scalar(-1);
  omega(2, 3) = Scalar(1);
  omega(3, 2) = Scalar(-1);
  return omega;
}

// Two-mode covariance matrix with optional per-entry 1-sigma uncertainties.
// The stored matrix is exactly symmetric: the constructor rejects inputs
// whose asymmetry exceeds `symTol` and averages away rounding-level noise.
template <class Scalar = double>
class CovMat {
 public:
  using Matrix = Mat4<Scalar>;

  // Default-constructs the two-mode vacuum.
  CovMat() : m_(Scalar(0.5) * Matrix::Identity()) {}

  explicit CovMat(const Matrix& m, std::optional<Matrix> errors = std::nullopt,
                  Scalar symTol = Scalar(1e-9))
      : errors_(std::move(errors)) {
    const Scalar asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    const Scalar scale = std::max(Scalar(1), m.cwiseAbs().maxCoeff());
    if (!(asym <= symTol * scale)) {
      std::ostringstream msg;
      msg << "covariance matrix is not symmetric (max asymmetry " << asym << ")";
      throw std::invalid_argument(msg.str());
    }
    m_ = ((m + m.transpose()) / Scalar(2)).eval();
    if (errors_) {
      errors_ = ((*errors_ + errors_->transpose()) / Scalar(2)).eval();
    }
  }

  const Matrix& matrix() const { return m_; }
  const std::optional<Matrix>& errors() const { return errors_; }

  Scalar operator()(int i, int j) const { return m_(i, j); }

 private:
  Matrix m_;
  std::optional<Matrix> errors_;
};

// Linear optical map on the quadrature vector, S Omega S^T = Omega.
template <class Scalar = double>
class SymplecticMap {
 public:
  explicit SymplecticMap(const Mat4<Scalar>& s, Scalar tol = Scalar(1e-9)) : s_(s) {
    const Mat4<Scalar> omega = symplecticForm<Scalar>();
    const Scalar defect = (s * omega * s.transpose() - omega).cwiseAbs().maxCoeff();
    if (!(defect <= tol)) {
      std::ostringstream msg;
      msg << "matrix is not symplectic (defect " << defect << ")";
      throw std::invalid_argument(msg.str());
    }
  }

  static SymplecticMap identity() { return SymplecticMap(Mat4<Scalar>::Identity()); }

  const Mat4<Scalar>& matrix() const { return s_; }

 private:
  Mat4<Scalar> s_;
};

// Two-mode squeezing parameter.
template <class Scalar = double>
struct SqueezeSpec {
  Scalar r{};
};

// Parameters of a covariance matrix in standard form
// diag(n, n, m, m) with cross correlations c1 = <Xa Xb>, c2 = <Ya Yb>,
// together with their 1-sigma uncertainties (zero when unknown).
template <class Scalar = double>
struct StandardFormParams {
  Scalar n{}, m{};
  Scalar c1{}, c2{};
  Scalar dn{}, dm{}, dc1{}, dc2{};
};

template <class Scalar = double>
CovMat<Scalar> vacuumCovariance() {
  return CovMat<Scalar>();
}

// Covariance matrix of a two-mode squeezed vacuum:
// diagonal cosh(2r)/2, cross correlations +-sinh(2r)/2.
template <class Scalar>
CovMat<Scalar> tmsvCovariance(const SqueezeSpec<Scalar>& spec) {
  if (!(spec.r >= Scalar(0)) || !std::isfinite(double(spec.r))) {
    throw std::invalid_argument("squeezing parameter must be finite and >= 0");
  }
  const Scalar d = std::cosh(Scalar(2) * spec.r) / Scalar(2);
  const Scalar c = std::sinh(Scalar(2) * spec.r) / Scalar(2);
  Mat4<Scalar> m = d * Mat4<Scalar>::Identity();
  m(0, 2) = m(2, 0) = c;
  m(1, 3) = m(3, 1) = -c;
  return CovMat<Scalar>(m);
}

// Builds the explicit 4x4 matrix for a set of standard-form parameters.
template <class Scalar>
CovMat<Scalar> standardFormCovariance(const StandardFormParams<Scalar>& p) {
  Mat4<Scalar> m = Mat4<Scalar>::Zero();
  m(0, 0) = m(1, 1) = p.n;
  m(2, 2) = m(3, 3) = p.m;
  m(0, 2) = m(2, 0) = p.c1;
  m(1, 3) = m(3, 1) = p.c2;
  std::optional<Mat4<Scalar>> errors;
  if (p.dn != Scalar(0) || p.dm != Scalar(0) || p.dc1 != Scalar(0) || p.dc2 != Scalar(0)) {
    Mat4<Scalar> e = Mat4<Scalar>::Zero();
    e(0, 0) = e(1, 1) = p.dn;
    e(2, 2) = e(3, 3) = p.dm;
    e(0, 2) = e(2, 0) = p.dc1;
    e(1, 3) = e(3, 1) = p.dc2;
    errors = e;
  }
  return CovMat<Scalar>(m, errors);
}

// Reduces a covariance matrix to standard-form parameters by averaging the
// two diagonal entries of each mode block; c1 and c2 are read off directly.
//
// Entries that vanish in standard form (sigma_12, sigma_14, sigma_23,
// sigma_34) must be small: below `nSigma` times their stated uncertainty
// when uncertainties are present, below `absTol` otherwise, else a
// ShapeViolationError is thrown.
template <class Scalar>
StandardFormParams<Scalar> standardForm(const CovMat<Scalar>& cm, Scalar nSigma = Scalar(3),
                                        Scalar absTol = Scalar(1e-9)) {
  const auto& m = cm.matrix();
  const int offIdx[4][2] = {{0, 1}, {0, 3}, {1, 2}, {2, 3}};
  for (const auto& ij : offIdx) {
    const int i = ij[0], j = ij[1];
    Scalar limit = absTol;
    if (cm.errors() && (*cm.errors())(i, j) > Scalar(0)) {
      limit = nSigma * (*cm.errors())(i, j);
    }
    if (!(std::abs(m(i, j)) <= limit)) {
      std::ostringstream msg;
      msg << "entry (" << i << "," << j << ") = " << m(i, j)
          << " is incompatible with standard form (limit " << limit << ")";
      throw ShapeViolationError(msg.str());
    }
  }
  StandardFormParams<Scalar> p;
  p.n = (m(0, 0) + m(1, 1)) / Scalar(2);
  p.m = (m(2, 2) + m(3, 3)) / Scalar(2);
  p.c1 = m(0, 2);
  p.c2 = m(1, 3);
  if (cm.errors()) {
    const auto& e = *cm.errors();
    p.dn = std::hypot(e(0, 0), e(1, 1)) / Scalar(2);
    p.dm = std::hypot(e(2, 2), e(3, 3)) / Scalar(2);
    p.dc1 = e(0, 2);
    p.dc2 = e(1, 3);
  }
  return p;
}

// Symmetrizes standard-form parameters across the two modes: both diagonals
// become (n + m)/2 and the cross correlations become +-(|c1| + |c2|)/2.
template <class Scalar>
StandardFormParams<Scalar> symmetrizeParams(const StandardFormParams<Scalar>& p) {
  StandardFormParams<Scalar> s;
  s.n = s.m = (p.n + p.m) / Scalar(2);
  const Scalar c = (std::abs(p.c1) + std::abs(p.c2)) / Scalar(2);
  s.c1 = c;
  s.c2 = -c;
  s.dn = s.dm = std::hypot(p.dn, p.dm) / Scalar(2);
  s.dc1 = s.dc2 = std::hypot(p.dc1, p.dc2) / Scalar(2);
  return s;
}

// sigma -> S sigma S^T.  Per-entry uncertainties are dropped: they do not
// transform independently under a map that mixes entries.
template <class Scalar>
CovMat<Scalar> applySymplectic(const CovMat<Scalar>& cm, const SymplecticMap<Scalar>& s) {
  return CovMat<Scalar>(s.matrix() * cm.matrix() * s.matrix().transpose());
}

// Pure-loss channel with uniform intensity transmission T on both modes:
// sigma -> T sigma + (1 - T)/2 * I.  Uncertainties scale by T.
template <class Scalar>
CovMat<Scalar> lossChannel(const CovMat<Scalar>& cm, Scalar transmission) {
  if (!(transmission > Scalar(0)) || !(transmission <= Scalar(1))) {
    throw std::invalid_argument("transmission must be in (0, 1]");
  }
  Mat4<Scalar> m = transmission * cm.matrix();
  m += ((Scalar(1) - transmission) / Scalar(2)) * Mat4<Scalar>::Identity();
  std::optional<Mat4<Scalar>> errors;
  if (cm.errors()) errors = (transmission * *cm.errors()).eval();
  return CovMat<Scalar>(m, errors);
}

// Exact algebraic inverse of lossChannel:
// sigma_0 = (sigma - (1 - T)/2 * I) / T.  The result may be unphysical
// (smallest symplectic eigenvalue below 0.5) and is returned regardless;
// callers decide how to treat such states.  Uncertainties scale by 1/T.
template <class Scalar>
CovMat<Scalar> invertLoss(const CovMat<Scalar>& cm, Scalar transmission) {
  if (!(transmission > Scalar(0)) || !(transmission <= Scalar(1))) {
    throw std::invalid_argument("transmission must be in (0, 1]");
  }
  Mat4<Scalar> m = cm.matrix();
  m -= ((Scalar(1) - transmission) / Scalar(2)) * Mat4<Scalar>::Identity();
  m /= transmission;
  std::optional<Mat4<Scalar>> errors;
  if (cm.errors()) errors = (*cm.errors() / transmission).eval();
  return CovMat<Scalar>(m, errors);
}

// Purity mu = 1 / (4 sqrt(det sigma)) of a two-mode Gaussian state.
// The matrix must be positive definite.
template <class Scalar>
Scalar purity(const CovMat<Scalar>& cm) {
  Eigen::SelfAdjointEigenSolver<Mat4<Scalar>> solver(cm.matrix());
  const auto& eig = solver.eigenvalues();
  if (!(eig.minCoeff() > Scalar(0))) {
    throw std::invalid_argument("covariance matrix is not positive definite");
  }
  return Scalar(1) / (Scalar(4) * std::sqrt(eig.prod()));
}

// Purity from standard-form parameters, using
// det sigma = (n m - c1^2)(n m - c2^2).
template <class Scalar>
Scalar purity(const StandardFormParams<Scalar>& p) {
  const Scalar f1 = p.n * p.m - p.c1 * p.c1;
  const Scalar f2 = p.n * p.m - p.c2 * p.c2;
  if (!(p.n > Scalar(0)) || !(p.m > Scalar(0)) || !(f1 > Scalar(0)) || !(f2 > Scalar(0))) {
    throw std::invalid_argument("standard-form parameters are not positive definite");
  }
  return Scalar(1) / (Scalar(4) * std::sqrt(f1 * f2));
}

// Symplectic eigenvalues (nu_minus, nu_plus) from the closed form
//   Delta = det A + det B + 2 det C,
//   2 nu^2 = Delta -+ sqrt(Delta^2 - 4 det sigma),
// where A, B are the mode blocks and C the cross block.  A physical state
// has nu_minus >= 0.5 in this normalization.
template <class Scalar>
std::pair<Scalar, Scalar> symplecticEigenvalues(const CovMat<Scalar>& cm) {
  // The discriminant vanishes for symmetric states, so it is evaluated in
  // extended precision, and nu_minus comes from the cancellation-free
  // quotient det sigma / nu_plus^2 instead of (Delta - sqrt(disc)) / 2.
  using Wide = long double;
  const Mat4<Wide> s = cm.matrix().template cast<Wide>();
  const Wide detA = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
  const Wide detB = s(2, 2) * s(3, 3) - s(2, 3) * s(3, 2);
  const Wide detC = s(0, 2) * s(1, 3) - s(0, 3) * s(1, 2);
  const Wide delta = detA + detB + Wide(2) * detC;
  const Wide det = s.determinant();
  const Wide disc = std::max(Wide(0), delta * delta - Wide(4) * det);
  const Wide hiSq = std::max(Wide(0), (delta + std::sqrt(disc)) / Wide(2));
  const Wide loSq = hiSq > Wide(0) ? std::max(Wide(0), det / hiSq) : Wide(0);
  return {Scalar(std::sqrt(loSq)), Scalar(std::sqrt(hiSq))};
}

template <class Scalar>
Scalar minSymplecticEigenvalue(const CovMat<Scalar>& cm) {
  return symplecticEigenvalues(cm).first;
}

// Uncertainty-principle check: nu_minus >= 0.5 - tol.
template <class Scalar>
bool isPhysical(const CovMat<Scalar>& cm, Scalar tol = Scalar(1e-9)) {
  return minSymplecticEigenvalue(cm) >= Scalar(0.5) - tol;
}

}  // namespace oamcv
