#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <random>
#include <vector>

#include "oamcv/gaussian.hpp"
#include "oamcv/replication.hpp"

namespace testutil {

// Reconstructed two-mode covariance matrix of the OAM twin-beam experiment
// this pipeline replicates; every entry carries a 0.02 uncertainty.
inline oamcv::CovMat<double> referenceLossyCm(bool withErrors = true) {
  const oamcv::CovMat<double> ref = oamcv::referenceExperimentCm();
  if (withErrors) return ref;
  return oamcv::CovMat<double>(ref.matrix());
}

// Symmetrized form of the reference matrix as quoted in the experiment.
inline oamcv::StandardFormParams<double> referenceSymmetricParams() {
  oamcv::StandardFormParams<double> p;
  p.n = p.m = 0.61;
  p.c1 = 0.26;
  p.c2 = -0.26;
  return p;
}

// Loss-inverted ancestor parameters as quoted in the experiment.
inline oamcv::StandardFormParams<double> referenceAncestorParams() {
  oamcv::StandardFormParams<double> p;
  p.n = p.m = 0.70;
  p.c1 = 0.48;
  p.c2 = -0.48;
  return p;
}

// Determinant by cofactor expansion along the first row; written out by hand
// so library determinants are checked against independent arithmetic.
inline double cofactorDet3(const Eigen::Matrix3d& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

inline double cofactorDet4(const Eigen::Matrix4d& m) {
  double det = 0.0;
  double sign = 1.0;
  for (int j = 0; j < 4; ++j) {
    Eigen::Matrix3d minor;
    for (int r = 1; r < 4; ++r) {
      int cc = 0;
      for (int c = 0; c < 4; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = m(r, c);
      }
    }
    det += sign * m(0, j) * cofactorDet3(minor);
    sign = -sign;
  }
  return det;
}

// Symplectic spectrum through a generic eigensolver: the eigenvalues of
// i * Omega * sigma are +-nu, so their magnitudes give each nu twice.
inline std::vector<double> symplecticSpectrumOracle(const oamcv::CovMat<double>& cm) {
  const Eigen::Matrix4d prod = oamcv::symplecticForm<double>() * cm.matrix();
  Eigen::Matrix4cd im = std::complex<double>(0.0, 1.0) * prod.cast<std::complex<double>>();
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> solver(im);
  std::vector<double> nus;
  for (int i = 0; i < 4; ++i) nus.push_back(std::abs(solver.eigenvalues()(i)));
  std::sort(nus.begin(), nus.end());
  return nus;
}

// Random physical covariance matrix: 0.5 I + A A^T dominates the vacuum,
// so the uncertainty principle holds by construction.
inline oamcv::CovMat<double> randomPhysicalCm(std::mt19937_64& gen) {
  std::normal_distribution<double> dist(0.0, 0.3);
  Eigen::Matrix4d a;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = dist(gen);
  Eigen::Matrix4d m = 0.5 * Eigen::Matrix4d::Identity() + a * a.transpose();
  return oamcv::CovMat<double>(m);
}

// Two-mode beam-splitter-like orthogonal symplectic map (angle theta),
// plus independent phase rotations on each mode.
inline oamcv::SymplecticMap<double> randomPassiveMap(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  const double t = angle(gen), pa = angle(gen), pb = angle(gen);
  auto rot = [](double th) {
    Eigen::Matrix2d r;
    r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    return r;
  };
  Eigen::Matrix4d s = Eigen::Matrix4d::Zero();
  s.topLeftCorner<2, 2>() = std::cos(t) * rot(pa);
  s.topRightCorner<2, 2>() = std::sin(t) * rot(pb);
  s.bottomLeftCorner<2, 2>() = -std::sin(t) * rot(pa);
  s.bottomRightCorner<2, 2>() = std::cos(t) * rot(pb);
  return oamcv::SymplecticMap<double>(s);
}

}  // namespace testutil
