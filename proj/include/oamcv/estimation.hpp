#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oamcv/errors.hpp"
#include "oamcv/gaussian.hpp"
#include "oamcv/homodyne.hpp"

namespace oamcv {

// Unbiased sample variance around the sample mean.
inline double traceVariance(const std::vector<double>& values) {
  if (values.size() < 2) {
    throw std::invalid_argument("variance needs at least two samples");
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= double(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return sq / double(values.size() - 1);
}

// Mean photon number of a trace: the phase-averaged shot-normalized variance
// of a mode with n photons is n + 1/2.
inline double meanPhotonNumber(const QuadratureTrace& trace, double shotVariance) {
  if (!(shotVariance > 0.0)) {
    throw std::invalid_argument("shot variance must be positive");
  }
  return kShotNoiseVariance * traceVariance(trace.value) / shotVariance - 0.5;
}

// Per-phase-bin marginal statistics of a scan.
struct BinStats {
  double phase{};    // bin center, radians
  int count{};
  double variance{}; // unbiased, raw detector units
  double kurtosis{}; // m4 / m2^2; 3 for a Gaussian marginal
};

// Sorts samples into `bins` equal phase bins over [0, 2 pi) and computes
// each bin's variance and kurtosis.  Every bin must receive at least two
// samples, otherwise the scan does not cover the phase range.
inline std::vector<BinStats> binTrace(const QuadratureTrace& trace, int bins) {
  if (bins < 4) throw std::invalid_argument("need at least four phase bins");
  if (trace.phase.size() != trace.value.size()) {
    throw std::invalid_argument("phase and value arrays differ in length");
  }
  constexpr double twoPi = 2.0 * std::numbers::pi;
  const double width = twoPi / bins;
  std::vector<double> n(bins, 0.0), s1(bins, 0.0), s2(bins, 0.0), s3(bins, 0.0), s4(bins, 0.0);
  for (std::size_t i = 0; i < trace.phase.size(); ++i) {
    double ph = std::fmod(trace.phase[i], twoPi);
    if (ph < 0.0) ph += twoPi;
    const int b = std::min(int(ph / width), bins - 1);
    const double x = trace.value[i];
    n[b] += 1.0;
    s1[b] += x;
    s2[b] += x * x;
    s3[b] += x * x * x;
    s4[b] += x * x * x * x;
  }
  std::vector<BinStats> out(bins);
  for (int b = 0; b < bins; ++b) {
    if (n[b] < 2.0) {
      std::ostringstream msg;
      msg << "phase bin " << b << " holds " << int(n[b]) << " samples; the scan does not cover [0, 2 pi)";
      throw InsufficientCoverageError(msg.str());
    }
    const double mean = s1[b] / n[b];
    const double m2 = s2[b] / n[b] - mean * mean;
    const double m4 = s4[b] / n[b] - 4.0 * mean * s3[b] / n[b] + 6.0 * mean * mean * s2[b] / n[b] -
                      3.0 * mean * mean * mean * mean;
    if (!(m2 > 0.0)) {
      throw DegenerateDistributionError("zero spread within a phase bin");
    }
    out[b].phase = (b + 0.5) * width;
    out[b].count = int(n[b]);
    out[b].variance = m2 * n[b] / (n[b] - 1.0);
    out[b].kurtosis = m4 / (m2 * m2);
  }
  return out;
}

// Pooled kurtosis check over every phase bin of every supplied trace.
struct GaussianityReport {
  double meanKurtosis{};
  double kurtosisSd{};
  double outlierFraction{};
  int bins{};
  double meanTol{};
  double outlierTol{};
  double maxOutlierFraction{};
  bool pass{};
};

inline GaussianityReport gaussianityTest(const std::vector<std::vector<BinStats>>& traces,
                                         double meanTol = 0.1, double outlierTol = 0.5,
                                         double maxOutlierFraction = 0.01) {
  GaussianityReport rep;
  rep.meanTol = meanTol;
  rep.outlierTol = outlierTol;
  rep.maxOutlierFraction = maxOutlierFraction;
  double sum = 0.0, sumSq = 0.0;
  int outliers = 0, total = 0;
  for (const auto& bins : traces) {
    for (const auto& b : bins) {
      sum += b.kurtosis;
      sumSq += b.kurtosis * b.kurtosis;
      if (std::abs(b.kurtosis - 3.0) > outlierTol) ++outliers;
      ++total;
    }
  }
  if (total == 0) throw std::invalid_argument("no bins to test");
  rep.bins = total;
  rep.meanKurtosis = sum / total;
  const double varK = total > 1 ? (sumSq - sum * sum / total) / (total - 1) : 0.0;
  rep.kurtosisSd = std::sqrt(std::max(0.0, varK));
  rep.outlierFraction = double(outliers) / total;
  rep.pass = std::abs(rep.meanKurtosis - 3.0) <= meanTol &&
             rep.outlierFraction <= maxOutlierFraction;
  return rep;
}

// The three detection configurations each see both input modes, so the sum
// of the two phase-averaged normalized variances per configuration estimates
// the same total photon flux; their spread diagnoses source drift between
// the (sequentially measured) configurations.
struct StationarityReport {
  std::array<double, 3> configTotals{};
  double maxRelDeviation{};
  double tol{};
  bool pass{};
};

inline StationarityReport stationarityGate(const std::array<double, 6>& meanVarNorm,
                                           double tol = 0.05) {
  StationarityReport rep;
  rep.tol = tol;
  for (int k = 0; k < 3; ++k) {
    rep.configTotals[k] = meanVarNorm[2 * k] + meanVarNorm[2 * k + 1];
  }
  const double mean = (rep.configTotals[0] + rep.configTotals[1] + rep.configTotals[2]) / 3.0;
  if (!(mean > 0.0)) throw std::invalid_argument("non-positive mean variance");
  double maxDev = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      maxDev = std::max(maxDev, std::abs(rep.configTotals[i] - rep.configTotals[j]));
    }
  }
  rep.maxRelDeviation = maxDev / mean;
  rep.pass = rep.maxRelDeviation <= tol;
  return rep;
}

// Weighted least-squares fit of the binned variances to
//   V(theta) = sxx cos^2(theta) + syy sin^2(theta) + sxy sin(2 theta)
// in shot-normalized units.  Each bin is weighted by the inverse sampling
// variance of a sample variance, Var(v) = 2 v^2 / (count - 1).
struct VarianceFit {
  double sxx{}, syy{}, sxy{};
  double dsxx{}, dsyy{}, dsxy{};
  Eigen::Matrix3d cov{Eigen::Matrix3d::Zero()};
  double meanVariance{};
  double vMin{}, vMax{};
  double dvMin{}, dvMax{};
  double chi2{};
  int dof{};
};

namespace detail {

inline void finishFit(VarianceFit& fit) {
  fit.dsxx = std::sqrt(std::max(0.0, fit.cov(0, 0)));
  fit.dsyy = std::sqrt(std::max(0.0, fit.cov(1, 1)));
  fit.dsxy = std::sqrt(std::max(0.0, fit.cov(2, 2)));
  fit.meanVariance = (fit.sxx + fit.syy) / 2.0;
  const double half = (fit.sxx - fit.syy) / 2.0;
  const double amp = std::hypot(half, fit.sxy);
  fit.vMin = fit.meanVariance - amp;
  fit.vMax = fit.meanVariance + amp;
  Eigen::Vector3d gLo, gHi;
  if (amp > 1e-300) {
    const double dAmpDx = half / (2.0 * amp);  // d amp / d sxx
    const double dAmpDc = fit.sxy / amp;
    gLo << 0.5 - dAmpDx, 0.5 + dAmpDx, -dAmpDc;
    gHi << 0.5 + dAmpDx, 0.5 - dAmpDx, dAmpDc;
  } else {
    gLo << 0.5, 0.5, 0.0;
    gHi = gLo;
  }
  fit.dvMin = std::sqrt(std::max(0.0, double(gLo.transpose() * fit.cov * gLo)));
  fit.dvMax = std::sqrt(std::max(0.0, double(gHi.transpose() * fit.cov * gHi)));
}

}  // namespace detail

inline VarianceFit fitSingleMode(const std::vector<BinStats>& bins, double shotVariance) {
  if (!(shotVariance > 0.0)) {
    throw std::invalid_argument("shot variance must be positive");
  }
  if (bins.size() < 3) {
    throw FitDegenerateError("need at least three phase bins to fit three parameters");
  }
  Eigen::Matrix3d xtwx = Eigen::Matrix3d::Zero();
  Eigen::Vector3d xtwy = Eigen::Vector3d::Zero();
  for (const auto& b : bins) {
    const double y = kShotNoiseVariance * b.variance / shotVariance;
    if (!(y > 0.0) || b.count < 2) {
      throw std::invalid_argument("bin with non-positive variance or too few samples");
    }
    const double w = (b.count - 1) / (2.0 * y * y);
    const double c = std::cos(b.phase), s = std::sin(b.phase);
    const Eigen::Vector3d row(c * c, s * s, 2.0 * s * c);
    xtwx += w * row * row.transpose();
    xtwy += w * row * y;
  }
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(xtwx);
  if (!lu.isInvertible()) {
    throw FitDegenerateError("degenerate phase coverage: normal equations are singular");
  }
  VarianceFit fit;
  const Eigen::Vector3d beta = lu.solve(xtwy);
  fit.sxx = beta(0);
  fit.syy = beta(1);
  fit.sxy = beta(2);
  fit.cov = lu.inverse();
  fit.dof = int(bins.size()) - 3;
  for (const auto& b : bins) {
    const double y = kShotNoiseVariance * b.variance / shotVariance;
    const double w = (b.count - 1) / (2.0 * y * y);
    const double c = std::cos(b.phase), s = std::sin(b.phase);
    const double model = beta(0) * c * c + beta(1) * s * s + beta(2) * 2.0 * s * c;
    fit.chi2 += w * (y - model) * (y - model);
  }
  detail::finishFit(fit);
  return fit;
}

// Re-expresses a fit made in a rotated quadrature frame: if the measured mode
// carries a global phase phi relative to its canonical definition, the
// canonical-frame block is R(-phi) B R(-phi)^T.
inline VarianceFit rotateFitFrame(const VarianceFit& fit, double alpha) {
  const double c = std::cos(alpha), s = std::sin(alpha);
  Eigen::Matrix3d t;
  t << c * c, s * s, -2.0 * s * c,  //
      s * s, c * c, 2.0 * s * c,    //
      s * c, -s * c, c * c - s * s;
  VarianceFit out = fit;
  const Eigen::Vector3d beta = t * Eigen::Vector3d(fit.sxx, fit.syy, fit.sxy);
  out.sxx = beta(0);
  out.syy = beta(1);
  out.sxy = beta(2);
  out.cov = t * fit.cov * t.transpose();
  detail::finishFit(out);
  out.chi2 = fit.chi2;
  out.dof = fit.dof;
  return out;
}

// Assembles the full two-mode covariance matrix from the six single-mode
// fits (canonical frames).  The direct modes give the diagonal blocks; the
// sum/difference modes (c, d) and the phase-shifted pair (e, f) each yield
// an estimate of every cross entry, which must agree within `crossSigma`
// combined standard errors and are then averaged.
inline CovMat<double> assembleCm(const std::map<std::string, VarianceFit>& fits,
                                 double crossSigma = 3.0) {
  for (const char* name : {"a", "b", "c", "d", "e", "f"}) {
    if (!fits.count(name)) {
      throw IncompleteInputError(std::string("missing fit for mode ") + name);
    }
  }
  const VarianceFit &a = fits.at("a"), &b = fits.at("b"), &c = fits.at("c"), &d = fits.at("d"),
                    &e = fits.at("e"), &f = fits.at("f");

  struct Est {
    double value, var;
  };
  auto average = [crossSigma](const char* entry, Est e1, Est e2) {
    const double se = std::sqrt(e1.var + e2.var);
    if (std::abs(e1.value - e2.value) > crossSigma * se) {
      std::ostringstream msg;
      msg << "estimates of " << entry << " disagree: " << e1.value << " vs " << e2.value
          << " (" << crossSigma << " sigma = " << crossSigma * se << ")";
      throw ReconstructionInconsistencyError(msg.str());
    }
    return Est{(e1.value + e2.value) / 2.0, (e1.var + e2.var) / 4.0};
  };

  // Direct differences of the mixed-mode variances.
  const Est s13a{(c.sxx - d.sxx) / 2.0, (c.cov(0, 0) + d.cov(0, 0)) / 4.0};
  const Est s24a{(c.syy - d.syy) / 2.0, (c.cov(1, 1) + d.cov(1, 1)) / 4.0};
  const Est s23a{(f.sxx - e.sxx) / 2.0, (e.cov(0, 0) + f.cov(0, 0)) / 4.0};
  const Est s14a{(e.syy - f.syy) / 2.0, (e.cov(1, 1) + f.cov(1, 1)) / 4.0};
  // The cross-quadrature fit terms constrain the complementary combinations
  // sxy(e) - sxy(f) = sigma13 - sigma24 and sxy(c) - sxy(d) = sigma14 + sigma23.
  const double efDiff = e.sxy - f.sxy;
  const double efVar = e.cov(2, 2) + f.cov(2, 2);
  const double cdDiff = c.sxy - d.sxy;
  const double cdVar = c.cov(2, 2) + d.cov(2, 2);
  const Est s13b{efDiff + s24a.value, efVar + s24a.var};
  const Est s24b{s13a.value - efDiff, efVar + s13a.var};
  const Est s14b{cdDiff - s23a.value, cdVar + s23a.var};
  const Est s23b{cdDiff - s14a.value, cdVar + s14a.var};

  const Est s13 = average("sigma(Xa,Xb)", s13a, s13b);
  const Est s24 = average("sigma(Ya,Yb)", s24a, s24b);
  const Est s14 = average("sigma(Xa,Yb)", s14a, s14b);
  const Est s23 = average("sigma(Ya,Xb)", s23a, s23b);

  Mat4<double> m, err;
  m << a.sxx, a.sxy, s13.value, s14.value,  //
      a.sxy, a.syy, s23.value, s24.value,   //
      s13.value, s23.value, b.sxx, b.sxy,   //
      s14.value, s24.value, b.sxy, b.syy;
  err << a.dsxx, a.dsxy, std::sqrt(s13.var), std::sqrt(s14.var),  //
      a.dsxy, a.dsyy, std::sqrt(s23.var), std::sqrt(s24.var),     //
      std::sqrt(s13.var), std::sqrt(s23.var), b.dsxx, b.dsxy,     //
      std::sqrt(s14.var), std::sqrt(s24.var), b.dsxy, b.dsyy;
  return CovMat<double>(m, err);
}

// Transmission of the channel connecting a pure squeezed ancestor to the
// observed minimum/maximum quadrature variances of one auxiliary mode:
// with vmin/vmax = T exp(-+2r)/2 + (1 - T)/2 and S = vmin + vmax,
//   T = (2 S - 1 - 4 vmin vmax) / (2 (S - 1))
// exactly, independent of r.
struct TransmissionEstimate {
  double t{};
  double dt{};
};

inline TransmissionEstimate estimateTransmission(double vMin, double vMax, double dvMin = 0.0,
                                                 double dvMax = 0.0) {
  if (!(vMin > 0.0) || !(vMax >= vMin)) {
    throw std::invalid_argument("need 0 < vMin <= vMax");
  }
  const double s = vMin + vMax;
  const double noise = std::hypot(dvMin, dvMax);
  if (std::abs(s - 1.0) < std::max(1e-9, 3.0 * noise) ||
      vMax - vMin < std::max(1e-9, 3.0 * noise)) {
    throw UnresolvableError("squeezing not resolved above noise: transmission is unidentifiable");
  }
  const double num = 2.0 * s - 1.0 - 4.0 * vMin * vMax;
  const double den = 2.0 * (s - 1.0);
  TransmissionEstimate est;
  est.t = num / den;
  const double dTdLo = ((2.0 - 4.0 * vMax) * den - num * 2.0) / (den * den);
  const double dTdHi = ((2.0 - 4.0 * vMin) * den - num * 2.0) / (den * den);
  est.dt = std::hypot(dTdLo * dvMin, dTdHi * dvMax);
  // A phase-flat mode whose fitted modulation is a pure noise fluctuation can
  // slip past the amplitude gate above; it then lands outside the physical
  // channel range (a flat mode of variance v gives exactly -(2v - 1)/2).
  if (!(est.t > 0.0) || est.t > 1.0 + 3.0 * est.dt + 1e-9) {
    std::ostringstream msg;
    msg << "recovered transmission " << est.t
        << " is outside (0, 1]: no physical loss channel fits these variances";
    throw UnresolvableError(msg.str());
  }
  return est;
}

// Transmission found by scanning the loss inversion of a symmetrized state
// for the point where the ancestor's purity reaches one.  The purity-excess
// function has a single root, located by bisection; `window` is the accepted
// deviation of the ancestor purity from one at the returned transmission.
inline TransmissionEstimate transmissionFromPurityScan(const StandardFormParams<double>& p,
                                                       double window = 0.02,
                                                       double tMin = 1e-3) {
  if (std::abs(p.n - p.m) > 1e-9 || std::abs(p.c1 + p.c2) > 1e-9) {
    throw std::invalid_argument("purity scan requires symmetrized parameters");
  }
  const double u = p.m - 0.5;
  const double c = std::abs(p.c1);
  if (!(u > 0.0)) {
    throw UnresolvableError("no thermal excess above vacuum: transmission is unidentifiable");
  }
  auto excess = [&](double t) {
    const double m0 = (p.m - (1.0 - t) / 2.0) / t;
    const double c0 = c / t;
    return m0 * m0 - c0 * c0 - 0.25;  // > 0 for purity below one
  };
  double lo = tMin, hi = 1.0;
  if (excess(lo) > 0.0 || excess(hi) < -1e-9) {
    throw UnresolvableError("no transmission in (0, 1] yields a pure ancestor");
  }
  if (excess(hi) <= 0.0) {
    lo = hi;  // root sits at the unit-transmission boundary within rounding
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = (lo + hi) / 2.0;
    (excess(mid) < 0.0 ? lo : hi) = mid;
  }
  TransmissionEstimate est;
  est.t = (lo + hi) / 2.0;
  const double m0 = (p.m - (1.0 - est.t) / 2.0) / est.t;
  const double c0 = c / est.t;
  const double mu = 1.0 / (4.0 * (m0 * m0 - c0 * c0));
  if (std::abs(mu - 1.0) > window) {
    throw UnresolvableError("ancestor purity misses one beyond the accepted window");
  }
  // Uncertainty from the closed form T = (c^2 - u^2)/u of the same root.
  est.dt = std::hypot((2.0 * c / u) * p.dc1, ((c * c + u * u) / (u * u)) * p.dm);
  return est;
}

}  // namespace oamcv
