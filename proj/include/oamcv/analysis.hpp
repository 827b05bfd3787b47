#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "oamcv/errors.hpp"
#include "oamcv/estimation.hpp"
#include "oamcv/gaussian.hpp"
#include "oamcv/rng.hpp"

namespace oamcv {

// Value of the product-of-variances separability bound:
//   n^2 + m^2 + 2 |c1 c2| - 4 (n m - c1^2)(n m - c2^2).
// Separable states stay at or below 1/4; larger values certify entanglement.
inline double phsValue(const StandardFormParams<double>& p) {
  return p.n * p.n + p.m * p.m + 2.0 * std::abs(p.c1 * p.c2) -
         4.0 * (p.n * p.m - p.c1 * p.c1) * (p.n * p.m - p.c2 * p.c2);
}

inline constexpr double kPhsThreshold = 0.25;

// Value of the summed-quadrature separability bound:
//   sqrt((2n - 1)(2m - 1)) - (c1 - c2).
// Separable states stay at or above 0; negative values certify entanglement.
// If one mode dips below shot noise the product under the root turns
// negative; its absolute value is used and the guard is reported.
struct DuanEval {
  double value{};
  bool absGuard{};
};

inline DuanEval duanValue(const StandardFormParams<double>& p) {
  DuanEval ev;
  const double product = (2.0 * p.n - 1.0) * (2.0 * p.m - 1.0);
  ev.absGuard = product < 0.0;
  ev.value = std::sqrt(std::abs(product)) - (p.c1 - p.c2);
  return ev;
}

inline constexpr double kDuanThreshold = 0.0;

// Separation of a Monte Carlo distribution from a decision threshold,
// in units of its own spread.
inline double significance(double mean, double threshold, double sd) {
  if (!(sd > 0.0)) {
    throw DegenerateDistributionError("zero spread: significance is undefined");
  }
  return std::abs(mean - threshold) / sd;
}

// One entanglement criterion evaluated at the central parameters and under
// Monte Carlo resampling of (n, m, c1, c2) within their uncertainties.
struct CriterionMc {
  double value{};
  double threshold{};
  bool entangled{};
  bool absGuard{};
  double mcMean{};
  double mcSd{};
  double sigma{};
  int draws{};
};

namespace detail {

template <class Eval>
CriterionMc criterionMonteCarlo(const StandardFormParams<double>& p, double threshold,
                                int draws, std::mt19937_64& gen, Eval eval) {
  if (draws < 2) throw std::invalid_argument("need at least two Monte Carlo draws");
  CriterionMc out;
  out.threshold = threshold;
  out.draws = draws;
  std::normal_distribution<double> unit(0.0, 1.0);
  double sum = 0.0, sumSq = 0.0;
  for (int k = 0; k < draws; ++k) {
    StandardFormParams<double> q = p;
    q.n += p.dn * unit(gen);
    q.m += p.dm * unit(gen);
    q.c1 += p.dc1 * unit(gen);
    q.c2 += p.dc2 * unit(gen);
    const double v = eval(q);
    sum += v;
    sumSq += v * v;
  }
  out.mcMean = sum / draws;
  out.mcSd = std::sqrt(std::max(0.0, (sumSq - sum * sum / draws) / (draws - 1)));
  out.sigma = significance(out.mcMean, threshold, out.mcSd);
  return out;
}

}  // namespace detail

inline CriterionMc phsCriterion(const StandardFormParams<double>& p, int draws,
                                std::mt19937_64& gen) {
  CriterionMc out = detail::criterionMonteCarlo(
      p, kPhsThreshold, draws, gen,
      [](const StandardFormParams<double>& q) { return phsValue(q); });
  out.value = phsValue(p);
  out.entangled = out.value > kPhsThreshold;
  return out;
}

inline CriterionMc duanCriterion(const StandardFormParams<double>& p, int draws,
                                 std::mt19937_64& gen) {
  bool anyGuard = false;
  CriterionMc out = detail::criterionMonteCarlo(
      p, kDuanThreshold, draws, gen, [&anyGuard](const StandardFormParams<double>& q) {
        const DuanEval ev = duanValue(q);
        anyGuard = anyGuard || ev.absGuard;
        return ev.value;
      });
  const DuanEval central = duanValue(p);
  out.value = central.value;
  out.entangled = central.value < kDuanThreshold;
  out.absGuard = central.absGuard || anyGuard;
  return out;
}

// Monte Carlo of the ancestor purity under the stated reconstruction
// uncertainties: each draw perturbs the reconstruction, symmetrizes it,
// undoes the fixed transmission and evaluates 1 / (4 sqrt(det)).
struct PurityMcConfig {
  double transmission{0.53};
  int draws{100000};
  bool fullMatrix{false};  // perturb all 16 entries instead of the 4 parameters
};

struct PurityMcResult {
  double central{};
  double mean{};
  double sd{};
  double median{};
  double fractionAboveOne{};
  int kept{};
  int draws{};
  // Equal-width histogram of the kept draws, spanning [histEdges.front(),
  // histEdges.back()] with histCounts.size() bins.
  std::vector<double> histEdges;
  std::vector<int> histCounts;
};

inline PurityMcResult purityMonteCarlo(const CovMat<double>& cm, const PurityMcConfig& cfg,
                                       std::mt19937_64& gen) {
  if (cfg.draws < 2) throw std::invalid_argument("need at least two Monte Carlo draws");
  if (!cm.errors()) {
    throw std::invalid_argument("purity Monte Carlo needs per-entry uncertainties");
  }
  if (!(cfg.transmission > 0.0) || !(cfg.transmission <= 1.0)) {
    throw std::invalid_argument("transmission must be in (0, 1]");
  }

  // Purity of the loss-inverted symmetrized parameters; NaN when the
  // inverted determinant is not positive.
  auto inverted = [&](double mBar, double cBar) {
    const double m0 = (mBar - (1.0 - cfg.transmission) / 2.0) / cfg.transmission;
    const double c0 = cBar / cfg.transmission;
    const double det = m0 * m0 - c0 * c0;
    return det > 0.0 ? 1.0 / (4.0 * det) : std::nan("");
  };
  auto paramsOf = [](const Mat4<double>& m) {
    StandardFormParams<double> p;
    p.n = (m(0, 0) + m(1, 1)) / 2.0;
    p.m = (m(2, 2) + m(3, 3)) / 2.0;
    p.c1 = m(0, 2);
    p.c2 = m(1, 3);
    return p;
  };

  const StandardFormParams<double> central = standardForm(cm);
  const StandardFormParams<double> sym = symmetrizeParams(central);

  PurityMcResult res;
  res.draws = cfg.draws;
  res.central = inverted(sym.m, sym.c1);

  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> purities;
  purities.reserve(cfg.draws);
  const Mat4<double>& err = *cm.errors();
  for (int k = 0; k < cfg.draws; ++k) {
    StandardFormParams<double> q;
    if (cfg.fullMatrix) {
      Mat4<double> m = cm.matrix();
      for (int i = 0; i < 4; ++i) {
        for (int j = i; j < 4; ++j) {
          const double v = m(i, j) + err(i, j) * unit(gen);
          m(i, j) = m(j, i) = v;
        }
      }
      q = paramsOf(m);
    } else {
      q = central;
      q.n += central.dn * unit(gen);
      q.m += central.dm * unit(gen);
      q.c1 += central.dc1 * unit(gen);
      q.c2 += central.dc2 * unit(gen);
    }
    const StandardFormParams<double> qs = symmetrizeParams(q);
    const double mu = inverted(qs.m, qs.c1);
    if (std::isfinite(mu)) purities.push_back(mu);
  }
  res.kept = int(purities.size());
  if (res.kept < 2) {
    throw DegenerateDistributionError("too few valid Monte Carlo draws for a purity spread");
  }
  double sum = 0.0, sumSq = 0.0;
  for (double mu : purities) {
    sum += mu;
    sumSq += mu * mu;
  }
  res.mean = sum / res.kept;
  res.sd = std::sqrt(std::max(0.0, (sumSq - sum * sum / res.kept) / (res.kept - 1)));
  for (double mu : purities) res.fractionAboveOne += mu > 1.0 ? 1.0 : 0.0;
  res.fractionAboveOne /= res.kept;
  auto mid = purities.begin() + res.kept / 2;
  std::nth_element(purities.begin(), mid, purities.end());
  res.median = *mid;

  const auto [lo, hi] = std::minmax_element(purities.begin(), purities.end());
  double left = *lo, right = *hi;
  if (!(right > left)) {  // degenerate spread: open a token window
    left -= 0.5e-3;
    right += 0.5e-3;
  }
  constexpr int kHistBins = 60;
  res.histCounts.assign(kHistBins, 0);
  res.histEdges.resize(kHistBins + 1);
  const double width = (right - left) / kHistBins;
  for (int b = 0; b <= kHistBins; ++b) res.histEdges[b] = left + b * width;
  for (double mu : purities) {
    const int b = std::min(kHistBins - 1, int((mu - left) / width));
    ++res.histCounts[b];
  }
  return res;
}

// Photon-number distribution of a pure twin beam: perfectly correlated pairs
//   p(k, k) = tanh^(2k)(r) / cosh^2(r),
// all off-diagonal entries zero.  The squeezing follows from the diagonal
// variance, cosh(2r) = 2 m.
struct JointPhotonTable {
  int nMax{};
  double r{};
  Eigen::MatrixXd p;
  double tableMass{};     // 1 - tanh^(2 (nMax + 1))(r)
  double meanPhotons{};   // sinh^2(r) per beam
};

inline JointPhotonTable jointPhotonDistribution(const StandardFormParams<double>& params,
                                                int nMax = 10, double purityTol = 0.05) {
  if (nMax < 0) throw std::invalid_argument("table size must be non-negative");
  if (std::abs(params.n - params.m) > 1e-9 || std::abs(params.c1 + params.c2) > 1e-9) {
    throw std::invalid_argument("photon table requires symmetrized parameters");
  }
  const double mu = purity(params);
  if (std::abs(mu - 1.0) > purityTol) {
    throw UnsupportedInputError("state is not pure enough for a twin-beam photon table");
  }
  if (!(2.0 * params.m >= 1.0)) {
    throw std::invalid_argument("diagonal variance below vacuum");
  }
  JointPhotonTable table;
  table.nMax = nMax;
  table.r = std::acosh(2.0 * params.m) / 2.0;
  const double t2 = std::tanh(table.r) * std::tanh(table.r);
  const double p0 = 1.0 / (std::cosh(table.r) * std::cosh(table.r));
  table.p = Eigen::MatrixXd::Zero(nMax + 1, nMax + 1);
  double weight = p0;
  for (int k = 0; k <= nMax; ++k) {
    table.p(k, k) = weight;
    weight *= t2;
  }
  table.tableMass = 1.0 - std::pow(t2, nMax + 1);
  table.meanPhotons = std::sinh(table.r) * std::sinh(table.r);
  return table;
}

// Complete analysis of a reconstructed covariance matrix: entanglement
// criteria with Monte Carlo significances, the loss-inverted ancestor with
// its purity statistics, transmission from the purity scan, and (when the
// ancestor is pure enough) its joint photon table.
struct AnalysisOptions {
  double transmission{0.53};
  int mcDraws{100000};
  bool fullMatrixMc{false};
  int nMax{10};
  double purityTol{0.05};
};

struct AnalysisReport {
  StandardFormParams<double> params;
  StandardFormParams<double> symmetrized;
  StandardFormParams<double> ancestor;
  bool ancestorPhysical{};
  double ancestorNuMin{};
  double ancestorPurity{};
  CriterionMc phs;
  CriterionMc duan;
  PurityMcResult purityMc;
  double transmission{};  // transmission used for the loss inversion
  // Per-mode estimates from the auxiliary-mode extremal variances; filled by
  // callers that have the variance fits at hand.
  std::map<std::string, TransmissionEstimate> modeTransmissions;
  std::optional<TransmissionEstimate> scanTransmission;
  std::optional<JointPhotonTable> photonTable;
  bool entangled{};
};

inline AnalysisReport analyzeState(const CovMat<double>& cm, const AnalysisOptions& opts,
                                   std::uint64_t seed) {
  AnalysisReport rep;
  rep.transmission = opts.transmission;
  rep.params = standardForm(cm);
  rep.symmetrized = symmetrizeParams(rep.params);

  auto phsGen = substream(seed, "mc:phs");
  rep.phs = phsCriterion(rep.params, opts.mcDraws, phsGen);
  auto duanGen = substream(seed, "mc:duan");
  rep.duan = duanCriterion(rep.params, opts.mcDraws, duanGen);
  rep.entangled = rep.phs.entangled && rep.duan.entangled;

  const CovMat<double> ancestorCm =
      invertLoss(standardFormCovariance(rep.symmetrized), opts.transmission);
  rep.ancestor = standardForm(ancestorCm, 3.0, 1e-9);
  rep.ancestorNuMin = minSymplecticEigenvalue(ancestorCm);
  rep.ancestorPhysical = isPhysical(ancestorCm);
  const double det = rep.ancestor.n * rep.ancestor.m - rep.ancestor.c1 * rep.ancestor.c1;
  rep.ancestorPurity = det > 0.0 ? 1.0 / (4.0 * det) : std::nan("");

  PurityMcConfig mcCfg;
  mcCfg.transmission = opts.transmission;
  mcCfg.draws = opts.mcDraws;
  mcCfg.fullMatrix = opts.fullMatrixMc;
  auto purityGen = substream(seed, "mc:purity");
  rep.purityMc = purityMonteCarlo(cm, mcCfg, purityGen);

  try {
    rep.scanTransmission = transmissionFromPurityScan(rep.symmetrized);
  } catch (const UnresolvableError&) {
    rep.scanTransmission.reset();
  }
  try {
    rep.photonTable = jointPhotonDistribution(rep.ancestor, opts.nMax, opts.purityTol);
  } catch (const std::exception&) {
    rep.photonTable.reset();
  }
  return rep;
}

}  // namespace oamcv
