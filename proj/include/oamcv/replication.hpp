#pragma once

#include <array>
#include <charconv>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "oamcv/analysis.hpp"
#include "oamcv/errors.hpp"
#include "oamcv/estimation.hpp"
#include "oamcv/gaussian.hpp"
#include "oamcv/homodyne.hpp"
#include "oamcv/modes.hpp"
#include "oamcv/rng.hpp"

namespace oamcv {

// Everything one run needs, flat and file-round-trippable.  Defaults
// reproduce the reference experiment: squeezing 0.4335, overall detection
// transmission 0.53 (collection efficiency times squared fringe visibility).
struct RunConfig {
  double r{0.4335};
  double transmission{0.53};  // loss inversion used by the analysis stage
  double efficiency{0.53 / (0.97 * 0.97)};
  double visibility{0.97};
  double gain{1.0};
  int samples{1000000};
  int bins{100};
  std::uint64_t seed{20230815};
  int mcDraws{100000};
  bool fullMatrixMc{false};
  int nMax{10};
  double purityTol{0.05};
  double stationarityTol{0.05};
  double crossSigma{3.0};
};

namespace detail {

inline std::string formatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parseDouble(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("config value for \"" + key + "\" is not a number: \"" + value + "\"");
  }
}

inline long long parseInt(const std::string& key, const std::string& value) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ParseError("config value for \"" + key + "\" is not an integer: \"" + value + "\"");
  }
  return v;
}

// Seeds use the full unsigned 64-bit range (derived substream seeds routinely
// exceed the signed maximum).
inline std::uint64_t parseSeed(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ParseError("config value for \"" + key + "\" is not an unsigned integer: \"" + value +
                     "\"");
  }
  return v;
}

}  // namespace detail

inline std::map<std::string, std::string> configToMap(const RunConfig& cfg) {
  using detail::formatDouble;
  return {
      {"r", formatDouble(cfg.r)},
      {"transmission", formatDouble(cfg.transmission)},
      {"efficiency", formatDouble(cfg.efficiency)},
      {"visibility", formatDouble(cfg.visibility)},
      {"gain", formatDouble(cfg.gain)},
      {"samples", std::to_string(cfg.samples)},
      {"bins", std::to_string(cfg.bins)},
      {"seed", std::to_string(cfg.seed)},
      {"mc_draws", std::to_string(cfg.mcDraws)},
      {"full_matrix_mc", cfg.fullMatrixMc ? "true" : "false"},
      {"n_max", std::to_string(cfg.nMax)},
      {"purity_tol", formatDouble(cfg.purityTol)},
      {"stationarity_tol", formatDouble(cfg.stationarityTol)},
      {"cross_sigma", formatDouble(cfg.crossSigma)},
  };
}

// Builds a RunConfig from parsed key=value pairs; unknown keys and malformed
// values are reported by name.
inline RunConfig configFromMap(const std::map<std::string, std::string>& entries) {
  RunConfig cfg;
  for (const auto& [key, value] : entries) {
    if (key == "r") cfg.r = detail::parseDouble(key, value);
    else if (key == "transmission") cfg.transmission = detail::parseDouble(key, value);
    else if (key == "efficiency") cfg.efficiency = detail::parseDouble(key, value);
    else if (key == "visibility") cfg.visibility = detail::parseDouble(key, value);
    else if (key == "gain") cfg.gain = detail::parseDouble(key, value);
    else if (key == "samples") cfg.samples = int(detail::parseInt(key, value));
    else if (key == "bins") cfg.bins = int(detail::parseInt(key, value));
    else if (key == "seed") cfg.seed = detail::parseSeed(key, value);
    else if (key == "mc_draws") cfg.mcDraws = int(detail::parseInt(key, value));
    else if (key == "full_matrix_mc") {
      if (value == "true") cfg.fullMatrixMc = true;
      else if (value == "false") cfg.fullMatrixMc = false;
      else throw ParseError("config value for \"full_matrix_mc\" must be true or false");
    } else if (key == "n_max") cfg.nMax = int(detail::parseInt(key, value));
    else if (key == "purity_tol") cfg.purityTol = detail::parseDouble(key, value);
    else if (key == "stationarity_tol") cfg.stationarityTol = detail::parseDouble(key, value);
    else if (key == "cross_sigma") cfg.crossSigma = detail::parseDouble(key, value);
    else throw ParseError("unknown config key \"" + key + "\"");
  }
  return cfg;
}

// Reconstructed covariance matrix of the OAM twin-beam experiment this
// pipeline replicates, with its stated per-entry uncertainties.  Used by the
// replication summary as the measured reference input.
inline CovMat<double> referenceExperimentCm() {
  Mat4<double> m;
  m << 0.61, 0.004, 0.29, -0.01,   //
      0.004, 0.61, 0.005, -0.23,   //
      0.29, 0.005, 0.60, 0.002,    //
      -0.01, -0.23, 0.002, 0.60;
  return CovMat<double>(m, Mat4<double>::Constant(0.02));
}

inline DetectionSpec detectionOf(const RunConfig& cfg) {
  DetectionSpec det;
  det.efficiency = cfg.efficiency;
  det.visibility = cfg.visibility;
  det.gain = cfg.gain;
  det.samples = cfg.samples;
  return det;
}

// Synthesizes the full trace set of one run: the six derived measurement
// modes plus the shot-noise reference, each from its own named random
// substream so adding a stage never shifts another one's samples.  Every
// trace is stamped with the measured raw variance of the shot trace.
inline std::vector<QuadratureTrace> simulateAllTraces(const RunConfig& cfg) {
  const DetectionSpec det = detectionOf(cfg);
  validateDetectionSpec(det);
  const CovMat<double> source = tmsvCovariance(SqueezeSpec<double>{cfg.r});

  std::vector<QuadratureTrace> traces;
  traces.reserve(7);
  for (const DerivedMode& mode : auxiliaryModeSynthesis()) {
    const std::string stream = "trace:" + mode.name;
    auto gen = substream(cfg.seed, stream);
    QuadratureTrace trace = simulateTrace(source, rawCoeff(mode), det, gen, mode.name);
    trace.seed = substreamSeed(cfg.seed, stream);
    traces.push_back(std::move(trace));
  }
  auto gen = substream(cfg.seed, "trace:shot");
  QuadratureTrace shot = simulateShotTrace(det, gen);
  shot.seed = substreamSeed(cfg.seed, "trace:shot");
  traces.push_back(std::move(shot));

  const double shotVar = traceVariance(traces.back().value);
  for (QuadratureTrace& trace : traces) trace.shotVariance = shotVar;
  return traces;
}

// Output of the estimation stage on one trace set.  Gate reports are always
// populated; the assembled matrix is absent when the two independent
// estimates of a cross entry disagree (assemblyError then says why).
struct ReconstructionResult {
  std::optional<CovMat<double>> cm;
  std::string assemblyError;
  std::map<std::string, VarianceFit> fits;  // frame-corrected, shot-normalized
  GaussianityReport gaussianity;
  StationarityReport stationarity;
  std::map<std::string, TransmissionEstimate> modeTransmissions;
  double shotVariance{};
  bool gatesPass{};
  // Per-trace binned statistics (signal modes in canonical order, then the
  // shot reference), kept for the kurtosis plot output.
  std::vector<std::string> binnedNames;
  std::vector<std::vector<BinStats>> binned;

  bool ok() const { return gatesPass && cm.has_value(); }
};

// Runs the full reconstruction on a set of seven traces: bin, check
// Gaussianity and stationarity, fit each mode's phase-dependent variance,
// rotate the fits back into the canonical quadrature frame, and assemble the
// covariance matrix.  Transmissions are estimated from every mode whose
// extremal variances resolve them.
inline ReconstructionResult reconstructTraces(const std::vector<QuadratureTrace>& traces,
                                              int bins, double stationarityTol = 0.05,
                                              double crossSigma = 3.0) {
  std::map<std::string, const QuadratureTrace*> byMode;
  for (const QuadratureTrace& trace : traces) {
    if (!byMode.emplace(trace.mode, &trace).second) {
      throw std::invalid_argument("duplicate trace for mode \"" + trace.mode + "\"");
    }
  }
  const auto shotIt = byMode.find("shot");
  if (shotIt == byMode.end()) {
    throw IncompleteInputError("missing shot-noise reference trace");
  }

  ReconstructionResult res;
  res.shotVariance = traceVariance(shotIt->second->value);

  const std::vector<DerivedMode> table = auxiliaryModeSynthesis();
  std::array<double, 6> meanVarNorm{};
  for (size_t k = 0; k < table.size(); ++k) {
    const auto it = byMode.find(table[k].name);
    if (it == byMode.end()) {
      throw IncompleteInputError("missing trace for mode \"" + table[k].name + "\"");
    }
    res.binned.push_back(binTrace(*it->second, bins));
    res.binnedNames.push_back(table[k].name);

    const VarianceFit measured = fitSingleMode(res.binned.back(), res.shotVariance);
    meanVarNorm[k] = measured.meanVariance;
    // The optical chain imprints a recorded global phase on the measured
    // mode, which rotates its quadrature frame; undo it before assembly.
    const VarianceFit canonical = rotateFitFrame(measured, -std::arg(table[k].phase));
    res.fits.emplace(table[k].name, canonical);

    try {
      res.modeTransmissions.emplace(
          table[k].name,
          estimateTransmission(measured.vMin, measured.vMax, measured.dvMin, measured.dvMax));
    } catch (const UnresolvableError&) {
      // Modes without squeezing (the bare source modes) cannot resolve it.
    }
  }
  // The shot trace participates in the normality check like any other scan.
  res.binned.push_back(binTrace(*shotIt->second, bins));
  res.binnedNames.push_back("shot");

  res.gaussianity = gaussianityTest(res.binned);
  res.stationarity = stationarityGate(meanVarNorm, stationarityTol);
  res.gatesPass = res.gaussianity.pass && res.stationarity.pass;
  try {
    res.cm = assembleCm(res.fits, crossSigma);
  } catch (const ReconstructionInconsistencyError& e) {
    res.assemblyError = e.what();
  }
  return res;
}

// Mean of the per-mode transmission estimates, inverse-variance weighted.
inline TransmissionEstimate averageTransmission(
    const std::map<std::string, TransmissionEstimate>& estimates) {
  if (estimates.empty()) {
    throw UnresolvableError("no mode resolved the detection transmission");
  }
  double wSum = 0.0, tSum = 0.0;
  for (const auto& [mode, est] : estimates) {
    const double w = est.dt > 0.0 ? 1.0 / (est.dt * est.dt) : 0.0;
    if (w > 0.0) {
      wSum += w;
      tSum += w * est.t;
    }
  }
  TransmissionEstimate avg;
  if (wSum > 0.0) {
    avg.t = tSum / wSum;
    avg.dt = std::sqrt(1.0 / wSum);
  } else {  // no uncertainties available: plain mean
    for (const auto& [mode, est] : estimates) avg.t += est.t;
    avg.t /= double(estimates.size());
  }
  return avg;
}

// One complete run: simulate, reconstruct, analyze.
struct ReplicationRun {
  std::vector<QuadratureTrace> traces;
  ReconstructionResult reconstruction;
  AnalysisReport analysis;
};

inline ReplicationRun replicationRun(const RunConfig& cfg) {
  ReplicationRun run;
  run.traces = simulateAllTraces(cfg);
  run.reconstruction =
      reconstructTraces(run.traces, cfg.bins, cfg.stationarityTol, cfg.crossSigma);
  if (!run.reconstruction.cm) {
    throw ReconstructionInconsistencyError(run.reconstruction.assemblyError);
  }

  AnalysisOptions opts;
  opts.transmission = cfg.transmission;
  opts.mcDraws = cfg.mcDraws;
  opts.fullMatrixMc = cfg.fullMatrixMc;
  opts.nMax = cfg.nMax;
  opts.purityTol = cfg.purityTol;
  run.analysis =
      analyzeState(*run.reconstruction.cm, opts, substreamSeed(cfg.seed, "analysis"));
  run.analysis.modeTransmissions = run.reconstruction.modeTransmissions;
  return run;
}

}  // namespace oamcv
