#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "oamcv/gaussian.hpp"
#include "oamcv/modes.hpp"

namespace oamcv {

// Detection parameters of one homodyne channel.  The collection efficiency
// and the fringe visibility act together as an effective transmission
// efficiency * visibility^2 (0.53 by default); the gain converts
// shot-normalized units into raw detector units and cancels in any
// shot-normalized quantity.
struct DetectionSpec {
  double efficiency{0.53 / (0.97 * 0.97)};
  double visibility{0.97};
  double gain{1.0};
  int samples{1000000};
};

// Detection spec with a prescribed effective transmission at the given
// visibility.
inline DetectionSpec detectionForTransmission(double transmission, double visibility = 0.97) {
  if (!(visibility > 0.0) || !(visibility <= 1.0)) {
    throw std::invalid_argument("visibility must be in (0, 1]");
  }
  if (!(transmission > 0.0) || !(transmission <= visibility * visibility)) {
    throw std::invalid_argument(
        "effective transmission must be in (0, visibility^2]: the collection "
        "efficiency cannot exceed one");
  }
  DetectionSpec spec;
  spec.efficiency = transmission / (visibility * visibility);
  spec.visibility = visibility;
  return spec;
}

inline double effectiveTransmission(const DetectionSpec& spec) {
  return spec.efficiency * spec.visibility * spec.visibility;
}

inline void validateDetectionSpec(const DetectionSpec& spec) {
  if (!(spec.efficiency > 0.0) || !(spec.efficiency <= 1.0)) {
    throw std::invalid_argument("detection efficiency must be in (0, 1]");
  }
  if (!(spec.visibility > 0.0) || !(spec.visibility <= 1.0)) {
    throw std::invalid_argument("visibility must be in (0, 1]");
  }
  if (!(spec.gain > 0.0) || !std::isfinite(spec.gain)) {
    throw std::invalid_argument("gain must be positive and finite");
  }
  if (spec.samples < 2) {
    throw std::invalid_argument("a trace needs at least two samples");
  }
}

// One recorded homodyne scan: local-oscillator phases swept linearly over
// [0, 2 pi) and the corresponding detector samples in raw units.
struct QuadratureTrace {
  std::string mode;
  std::uint64_t seed{};
  double shotVariance{};  // raw variance of the accompanying shot trace; 0 = unknown
  std::vector<double> phase;
  std::vector<double> value;
};

// Variance of the quadrature X cos(theta) + Y sin(theta) for a single-mode
// covariance block.
inline double quadratureVariance(const Eigen::Matrix2d& block, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return block(0, 0) * c * c + block(1, 1) * s * s + 2.0 * block(0, 1) * s * c;
}

// Single-mode loss: block -> t * block + (1 - t)/2 * I.
inline Eigen::Matrix2d singleModeLoss(const Eigen::Matrix2d& block, double t) {
  if (!(t > 0.0) || !(t <= 1.0)) {
    throw std::invalid_argument("transmission must be in (0, 1]");
  }
  return t * block + ((1.0 - t) / 2.0) * Eigen::Matrix2d::Identity();
}

// Simulates a homodyne scan of the mode u(0) * a + u(1) * b of a two-mode
// state: the measured mode's covariance block picks up the detection loss,
// and each sample is drawn from the Gaussian marginal at its ramp phase.
inline QuadratureTrace simulateTrace(const CovMat<double>& cm, const Eigen::Vector2cd& modeCoeff,
                                     const DetectionSpec& spec, std::mt19937_64& gen,
                                     std::string modeName) {
  validateDetectionSpec(spec);
  const Eigen::Matrix2d block =
      singleModeLoss(measuredModeBlock(cm, modeCoeff), effectiveTransmission(spec));

  QuadratureTrace trace;
  trace.mode = std::move(modeName);
  trace.phase.reserve(spec.samples);
  trace.value.reserve(spec.samples);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double step = 2.0 * std::numbers::pi / spec.samples;
  for (int i = 0; i < spec.samples; ++i) {
    const double theta = step * i;
    const double var = quadratureVariance(block, theta);
    if (!(var > 0.0)) {
      throw std::invalid_argument("quadrature variance is not positive");
    }
    trace.phase.push_back(theta);
    trace.value.push_back(spec.gain * std::sqrt(var) * unit(gen));
  }
  return trace;
}

// Shot-noise reference scan: the same ramp recorded with the signal blocked,
// i.e. vacuum at variance 0.5 in shot-normalized units.
inline QuadratureTrace simulateShotTrace(const DetectionSpec& spec, std::mt19937_64& gen) {
  validateDetectionSpec(spec);
  QuadratureTrace trace;
  trace.mode = "shot";
  trace.phase.reserve(spec.samples);
  trace.value.reserve(spec.samples);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double sd = spec.gain * std::sqrt(kShotNoiseVariance);
  const double step = 2.0 * std::numbers::pi / spec.samples;
  for (int i = 0; i < spec.samples; ++i) {
    trace.phase.push_back(step * i);
    trace.value.push_back(sd * unit(gen));
  }
  return trace;
}

}  // namespace oamcv
