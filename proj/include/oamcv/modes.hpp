#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <compare>
#include <complex>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "oamcv/gaussian.hpp"

namespace oamcv {

enum class Pol { H, V, L, R };

inline bool isLinearPol(Pol p) { return p == Pol::H || p == Pol::V; }
inline bool isCircularPol(Pol p) { return p == Pol::L || p == Pol::R; }

inline const char* polName(Pol p) {
  switch (p) {
    case Pol::H: return "H";
    case Pol::V: return "V";
    case Pol::L: return "L";
    case Pol::R: return "R";
  }
  return "?";
}

// One basis mode: which input it stems from ('a' or 'b'), its polarization
// and its orbital angular momentum.
struct ModeId {
  char base{};
  Pol pol{};
  int oam{};
  auto operator<=>(const ModeId&) const = default;
};

// Formal linear combination of basis modes with complex amplitudes.
// Polarization labels follow the conventions
//   H = (L + R)/sqrt(2),   V = -i (L - R)/sqrt(2),
//   L = (H + i V)/sqrt(2), R = (H - i V)/sqrt(2),
// and expressions may mix linear and circular labels until converted.
class ModeExpr {
 public:
  using Complex = std::complex<double>;
  using TermMap = std::map<ModeId, Complex>;

  static constexpr double kAmpTol = 1e-14;

  ModeExpr() = default;

  static ModeExpr mode(char base, Pol pol, int oam) {
    ModeExpr e;
    e.add(base, pol, oam, Complex(1.0, 0.0));
    return e;
  }

  ModeExpr& add(char base, Pol pol, int oam, Complex amp) {
    if (base != 'a' && base != 'b') {
      throw std::invalid_argument("mode base must be 'a' or 'b'");
    }
    const ModeId id{base, pol, oam};
    auto [it, inserted] = terms_.try_emplace(id, amp);
    if (!inserted) it->second += amp;
    if (std::abs(it->second) < kAmpTol) terms_.erase(it);
    return *this;
  }

  const TermMap& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  // Rewrites every linear label in terms of L and R.
  ModeExpr toCircular() const {
    constexpr double inv = std::numbers::sqrt2 / 2.0;
    const Complex i1(0.0, 1.0);
    ModeExpr out;
    for (const auto& [id, amp] : terms_) {
      switch (id.pol) {
        case Pol::H:  // H = (L + R)/sqrt(2)
          out.add(id.base, Pol::L, id.oam, amp * inv);
          out.add(id.base, Pol::R, id.oam, amp * inv);
          break;
        case Pol::V:  // V = -i (L - R)/sqrt(2)
          out.add(id.base, Pol::L, id.oam, amp * -i1 * inv);
          out.add(id.base, Pol::R, id.oam, amp * i1 * inv);
          break;
        default:
          out.add(id.base, id.pol, id.oam, amp);
      }
    }
    return out;
  }

  // Rewrites every circular label in terms of H and V.
  ModeExpr toLinear() const {
    constexpr double inv = std::numbers::sqrt2 / 2.0;
    const Complex i1(0.0, 1.0);
    ModeExpr out;
    for (const auto& [id, amp] : terms_) {
      switch (id.pol) {
        case Pol::L:  // L = (H + i V)/sqrt(2)
          out.add(id.base, Pol::H, id.oam, amp * inv);
          out.add(id.base, Pol::V, id.oam, amp * i1 * inv);
          break;
        case Pol::R:  // R = (H - i V)/sqrt(2)
          out.add(id.base, Pol::H, id.oam, amp * inv);
          out.add(id.base, Pol::V, id.oam, amp * -i1 * inv);
          break;
        default:
          out.add(id.base, id.pol, id.oam, amp);
      }
    }
    return out;
  }

  // Amplitude of one basis mode, converting to the basis the label lives in.
  Complex coefficient(char base, Pol pol, int oam) const {
    const ModeExpr rep = isCircularPol(pol) ? toCircular() : toLinear();
    const auto it = rep.terms_.find(ModeId{base, pol, oam});
    return it == rep.terms_.end() ? Complex(0.0, 0.0) : it->second;
  }

  // Norm in the orthonormal circular basis.
  double norm() const {
    const ModeExpr circ = toCircular();
    double sq = 0.0;
    for (const auto& [id, amp] : circ.terms_) sq += std::norm(amp);
    return std::sqrt(sq);
  }

 private:
  TermMap terms_;
};

// Quarter-wave plate with fast axis at `theta` radians from horizontal;
// at theta = 0 it maps H -> H and V -> i V.
struct Qwp {
  double theta{};
};

// Half-wave plate with fast axis at `theta` radians from horizontal.
struct Hwp {
  double theta{};
};

// q-plate with topological charge q (half-integer) and retardation delta:
//   (L, m) -> cos(delta/2) (L, m) + i sin(delta/2) (R, m + 2q)
//   (R, m) -> cos(delta/2) (R, m) + i sin(delta/2) (L, m - 2q)
// At full retardation (delta = pi) it swaps handedness and shifts OAM.
struct QPlate {
  double q{0.5};
  double delta{std::numbers::pi};
};

// Polarizing beam splitter port, modeled as a lossless projection onto one
// linear polarization.
struct Pbs {
  Pol keep{Pol::H};
};

using ElementSpec = std::variant<Qwp, Hwp, QPlate, Pbs>;

namespace detail {

inline Eigen::Matrix2d rotation2(double theta) {
  Eigen::Matrix2d r;
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

// Jones matrix of a retarder: R(-theta) diag(1, phase) R(theta).
inline Eigen::Matrix2cd retarderJones(double theta, std::complex<double> slowPhase) {
  Eigen::Matrix2cd d = Eigen::Matrix2cd::Zero();
  d(0, 0) = 1.0;
  d(1, 1) = slowPhase;
  return rotation2(-theta).cast<std::complex<double>>() * d *
         rotation2(theta).cast<std::complex<double>>();
}

inline ModeExpr applyJones(const ModeExpr& expr, const Eigen::Matrix2cd& j) {
  ModeExpr out;
  const ModeExpr lin = expr.toLinear();
  for (const auto& [id, amp] : lin.terms()) {
    const int col = id.pol == Pol::H ? 0 : 1;
    out.add(id.base, Pol::H, id.oam, j(0, col) * amp);
    out.add(id.base, Pol::V, id.oam, j(1, col) * amp);
  }
  return out;
}

}  // namespace detail

// Propagates a mode expression through one optical element.
inline ModeExpr applyElement(const ModeExpr& expr, const ElementSpec& element) {
  const std::complex<double> i1(0.0, 1.0);
  if (const auto* qwp = std::get_if<Qwp>(&element)) {
    return detail::applyJones(expr, detail::retarderJones(qwp->theta, i1));
  }
  if (const auto* hwp = std::get_if<Hwp>(&element)) {
    return detail::applyJones(expr, detail::retarderJones(hwp->theta, -1.0));
  }
  if (const auto* qp = std::get_if<QPlate>(&element)) {
    const double twoQ = 2.0 * qp->q;
    if (std::abs(twoQ - std::round(twoQ)) > 1e-12) {
      throw std::invalid_argument("q-plate charge must be a half-integer");
    }
    const int shift = static_cast<int>(std::lround(twoQ));
    const double c = std::cos(qp->delta / 2.0);
    const std::complex<double> is = i1 * std::sin(qp->delta / 2.0);
    ModeExpr out;
    const ModeExpr circ = expr.toCircular();
    for (const auto& [id, amp] : circ.terms()) {
      if (id.pol == Pol::L) {
        out.add(id.base, Pol::L, id.oam, c * amp);
        out.add(id.base, Pol::R, id.oam + shift, is * amp);
      } else {
        out.add(id.base, Pol::R, id.oam, c * amp);
        out.add(id.base, Pol::L, id.oam - shift, is * amp);
      }
    }
    return out;
  }
  const auto& pbs = std::get<Pbs>(element);
  if (!isLinearPol(pbs.keep)) {
    throw std::invalid_argument("PBS ports are the linear polarizations H and V");
  }
  ModeExpr out;
  const ModeExpr lin = expr.toLinear();
  for (const auto& [id, amp] : lin.terms()) {
    if (id.pol == pbs.keep) out.add(id.base, id.pol, id.oam, amp);
  }
  return out;
}

// One measured mode of the setup: the detected (pol, oam) label, the
// canonical combination coeffA * a + coeffB * b it measures, and the global
// phase the optical chain imprints on top of that combination.
struct DerivedMode {
  std::string name;
  std::string configuration;
  Pol pol{};
  int oam{};
  std::complex<double> coeffA{}, coeffB{};
  std::complex<double> phase{1.0, 0.0};
};

// Coefficients actually produced by the chain, phase included.
inline Eigen::Vector2cd rawCoeff(const DerivedMode& mode) {
  return {mode.phase * mode.coeffA, mode.phase * mode.coeffB};
}

// Derives the six measured modes by propagating the two input modes
// (a is H-polarized, b is V-polarized, both with zero OAM) through the
// three detection configurations of the setup.  The canonical combinations
// are fixed by convention; the derivation recomputes the chain output and
// fails loudly if it does not equal phase * canonical.
inline std::vector<DerivedMode> auxiliaryModeSynthesis() {
  constexpr double pi = std::numbers::pi;
  constexpr double inv = std::numbers::sqrt2 / 2.0;
  const std::complex<double> i1(0.0, 1.0);

  struct Expected {
    const char* name;
    Pol pol;
    int oam;
    std::complex<double> coeffA, coeffB;
  };
  struct Config {
    const char* desc;
    std::vector<ElementSpec> chain;
    std::array<Expected, 2> modes;
  };

  const QPlate qp{0.5, pi};
  const std::vector<Config> configs = {
      {"quarter-wave plate at 45 deg + q-plate",
       {Qwp{pi / 4.0}, qp},
       {{{"a", Pol::R, 1, 1.0, 0.0}, {"b", Pol::L, -1, 0.0, 1.0}}}},
      {"quarter-wave plate at 0 deg + q-plate",
       {Qwp{0.0}, qp},
       {{{"c", Pol::R, 1, inv, inv}, {"d", Pol::L, -1, inv, -inv}}}},
      {"q-plate only",
       {qp},
       {{{"e", Pol::R, 1, i1 * inv, inv}, {"f", Pol::L, -1, i1 * inv, -inv}}}},
  };

  std::vector<DerivedMode> out;
  for (const auto& cfg : configs) {
    ModeExpr imgA = ModeExpr::mode('a', Pol::H, 0);
    ModeExpr imgB = ModeExpr::mode('b', Pol::V, 0);
    for (const auto& element : cfg.chain) {
      imgA = applyElement(imgA, element);
      imgB = applyElement(imgB, element);
    }
    double captured = 0.0;
    for (const auto& expect : cfg.modes) {
      const std::complex<double> rawA = imgA.coefficient('a', expect.pol, expect.oam);
      const std::complex<double> rawB = imgB.coefficient('b', expect.pol, expect.oam);
      const bool useA = std::abs(expect.coeffA) >= std::abs(expect.coeffB);
      const std::complex<double> phase =
          useA ? rawA / expect.coeffA : rawB / expect.coeffB;
      const double defect =
          std::max(std::abs(rawA - phase * expect.coeffA), std::abs(rawB - phase * expect.coeffB));
      if (std::abs(std::abs(phase) - 1.0) > 1e-12 || defect > 1e-12) {
        std::ostringstream msg;
        msg << "derived mode " << expect.name
            << " does not match its canonical combination (defect " << defect << ")";
        throw std::logic_error(msg.str());
      }
      captured += std::norm(rawA) + std::norm(rawB);
      out.push_back(DerivedMode{expect.name, cfg.desc, expect.pol, expect.oam, expect.coeffA,
                                expect.coeffB, phase});
    }
    // The two detected labels must capture all of both inputs.
    if (std::abs(captured - 2.0) > 1e-12) {
      throw std::logic_error("detected labels do not capture the full input amplitude");
    }
  }
  return out;
}

// 2x2 rotation block representing multiplication of a mode operator by z:
// the quadratures (X, Y) pick up [[Re z, -Im z], [Im z, Re z]].
inline Eigen::Matrix2d quadratureBlock(std::complex<double> z) {
  Eigen::Matrix2d m;
  m << z.real(), -z.imag(), z.imag(), z.real();
  return m;
}

// Quadrature rotation by phi, i.e. the block of exp(i phi).
inline Eigen::Matrix2d quadratureRotation(double phi) {
  return quadratureBlock(std::complex<double>(std::cos(phi), std::sin(phi)));
}

// Lifts a 2x2 unitary mode transformation to the 4x4 symplectic matrix
// acting on (Xa, Ya, Xb, Yb).
inline SymplecticMap<double> modeMixingMap(const Eigen::Matrix2cd& u, double tol = 1e-9) {
  const double defect = (u.adjoint() * u - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
  if (!(defect <= tol)) {
    std::ostringstream msg;
    msg << "mode transformation is not unitary (defect " << defect << ")";
    throw std::invalid_argument(msg.str());
  }
  Mat4<double> s;
  s.topLeftCorner<2, 2>() = quadratureBlock(u(0, 0));
  s.topRightCorner<2, 2>() = quadratureBlock(u(0, 1));
  s.bottomLeftCorner<2, 2>() = quadratureBlock(u(1, 0));
  s.bottomRightCorner<2, 2>() = quadratureBlock(u(1, 1));
  return SymplecticMap<double>(s, 1e-9);
}

// Single-mode covariance block of the mode u(0) * a + u(1) * b.
inline Eigen::Matrix2d measuredModeBlock(const CovMat<double>& cm, const Eigen::Vector2cd& u) {
  Eigen::Matrix<double, 2, 4> rows;
  rows.leftCols<2>() = quadratureBlock(u(0));
  rows.rightCols<2>() = quadratureBlock(u(1));
  Eigen::Matrix2d block = rows * cm.matrix() * rows.transpose();
  return ((block + block.transpose()) / 2.0).eval();
}

}  // namespace oamcv
