#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "oamcv/analysis.hpp"
#include "oamcv/errors.hpp"
#include "oamcv/estimation.hpp"
#include "oamcv/gaussian.hpp"
#include "oamcv/homodyne.hpp"
#include "oamcv/modes.hpp"
#include "oamcv/replication.hpp"

namespace oamcv {

namespace detail {

inline std::string readFileOrThrow(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure on " + path.string());
  return std::move(buf).str();
}

inline void writeFileOrThrow(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(), std::streamsize(content.size()));
  out.flush();
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Covariance matrix JSON: the interchange unit between all pipeline stages.
//   { "basis": ["Xa","Ya","Xb","Yb"], "shot_noise": 0.5,
//     "entries": [16 numbers, row-major], "errors": [16 numbers]? }
// ---------------------------------------------------------------------------

inline nlohmann::json covMatToJson(const CovMat<double>& cm) {
  nlohmann::json j;
  j["basis"] = kQuadratureBasis;
  j["shot_noise"] = kShotNoiseVariance;
  std::vector<double> entries(16);
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) entries[4 * i + k] = cm.matrix()(i, k);
  j["entries"] = entries;
  if (cm.errors()) {
    std::vector<double> errs(16);
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 4; ++k) errs[4 * i + k] = (*cm.errors())(i, k);
    j["errors"] = errs;
  }
  return j;
}

inline CovMat<double> covMatFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("covariance matrix document must be a JSON object");
  for (const char* key : {"basis", "shot_noise", "entries"}) {
    if (!j.contains(key)) {
      throw ParseError(std::string("covariance matrix document lacks \"") + key + "\"");
    }
  }
  const auto& basis = j.at("basis");
  if (!basis.is_array() || basis.size() != 4) {
    throw ParseError("\"basis\" must list the four quadratures");
  }
  for (int i = 0; i < 4; ++i) {
    if (basis[i] != kQuadratureBasis[size_t(i)]) {
      throw ParseError("unsupported quadrature basis ordering: expected Xa, Ya, Xb, Yb");
    }
  }
  if (!j.at("shot_noise").is_number() ||
      double(j.at("shot_noise")) != kShotNoiseVariance) {
    throw ParseError("\"shot_noise\" must be 0.5: other normalizations are not supported");
  }
  auto readSixteen = [&](const nlohmann::json& arr, const char* what) {
    if (!arr.is_array() || arr.size() != 16) {
      throw ParseError(std::string("\"") + what + "\" must hold 16 numbers, row-major");
    }
    Mat4<double> m;
    for (int i = 0; i < 4; ++i) {
      for (int k = 0; k < 4; ++k) {
        const auto& v = arr[size_t(4 * i + k)];
        if (!v.is_number()) {
          throw ParseError(std::string("\"") + what + "\" entry " +
                           std::to_string(4 * i + k) + " is not a number");
        }
        m(i, k) = double(v);
      }
    }
    return m;
  };
  const Mat4<double> entries = readSixteen(j.at("entries"), "entries");
  std::optional<Mat4<double>> errors;
  if (j.contains("errors")) errors = readSixteen(j.at("errors"), "errors");
  return CovMat<double>(entries, errors);
}

// ---------------------------------------------------------------------------
// Mode superposition JSON: a list of weighted labeled modes,
//   [ { "base": "a", "pol": "H", "oam": 1, "re": 0.7, "im": 0.0 }, ... ]
// ---------------------------------------------------------------------------

inline nlohmann::json modeExprToJson(const ModeExpr& expr) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [id, amp] : expr.terms()) {
    nlohmann::json term;
    term["base"] = std::string(1, id.base);
    term["pol"] = polName(id.pol);
    term["oam"] = id.oam;
    term["re"] = amp.real();
    term["im"] = amp.imag();
    list.push_back(std::move(term));
  }
  return list;
}

inline ModeExpr modeExprFromJson(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("mode expression must be a JSON list of terms");
  ModeExpr expr;
  for (const auto& term : j) {
    for (const char* key : {"base", "pol", "oam", "re", "im"}) {
      if (!term.contains(key)) {
        throw ParseError(std::string("mode term lacks \"") + key + "\"");
      }
    }
    const std::string base = term.at("base");
    if (base.size() != 1) throw ParseError("mode base must be a single character");
    const std::string pol = term.at("pol");
    Pol p;
    if (pol == "H") p = Pol::H;
    else if (pol == "V") p = Pol::V;
    else if (pol == "L") p = Pol::L;
    else if (pol == "R") p = Pol::R;
    else throw ParseError("polarization must be one of H, V, L, R");
    if (!term.at("oam").is_number_integer()) throw ParseError("\"oam\" must be an integer");
    if (!term.at("re").is_number() || !term.at("im").is_number()) {
      throw ParseError("\"re\" and \"im\" must be numbers");
    }
    expr.add(base[0], p, int(term.at("oam")),
             std::complex<double>(double(term.at("re")), double(term.at("im"))));
  }
  return expr;
}

// ---------------------------------------------------------------------------
// Quadrature trace CSV:
//   # mode=<name>
//   # shot_variance=<float>
//   # seed=<int>
//   <phase>,<value>        (phase in radians, 9 significant digits)
// ---------------------------------------------------------------------------

inline std::string traceToCsv(const QuadratureTrace& trace) {
  std::string out;
  out.reserve(trace.phase.size() * 32 + 96);
  char line[96];
  std::snprintf(line, sizeof line, "# mode=%s\n", trace.mode.c_str());
  out += line;
  std::snprintf(line, sizeof line, "# shot_variance=%.17g\n", trace.shotVariance);
  out += line;
  std::snprintf(line, sizeof line, "# seed=%llu\n",
                static_cast<unsigned long long>(trace.seed));
  out += line;
  for (size_t i = 0; i < trace.phase.size(); ++i) {
    std::snprintf(line, sizeof line, "%.9g,%.17g\n", trace.phase[i], trace.value[i]);
    out += line;
  }
  return out;
}

inline void writeTraceCsv(const std::filesystem::path& path, const QuadratureTrace& trace) {
  if (trace.phase.size() != trace.value.size()) {
    throw std::invalid_argument("phase and value arrays differ in length");
  }
  detail::writeFileOrThrow(path, traceToCsv(trace));
}

inline QuadratureTrace readTraceCsv(const std::filesystem::path& path) {
  const std::string text = detail::readFileOrThrow(path);
  QuadratureTrace trace;
  size_t pos = 0;
  int lineNo = 0;
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError(path.string() + ":" + std::to_string(lineNo) + ": " + why);
  };
  while (pos < text.size()) {
    ++lineNo;
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    if (line.front() == '#') {
      const size_t eq = line.find('=');
      if (eq == std::string_view::npos) throw fail("malformed header comment");
      std::string_view key = line.substr(1, eq - 1);
      while (!key.empty() && key.front() == ' ') key.remove_prefix(1);
      while (!key.empty() && key.back() == ' ') key.remove_suffix(1);
      const std::string value(line.substr(eq + 1));
      try {
        if (key == "mode") trace.mode = value;
        else if (key == "shot_variance") trace.shotVariance = std::stod(value);
        else if (key == "seed") trace.seed = std::stoull(value);
        else throw fail("unknown header key \"" + std::string(key) + "\"");
      } catch (const std::logic_error&) {
        throw fail("malformed header value \"" + value + "\"");
      }
      continue;
    }
    const size_t comma = line.find(',');
    if (comma == std::string_view::npos) throw fail("expected \"phase,value\"");
    try {
      size_t used = 0;
      const std::string phaseStr(line.substr(0, comma));
      const std::string valueStr(line.substr(comma + 1));
      const double phase = std::stod(phaseStr, &used);
      if (used != phaseStr.size()) throw fail("trailing junk after phase");
      const double value = std::stod(valueStr, &used);
      if (used != valueStr.size()) throw fail("trailing junk after value");
      trace.phase.push_back(phase);
      trace.value.push_back(value);
    } catch (const ParseError&) {
      throw;
    } catch (const std::logic_error&) {
      throw fail("non-numeric sample row");
    }
  }
  if (trace.mode.empty()) {
    throw ParseError(path.string() + ": missing \"# mode=\" header");
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Report JSON
// ---------------------------------------------------------------------------

inline nlohmann::json gaussianityToJson(const GaussianityReport& rep) {
  return {
      {"mean_kurtosis", rep.meanKurtosis},
      {"kurtosis_sd", rep.kurtosisSd},
      {"outlier_fraction", rep.outlierFraction},
      {"bins", rep.bins},
      {"mean_tolerance", rep.meanTol},
      {"outlier_tolerance", rep.outlierTol},
      {"max_outlier_fraction", rep.maxOutlierFraction},
      {"pass", rep.pass},
  };
}

inline nlohmann::json stationarityToJson(const StationarityReport& rep) {
  return {
      {"config_totals", rep.configTotals},
      {"max_rel_deviation", rep.maxRelDeviation},
      {"tolerance", rep.tol},
      {"pass", rep.pass},
  };
}

inline nlohmann::json transmissionToJson(const TransmissionEstimate& est) {
  return {{"t", est.t}, {"dt", est.dt}};
}

inline nlohmann::json varianceFitToJson(const VarianceFit& fit) {
  return {
      {"sxx", fit.sxx},   {"syy", fit.syy},   {"sxy", fit.sxy},
      {"dsxx", fit.dsxx}, {"dsyy", fit.dsyy}, {"dsxy", fit.dsxy},
      {"v_min", fit.vMin}, {"v_max", fit.vMax},
      {"dv_min", fit.dvMin}, {"dv_max", fit.dvMax},
      {"mean_variance", fit.meanVariance},
      {"chi2", fit.chi2}, {"dof", fit.dof},
  };
}

inline nlohmann::json reconstructionToJson(const ReconstructionResult& res) {
  nlohmann::json j;
  j["gaussianity"] = gaussianityToJson(res.gaussianity);
  j["stationarity"] = stationarityToJson(res.stationarity);
  j["gates_pass"] = res.gatesPass;
  j["shot_variance"] = res.shotVariance;
  if (!res.assemblyError.empty()) j["assembly_error"] = res.assemblyError;
  nlohmann::json fits = nlohmann::json::object();
  for (const auto& [mode, fit] : res.fits) fits[mode] = varianceFitToJson(fit);
  j["fits"] = std::move(fits);
  nlohmann::json perMode = nlohmann::json::object();
  for (const auto& [mode, est] : res.modeTransmissions) {
    perMode[mode] = transmissionToJson(est);
  }
  j["mode_transmissions"] = std::move(perMode);
  if (!res.modeTransmissions.empty()) {
    j["average_transmission"] = transmissionToJson(averageTransmission(res.modeTransmissions));
  }
  return j;
}

inline nlohmann::json criterionToJson(const CriterionMc& c) {
  return {
      {"value", c.value},       {"threshold", c.threshold}, {"entangled", c.entangled},
      {"abs_guard", c.absGuard}, {"mc_mean", c.mcMean},      {"mc_sd", c.mcSd},
      {"sigma", c.sigma},       {"draws", c.draws},
  };
}

inline nlohmann::json standardFormToJson(const StandardFormParams<double>& p) {
  return {
      {"n", p.n},   {"m", p.m},   {"c1", p.c1},   {"c2", p.c2},
      {"dn", p.dn}, {"dm", p.dm}, {"dc1", p.dc1}, {"dc2", p.dc2},
  };
}

inline nlohmann::json analysisReportToJson(const AnalysisReport& rep) {
  nlohmann::json j;
  j["standard_form"] = standardFormToJson(rep.params);
  j["symmetrized"] = standardFormToJson(rep.symmetrized);
  j["phs"] = criterionToJson(rep.phs);
  j["duan"] = criterionToJson(rep.duan);
  j["entangled"] = rep.entangled;
  j["transmission"] = rep.transmission;
  nlohmann::json perMode = nlohmann::json::object();
  for (const auto& [mode, est] : rep.modeTransmissions) {
    perMode[mode] = transmissionToJson(est);
  }
  j["mode_transmissions"] = std::move(perMode);
  if (rep.scanTransmission) {
    j["scan_transmission"] = transmissionToJson(*rep.scanTransmission);
  }
  j["ancestor"] = {
      {"cm", covMatToJson(standardFormCovariance(rep.ancestor))},
      {"physical", rep.ancestorPhysical},
      {"nu_min", rep.ancestorNuMin},
      {"purity", rep.ancestorPurity},
  };
  j["purity_mc"] = {
      {"central", rep.purityMc.central},       {"mean", rep.purityMc.mean},
      {"sd", rep.purityMc.sd},                 {"median", rep.purityMc.median},
      {"fraction_above_one", rep.purityMc.fractionAboveOne},
      {"kept", rep.purityMc.kept},             {"draws", rep.purityMc.draws},
  };
  if (rep.photonTable) {
    std::vector<double> diag(size_t(rep.photonTable->nMax) + 1);
    for (int k = 0; k <= rep.photonTable->nMax; ++k) diag[size_t(k)] = rep.photonTable->p(k, k);
    j["photon_table"] = {
        {"n_max", rep.photonTable->nMax},
        {"r", rep.photonTable->r},
        {"diagonal", diag},
        {"table_mass", rep.photonTable->tableMass},
        {"mean_photons", rep.photonTable->meanPhotons},
    };
  }
  return j;
}

// ---------------------------------------------------------------------------
// Plot-ready CSVs
// ---------------------------------------------------------------------------

// One row per phase bin and trace: mode,bin,phase,kurtosis.
inline void writeKurtosisCsv(const std::filesystem::path& path,
                             const std::vector<std::string>& modes,
                             const std::vector<std::vector<BinStats>>& binned) {
  if (modes.size() != binned.size()) {
    throw std::invalid_argument("one mode name per binned trace required");
  }
  std::string out = "mode,bin,phase,kurtosis\n";
  char line[128];
  for (size_t t = 0; t < binned.size(); ++t) {
    for (size_t b = 0; b < binned[t].size(); ++b) {
      std::snprintf(line, sizeof line, "%s,%zu,%.9g,%.17g\n", modes[t].c_str(), b,
                    binned[t][b].phase, binned[t][b].kurtosis);
      out += line;
    }
  }
  detail::writeFileOrThrow(path, out);
}

// One row per histogram bin: bin center and count.
inline void writePurityHistogramCsv(const std::filesystem::path& path,
                                    const PurityMcResult& mc) {
  std::string out = "purity,count\n";
  char line[64];
  for (size_t b = 0; b < mc.histCounts.size(); ++b) {
    const double center = (mc.histEdges[b] + mc.histEdges[b + 1]) / 2.0;
    std::snprintf(line, sizeof line, "%.9g,%d\n", center, mc.histCounts[b]);
    out += line;
  }
  detail::writeFileOrThrow(path, out);
}

// One row per pair number: n and p(n, n).
inline void writePhotonBarsCsv(const std::filesystem::path& path,
                               const JointPhotonTable& table) {
  std::string out = "n,probability\n";
  char line[64];
  for (int k = 0; k <= table.nMax; ++k) {
    std::snprintf(line, sizeof line, "%d,%.17g\n", k, table.p(k, k));
    out += line;
  }
  detail::writeFileOrThrow(path, out);
}

// ---------------------------------------------------------------------------
// Flat key=value configuration files with '#' comments.
// ---------------------------------------------------------------------------

inline std::map<std::string, std::string> readKeyValueFile(const std::filesystem::path& path) {
  const std::string text = detail::readFileOrThrow(path);
  std::map<std::string, std::string> out;
  size_t pos = 0;
  int lineNo = 0;
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
      s.remove_suffix(1);
    }
    return s;
  };
  while (pos < text.size()) {
    ++lineNo;
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    const size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(path.string() + ":" + std::to_string(lineNo) +
                       ": expected \"key = value\"");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) {
      throw ParseError(path.string() + ":" + std::to_string(lineNo) + ": empty key");
    }
    if (!out.emplace(key, value).second) {
      throw ParseError(path.string() + ":" + std::to_string(lineNo) + ": duplicate key \"" +
                       key + "\"");
    }
  }
  return out;
}

inline void writeKeyValueFile(const std::filesystem::path& path,
                              const std::map<std::string, std::string>& entries) {
  std::string out;
  for (const auto& [key, value] : entries) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  detail::writeFileOrThrow(path, out);
}

}  // namespace oamcv
