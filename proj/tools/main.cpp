// Command-line front end: simulate homodyne traces of a lossy twin beam,
// reconstruct the covariance matrix from traces, analyze a matrix for
// entanglement and its pure ancestor, replicate the full reference
// experiment, and print the derived measurement-mode tables.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oamcv/io.hpp"
#include "oamcv/replication.hpp"

namespace fs = std::filesystem;
using namespace oamcv;

namespace {

// Documented, stable exit codes.
constexpr int kExitOk = 0;             // success; for analyze: entangled
constexpr int kExitNotEntangled = 1;   // analysis completed, no entanglement
constexpr int kExitGateFailure = 2;    // a data-quality gate or pipeline stage failed
constexpr int kExitUsage = 3;          // parse or configuration error
constexpr int kExitIo = 4;             // filesystem error

struct CommonOpts {
  std::string configPath;
  std::string outDir = ".";
  std::uint64_t seed = 0;
  bool seedSet = false;
  bool quick = false;
};

void addCommonOptions(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.configPath, "key=value run configuration file");
  cmd->add_option("--seed", opts.seed, "root random seed (overrides the config)")
      ->each([&opts](const std::string&) { opts.seedSet = true; });
  cmd->add_option("--out", opts.outDir, "output directory")->capture_default_str();
  cmd->add_flag("--quick", opts.quick, "reduced sample and draw counts");
}

RunConfig resolveConfig(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.configPath.empty()) cfg = configFromMap(readKeyValueFile(opts.configPath));
  if (opts.seedSet) cfg.seed = opts.seed;
  if (opts.quick) {
    cfg.samples = 100000;
    cfg.mcDraws = 10000;
  }
  return cfg;
}

void ensureOutDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

nlohmann::json parseJsonFile(const fs::path& path) {
  const std::string text = detail::readFileOrThrow(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

AnalysisOptions analysisOptionsOf(const RunConfig& cfg) {
  AnalysisOptions opts;
  opts.transmission = cfg.transmission;
  opts.mcDraws = cfg.mcDraws;
  opts.fullMatrixMc = cfg.fullMatrixMc;
  opts.nMax = cfg.nMax;
  opts.purityTol = cfg.purityTol;
  return opts;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int runSimulate(const CommonOpts& opts) {
  const RunConfig cfg = resolveConfig(opts);
  ensureOutDir(opts.outDir);

  const auto traces = simulateAllTraces(cfg);
  for (const auto& trace : traces) {
    const fs::path path = fs::path(opts.outDir) / (trace.mode + ".csv");
    writeTraceCsv(path, trace);
    std::printf("wrote %s (%zu samples)\n", path.string().c_str(), trace.value.size());
  }
  writeKeyValueFile(fs::path(opts.outDir) / "config.cfg", configToMap(cfg));
  std::printf("wrote %s\n", (fs::path(opts.outDir) / "config.cfg").string().c_str());
  std::printf("seed %llu; rerun with the same config for byte-identical traces\n",
              static_cast<unsigned long long>(cfg.seed));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

int runReconstruct(const CommonOpts& opts, const std::string& traceDir) {
  const RunConfig cfg = resolveConfig(opts);
  ensureOutDir(opts.outDir);

  std::vector<QuadratureTrace> traces;
  for (const char* name : {"a", "b", "c", "d", "e", "f", "shot"}) {
    traces.push_back(readTraceCsv(fs::path(traceDir) / (std::string(name) + ".csv")));
  }
  const ReconstructionResult res =
      reconstructTraces(traces, cfg.bins, cfg.stationarityTol, cfg.crossSigma);

  detail::writeFileOrThrow(fs::path(opts.outDir) / "reconstruction.json",
                           reconstructionToJson(res).dump(2) + "\n");
  writeKurtosisCsv(fs::path(opts.outDir) / "kurtosis.csv", res.binnedNames, res.binned);
  if (res.cm) {
    detail::writeFileOrThrow(fs::path(opts.outDir) / "cm.json",
                             covMatToJson(*res.cm).dump(2) + "\n");
  }

  std::printf("gaussianity: mean kurtosis %.4f (sd %.4f), outliers %.2f%% -> %s\n",
              res.gaussianity.meanKurtosis, res.gaussianity.kurtosisSd,
              100.0 * res.gaussianity.outlierFraction, res.gaussianity.pass ? "pass" : "FAIL");
  std::printf("stationarity: max deviation %.2f%% (tol %.0f%%) -> %s\n",
              100.0 * res.stationarity.maxRelDeviation, 100.0 * res.stationarity.tol,
              res.stationarity.pass ? "pass" : "FAIL");
  if (res.cm) {
    const auto& m = res.cm->matrix();
    std::printf("covariance matrix (basis Xa Ya Xb Yb):\n");
    for (int i = 0; i < 4; ++i) {
      std::printf("  %+8.4f %+8.4f %+8.4f %+8.4f\n", m(i, 0), m(i, 1), m(i, 2), m(i, 3));
    }
  } else {
    std::printf("assembly failed: %s\n", res.assemblyError.c_str());
  }
  if (!res.modeTransmissions.empty()) {
    const TransmissionEstimate avg = averageTransmission(res.modeTransmissions);
    std::printf("detection transmission from auxiliary modes: %.4f +- %.4f\n", avg.t, avg.dt);
  }
  std::printf("wrote reconstruction.json, kurtosis.csv%s in %s\n",
              res.cm ? ", cm.json" : "", opts.outDir.c_str());
  return res.ok() ? kExitOk : kExitGateFailure;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

void printAnalysis(const AnalysisReport& rep) {
  const auto& p = rep.params;
  std::printf("standard form: n=%.4f+-%.4f m=%.4f+-%.4f c1=%+.4f+-%.4f c2=%+.4f+-%.4f\n",
              p.n, p.dn, p.m, p.dm, p.c1, p.dc1, p.c2, p.dc2);
  std::printf("product criterion: %.4f +- %.4f vs threshold 0.25 (%.2f sigma) -> %s\n",
              rep.phs.value, rep.phs.mcSd, rep.phs.sigma,
              rep.phs.entangled ? "entangled" : "not entangled");
  std::printf("sum criterion:     %+.4f +- %.4f vs threshold 0    (%.2f sigma) -> %s\n",
              rep.duan.value, rep.duan.mcSd, rep.duan.sigma,
              rep.duan.entangled ? "entangled" : "not entangled");
  std::printf("verdict: %s\n", rep.entangled ? "entangled" : "not entangled");
  std::printf("loss inversion at transmission %.4f\n", rep.transmission);
  if (rep.scanTransmission) {
    std::printf("pure-ancestor transmission scan: %.4f +- %.4f\n", rep.scanTransmission->t,
                rep.scanTransmission->dt);
  }
  std::printf("ancestor: n=m=%.4f c=+-%.4f nu_min=%.4f (%s) purity=%.4f\n", rep.ancestor.n,
              std::abs(rep.ancestor.c1), rep.ancestorNuMin,
              rep.ancestorPhysical ? "physical" : "unphysical, within errors",
              rep.ancestorPurity);
  std::printf("ancestor purity MC: mean=%.4f sd=%.4f median=%.4f (%d draws, %d kept)\n",
              rep.purityMc.mean, rep.purityMc.sd, rep.purityMc.median, rep.purityMc.draws,
              rep.purityMc.kept);
  if (rep.photonTable) {
    std::printf("photon table: r=%.4f, p(0,0)=%.4f, pair mass %.6f\n", rep.photonTable->r,
                rep.photonTable->p(0, 0), rep.photonTable->tableMass);
  } else {
    std::printf("photon table: skipped (ancestor purity %.4f outside the window)\n",
                rep.ancestorPurity);
  }
}

int runAnalyze(const CommonOpts& opts, const std::string& cmPath) {
  const RunConfig cfg = resolveConfig(opts);
  ensureOutDir(opts.outDir);

  const CovMat<double> cm = covMatFromJson(parseJsonFile(cmPath));
  AnalysisReport rep;
  try {
    rep = analyzeState(cm, analysisOptionsOf(cfg), cfg.seed);
  } catch (const ShapeViolationError& e) {
    // The matrix failed the standard-form gate: record the diagnosis.
    nlohmann::json diag;
    diag["gate"] = "standard-form";
    diag["error"] = e.what();
    detail::writeFileOrThrow(fs::path(opts.outDir) / "analysis.json", diag.dump(2) + "\n");
    std::fprintf(stderr, "standard-form gate failed: %s\n", e.what());
    return kExitGateFailure;
  }

  detail::writeFileOrThrow(fs::path(opts.outDir) / "analysis.json",
                           analysisReportToJson(rep).dump(2) + "\n");
  writePurityHistogramCsv(fs::path(opts.outDir) / "purity_histogram.csv", rep.purityMc);
  if (rep.photonTable) {
    writePhotonBarsCsv(fs::path(opts.outDir) / "photon_bars.csv", *rep.photonTable);
  }
  printAnalysis(rep);
  std::printf("wrote analysis.json, purity_histogram.csv%s in %s\n",
              rep.photonTable ? ", photon_bars.csv" : "", opts.outDir.c_str());
  return rep.entangled ? kExitOk : kExitNotEntangled;
}

// ---------------------------------------------------------------------------
// replicate
// ---------------------------------------------------------------------------

struct SummaryRow {
  std::string name;
  std::string reference;
  std::string computed;
  std::string tolerance;
  bool pass{};
};

void printSummary(const std::vector<SummaryRow>& rows) {
  std::printf("%-46s %14s %14s %12s %s\n", "criterion", "reference", "computed", "tolerance",
              "status");
  std::printf("%.*s\n", 100,
              "----------------------------------------------------------------------"
              "------------------------------");
  int passed = 0;
  for (const auto& row : rows) {
    std::printf("%-46s %14s %14s %12s %s\n", row.name.c_str(), row.reference.c_str(),
                row.computed.c_str(), row.tolerance.c_str(), row.pass ? "PASS" : "FAIL");
    passed += row.pass ? 1 : 0;
  }
  std::printf("%d of %zu rows pass\n", passed, rows.size());
}

std::string fmt(const char* format, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

int runReplicate(const CommonOpts& opts) {
  const RunConfig cfg = resolveConfig(opts);
  ensureOutDir(opts.outDir);
  using clock = std::chrono::steady_clock;
  std::vector<SummaryRow> rows;

  // Statistical tolerances on the simulation side scale with the sample
  // count relative to the full-size run.
  const double tolScale = std::sqrt(1e6 / double(cfg.samples));
  const int runs = opts.quick ? 5 : 20;

  // --- Stage 1: the measured reference matrix through the analysis. -------
  const auto t0 = clock::now();
  const CovMat<double> reference = referenceExperimentCm();
  const AnalysisReport rep = analyzeState(reference, analysisOptionsOf(cfg), cfg.seed);
  const double analysisSeconds = std::chrono::duration<double>(clock::now() - t0).count();

  detail::writeFileOrThrow(fs::path(opts.outDir) / "analysis.json",
                           analysisReportToJson(rep).dump(2) + "\n");
  writePurityHistogramCsv(fs::path(opts.outDir) / "purity_histogram.csv", rep.purityMc);
  if (rep.photonTable) {
    writePhotonBarsCsv(fs::path(opts.outDir) / "photon_bars.csv", *rep.photonTable);
  }

  rows.push_back({"product criterion value", "0.51", fmt("%.4f", rep.phs.value), "0.01",
                  std::abs(rep.phs.value - 0.51) <= 0.01});
  rows.push_back({"sum criterion value", "-0.31", fmt("%.4f", rep.duan.value), "0.01",
                  std::abs(rep.duan.value + 0.31) <= 0.01});
  rows.push_back({"product criterion MC spread", "0.03", fmt("%.4f", rep.phs.mcSd), "30%",
                  std::abs(rep.phs.mcSd - 0.03) <= 0.3 * 0.03});
  rows.push_back({"sum criterion MC spread", "0.04", fmt("%.4f", rep.duan.mcSd), "30%",
                  std::abs(rep.duan.mcSd - 0.04) <= 0.3 * 0.04});
  rows.push_back({"product criterion significance", ">= 7.5", fmt("%.2f", rep.phs.sigma), "-",
                  rep.phs.sigma >= 7.5});
  rows.push_back({"sum criterion significance", ">= 7.5", fmt("%.2f", rep.duan.sigma), "-",
                  rep.duan.sigma >= 7.5});
  rows.push_back({"criteria analysis runtime (s)", "< 10", fmt("%.2f", analysisSeconds), "-",
                  analysisSeconds < 10.0});

  // Ancestor reconstruction: entries quoted to two decimals upstream.
  const double diag2 = std::round(rep.ancestor.n * 100.0) / 100.0;
  const double cross2 = std::round(std::abs(rep.ancestor.c1) * 100.0) / 100.0;
  rows.push_back({"ancestor diagonal (2 decimals)", "0.70", fmt("%.2f", diag2), "exact",
                  diag2 == 0.70});
  rows.push_back({"ancestor cross (2 decimals)", "0.48", fmt("%.2f", cross2), "exact",
                  cross2 == 0.48});
  rows.push_back({"ancestor point purity", "0.96", fmt("%.4f", rep.ancestorPurity), "0.01",
                  std::abs(rep.ancestorPurity - 0.96) <= 0.01});
  rows.push_back({"ancestor purity MC mean", "0.99", fmt("%.4f", rep.purityMc.mean), "0.02",
                  std::abs(rep.purityMc.mean - 0.99) <= 0.02});
  rows.push_back({"ancestor purity MC spread", "0.03", fmt("%.4f", rep.purityMc.sd), "0.01",
                  std::abs(rep.purityMc.sd - 0.03) <= 0.01});
  rows.push_back({"ancestor purity MC median", "0.966", fmt("%.4f", rep.purityMc.median),
                  "0.01", std::abs(rep.purityMc.median - 0.966) <= 0.01});
  const double ancestorSeconds = std::chrono::duration<double>(clock::now() - t0).count();
  rows.push_back({"ancestor stage runtime (s)", "< 60", fmt("%.2f", ancestorSeconds), "-",
                  ancestorSeconds < 60.0});

  // --- Stage 2: seeded end-to-end statistical runs. ------------------------
  const auto t1 = clock::now();
  StandardFormParams<double> displayed;  // reference values the runs must hit
  displayed.n = displayed.m = 0.61;
  displayed.c1 = 0.26;
  displayed.c2 = -0.26;
  const Mat4<double> target = standardFormCovariance(displayed).matrix();

  int recovered = 0;
  double kurtLo = 1e9, kurtHi = -1e9, kurtSdMax = 0.0, worstT = 0.0;
  bool gatesAllPass = true;
  for (int k = 0; k < runs; ++k) {
    RunConfig runCfg = cfg;
    runCfg.seed = substreamSeed(cfg.seed, "run:" + std::to_string(k));
    const auto traces = simulateAllTraces(runCfg);
    const ReconstructionResult res =
        reconstructTraces(traces, runCfg.bins, runCfg.stationarityTol, runCfg.crossSigma);
    gatesAllPass = gatesAllPass && res.gatesPass;
    if (res.cm &&
        (res.cm->matrix() - target).cwiseAbs().maxCoeff() <= 0.02 * tolScale) {
      ++recovered;
    }
    kurtLo = std::min(kurtLo, res.gaussianity.meanKurtosis);
    kurtHi = std::max(kurtHi, res.gaussianity.meanKurtosis);
    kurtSdMax = std::max(kurtSdMax, res.gaussianity.kurtosisSd);
    const TransmissionEstimate avg = averageTransmission(res.modeTransmissions);
    worstT = std::max(worstT, std::abs(avg.t - 0.53));
  }
  const double fraction = double(recovered) / runs;
  const double simSeconds = std::chrono::duration<double>(clock::now() - t1).count();

  rows.push_back({"matrix recovery fraction (" + std::to_string(runs) + " runs)", ">= 0.95",
                  fmt("%.2f", fraction), fmt("entry 0.02*%.1f", tolScale),
                  fraction >= 0.95});
  rows.push_back({"mean kurtosis range over runs", "[2.95, 3.05]",
                  fmt("%.3f", kurtLo) + ".." + fmt("%.3f", kurtHi),
                  fmt("scaled %.1fx", tolScale),
                  kurtLo >= 3.0 - 0.05 * tolScale && kurtHi <= 3.0 + 0.05 * tolScale});
  rows.push_back({"kurtosis spread max over runs", "<= 0.07", fmt("%.4f", kurtSdMax),
                  fmt("scaled %.1fx", tolScale), kurtSdMax <= 0.07 * tolScale});
  rows.push_back({"data-quality gates over runs", "all pass", gatesAllPass ? "all" : "failures",
                  "-", gatesAllPass});
  rows.push_back({"transmission recovery worst |dev|", "<= 0.02", fmt("%.4f", worstT),
                  fmt("scaled %.1fx", tolScale), worstT <= 0.02 * tolScale});
  rows.push_back({"simulation stage runtime (s)", "< 300", fmt("%.1f", simSeconds), "-",
                  simSeconds < 300.0});

  // --- Stage 3: structural spot checks (full suite runs under ctest). ------
  {
    const CovMat<double> tb = tmsvCovariance(SqueezeSpec<double>{0.4335});
    const CovMat<double> roundTrip = invertLoss(lossChannel(tb, 0.53), 0.53);
    const double residual = (roundTrip.matrix() - tb.matrix()).cwiseAbs().maxCoeff();
    rows.push_back({"loss channel round trip residual", "<= 1e-12", fmt("%.1e", residual), "-",
                    residual <= 1e-12});
    StandardFormParams<double> vac;
    vac.n = vac.m = 0.5;
    const bool boundaries = phsValue(vac) == 0.25 && duanValue(vac).value == 0.0;
    rows.push_back({"criteria boundaries at vacuum", "0.25 / 0",
                    fmt("%.2f", phsValue(vac)) + " / " + fmt("%.0f", duanValue(vac).value),
                    "exact", boundaries});
    const double tbPurity = purity(tb);
    rows.push_back({"pure twin-beam purity", "1", fmt("%.12f", tbPurity), "1e-9",
                    std::abs(tbPurity - 1.0) <= 1e-9});
    const JointPhotonTable table = jointPhotonDistribution(standardForm(tb), 10);
    const double mass = table.p.sum();
    rows.push_back({"photon table mass identity", "geometric", fmt("%.9f", mass), "1e-12",
                    std::abs(mass - table.tableMass) <= 1e-12});
    bool synthesisOk = true;
    try {
      (void)auxiliaryModeSynthesis();
    } catch (const std::exception&) {
      synthesisOk = false;
    }
    rows.push_back({"measurement-mode synthesis self-check", "defect-free",
                    synthesisOk ? "defect-free" : "defect", "-", synthesisOk});
  }

  printSummary(rows);
  std::printf("reports written to %s\n", opts.outDir.c_str());

  bool all = true;
  for (const auto& row : rows) all = all && row.pass;
  return all ? kExitOk : kExitGateFailure;
}

// ---------------------------------------------------------------------------
// modes
// ---------------------------------------------------------------------------

// Renders a unit-modulus coefficient (possibly scaled by 1/sqrt(2)) as a
// symbolic factor: "", "-", "i*", "-i*".
std::string unitSymbol(const std::complex<double>& unit) {
  constexpr double tol = 1e-9;
  if (std::abs(unit - std::complex<double>(1, 0)) < tol) return "";
  if (std::abs(unit - std::complex<double>(-1, 0)) < tol) return "-";
  if (std::abs(unit - std::complex<double>(0, 1)) < tol) return "i*";
  if (std::abs(unit - std::complex<double>(0, -1)) < tol) return "-i*";
  throw std::logic_error("combination coefficient is not a quarter-turn unit");
}

std::string renderCombination(const DerivedMode& mode) {
  const double modA = std::abs(mode.coeffA), modB = std::abs(mode.coeffB);
  const double invRoot2 = std::numbers::sqrt2 / 2.0;
  if (modB < 1e-12) return unitSymbol(mode.coeffA) + "a";
  if (modA < 1e-12) return unitSymbol(mode.coeffB) + "b";
  if (std::abs(modA - invRoot2) > 1e-9 || std::abs(modB - invRoot2) > 1e-9) {
    throw std::logic_error("unexpected combination amplitudes");
  }
  const std::string first = unitSymbol(mode.coeffA * std::numbers::sqrt2) + "a";
  std::string second = unitSymbol(mode.coeffB * std::numbers::sqrt2) + "b";
  std::string join = " + ";
  if (!second.empty() && second.front() == '-') {
    join = " - ";
    second.erase(0, 1);
  }
  return "(" + first + join + second + ")/sqrt(2)";
}

std::string renderPhase(const std::complex<double>& phase) {
  double turns = std::arg(phase) / (std::numbers::pi / 4.0);
  long k = std::lround(turns);
  if (std::abs(turns - double(k)) > 1e-9) {
    throw std::logic_error("recorded phase is not a multiple of pi/4");
  }
  k = ((k % 8) + 8) % 8;
  switch (k) {
    case 0: return "1";
    case 2: return "i";
    case 4: return "-1";
    case 6: return "-i";
    default: {
      char buf[24];
      std::snprintf(buf, sizeof buf, "exp(i*%ldpi/4)", k);
      return buf;
    }
  }
}

int runModes() {
  std::printf("derived measurement modes\n");
  std::printf("=========================\n");
  std::string config;
  for (const DerivedMode& mode : auxiliaryModeSynthesis()) {
    if (mode.configuration != config) {
      config = mode.configuration;
      std::printf("\nconfiguration: %s\n", config.c_str());
    }
    std::printf("  mode %s: polarization %s, OAM %+d\n", mode.name.c_str(),
                polName(mode.pol), mode.oam);
    std::printf("    combination: %s\n", renderCombination(mode).c_str());
    std::printf("    recorded phase: %s\n", renderPhase(mode.phase).c_str());
  }
  return kExitOk;
}

// Maps thrown errors onto the documented exit codes.
int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    // Domain failures: gates, degenerate fits, inconsistent estimates, ...
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitGateFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homodyne tomography and entanglement analysis of a lossy twin beam"};
  app.require_subcommand(1);

  CommonOpts simOpts, reconOpts, analyzeOpts, replicateOpts;
  std::string traceDir, cmPath;

  CLI::App* sim = app.add_subcommand("simulate", "synthesize the seven quadrature traces");
  addCommonOptions(sim, simOpts);

  CLI::App* recon =
      app.add_subcommand("reconstruct", "covariance matrix and gates from trace files");
  recon->add_option("traces", traceDir, "directory holding a..f and shot CSV traces")
      ->required();
  addCommonOptions(recon, reconOpts);

  CLI::App* analyze =
      app.add_subcommand("analyze", "entanglement and ancestor analysis of a matrix");
  analyze->add_option("cm", cmPath, "covariance matrix JSON file")->required();
  addCommonOptions(analyze, analyzeOpts);

  CLI::App* replicate =
      app.add_subcommand("replicate", "end-to-end run against the reference values");
  addCommonOptions(replicate, replicateOpts);

  app.add_subcommand("modes", "print the derived measurement-mode tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (sim->parsed()) return guarded([&] { return runSimulate(simOpts); });
  if (recon->parsed()) return guarded([&] { return runReconstruct(reconOpts, traceDir); });
  if (analyze->parsed()) return guarded([&] { return runAnalyze(analyzeOpts, cmPath); });
  if (replicate->parsed()) return guarded([&] { return runReplicate(replicateOpts); });
  return guarded([] { return runModes(); });
}
