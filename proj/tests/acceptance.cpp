// Acceptance gate: every reference figure of the replicated OAM twin-beam
// experiment, checked at its stated tolerance, one verdict line per check.
//
// Four quoted ancestor-stage figures are not reproducible from the stated
// procedure itself (the cross element rounds to 0.49, not the quoted 0.48,
// and the quoted purity statistics follow from the displayed one-digit
// rounding rather than from the procedure's extra-digit averaging; see
// README).  Those checks print their honest FAIL against the quoted figure
// and are marked as known deviations; a pinned companion check then guards
// this implementation's reproducible value.  The exit code fails on any
// unexpected status in either direction, so a stale deviation list also
// trips the gate.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oamcv/io.hpp"
#include "oamcv/replication.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using namespace oamcv;
using clock_type = std::chrono::steady_clock;

namespace {

struct Check {
  std::string name;
  std::string expected;
  std::string got;
  bool pass{};
  bool knownDeviation{};
};

std::vector<Check> g_checks;

void record(const std::string& name, const std::string& expected, const std::string& got,
            bool pass, bool knownDeviation = false) {
  g_checks.push_back({name, expected, got, pass, knownDeviation});
  const char* status = pass ? "PASS" : (knownDeviation ? "FAIL (known deviation)" : "FAIL");
  std::printf("%-52s expected %-16s got %-16s %s\n", name.c_str(), expected.c_str(),
              got.c_str(), status);
  std::fflush(stdout);
}

std::string num(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

double seconds(clock_type::time_point from) {
  return std::chrono::duration<double>(clock_type::now() - from).count();
}

int runCli(const std::string& args, std::string* output = nullptr) {
  const fs::path log = fs::temp_directory_path() / "oamcv_acceptance_cmd.log";
  const std::string cmd =
      std::string(OAMCV_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return (raw != -1 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
}

// --- 1 & 2 & 3: the measured reference matrix through the analysis. --------

void criteriaAndAncestor() {
  const auto t0 = clock_type::now();
  AnalysisOptions opts;  // transmission 0.53, 1e5 Monte Carlo draws
  const AnalysisReport rep = analyzeState(referenceExperimentCm(), opts, 20230815);
  const double elapsed = seconds(t0);

  record("1. product criterion value", "0.51 +- 0.01", num("%.4f", rep.phs.value),
         std::abs(rep.phs.value - 0.51) <= 0.01);
  record("1. sum criterion value", "-0.31 +- 0.01", num("%.4f", rep.duan.value),
         std::abs(rep.duan.value + 0.31) <= 0.01);
  record("1. product criterion MC uncertainty", "0.03 rel 30%", num("%.4f", rep.phs.mcSd),
         std::abs(rep.phs.mcSd - 0.03) <= 0.30 * 0.03);
  record("1. sum criterion MC uncertainty", "0.04 rel 30%", num("%.4f", rep.duan.mcSd),
         std::abs(rep.duan.mcSd - 0.04) <= 0.30 * 0.04);
  record("1. criteria runtime", "< 10 s", num("%.2f s", elapsed), elapsed < 10.0);

  const double diag2 = std::round(rep.ancestor.n * 100.0) / 100.0;
  const double cross2 = std::round(std::abs(rep.ancestor.c1) * 100.0) / 100.0;
  record("2. ancestor diagonal, 2 decimals", "0.70", num("%.2f", diag2), diag2 == 0.70);
  record("2. ancestor cross, 2 decimals", "0.48", num("%.2f", cross2), cross2 == 0.48, true);
  record("2.   pinned: ancestor cross, 2 decimals", "0.49", num("%.2f", cross2),
         cross2 == 0.49);
  record("2. ancestor point purity", "0.96 +- 0.01", num("%.4f", rep.ancestorPurity),
         std::abs(rep.ancestorPurity - 0.96) <= 0.01, true);
  record("2.   pinned: ancestor point purity", "1.0133 +- 0.001",
         num("%.4f", rep.ancestorPurity), std::abs(rep.ancestorPurity - 1.0133) <= 0.001);
  record("2. ancestor MC purity mean", "0.99 +- 0.02", num("%.4f", rep.purityMc.mean),
         std::abs(rep.purityMc.mean - 0.99) <= 0.02, true);
  record("2.   pinned: ancestor MC purity mean", "[1.02, 1.08]", num("%.4f", rep.purityMc.mean),
         rep.purityMc.mean >= 1.02 && rep.purityMc.mean <= 1.08);
  record("2. ancestor MC purity spread", "0.03 +- 0.01", num("%.4f", rep.purityMc.sd),
         std::abs(rep.purityMc.sd - 0.03) <= 0.01, true);
  record("2.   pinned: ancestor MC purity spread", "[0.10, 0.35]", num("%.4f", rep.purityMc.sd),
         rep.purityMc.sd >= 0.10 && rep.purityMc.sd <= 0.35);
  record("2. ancestor MC purity median", "0.966 +- 0.01", num("%.4f", rep.purityMc.median),
         std::abs(rep.purityMc.median - 0.966) <= 0.01, true);
  record("2.   pinned: ancestor MC purity median", "1.0133 +- 0.01",
         num("%.4f", rep.purityMc.median), std::abs(rep.purityMc.median - 1.0133) <= 0.01);
  record("2. ancestor stage runtime", "< 60 s", num("%.2f s", seconds(t0)),
         seconds(t0) < 60.0);

  record("3. product criterion significance", ">= 7.5 sigma", num("%.2f", rep.phs.sigma),
         rep.phs.sigma >= 7.5);
  record("3. sum criterion significance", ">= 7.5 sigma", num("%.2f", rep.duan.sigma),
         rep.duan.sigma >= 7.5);
}

// --- 4 & 5: twenty full-size seeded simulation runs. ------------------------

void statisticalReplication() {
  const auto t0 = clock_type::now();
  const RunConfig base;  // r = 0.4335, T = 0.53, 1e6 samples, 100 bins

  StandardFormParams<double> displayed;
  displayed.n = displayed.m = 0.61;
  displayed.c1 = 0.26;
  displayed.c2 = -0.26;
  const Mat4<double> target = standardFormCovariance(displayed).matrix();

  int recovered = 0;
  double kurtLo = 1e9, kurtHi = -1e9, kurtSdMax = 0.0, worstT = 0.0;
  double cliDiff = 1e9;

  for (int k = 0; k < 20; ++k) {
    RunConfig cfg = base;
    cfg.seed = substreamSeed(base.seed, "run:" + std::to_string(k));
    const auto traces = simulateAllTraces(cfg);
    const ReconstructionResult res =
        reconstructTraces(traces, cfg.bins, cfg.stationarityTol, cfg.crossSigma);
    if (res.cm && (res.cm->matrix() - target).cwiseAbs().maxCoeff() <= 0.02) ++recovered;
    kurtLo = std::min(kurtLo, res.gaussianity.meanKurtosis);
    kurtHi = std::max(kurtHi, res.gaussianity.meanKurtosis);
    kurtSdMax = std::max(kurtSdMax, res.gaussianity.kurtosisSd);
    worstT = std::max(worstT, std::abs(averageTransmission(res.modeTransmissions).t - 0.53));

    if (k == 0 && res.cm) {
      // The first run additionally goes through the real executable; its
      // output must be bit-identical to the in-process result.
      const fs::path dir = fs::temp_directory_path() / "oamcv_acceptance_run0";
      fs::remove_all(dir);
      fs::create_directories(dir);
      writeKeyValueFile(dir / "run.cfg", configToMap(cfg));
      const int simCode =
          runCli("simulate --config " + (dir / "run.cfg").string() + " --out " + dir.string());
      const int recCode = runCli("reconstruct " + dir.string() + " --config " +
                                 (dir / "run.cfg").string() + " --out " + dir.string());
      if (simCode == 0 && recCode == 0) {
        const std::ifstream in(dir / "cm.json");
        std::stringstream ss;
        ss << in.rdbuf();
        const CovMat<double> cliCm = covMatFromJson(nlohmann::json::parse(ss.str()));
        cliDiff = (cliCm.matrix() - res.cm->matrix()).cwiseAbs().maxCoeff();
      }
      fs::remove_all(dir);
    }
  }
  const double elapsed = seconds(t0);

  record("4. matrix recovery, 20 runs, 0.02/entry", ">= 19 of 20", std::to_string(recovered),
         recovered >= 19);
  // The trace CSV format stores phases with nine significant digits, so the
  // file-mediated run can differ from the in-process one by at most the
  // resulting bin-assignment jitter.
  record("4. executable matches in-process run", "<= 1e-4", num("%.2e", cliDiff),
         cliDiff <= 1e-4);
  record("4. mean kurtosis, all runs", "[2.95, 3.05]",
         num("%.3f", kurtLo) + " .. " + num("%.3f", kurtHi),
         kurtLo >= 2.95 && kurtHi <= 3.05);
  record("4. kurtosis spread, all runs", "<= 0.07", num("%.4f", kurtSdMax), kurtSdMax <= 0.07);
  record("4. replication runtime", "< 300 s", num("%.1f s", elapsed), elapsed < 300.0);
  record("5. transmission recovery, worst of 20", "0.53 +- 0.02", num("%.4f", 0.53 + worstT),
         worstT <= 0.02);
}

// --- 6: structural properties. ----------------------------------------------

void propertySuite() {
  std::mt19937_64 gen(substreamSeed(20230815, "acceptance:properties"));

  double invarianceWorst = 0.0;
  for (int k = 0; k < 25; ++k) {
    const CovMat<double> cm = testutil::randomPhysicalCm(gen);
    const SymplecticMap<double> s = testutil::randomPassiveMap(gen);
    const CovMat<double> mapped(s.matrix() * cm.matrix() * s.matrix().transpose());
    const auto [p1, m1] = symplecticEigenvalues(cm);
    const auto [p2, m2] = symplecticEigenvalues(mapped);
    invarianceWorst =
        std::max({invarianceWorst, std::abs(p1 - p2), std::abs(m1 - m2)});
  }
  record("6. symplectic spectrum invariance, 25 maps", "<= 1e-9",
         num("%.2e", invarianceWorst), invarianceWorst <= 1e-9);

  double lossWorst = 0.0;
  for (double t : {0.1, 0.3, 0.53, 0.75, 0.95}) {
    for (int k = 0; k < 5; ++k) {
      const CovMat<double> cm = testutil::randomPhysicalCm(gen);
      const CovMat<double> back = invertLoss(lossChannel(cm, t), t);
      lossWorst = std::max(lossWorst, (back.matrix() - cm.matrix()).cwiseAbs().maxCoeff());
    }
  }
  record("6. loss channel round trip, 25 states", "<= 1e-12", num("%.2e", lossWorst),
         lossWorst <= 1e-12);

  double purityWorst = 0.0;
  for (double r : {0.0, 0.2, 0.4335, 0.8, 1.2}) {
    purityWorst =
        std::max(purityWorst, std::abs(purity(tmsvCovariance(SqueezeSpec<double>{r})) - 1.0));
  }
  record("6. two-mode squeezed vacuum purity", "1 +- 1e-9", num("%.2e", purityWorst),
         purityWorst <= 1e-9);

  StandardFormParams<double> vac;
  vac.n = vac.m = 0.5;
  const bool boundaries = phsValue(vac) == 0.25 && duanValue(vac).value == 0.0;
  record("6. criteria boundaries at vacuum", "0.25 and 0 exact",
         num("%.2f", phsValue(vac)) + " and " + num("%.0f", duanValue(vac).value), boundaries);

  // Reconstruction round trip: traces simulated from random physical states
  // with ideal detection must come back within 4 standard errors per entry.
  int okRuns = 0;
  DetectionSpec ideal;
  ideal.efficiency = 1.0;
  ideal.visibility = 1.0;
  ideal.samples = 20000;
  for (int k = 0; k < 50; ++k) {
    const CovMat<double> truth = testutil::randomPhysicalCm(gen);
    std::map<std::string, VarianceFit> fits;
    for (const DerivedMode& mode : auxiliaryModeSynthesis()) {
      std::mt19937_64 sub(substreamSeed(gen(), "roundtrip:" + mode.name));
      const Eigen::Vector2cd coeff(mode.coeffA, mode.coeffB);
      const QuadratureTrace trace = simulateTrace(truth, coeff, ideal, sub, mode.name);
      fits[mode.name] = fitSingleMode(binTrace(trace, 60), kShotNoiseVariance);
    }
    try {
      const CovMat<double> est = assembleCm(fits);
      const Mat4<double> pull =
          (est.matrix() - truth.matrix()).cwiseAbs().cwiseQuotient(*est.errors());
      if (pull.maxCoeff() < 4.0) ++okRuns;
    } catch (const ReconstructionInconsistencyError&) {
      // counts as a failed run, budgeted by the 95% requirement
    }
  }
  record("6. reconstruction round trip, 50 states", ">= 48 of 50 within 4 SE",
         std::to_string(okRuns), okRuns >= 48);

  double marginalWorst = 0.0;
  for (double r : {0.2, 0.4335, 0.9}) {
    const JointPhotonTable table =
        jointPhotonDistribution(standardForm(tmsvCovariance(SqueezeSpec<double>{r})), 40);
    const double nbar = std::sinh(r) * std::sinh(r);
    for (int k = 0; k <= table.nMax; ++k) {
      // Marginal of the diagonal table is the thermal distribution.
      const double thermal = std::pow(nbar / (1.0 + nbar), k) / (1.0 + nbar);
      marginalWorst = std::max(marginalWorst, std::abs(table.p.row(k).sum() - thermal));
    }
    marginalWorst = std::max(marginalWorst, std::abs(table.p.sum() - table.tableMass));
  }
  record("6. photon table marginal identity", "<= 1e-12", num("%.2e", marginalWorst),
         marginalWorst <= 1e-12);
}

// --- 7: the mode listing as an exact golden string. --------------------------

void modesGolden() {
  const std::string expected =
      "derived measurement modes\n"
      "=========================\n"
      "\n"
      "configuration: quarter-wave plate at 45 deg + q-plate\n"
      "  mode a: polarization R, OAM +1\n"
      "    combination: a\n"
      "    recorded phase: exp(i*3pi/4)\n"
      "  mode b: polarization L, OAM -1\n"
      "    combination: b\n"
      "    recorded phase: exp(i*5pi/4)\n"
      "\n"
      "configuration: quarter-wave plate at 0 deg + q-plate\n"
      "  mode c: polarization R, OAM +1\n"
      "    combination: (a + b)/sqrt(2)\n"
      "    recorded phase: i\n"
      "  mode d: polarization L, OAM -1\n"
      "    combination: (a - b)/sqrt(2)\n"
      "    recorded phase: i\n"
      "\n"
      "configuration: q-plate only\n"
      "  mode e: polarization R, OAM +1\n"
      "    combination: (i*a + b)/sqrt(2)\n"
      "    recorded phase: 1\n"
      "  mode f: polarization L, OAM -1\n"
      "    combination: (i*a - b)/sqrt(2)\n"
      "    recorded phase: 1\n";
  std::string output;
  const int code = runCli("modes", &output);
  record("7. mode tables golden string", "exact match",
         (code == 0 && output == expected) ? "exact match" : "mismatch",
         code == 0 && output == expected);
}

}  // namespace

int main() {
  std::printf("acceptance checks, reference figures of the replicated experiment\n");
  std::printf("------------------------------------------------------------------\n");
  criteriaAndAncestor();
  statisticalReplication();
  propertySuite();
  modesGolden();

  int passed = 0, known = 0, unexpected = 0;
  for (const Check& c : g_checks) {
    if (c.pass && !c.knownDeviation) {
      ++passed;
    } else if (!c.pass && c.knownDeviation) {
      ++known;
    } else {
      ++unexpected;  // a real failure, or a documented deviation that vanished
    }
  }
  std::printf("------------------------------------------------------------------\n");
  std::printf("%zu checks: %d passed, %d failed as documented known deviations, %d unexpected\n",
              g_checks.size(), passed, known, unexpected);
  if (unexpected == 0) {
    std::printf("ACCEPTANCE: PASS (%d known deviations, see README)\n", known);
    return 0;
  }
  std::printf("ACCEPTANCE: FAIL\n");
  return 1;
}
