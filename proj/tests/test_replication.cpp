#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "oamcv/replication.hpp"
#include "testutil.hpp"

using namespace oamcv;

namespace {

// Reduced-size run for unit tests; statistics scale accordingly.
RunConfig quickConfig() {
  RunConfig cfg;
  cfg.samples = 200000;
  cfg.bins = 50;
  cfg.mcDraws = 20000;
  cfg.seed = 424242;
  return cfg;
}

}  // namespace

TEST_CASE("trace synthesis: seven stamped deterministic traces") {
  RunConfig cfg = quickConfig();
  cfg.samples = 20000;
  const auto traces = simulateAllTraces(cfg);

  REQUIRE(traces.size() == 7);
  const char* expected[] = {"a", "b", "c", "d", "e", "f", "shot"};
  for (size_t k = 0; k < 7; ++k) {
    CHECK(traces[k].mode == expected[k]);
    CHECK(traces[k].phase.size() == size_t(cfg.samples));
    CHECK(traces[k].seed == substreamSeed(cfg.seed, "trace:" + traces[k].mode));
  }

  // Every trace carries the measured raw variance of the shot reference.
  const double shotVar = traceVariance(traces.back().value);
  CHECK(shotVar == doctest::Approx(cfg.gain * cfg.gain * 0.5).epsilon(0.05));
  for (const auto& trace : traces) CHECK(trace.shotVariance == shotVar);

  // Identical config reproduces every sample; the streams are independent,
  // so distinct modes disagree.
  const auto again = simulateAllTraces(cfg);
  for (size_t k = 0; k < 7; ++k) {
    CHECK(again[k].value == traces[k].value);
  }
  CHECK(traces[0].value != traces[1].value);

  // A different seed shifts all of them.
  cfg.seed += 1;
  const auto shifted = simulateAllTraces(cfg);
  CHECK(shifted[0].value != traces[0].value);
}

TEST_CASE("reconstruction recovers the lossy source matrix with passing gates") {
  const RunConfig cfg = quickConfig();
  const auto traces = simulateAllTraces(cfg);
  const ReconstructionResult res = reconstructTraces(traces, cfg.bins);

  REQUIRE(res.cm.has_value());
  CHECK(res.ok());
  const CovMat<double> truth =
      lossChannel(tmsvCovariance(SqueezeSpec<double>{cfg.r}), 0.53);
  const double worst = (res.cm->matrix() - truth.matrix()).cwiseAbs().maxCoeff();
  CHECK(worst < 0.02);
  REQUIRE(res.cm->errors().has_value());
  CHECK(res.cm->errors()->minCoeff() > 0.0);

  CHECK(res.gaussianity.pass);
  CHECK(res.gaussianity.meanKurtosis == doctest::Approx(3.0).epsilon(0.02));
  CHECK(res.stationarity.pass);
  CHECK(res.gatesPass);
  CHECK(res.shotVariance == doctest::Approx(0.5).epsilon(0.05));

  // Binned statistics for all seven traces are retained for plotting.
  CHECK(res.binned.size() == 7);
  CHECK(res.binnedNames.back() == "shot");
  CHECK(res.binned.front().size() == size_t(cfg.bins));

  // Only the four interference modes resolve the transmission; the two bare
  // source modes are phase-flat and cannot.
  CHECK(res.modeTransmissions.size() == 4);
  for (const char* name : {"c", "d", "e", "f"}) {
    REQUIRE(res.modeTransmissions.count(name) == 1);
    CHECK(res.modeTransmissions.at(name).t == doctest::Approx(0.53).epsilon(0.06));
  }
  const TransmissionEstimate avg = averageTransmission(res.modeTransmissions);
  CHECK(avg.t == doctest::Approx(0.53).epsilon(0.04));
  CHECK(avg.dt > 0.0);
}

TEST_CASE("reconstruction rejects incomplete or duplicated trace sets") {
  RunConfig cfg = quickConfig();
  cfg.samples = 20000;
  cfg.bins = 20;
  auto traces = simulateAllTraces(cfg);

  auto withoutShot = traces;
  withoutShot.pop_back();
  CHECK_THROWS_AS(reconstructTraces(withoutShot, cfg.bins), IncompleteInputError);

  auto withoutC = traces;
  withoutC.erase(withoutC.begin() + 2);
  CHECK_THROWS_WITH_AS(reconstructTraces(withoutC, cfg.bins), doctest::Contains("\"c\""),
                       IncompleteInputError);

  auto duplicated = traces;
  duplicated.push_back(traces[0]);
  CHECK_THROWS_AS(reconstructTraces(duplicated, cfg.bins), std::invalid_argument);
}

TEST_CASE("stationarity gate trips on an inflated mode") {
  RunConfig cfg = quickConfig();
  cfg.samples = 50000;
  auto traces = simulateAllTraces(cfg);
  // Inflate one configuration's amplitudes by 10%: the per-configuration
  // photon totals no longer agree.
  for (auto& trace : traces) {
    if (trace.mode == "c" || trace.mode == "d") {
      for (double& v : trace.value) v *= 1.10;
    }
  }
  const ReconstructionResult res = reconstructTraces(traces, cfg.bins);
  CHECK_FALSE(res.stationarity.pass);
  CHECK_FALSE(res.gatesPass);
  CHECK_FALSE(res.ok());
  // Scaling only half the interference modes also breaks the agreement
  // between the two independent estimates of each cross entry, so no matrix
  // is assembled, but the gate reports above still arrive.
  CHECK_FALSE(res.cm.has_value());
  CHECK_FALSE(res.assemblyError.empty());
}

TEST_CASE("average transmission handles edge cases") {
  CHECK_THROWS_AS(averageTransmission({}), UnresolvableError);

  std::map<std::string, TransmissionEstimate> flat;
  flat["c"] = {0.52, 0.0};
  flat["d"] = {0.54, 0.0};
  const TransmissionEstimate plain = averageTransmission(flat);
  CHECK(plain.t == doctest::Approx(0.53).epsilon(1e-12));
  CHECK(plain.dt == 0.0);

  std::map<std::string, TransmissionEstimate> weighted;
  weighted["c"] = {0.50, 0.01};
  weighted["d"] = {0.56, 0.03};
  const TransmissionEstimate avg = averageTransmission(weighted);
  const double wc = 1.0 / (0.01 * 0.01), wd = 1.0 / (0.03 * 0.03);
  CHECK(avg.t == doctest::Approx((0.50 * wc + 0.56 * wd) / (wc + wd)).epsilon(1e-12));
  CHECK(avg.dt == doctest::Approx(std::sqrt(1.0 / (wc + wd))).epsilon(1e-12));
}

TEST_CASE("full replication run: simulate, reconstruct, analyze") {
  const RunConfig cfg = quickConfig();
  const ReplicationRun run = replicationRun(cfg);

  CHECK(run.traces.size() == 7);
  CHECK(run.reconstruction.gatesPass);

  CHECK(run.analysis.entangled);
  CHECK(run.analysis.phs.sigma > 3.0);
  CHECK(run.analysis.duan.sigma > 3.0);
  CHECK(run.analysis.transmission == cfg.transmission);

  // The per-mode transmissions flow into the final report.
  CHECK(run.analysis.modeTransmissions.size() == 4);

  // Reconstructed parameters sit near the known generation point.
  CHECK(run.analysis.symmetrized.n == doctest::Approx(0.605996).epsilon(0.02));
  CHECK(run.analysis.symmetrized.c1 == doctest::Approx(0.259641).epsilon(0.05));

  // The inversion undoes the simulated loss: the ancestor is near-pure.
  CHECK(run.analysis.ancestorPurity == doctest::Approx(1.0).epsilon(0.06));

  // End-to-end determinism.
  const ReplicationRun again = replicationRun(cfg);
  CHECK((again.reconstruction.cm->matrix() - run.reconstruction.cm->matrix())
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK(again.analysis.phs.mcMean == run.analysis.phs.mcMean);
  CHECK(again.analysis.purityMc.median == run.analysis.purityMc.median);
}
