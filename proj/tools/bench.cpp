// Compares the OpenMP scoring/sweep paths against their serial references
// on a generated candidate log: checks the outputs are bit-identical, then
// reports wall times.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "calikit/experiments.hpp"
#include "calikit/scoring.hpp"
#include "calikit/synthgen.hpp"

using namespace calikit;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

bool same_scored(const std::vector<ScoredPrediction>& a,
                 const std::vector<ScoredPrediction>& b) {
  return a == b;  // exact: ids, bits of confidence, flags
}

bool same_rows(const std::vector<SweepRow>& a, const std::vector<SweepRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].tau != b[i].tau || a[i].ece != b[i].ece || a[i].ice != b[i].ice ||
        a[i].ice_pos != b[i].ice_pos || a[i].ice_neg != b[i].ice_neg ||
        a[i].macro_ce != b[i].macro_ce) {
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const long n = argc > 1 ? std::strtol(argv[1], nullptr, 10) : 20000;
  const int k = argc > 2 ? static_cast<int>(std::strtol(argv[2], nullptr, 10)) : 10;
  const int rounds = 5;

  GeneratorSpec spec;
  spec.n = n;
  spec.model = ConfidenceModel::OverconfidentLogits;
  spec.candidates = k;
  spec.sharpness = 5.0;
  spec.seed = 7;
  const std::vector<CandidateRecord> recs = generate_candidates(spec);
  const ScoringScheme scheme{SchemeMode::Joint, 2.0};

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif
  std::printf("records: %ld, candidates each: %d, rounds: %d\n\n", n, k, rounds);

  std::vector<ScoredPrediction> serial, parallel;
  double t_serial = 0.0, t_parallel = 0.0;
  for (int r = 0; r < rounds; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    serial = score_log_serial(recs, scheme);
    t_serial += ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    parallel = score_log(recs, scheme);
    t_parallel += ms_since(t0);
  }
  if (!same_scored(serial, parallel)) {
    std::printf("score_log: MISMATCH against serial reference\n");
    return 1;
  }
  std::printf("score_log      serial %8.2f ms   parallel %8.2f ms   speedup %.2fx\n",
              t_serial / rounds, t_parallel / rounds, t_serial / t_parallel);

  const std::vector<double> taus = default_sweep_taus();
  std::vector<SweepRow> sweep_serial(taus.size()), sweep_parallel;
  double t_sweep_serial = 0.0, t_sweep_parallel = 0.0;
  for (int r = 0; r < rounds; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < taus.size(); ++i) {
      const CalibrationReport rep =
          evaluate(score_log_serial(recs, ScoringScheme{SchemeMode::Joint, taus[i]}), 10);
      sweep_serial[i] = SweepRow{taus[i],     rep.ece_width, rep.ice,
                                 rep.ice_pos, rep.ice_neg,   rep.macro_ce};
    }
    t_sweep_serial += ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    sweep_parallel = temperature_sweep(recs, taus, SchemeMode::Joint, 10);
    t_sweep_parallel += ms_since(t0);
  }
  if (!same_rows(sweep_serial, sweep_parallel)) {
    std::printf("temperature_sweep: MISMATCH against serial reference\n");
    return 1;
  }
  std::printf("sweep (%2zu taus) serial %8.2f ms   parallel %8.2f ms   speedup %.2fx\n",
              taus.size(), t_sweep_serial / rounds, t_sweep_parallel / rounds,
              t_sweep_serial / t_sweep_parallel);
  std::printf("\nparallel outputs match the serial references exactly\n");
  return 0;
}
