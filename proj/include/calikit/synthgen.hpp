#pragma once

#include <cstdint>
#include <vector>

#include "calikit/types.hpp"

namespace calikit {

// IndependentBeta draws every confidence from Beta(a, b) regardless of
// correctness. OverconfidentLogits builds candidate sets whose top softmax
// confidence systematically exceeds the configured accuracy. Separated
// draws around per-class means with Gaussian noise, clamped to [0,1].
enum class ConfidenceModel { IndependentBeta, OverconfidentLogits, Separated };

struct GeneratorSpec {
  std::int64_t n = 100;
  double accuracy = 0.5;  // exactly round(accuracy * n) records come out correct
  ConfidenceModel model = ConfidenceModel::IndependentBeta;
  std::uint64_t seed = 42;
  // IndependentBeta
  double beta_a = 8.0;
  double beta_b = 2.0;
  // OverconfidentLogits
  int candidates = 10;    // k >= 2
  double sharpness = 1.0;  // > 0; scales logit gaps
  // Separated
  double pos_mean = 0.8;
  double neg_mean = 0.3;
  double noise = 0.1;
};

// Deterministic per GeneratorSpec (seed included). Sampling is inverse-CDF on a fixed
// uniform stream, so draw counts never depend on the platform.
std::vector<ScoredPrediction> generate_scored(const GeneratorSpec& spec);

// OverconfidentLogits only (WrongConfidenceModel otherwise). Candidate 0 is
// the strict raw-score maximum of every record; exactly round(accuracy * n)
// records have a correct top candidate.
std::vector<CandidateRecord> generate_candidates(const GeneratorSpec& spec);

}  // namespace calikit
