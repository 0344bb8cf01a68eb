#pragma once

#include <optional>
#include <vector>

#include "calikit/metrics.hpp"
#include "calikit/types.hpp"

namespace calikit {

// Naive brute-force re-implementations kept for testing. They share no
// bucketing or summation code with the metrics module: plain loops, plain
// accumulation, O(N*M) scans. Slow and proud of it.

double oracle_ece(const std::vector<ScoredPrediction>& preds, int bins, BinningMode mode);

struct OracleIce {
  double ice = 0.0;
  std::optional<double> ice_pos;
  std::optional<double> ice_neg;
};

OracleIce oracle_ice(const std::vector<ScoredPrediction>& preds);

std::optional<double> oracle_macro_ce(const std::vector<ScoredPrediction>& preds);

double oracle_brier(const std::vector<ScoredPrediction>& preds);

// long-double softmax, independent of scoring's implementation
std::vector<double> oracle_softmax(const std::vector<double>& scores, double temperature);

}  // namespace calikit
