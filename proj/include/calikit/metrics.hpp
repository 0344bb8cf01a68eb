#pragma once

#include <optional>
#include <vector>

#include "calikit/types.hpp"

namespace calikit {

enum class BinningMode { EqualWidth, EqualMass };

struct BinningConfig {
  int bins = 10;  // M >= 1
  BinningMode mode = BinningMode::EqualWidth;
};

// Equal-width: confidence c lands in bin min(floor(c*M), M-1), i.e. half-open
// bins [m/M, (m+1)/M) with the last bin closed at 1.0.
std::vector<BucketSummary> assign_buckets_width(const std::vector<ScoredPrediction>& preds,
                                                int bins);

// Equal-mass: sort ascending by (confidence, id); the first N mod M bins get
// ceil(N/M) predictions, the rest floor(N/M). Bounds are the min/max
// confidence inside each bin; empty bins get NaN bounds.
std::vector<BucketSummary> assign_buckets_mass(const std::vector<ScoredPrediction>& preds,
                                               int bins);

std::vector<BucketSummary> assign_buckets(const std::vector<ScoredPrediction>& preds,
                                          const BinningConfig& cfg);

// Sum over bins of (|B|/N) * |Acc(B) - Conf(B)|; empty bins contribute 0.
double ece(const std::vector<BucketSummary>& buckets);

struct IceTriple {
  double ice = 0.0;
  std::optional<double> ice_pos;  // mean 1 - confidence over correct predictions
  std::optional<double> ice_neg;  // mean confidence over wrong predictions
};

// Instance-level calibration error, summed in input order.
IceTriple ice(const std::vector<ScoredPrediction>& preds);

double macro_ce(double ice_pos, double ice_neg);

// Single-class logs have no MacroCE. NullWithFlag reports it as absent;
// UseDefinedSide falls back to the one defined component (for callers that
// need a scalar objective no matter what).
enum class DegeneratePolicy { NullWithFlag, UseDefinedSide };

std::optional<double> macro_ce_of(const IceTriple& t,
                                  DegeneratePolicy policy = DegeneratePolicy::NullWithFlag);

double brier(const std::vector<ScoredPrediction>& preds);

// Full report: accuracy, both ECE variants at M bins, the ICE triple,
// MacroCE (null + degenerate flag on single-class logs), Brier, both bin
// tables. Throws EmptyLog on an empty list.
CalibrationReport evaluate(const std::vector<ScoredPrediction>& preds, int bins = 10);

}  // namespace calikit
