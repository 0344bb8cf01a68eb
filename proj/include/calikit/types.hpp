#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace calikit {

// One final prediction with a probabilistic confidence and its exact-match
// correctness. The universal input of all metric computations.
struct ScoredPrediction {
  std::string id;
  double confidence = 0.0;  // in [0,1]
  bool correct = false;
  std::optional<std::string> answer;

  bool operator==(const ScoredPrediction&) const = default;
};

// One candidate answer span with the reader's three raw logits.
struct Candidate {
  int passage_rank = 0;  // retrieval rank, >= 0
  int start = 0;
  int end = 0;  // end >= start
  double z_psg = 0.0;
  double z_start = 0.0;
  double z_end = 0.0;
  bool correct = false;
  std::optional<std::string> answer;

  bool operator==(const Candidate&) const = default;
};

// A question's candidate set, ordered as exported.
struct CandidateRecord {
  std::string id;
  std::vector<Candidate> candidates;  // nonempty

  bool operator==(const CandidateRecord&) const = default;
};

// Answer strings of N training checkpoints, earliest to latest. The final
// prediction is the last element; final_correct is its correctness.
struct CheckpointTrace {
  std::string id;
  std::vector<std::string> checkpoint_answers;  // length N >= 1
  bool final_correct = false;

  bool operator==(const CheckpointTrace&) const = default;
};

// Fixed-length feature vector with a correctness label.
struct FeatureRecord {
  std::string id;
  std::vector<double> features;
  bool correct = false;

  bool operator==(const FeatureRecord&) const = default;
};

// One confidence bin. For equal-width binning lower/upper are the bin edges;
// for equal-mass binning they are the min/max confidence inside the bin and
// are NaN for empty bins.
struct BucketSummary {
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t count = 0;
  double conf_sum = 0.0;
  std::int64_t correct_sum = 0;

  double mean_confidence() const { return conf_sum / static_cast<double>(count); }
  double accuracy() const { return static_cast<double>(correct_sum) / static_cast<double>(count); }
};

inline bool bucket_equal(const BucketSummary& a, const BucketSummary& b) {
  auto feq = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
  return feq(a.lower, b.lower) && feq(a.upper, b.upper) && a.count == b.count &&
         feq(a.conf_sum, b.conf_sum) && a.correct_sum == b.correct_sum;
}

// All metrics plus both bin tables for one evaluated log. Optional metrics
// are absent when the log is single-class (see degenerate_flags).
struct CalibrationReport {
  std::int64_t n = 0;
  double accuracy = 0.0;
  double ece_width = 0.0;
  double ece_mass = 0.0;
  double ice = 0.0;
  std::optional<double> ice_pos;
  std::optional<double> ice_neg;
  std::optional<double> macro_ce;
  double brier = 0.0;
  std::vector<BucketSummary> bins_width;
  std::vector<BucketSummary> bins_mass;
  std::vector<std::string> degenerate_flags;
};

bool report_equal(const CalibrationReport& a, const CalibrationReport& b);

}  // namespace calikit
