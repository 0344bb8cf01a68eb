#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "calikit/calibrators.hpp"
#include "calikit/metrics.hpp"
#include "calikit/types.hpp"

namespace calikit {

struct ResampleSpec {
  double target_accuracy = 0.5;  // in (0,1)
  std::int64_t size = 2;
  std::uint64_t seed = 42;
};

// Seeded sampling without replacement hitting round(target * size) correct
// records exactly; the output order is itself a seeded shuffle. Throws
// InsufficientClassMembers when a class cannot supply its share.
std::vector<ScoredPrediction> resample_to_accuracy(const std::vector<ScoredPrediction>& preds,
                                                   const ResampleSpec& spec);

// Same procedure for candidate logs; a record counts as correct when its
// predicted candidate (mode, any temperature) is correct.
std::vector<CandidateRecord> resample_candidates(const std::vector<CandidateRecord>& recs,
                                                 SchemeMode mode, const ResampleSpec& spec);

struct LevelResult {
  double level = 0.0;
  CalibrationReport before;             // test resample scored at tau = 1
  std::optional<TemperatureFit> fit;    // present when fitting ran
  std::optional<CalibrationReport> after;
};

// Accuracy-level study: per level, resample dev and test with distinct
// derived seeds and evaluate. The candidate-log overload also fits a
// temperature on the resampled dev and reports the test metrics after
// applying it.
std::vector<LevelResult> run_accuracy_levels(const std::vector<ScoredPrediction>& preds,
                                             const std::vector<double>& levels,
                                             std::int64_t size, std::uint64_t seed, int bins);
std::vector<LevelResult> run_accuracy_levels(const std::vector<CandidateRecord>& cands,
                                             SchemeMode mode, FitObjective objective,
                                             const std::vector<double>& levels,
                                             std::int64_t size, std::uint64_t seed, int bins);

struct ShiftResult {
  TemperatureFit fit;  // fitted on the resampled dev
  CalibrationReport dev_before;
  CalibrationReport dev_after;
  CalibrationReport test_before;
  CalibrationReport test_after;
};

// Dev->test accuracy-shift study: resample dev to dev_acc and test to
// test_acc, fit on dev, report both splits before and after scaling.
ShiftResult run_accuracy_shift(const std::vector<CandidateRecord>& dev_source,
                               const std::vector<CandidateRecord>& test_source,
                               SchemeMode mode, FitObjective objective, double dev_acc,
                               double test_acc, std::int64_t dev_size, std::int64_t test_size,
                               std::uint64_t seed, int bins);

struct SweepRow {
  double tau = 1.0;
  double ece = 0.0;  // equal-width at the configured bins
  double ice = 0.0;
  std::optional<double> ice_pos;
  std::optional<double> ice_neg;
  std::optional<double> macro_ce;
};

// Rescore and evaluate the log at each temperature; rows in input tau order.
std::vector<SweepRow> temperature_sweep(const std::vector<CandidateRecord>& recs,
                                        const std::vector<double>& taus, SchemeMode mode,
                                        int bins);

// 20 log-spaced temperatures in [0.1, 10].
std::vector<double> default_sweep_taus();

std::vector<BucketSummary> reliability_diagram(const std::vector<ScoredPrediction>& preds,
                                               int bins, BinningMode mode);

// CSV emitters. `percent` scales metric columns by 100, mirroring the
// report writer. Empty bins render empty conf_mean/acc fields.
void write_diagram_csv(std::ostream& out, const std::vector<BucketSummary>& bins,
                       bool percent = false);
void write_levels_csv(std::ostream& out, const std::vector<LevelResult>& results,
                      bool percent = false);
void write_shift_csv(std::ostream& out, const ShiftResult& result, bool percent = false);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                     bool percent = false);

// JSON emitters with full nested reports.
void write_levels_json(std::ostream& out, const std::vector<LevelResult>& results,
                       bool percent = false);
void write_shift_json(std::ostream& out, const ShiftResult& result, bool percent = false);
void write_sweep_json(std::ostream& out, const std::vector<SweepRow>& rows,
                      bool percent = false);

}  // namespace calikit
