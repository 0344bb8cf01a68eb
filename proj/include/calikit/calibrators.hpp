#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "calikit/scoring.hpp"
#include "calikit/types.hpp"

namespace calikit {

enum class FitObjective { DevECE, NLL };

struct TemperatureFit {
  double tau = 1.0;          // within the search bounds [0.01, 10.0]
  double dev_objective = 0.0;  // objective value at tau on the dev set
  FitObjective objective = FitObjective::DevECE;
  int bins = 10;             // M used by the DevECE objective
  SchemeMode mode = SchemeMode::Joint;
  bool at_bound = false;     // tau landed on a search boundary
};

// Grid search over 200 log-uniform temperatures in [0.01, 10.0] (plus a
// forced tau = 1.0, so fitting can never beat doing nothing and lose), then
// golden-section refinement between the best point's grid neighbours.
// Ties go to the smallest tau. Objective: equal-width dev ECE at `bins`,
// or mean negative log-likelihood of the predicted candidate.
TemperatureFit fit_temperature(const std::vector<CandidateRecord>& dev, SchemeMode mode,
                               FitObjective objective, int bins);

// score_log with (mode, fit.tau). Prediction per record is identical to
// tau = 1 scoring, so accuracy is untouched.
std::vector<ScoredPrediction> apply_temperature(const std::vector<CandidateRecord>& test,
                                                const TemperatureFit& fit, SchemeMode mode);

void write_temperature_fit(std::ostream& out, const TemperatureFit& fit);
TemperatureFit parse_temperature_fit(std::istream& in);

// Top round(dev_accuracy * |test|) test predictions by confidence get
// confidence 1, the rest 0. Ties at the cut go to the smaller id.
std::vector<ScoredPrediction> binary_baseline(const std::vector<ScoredPrediction>& dev,
                                              const std::vector<ScoredPrediction>& test);

// Every test confidence becomes the dev accuracy.
std::vector<ScoredPrediction> average_baseline(const std::vector<ScoredPrediction>& dev,
                                               const std::vector<ScoredPrediction>& test);

// Every confidence becomes an independent uniform [0,1) draw; same seed,
// same output.
std::vector<ScoredPrediction> random_baseline(const std::vector<ScoredPrediction>& test,
                                              std::uint64_t seed);

enum class ConsCalMode { Binary, Frequency, Classifier };

struct ConsCalConfig {
  ConsCalMode mode = ConsCalMode::Binary;
  // Binary threshold n: confidence 1 iff k > n, where k counts checkpoints
  // agreeing with the final answer. Absent = Auto (pick the n in [0, N-1]
  // minimizing dev MacroCE; ties go to the largest n).
  std::optional<int> threshold;
  std::uint64_t seed = 42;  // classifier training only
};

// Consistency-based confidence from checkpoint agreement. Classifier and
// Auto-threshold modes need dev traces with the same checkpoint count.
std::vector<ScoredPrediction> conscal(const std::vector<CheckpointTrace>& traces,
                                      const ConsCalConfig& cfg,
                                      const std::vector<CheckpointTrace>* dev = nullptr);

// Threshold the Auto mode would pick for these dev traces.
int conscal_auto_threshold(const std::vector<CheckpointTrace>& dev);

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> feature_means;
  std::vector<double> feature_stds;  // > 0; zero-variance features get 1 and weight 0
  int epochs = 0;
  double final_validation_loss = 0.0;
};

// From-scratch L2-regularized logistic regression: balanced downsampling,
// seeded class-stratified 10% validation hold-out (at least 2 records,
// half per class), standardization,
// full-batch gradient descent (base lr 0.1, halved whenever a step would
// increase the training loss), early stop after 10 epochs without a 1e-6
// validation improvement, best-validation weights returned.
LogisticModel fit_logistic(const std::vector<FeatureRecord>& train, std::uint64_t seed);

// sigmoid(w . standardize(x) + bias)
double predict_logistic(const LogisticModel& model, const FeatureRecord& rec);

std::vector<ScoredPrediction> apply_logistic(const LogisticModel& model,
                                             const std::vector<FeatureRecord>& recs);

void write_logistic_model(std::ostream& out, const LogisticModel& model);
LogisticModel parse_logistic_model(std::istream& in);

}  // namespace calikit
