#pragma once

#include <vector>

#include "calikit/types.hpp"

namespace calikit {

enum class SchemeMode { Joint, Pipeline };

// Joint scores every candidate by z_start + z_end + z_psg and softmaxes over
// the whole set. Pipeline first keeps only the best passage's candidates and
// softmaxes over z_start + z_end (the shared z_psg cancels).
struct ScoringScheme {
  SchemeMode mode = SchemeMode::Joint;
  double temperature = 1.0;  // > 0
};

double joint_raw_score(const Candidate& c);

// Keeps only candidates from the argmax-z_psg passage; ties go to the
// smallest passage_rank. Candidate order is preserved.
CandidateRecord pipeline_filter(const CandidateRecord& rec);

// Max-subtracted softmax of scores/temperature. Entries sum to 1 and lie in
// (0, 1]. Throws NonPositiveTemperature.
std::vector<double> softmax_confidence(const std::vector<double>& raw_scores,
                                       double temperature);

// The prediction is the argmax raw-score candidate (first wins on ties) and
// is independent of the temperature, which only rescales the confidence.
ScoredPrediction score_record(const CandidateRecord& rec, const ScoringScheme& scheme);

// Elementwise score_record, output in input order. score_log may fan records
// out across threads; score_log_serial is the plain loop kept as a reference.
// Both produce identical results.
std::vector<ScoredPrediction> score_log(const std::vector<CandidateRecord>& recs,
                                        const ScoringScheme& scheme);
std::vector<ScoredPrediction> score_log_serial(const std::vector<CandidateRecord>& recs,
                                               const ScoringScheme& scheme);

}  // namespace calikit
