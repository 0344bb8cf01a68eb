#include "calikit/scoring.hpp"

#include <cmath>
#include <cstddef>

#include "calikit/error.hpp"
#include "calikit/stable_sum.hpp"

namespace calikit {

double joint_raw_score(const Candidate& c) { return c.z_start + c.z_end + c.z_psg; }

CandidateRecord pipeline_filter(const CandidateRecord& rec) {
  int best_rank = 0;
  double best_z = 0.0;
  bool have = false;
  for (const Candidate& c : rec.candidates) {
    if (!have || c.z_psg > best_z || (c.z_psg == best_z && c.passage_rank < best_rank)) {
      best_z = c.z_psg;
      best_rank = c.passage_rank;
      have = true;
    }
  }
  CandidateRecord out;
  out.id = rec.id;
  for (const Candidate& c : rec.candidates) {
    if (c.passage_rank == best_rank && c.z_psg == best_z) out.candidates.push_back(c);
  }
  return out;
}

std::vector<double> softmax_confidence(const std::vector<double>& raw_scores,
                                       double temperature) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorKind::NonPositiveTemperature, "temperature must be > 0");
  }
  double zmax = raw_scores[0];
  for (double z : raw_scores) {
    if (z > zmax) zmax = z;
  }
  std::vector<double> out(raw_scores.size());
  StableSum denom;
  for (std::size_t i = 0; i < raw_scores.size(); ++i) {
    out[i] = std::exp((raw_scores[i] - zmax) / temperature);
    denom.add(out[i]);
  }
  const double d = denom.value();
  for (double& v : out) v /= d;
  return out;
}

ScoredPrediction score_record(const CandidateRecord& rec, const ScoringScheme& scheme) {
  const CandidateRecord* src = &rec;
  CandidateRecord filtered;
  if (scheme.mode == SchemeMode::Pipeline) {
    filtered = pipeline_filter(rec);
    src = &filtered;
  }
  std::vector<double> raw(src->candidates.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const Candidate& c = src->candidates[i];
    raw[i] = scheme.mode == SchemeMode::Joint ? joint_raw_score(c) : c.z_start + c.z_end;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < raw.size(); ++i) {
    if (raw[i] > raw[best]) best = i;
  }
  std::vector<double> conf = softmax_confidence(raw, scheme.temperature);
  ScoredPrediction p;
  p.id = src->id;
  p.confidence = conf[best];
  p.correct = src->candidates[best].correct;
  p.answer = src->candidates[best].answer;
  return p;
}

std::vector<ScoredPrediction> score_log(const std::vector<CandidateRecord>& recs,
                                        const ScoringScheme& scheme) {
  std::vector<ScoredPrediction> out(recs.size());
  // Each slot is written by exactly one iteration, so the result is identical
  // to the serial loop for any thread count.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(recs.size()); ++i) {
    out[i] = score_record(recs[i], scheme);
  }
  return out;
}

std::vector<ScoredPrediction> score_log_serial(const std::vector<CandidateRecord>& recs,
                                               const ScoringScheme& scheme) {
  std::vector<ScoredPrediction> out(recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) out[i] = score_record(recs[i], scheme);
  return out;
}

}  // namespace calikit
