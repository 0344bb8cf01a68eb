#include "calikit/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "calikit/error.hpp"
#include "calikit/rng.hpp"
#include "calikit/rounding.hpp"
#include "calikit/scoring.hpp"

namespace calikit {

namespace {

std::string make_id(std::int64_t i) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "q%07lld", static_cast<long long>(i + 1));
  return buf;
}

// exactly round(accuracy * n) true flags, order shuffled by the seed
std::vector<bool> correctness_flags(const GeneratorSpec& spec) {
  const std::int64_t n_correct =
      round_half_even(spec.accuracy * static_cast<double>(spec.n));
  std::vector<std::int64_t> idx(spec.n);
  for (std::int64_t i = 0; i < spec.n; ++i) idx[i] = i;
  Rng rng(derive_seed(spec.seed, "labels"));
  rng.shuffle(idx);
  std::vector<bool> flags(spec.n, false);
  for (std::int64_t i = 0; i < n_correct; ++i) flags[idx[i]] = true;
  return flags;
}

}  // namespace

std::vector<ScoredPrediction> generate_scored(const GeneratorSpec& spec) {
  if (spec.model == ConfidenceModel::OverconfidentLogits) {
    return score_log(generate_candidates(spec), ScoringScheme{SchemeMode::Joint, 1.0});
  }
  const std::vector<bool> flags = correctness_flags(spec);
  Rng rng(derive_seed(spec.seed, "conf"));
  const boost::math::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ScoredPrediction> out;
  out.reserve(spec.n);
  for (std::int64_t i = 0; i < spec.n; ++i) {
    ScoredPrediction p;
    p.id = make_id(i);
    p.correct = flags[i];
    const double u = rng.uniform_open();
    if (spec.model == ConfidenceModel::IndependentBeta) {
      p.confidence = boost::math::ibeta_inv(spec.beta_a, spec.beta_b, u);
    } else {
      const double mean = flags[i] ? spec.pos_mean : spec.neg_mean;
      p.confidence =
          std::clamp(mean + spec.noise * boost::math::quantile(normal, u), 0.0, 1.0);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<CandidateRecord> generate_candidates(const GeneratorSpec& spec) {
  if (spec.model != ConfidenceModel::OverconfidentLogits) {
    throw Error(ErrorKind::WrongConfidenceModel,
                "candidate generation needs the OverconfidentLogits model");
  }
  const std::vector<bool> flags = correctness_flags(spec);
  Rng rng(derive_seed(spec.seed, "logits"));
  std::vector<CandidateRecord> out;
  out.reserve(spec.n);
  for (std::int64_t i = 0; i < spec.n; ++i) {
    CandidateRecord rec;
    rec.id = make_id(i);
    for (int j = 0; j < spec.candidates; ++j) {
      // top candidate sits in [1, 1.5], the rest in [0, 0.9): strict max
      const double x = j == 0 ? 1.0 + 0.5 * rng.uniform() : 0.9 * rng.uniform();
      const double z = spec.sharpness * x;
      Candidate c;
      c.passage_rank = j;
      c.start = 0;
      c.end = 0;
      c.z_psg = 0.3 * z;
      c.z_start = 0.4 * z;
      c.z_end = 0.3 * z;
      c.correct = j == 0 && flags[i];
      rec.candidates.push_back(c);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace calikit
