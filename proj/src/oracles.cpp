#include "calikit/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <tuple>

#include "calikit/error.hpp"

namespace calikit {

namespace {

double width_bin_ece(const std::vector<ScoredPrediction>& preds, int bins) {
  const double n = static_cast<double>(preds.size());
  double total = 0.0;
  for (int m = 0; m < bins; ++m) {
    const double lower = static_cast<double>(m) / bins;
    const double upper = static_cast<double>(m + 1) / bins;
    long count = 0, correct = 0;
    double conf = 0.0;
    for (const ScoredPrediction& p : preds) {
      const bool member = m + 1 == bins ? p.confidence >= lower
                                        : p.confidence >= lower && p.confidence < upper;
      if (!member) continue;
      ++count;
      conf += p.confidence;
      if (p.correct) ++correct;
    }
    if (count == 0) continue;
    total += (count / n) * std::fabs(static_cast<double>(correct) / count - conf / count);
  }
  return total;
}

double mass_bin_ece(const std::vector<ScoredPrediction>& preds, int bins) {
  std::vector<std::tuple<double, std::string, bool>> sorted;
  for (const ScoredPrediction& p : preds) sorted.push_back({p.confidence, p.id, p.correct});
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const std::size_t base = n / bins;
  const std::size_t extra = n % bins;
  double total = 0.0;
  std::size_t at = 0;
  for (int m = 0; m < bins; ++m) {
    const std::size_t count = base + (static_cast<std::size_t>(m) < extra ? 1 : 0);
    if (count == 0) continue;
    double conf = 0.0;
    long correct = 0;
    for (std::size_t i = at; i < at + count; ++i) {
      conf += std::get<0>(sorted[i]);
      if (std::get<2>(sorted[i])) ++correct;
    }
    at += count;
    total += (static_cast<double>(count) / n) *
             std::fabs(static_cast<double>(correct) / count - conf / count);
  }
  return total;
}

}  // namespace

double oracle_ece(const std::vector<ScoredPrediction>& preds, int bins, BinningMode mode) {
  if (preds.empty()) throw Error(ErrorKind::EmptyLog, "oracle on empty log");
  return mode == BinningMode::EqualWidth ? width_bin_ece(preds, bins)
                                         : mass_bin_ece(preds, bins);
}

OracleIce oracle_ice(const std::vector<ScoredPrediction>& preds) {
  if (preds.empty()) throw Error(ErrorKind::EmptyLog, "oracle on empty log");
  OracleIce r;
  double total = 0.0;
  for (const ScoredPrediction& p : preds) {
    total += std::fabs((p.correct ? 1.0 : 0.0) - p.confidence);
  }
  r.ice = total / static_cast<double>(preds.size());
  double pos = 0.0, neg = 0.0;
  long n_pos = 0, n_neg = 0;
  for (const ScoredPrediction& p : preds) {
    if (p.correct) {
      pos += 1.0 - p.confidence;
      ++n_pos;
    } else {
      neg += p.confidence;
      ++n_neg;
    }
  }
  if (n_pos) r.ice_pos = pos / n_pos;
  if (n_neg) r.ice_neg = neg / n_neg;
  return r;
}

std::optional<double> oracle_macro_ce(const std::vector<ScoredPrediction>& preds) {
  OracleIce r = oracle_ice(preds);
  if (!r.ice_pos || !r.ice_neg) return std::nullopt;
  return (*r.ice_pos + *r.ice_neg) / 2.0;
}

double oracle_brier(const std::vector<ScoredPrediction>& preds) {
  if (preds.empty()) throw Error(ErrorKind::EmptyLog, "oracle on empty log");
  double total = 0.0;
  for (const ScoredPrediction& p : preds) {
    const double d = (p.correct ? 1.0 : 0.0) - p.confidence;
    total += d * d;
  }
  return total / static_cast<double>(preds.size());
}

std::vector<double> oracle_softmax(const std::vector<double>& scores, double temperature) {
  long double zmax = scores[0];
  for (double z : scores) {
    if (z > zmax) zmax = z;
  }
  long double denom = 0.0L;
  std::vector<long double> e(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    e[i] = expl((static_cast<long double>(scores[i]) - zmax) /
                static_cast<long double>(temperature));
    denom += e[i];
  }
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = static_cast<double>(e[i] / denom);
  }
  return out;
}

}  // namespace calikit
