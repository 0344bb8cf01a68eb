#include "calikit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>

#include "calikit/error.hpp"
#include "calikit/stable_sum.hpp"

namespace calikit {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

void require_nonempty(const std::vector<ScoredPrediction>& preds) {
  if (preds.empty()) throw Error(ErrorKind::EmptyLog, "no predictions");
}

}  // namespace

std::vector<BucketSummary> assign_buckets_width(const std::vector<ScoredPrediction>& preds,
                                                int bins) {
  require_nonempty(preds);
  std::vector<BucketSummary> out(bins);
  for (int m = 0; m < bins; ++m) {
    out[m].lower = static_cast<double>(m) / bins;
    out[m].upper = m + 1 == bins ? 1.0 : static_cast<double>(m + 1) / bins;
  }
  std::vector<StableSum> conf(bins);
  for (const ScoredPrediction& p : preds) {
    int m = std::min(static_cast<int>(p.confidence * bins), bins - 1);
    out[m].count += 1;
    conf[m].add(p.confidence);
    out[m].correct_sum += p.correct ? 1 : 0;
  }
  for (int m = 0; m < bins; ++m) out[m].conf_sum = conf[m].value();
  return out;
}

std::vector<BucketSummary> assign_buckets_mass(const std::vector<ScoredPrediction>& preds,
                                               int bins) {
  require_nonempty(preds);
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (preds[a].confidence != preds[b].confidence) {
      return preds[a].confidence < preds[b].confidence;
    }
    return preds[a].id < preds[b].id;
  });
  const std::size_t n = preds.size();
  const std::size_t q = n / bins;
  const std::size_t r = n % bins;
  std::vector<BucketSummary> out(bins);
  std::size_t pos = 0;
  for (int m = 0; m < bins; ++m) {
    const std::size_t size = q + (static_cast<std::size_t>(m) < r ? 1 : 0);
    BucketSummary& b = out[m];
    if (size == 0) {
      b.lower = b.upper = std::nan("");
      continue;
    }
    b.lower = preds[order[pos]].confidence;
    b.upper = preds[order[pos + size - 1]].confidence;
    StableSum conf;
    for (std::size_t i = 0; i < size; ++i) {
      const ScoredPrediction& p = preds[order[pos + i]];
      conf.add(p.confidence);
      b.correct_sum += p.correct ? 1 : 0;
    }
    b.count = static_cast<std::int64_t>(size);
    b.conf_sum = conf.value();
    pos += size;
  }
  return out;
}

std::vector<BucketSummary> assign_buckets(const std::vector<ScoredPrediction>& preds,
                                          const BinningConfig& cfg) {
  return cfg.mode == BinningMode::EqualWidth ? assign_buckets_width(preds, cfg.bins)
                                             : assign_buckets_mass(preds, cfg.bins);
}

double ece(const std::vector<BucketSummary>& buckets) {
  std::int64_t n = 0;
  for (const BucketSummary& b : buckets) n += b.count;
  if (n == 0) throw Error(ErrorKind::EmptyLog, "no predictions in any bucket");
  StableSum sum;
  for (const BucketSummary& b : buckets) {
    if (b.count == 0) continue;
    const double weight = static_cast<double>(b.count) / static_cast<double>(n);
    sum.add(weight * std::fabs(b.accuracy() - b.mean_confidence()));
  }
  return clamp01(sum.value());
}

IceTriple ice(const std::vector<ScoredPrediction>& preds) {
  require_nonempty(preds);
  StableSum total, pos, neg;
  std::int64_t n_pos = 0, n_neg = 0;
  for (const ScoredPrediction& p : preds) {
    if (p.correct) {
      total.add(1.0 - p.confidence);
      pos.add(1.0 - p.confidence);
      ++n_pos;
    } else {
      total.add(p.confidence);
      neg.add(p.confidence);
      ++n_neg;
    }
  }
  IceTriple t;
  t.ice = clamp01(total.value() / static_cast<double>(preds.size()));
  if (n_pos > 0) t.ice_pos = clamp01(pos.value() / static_cast<double>(n_pos));
  if (n_neg > 0) t.ice_neg = clamp01(neg.value() / static_cast<double>(n_neg));
  return t;
}

double macro_ce(double ice_pos, double ice_neg) { return 0.5 * (ice_pos + ice_neg); }

std::optional<double> macro_ce_of(const IceTriple& t, DegeneratePolicy policy) {
  if (t.ice_pos && t.ice_neg) return macro_ce(*t.ice_pos, *t.ice_neg);
  if (policy == DegeneratePolicy::UseDefinedSide) {
    if (t.ice_pos) return *t.ice_pos;
    if (t.ice_neg) return *t.ice_neg;
  }
  return std::nullopt;
}

double brier(const std::vector<ScoredPrediction>& preds) {
  require_nonempty(preds);
  StableSum sum;
  for (const ScoredPrediction& p : preds) {
    const double d = (p.correct ? 1.0 : 0.0) - p.confidence;
    sum.add(d * d);
  }
  return clamp01(sum.value() / static_cast<double>(preds.size()));
}

CalibrationReport evaluate(const std::vector<ScoredPrediction>& preds, int bins) {
  require_nonempty(preds);
  CalibrationReport r;
  r.n = static_cast<std::int64_t>(preds.size());
  std::int64_t n_correct = 0;
  for (const ScoredPrediction& p : preds) n_correct += p.correct ? 1 : 0;
  r.accuracy = static_cast<double>(n_correct) / static_cast<double>(r.n);
  r.bins_width = assign_buckets_width(preds, bins);
  r.bins_mass = assign_buckets_mass(preds, bins);
  r.ece_width = ece(r.bins_width);
  r.ece_mass = ece(r.bins_mass);
  IceTriple t = ice(preds);
  r.ice = t.ice;
  r.ice_pos = t.ice_pos;
  r.ice_neg = t.ice_neg;
  r.macro_ce = macro_ce_of(t);
  if (!t.ice_neg) r.degenerate_flags.push_back("no_negatives");
  if (!t.ice_pos) r.degenerate_flags.push_back("no_positives");
  r.brier = brier(preds);
  return r;
}

}  // namespace calikit
