#include "calikit/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <sstream>
#include <string>

#include "calikit/error.hpp"
#include "calikit/jsonl.hpp"
#include "calikit/rng.hpp"
#include "calikit/rounding.hpp"
#include "calikit/scoring.hpp"

namespace calikit {

namespace {

// Pick exactly need_pos correct and need_neg wrong indices, then shuffle.
std::vector<std::size_t> resample_indices(const std::vector<bool>& correct,
                                          const ResampleSpec& spec) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < correct.size(); ++i) (correct[i] ? pos : neg).push_back(i);
  const std::int64_t need_pos =
      round_half_even(spec.target_accuracy * static_cast<double>(spec.size));
  const std::int64_t need_neg = spec.size - need_pos;
  if (static_cast<std::int64_t>(pos.size()) < need_pos) {
    throw Error(ErrorKind::InsufficientClassMembers,
                "correct: have " + std::to_string(pos.size()) + ", need " +
                    std::to_string(need_pos));
  }
  if (static_cast<std::int64_t>(neg.size()) < need_neg) {
    throw Error(ErrorKind::InsufficientClassMembers,
                "wrong: have " + std::to_string(neg.size()) + ", need " +
                    std::to_string(need_neg));
  }
  Rng pos_rng(derive_seed(spec.seed, "resample-pos"));
  Rng neg_rng(derive_seed(spec.seed, "resample-neg"));
  pos_rng.shuffle(pos);
  neg_rng.shuffle(neg);
  std::vector<std::size_t> chosen(pos.begin(), pos.begin() + need_pos);
  chosen.insert(chosen.end(), neg.begin(), neg.begin() + need_neg);
  Rng order_rng(derive_seed(spec.seed, "resample-order"));
  order_rng.shuffle(chosen);
  return chosen;
}

}  // namespace

std::vector<ScoredPrediction> resample_to_accuracy(const std::vector<ScoredPrediction>& preds,
                                                   const ResampleSpec& spec) {
  if (preds.empty()) throw Error(ErrorKind::EmptyLog, "no predictions to resample");
  std::vector<bool> correct(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) correct[i] = preds[i].correct;
  std::vector<ScoredPrediction> out;
  out.reserve(spec.size);
  for (std::size_t i : resample_indices(correct, spec)) out.push_back(preds[i]);
  return out;
}

std::vector<CandidateRecord> resample_candidates(const std::vector<CandidateRecord>& recs,
                                                 SchemeMode mode, const ResampleSpec& spec) {
  if (recs.empty()) throw Error(ErrorKind::EmptyLog, "no records to resample");
  const std::vector<ScoredPrediction> scored = score_log(recs, ScoringScheme{mode, 1.0});
  std::vector<bool> correct(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) correct[i] = scored[i].correct;
  std::vector<CandidateRecord> out;
  out.reserve(spec.size);
  for (std::size_t i : resample_indices(correct, spec)) out.push_back(recs[i]);
  return out;
}

std::vector<LevelResult> run_accuracy_levels(const std::vector<ScoredPrediction>& preds,
                                             const std::vector<double>& levels,
                                             std::int64_t size, std::uint64_t seed, int bins) {
  std::vector<LevelResult> out;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    ResampleSpec spec{levels[i], size, derive_seed(seed, "levels-test", i)};
    LevelResult r;
    r.level = levels[i];
    r.before = evaluate(resample_to_accuracy(preds, spec), bins);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<LevelResult> run_accuracy_levels(const std::vector<CandidateRecord>& cands,
                                             SchemeMode mode, FitObjective objective,
                                             const std::vector<double>& levels,
                                             std::int64_t size, std::uint64_t seed, int bins) {
  std::vector<LevelResult> out;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    ResampleSpec dev_spec{levels[i], size, derive_seed(seed, "levels-dev", i)};
    ResampleSpec test_spec{levels[i], size, derive_seed(seed, "levels-test", i)};
    const std::vector<CandidateRecord> dev = resample_candidates(cands, mode, dev_spec);
    const std::vector<CandidateRecord> test = resample_candidates(cands, mode, test_spec);
    LevelResult r;
    r.level = levels[i];
    r.before = evaluate(score_log(test, ScoringScheme{mode, 1.0}), bins);
    r.fit = fit_temperature(dev, mode, objective, bins);
    r.after = evaluate(apply_temperature(test, *r.fit, mode), bins);
    out.push_back(std::move(r));
  }
  return out;
}

ShiftResult run_accuracy_shift(const std::vector<CandidateRecord>& dev_source,
                               const std::vector<CandidateRecord>& test_source,
                               SchemeMode mode, FitObjective objective, double dev_acc,
                               double test_acc, std::int64_t dev_size, std::int64_t test_size,
                               std::uint64_t seed, int bins) {
  const std::vector<CandidateRecord> dev = resample_candidates(
      dev_source, mode, ResampleSpec{dev_acc, dev_size, derive_seed(seed, "shift-dev")});
  const std::vector<CandidateRecord> test = resample_candidates(
      test_source, mode, ResampleSpec{test_acc, test_size, derive_seed(seed, "shift-test")});
  ShiftResult r;
  r.fit = fit_temperature(dev, mode, objective, bins);
  r.dev_before = evaluate(score_log(dev, ScoringScheme{mode, 1.0}), bins);
  r.dev_after = evaluate(apply_temperature(dev, r.fit, mode), bins);
  r.test_before = evaluate(score_log(test, ScoringScheme{mode, 1.0}), bins);
  r.test_after = evaluate(apply_temperature(test, r.fit, mode), bins);
  return r;
}

std::vector<SweepRow> temperature_sweep(const std::vector<CandidateRecord>& recs,
                                        const std::vector<double>& taus, SchemeMode mode,
                                        int bins) {
  if (recs.empty()) throw Error(ErrorKind::EmptyLog, "no records to sweep");
  std::vector<SweepRow> rows(taus.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(taus.size()); ++i) {
    const CalibrationReport rep =
        evaluate(score_log_serial(recs, ScoringScheme{mode, taus[i]}), bins);
    rows[i] = SweepRow{taus[i], rep.ece_width, rep.ice,
                       rep.ice_pos, rep.ice_neg, rep.macro_ce};
  }
  return rows;
}

std::vector<double> default_sweep_taus() {
  std::vector<double> taus;
  const double lo = std::log(0.1), hi = std::log(10.0);
  for (int i = 0; i < 20; ++i) taus.push_back(std::exp(lo + (hi - lo) * i / 19));
  return taus;
}

std::vector<BucketSummary> reliability_diagram(const std::vector<ScoredPrediction>& preds,
                                               int bins, BinningMode mode) {
  return assign_buckets(preds, BinningConfig{bins, mode});
}

namespace {

// CSV cells use the shortest representation that parses back exactly; the
// canonical 17-digit rendering stays reserved for the JSON documents.
std::string csv_real(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string opt_field(const std::optional<double>& v, double scale) {
  return v ? csv_real(*v * scale) : "";
}

// write_report output shifted right so it can sit inside a larger document
void nested_report(std::ostream& out, const CalibrationReport& rep, bool percent,
                   const std::string& pad) {
  std::ostringstream buf;
  write_report(buf, rep, percent);
  std::string s = buf.str();
  out << pad;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {  // skip the trailing newline
    out << s[i];
    if (s[i] == '\n') out << pad;
  }
}

}  // namespace

void write_diagram_csv(std::ostream& out, const std::vector<BucketSummary>& bins,
                       bool percent) {
  const double s = percent ? 100.0 : 1.0;
  out << "bin,lower,upper,count,conf_mean,acc,n_correct,n_wrong\n";
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const BucketSummary& b = bins[i];
    out << i << ',' << (std::isnan(b.lower) ? "" : csv_real(b.lower)) << ','
        << (std::isnan(b.upper) ? "" : csv_real(b.upper)) << ',' << b.count << ','
        << (b.count > 0 ? csv_real(b.mean_confidence() * s) : "") << ','
        << (b.count > 0 ? csv_real(b.accuracy() * s) : "") << ',' << b.correct_sum << ','
        << b.count - b.correct_sum << '\n';
  }
}

void write_levels_csv(std::ostream& out, const std::vector<LevelResult>& results,
                      bool percent) {
  const double s = percent ? 100.0 : 1.0;
  out << "level,phase,temp,ece,ice,macro_ce\n";
  for (const LevelResult& r : results) {
    out << csv_real(r.level) << ",before," << csv_real(1.0) << ','
        << csv_real(r.before.ece_width * s) << ',' << csv_real(r.before.ice * s) << ','
        << opt_field(r.before.macro_ce, s) << '\n';
    if (r.after) {
      out << csv_real(r.level) << ",after," << csv_real(r.fit->tau) << ','
          << csv_real(r.after->ece_width * s) << ',' << csv_real(r.after->ice * s)
          << ',' << opt_field(r.after->macro_ce, s) << '\n';
    }
  }
}

void write_shift_csv(std::ostream& out, const ShiftResult& r, bool percent) {
  const double s = percent ? 100.0 : 1.0;
  out << "split,phase,temp,ece,ice,macro_ce\n";
  auto row = [&](const char* split, const char* phase, double temp,
                 const CalibrationReport& rep) {
    out << split << ',' << phase << ',' << csv_real(temp) << ','
        << csv_real(rep.ece_width * s) << ',' << csv_real(rep.ice * s) << ','
        << opt_field(rep.macro_ce, s) << '\n';
  };
  row("dev", "before", 1.0, r.dev_before);
  row("dev", "after", r.fit.tau, r.dev_after);
  row("test", "before", 1.0, r.test_before);
  row("test", "after", r.fit.tau, r.test_after);
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool percent) {
  const double s = percent ? 100.0 : 1.0;
  out << "tau,ece,ice,ice_pos,ice_neg,macro_ce\n";
  for (const SweepRow& r : rows) {
    out << csv_real(r.tau) << ',' << csv_real(r.ece * s) << ','
        << csv_real(r.ice * s) << ',' << opt_field(r.ice_pos, s) << ','
        << opt_field(r.ice_neg, s) << ',' << opt_field(r.macro_ce, s) << '\n';
  }
}

void write_levels_json(std::ostream& out, const std::vector<LevelResult>& results,
                       bool percent) {
  out << "{\n  \"levels\": [";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const LevelResult& r = results[i];
    if (i) out << ',';
    out << "\n    {\n      \"level\": " << format_real(r.level) << ",\n";
    out << "      \"tau\": " << (r.fit ? format_real(r.fit->tau) : "null") << ",\n";
    out << "      \"before\":\n";
    nested_report(out, r.before, percent, "      ");
    out << ",\n      \"after\":";
    if (r.after) {
      out << "\n";
      nested_report(out, *r.after, percent, "      ");
    } else {
      out << " null";
    }
    out << "\n    }";
  }
  out << (results.empty() ? "]" : "\n  ]") << "\n}\n";
}

void write_shift_json(std::ostream& out, const ShiftResult& r, bool percent) {
  out << "{\n  \"tau\": " << format_real(r.fit.tau) << ",\n";
  out << "  \"at_bound\": " << (r.fit.at_bound ? "true" : "false") << ",\n";
  auto section = [&](const char* key, const CalibrationReport& rep, bool last) {
    out << "  \"" << key << "\":\n";
    nested_report(out, rep, percent, "  ");
    out << (last ? "\n" : ",\n");
  };
  section("dev_before", r.dev_before, false);
  section("dev_after", r.dev_after, false);
  section("test_before", r.test_before, false);
  section("test_after", r.test_after, true);
  out << "}\n";
}

void write_sweep_json(std::ostream& out, const std::vector<SweepRow>& rows, bool percent) {
  const double s = percent ? 100.0 : 1.0;
  out << "{\n  \"rows\": [";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& r = rows[i];
    if (i) out << ',';
    out << "\n    {\"tau\": " << format_real(r.tau) << ", \"ece\": " << format_real(r.ece * s)
        << ", \"ice\": " << format_real(r.ice * s) << ", \"ice_pos\": "
        << (r.ice_pos ? format_real(*r.ice_pos * s) : "null") << ", \"ice_neg\": "
        << (r.ice_neg ? format_real(*r.ice_neg * s) : "null") << ", \"macro_ce\": "
        << (r.macro_ce ? format_real(*r.macro_ce * s) : "null") << "}";
  }
  out << (rows.empty() ? "]" : "\n  ]") << "\n}\n";
}

}  // namespace calikit
