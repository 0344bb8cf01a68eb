#include "calikit/jsonl.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_set>

#include <json.hpp>

#include "calikit/error.hpp"

namespace calikit {

using nlohmann::json;

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::ConfidenceOutOfRange: return "ConfidenceOutOfRange";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::EmptyLog: return "EmptyLog";
    case ErrorKind::EmptyCandidates: return "EmptyCandidates";
    case ErrorKind::DuplicateCandidate: return "DuplicateCandidate";
    case ErrorKind::TooManyCandidates: return "TooManyCandidates";
    case ErrorKind::InconsistentCheckpointCount: return "InconsistentCheckpointCount";
    case ErrorKind::EmptyTrace: return "EmptyTrace";
    case ErrorKind::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorKind::DegenerateClass: return "DegenerateClass";
    case ErrorKind::MissingDevSet: return "MissingDevSet";
    case ErrorKind::InsufficientClassMembers: return "InsufficientClassMembers";
    case ErrorKind::SingleClassTrainingSet: return "SingleClassTrainingSet";
    case ErrorKind::TooFewRecords: return "TooFewRecords";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::WrongConfidenceModel: return "WrongConfidenceModel";
  }
  return "Error";
}

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

[[noreturn]] void malformed(int line_no, const std::string& what) {
  throw Error(ErrorKind::MalformedLine, "line " + std::to_string(line_no) + ": " + what);
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r") == std::string::npos;
}

// Iterates the JSONL stream, invoking fn(line_no, parsed_object).
template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {  // parse errors and number overflow alike
      malformed(line_no, e.what());
    }
    if (!obj.is_object()) malformed(line_no, "expected a JSON object");
    fn(line_no, obj);
  }
}

std::string require_id(const json& obj, int line_no) {
  if (!obj.contains("id") || !obj["id"].is_string()) malformed(line_no, "missing string field 'id'");
  std::string id = obj["id"].get<std::string>();
  if (id.empty()) malformed(line_no, "empty id");
  return id;
}

double require_number(const json& obj, const char* key, int line_no) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    malformed(line_no, std::string("missing numeric field '") + key + "'");
  }
  return obj[key].get<double>();
}

bool require_bool(const json& obj, const char* key, int line_no) {
  if (!obj.contains(key) || !obj[key].is_boolean()) {
    malformed(line_no, std::string("missing boolean field '") + key + "'");
  }
  return obj[key].get<bool>();
}

int require_int(const json& obj, const char* key, int line_no) {
  if (!obj.contains(key) || !obj[key].is_number_integer()) {
    malformed(line_no, std::string("missing integer field '") + key + "'");
  }
  return obj[key].get<int>();
}

std::optional<std::string> optional_answer(const json& obj, int line_no) {
  if (!obj.contains("answer") || obj["answer"].is_null()) return std::nullopt;
  if (!obj["answer"].is_string()) malformed(line_no, "'answer' must be a string or null");
  return obj["answer"].get<std::string>();
}

std::string quote(const std::string& s) { return json(s).dump(); }

std::string render_answer(const std::optional<std::string>& a) {
  return a ? quote(*a) : "null";
}

}  // namespace

std::vector<ScoredPrediction> parse_scored_log(std::istream& in, const ParseOptions& opts) {
  std::vector<ScoredPrediction> out;
  std::unordered_set<std::string> seen;
  for_each_line(in, [&](int line_no, const json& obj) {
    ScoredPrediction p;
    p.id = require_id(obj, line_no);
    if (!seen.insert(p.id).second) throw Error(ErrorKind::DuplicateId, p.id);
    double c = require_number(obj, "confidence", line_no);
    if (c < 0.0 || c > 1.0) {
      double violation = c < 0.0 ? -c : c - 1.0;
      if (!(violation <= opts.clamp_tolerance)) throw Error(ErrorKind::ConfidenceOutOfRange, p.id);
      c = c < 0.0 ? 0.0 : 1.0;
    }
    p.confidence = c;
    p.correct = require_bool(obj, "correct", line_no);
    p.answer = optional_answer(obj, line_no);
    out.push_back(std::move(p));
  });
  if (out.empty()) throw Error(ErrorKind::EmptyLog, "scored log has no records");
  return out;
}

std::vector<CandidateRecord> parse_candidate_log(std::istream& in, const ParseOptions& opts) {
  std::vector<CandidateRecord> out;
  std::unordered_set<std::string> seen;
  for_each_line(in, [&](int line_no, const json& obj) {
    CandidateRecord rec;
    rec.id = require_id(obj, line_no);
    if (!seen.insert(rec.id).second) throw Error(ErrorKind::DuplicateId, rec.id);
    if (!obj.contains("candidates") || !obj["candidates"].is_array()) {
      malformed(line_no, "missing array field 'candidates'");
    }
    const json& arr = obj["candidates"];
    if (arr.empty()) throw Error(ErrorKind::EmptyCandidates, rec.id);
    if (static_cast<int>(arr.size()) > opts.max_candidates) {
      throw Error(ErrorKind::TooManyCandidates,
                  rec.id + " has " + std::to_string(arr.size()) + " candidates (max " +
                      std::to_string(opts.max_candidates) + ")");
    }
    std::set<std::tuple<int, int, int>> spans;
    for (const json& cj : arr) {
      if (!cj.is_object()) malformed(line_no, "candidate entries must be objects");
      Candidate c;
      c.passage_rank = require_int(cj, "passage_rank", line_no);
      c.start = require_int(cj, "start", line_no);
      c.end = require_int(cj, "end", line_no);
      if (c.passage_rank < 0) malformed(line_no, "negative passage_rank");
      if (c.end < c.start) malformed(line_no, "span end < start");
      c.z_psg = require_number(cj, "z_psg", line_no);
      c.z_start = require_number(cj, "z_start", line_no);
      c.z_end = require_number(cj, "z_end", line_no);
      if (!std::isfinite(c.z_psg) || !std::isfinite(c.z_start) || !std::isfinite(c.z_end)) {
        malformed(line_no, "non-finite logit");
      }
      c.correct = require_bool(cj, "correct", line_no);
      c.answer = optional_answer(cj, line_no);
      if (!spans.insert({c.passage_rank, c.start, c.end}).second) {
        throw Error(ErrorKind::DuplicateCandidate, rec.id);
      }
      rec.candidates.push_back(std::move(c));
    }
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<CheckpointTrace> parse_trace_log(std::istream& in) {
  std::vector<CheckpointTrace> out;
  std::unordered_set<std::string> seen;
  std::size_t expected_n = 0;
  for_each_line(in, [&](int line_no, const json& obj) {
    CheckpointTrace t;
    t.id = require_id(obj, line_no);
    if (!seen.insert(t.id).second) throw Error(ErrorKind::DuplicateId, t.id);
    if (!obj.contains("checkpoint_answers") || !obj["checkpoint_answers"].is_array()) {
      malformed(line_no, "missing array field 'checkpoint_answers'");
    }
    for (const json& a : obj["checkpoint_answers"]) {
      if (!a.is_string()) malformed(line_no, "checkpoint answers must be strings");
      t.checkpoint_answers.push_back(a.get<std::string>());
    }
    if (t.checkpoint_answers.empty()) throw Error(ErrorKind::EmptyTrace, t.id);
    if (out.empty()) {
      expected_n = t.checkpoint_answers.size();
    } else if (t.checkpoint_answers.size() != expected_n) {
      throw Error(ErrorKind::InconsistentCheckpointCount,
                  t.id + ": expected " + std::to_string(expected_n) + ", got " +
                      std::to_string(t.checkpoint_answers.size()));
    }
    t.final_correct = require_bool(obj, "final_correct", line_no);
    out.push_back(std::move(t));
  });
  return out;
}

std::vector<FeatureRecord> parse_feature_log(std::istream& in) {
  std::vector<FeatureRecord> out;
  std::unordered_set<std::string> seen;
  std::size_t expected_d = 0;
  for_each_line(in, [&](int line_no, const json& obj) {
    FeatureRecord r;
    r.id = require_id(obj, line_no);
    if (!seen.insert(r.id).second) throw Error(ErrorKind::DuplicateId, r.id);
    if (!obj.contains("features") || !obj["features"].is_array()) {
      malformed(line_no, "missing array field 'features'");
    }
    for (const json& f : obj["features"]) {
      if (!f.is_number()) malformed(line_no, "feature entries must be numbers");
      double v = f.get<double>();
      if (!std::isfinite(v)) malformed(line_no, "non-finite feature");
      r.features.push_back(v);
    }
    if (r.features.empty()) malformed(line_no, "empty feature vector");
    if (out.empty()) {
      expected_d = r.features.size();
    } else if (r.features.size() != expected_d) {
      throw Error(ErrorKind::DimensionMismatch,
                  r.id + ": expected " + std::to_string(expected_d) + " features, got " +
                      std::to_string(r.features.size()));
    }
    r.correct = require_bool(obj, "correct", line_no);
    out.push_back(std::move(r));
  });
  return out;
}

void write_scored_log(std::ostream& out, const std::vector<ScoredPrediction>& preds) {
  for (const ScoredPrediction& p : preds) {
    out << "{\"id\": " << quote(p.id) << ", \"confidence\": " << format_real(p.confidence)
        << ", \"correct\": " << (p.correct ? "true" : "false")
        << ", \"answer\": " << render_answer(p.answer) << "}\n";
  }
}

void write_candidate_log(std::ostream& out, const std::vector<CandidateRecord>& recs) {
  for (const CandidateRecord& rec : recs) {
    out << "{\"id\": " << quote(rec.id) << ", \"candidates\": [";
    for (std::size_t i = 0; i < rec.candidates.size(); ++i) {
      const Candidate& c = rec.candidates[i];
      if (i) out << ", ";
      out << "{\"passage_rank\": " << c.passage_rank << ", \"start\": " << c.start
          << ", \"end\": " << c.end << ", \"z_psg\": " << format_real(c.z_psg)
          << ", \"z_start\": " << format_real(c.z_start)
          << ", \"z_end\": " << format_real(c.z_end)
          << ", \"correct\": " << (c.correct ? "true" : "false")
          << ", \"answer\": " << render_answer(c.answer) << "}";
    }
    out << "]}\n";
  }
}

void write_trace_log(std::ostream& out, const std::vector<CheckpointTrace>& traces) {
  for (const CheckpointTrace& t : traces) {
    out << "{\"id\": " << quote(t.id) << ", \"checkpoint_answers\": [";
    for (std::size_t i = 0; i < t.checkpoint_answers.size(); ++i) {
      if (i) out << ", ";
      out << quote(t.checkpoint_answers[i]);
    }
    out << "], \"final_correct\": " << (t.final_correct ? "true" : "false") << "}\n";
  }
}

void write_feature_log(std::ostream& out, const std::vector<FeatureRecord>& recs) {
  for (const FeatureRecord& r : recs) {
    out << "{\"id\": " << quote(r.id) << ", \"features\": [";
    for (std::size_t i = 0; i < r.features.size(); ++i) {
      if (i) out << ", ";
      out << format_real(r.features[i]);
    }
    out << "], \"correct\": " << (r.correct ? "true" : "false") << "}\n";
  }
}

namespace {

std::string render_optional(const std::optional<double>& v, double scale) {
  return v ? format_real(*v * scale) : "null";
}

void write_bins(std::ostream& out, const std::vector<BucketSummary>& bins, double scale) {
  out << "[";
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const BucketSummary& b = bins[i];
    if (i) out << ",";
    out << "\n    {\"lower\": " << (std::isnan(b.lower) ? "null" : format_real(b.lower))
        << ", \"upper\": " << (std::isnan(b.upper) ? "null" : format_real(b.upper))
        << ", \"count\": " << b.count << ", \"conf_sum\": " << format_real(b.conf_sum)
        << ", \"correct_sum\": " << b.correct_sum << ", \"conf_mean\": "
        << (b.count > 0 ? format_real(b.mean_confidence() * scale) : "null")
        << ", \"acc\": " << (b.count > 0 ? format_real(b.accuracy() * scale) : "null") << "}";
  }
  out << (bins.empty() ? "]" : "\n  ]");
}

}  // namespace

void write_report(std::ostream& out, const CalibrationReport& r, bool percent) {
  const double s = percent ? 100.0 : 1.0;
  out << "{\n";
  out << "  \"n\": " << r.n << ",\n";
  out << "  \"accuracy\": " << format_real(r.accuracy * s) << ",\n";
  out << "  \"ece_width\": " << format_real(r.ece_width * s) << ",\n";
  out << "  \"ece_mass\": " << format_real(r.ece_mass * s) << ",\n";
  out << "  \"ice\": " << format_real(r.ice * s) << ",\n";
  out << "  \"ice_pos\": " << render_optional(r.ice_pos, s) << ",\n";
  out << "  \"ice_neg\": " << render_optional(r.ice_neg, s) << ",\n";
  out << "  \"macro_ce\": " << render_optional(r.macro_ce, s) << ",\n";
  out << "  \"brier\": " << format_real(r.brier * s) << ",\n";
  out << "  \"bins_width\": ";
  write_bins(out, r.bins_width, s);
  out << ",\n  \"bins_mass\": ";
  write_bins(out, r.bins_mass, s);
  out << ",\n  \"degenerate_flags\": [";
  for (std::size_t i = 0; i < r.degenerate_flags.size(); ++i) {
    if (i) out << ", ";
    out << quote(r.degenerate_flags[i]);
  }
  out << "]\n}\n";
}

namespace {

std::optional<double> read_optional(const json& obj, const char* key) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return obj[key].get<double>();
}

std::vector<BucketSummary> read_bins(const json& arr) {
  std::vector<BucketSummary> bins;
  for (const json& bj : arr) {
    BucketSummary b;
    b.lower = bj["lower"].is_null() ? std::nan("") : bj["lower"].get<double>();
    b.upper = bj["upper"].is_null() ? std::nan("") : bj["upper"].get<double>();
    b.count = bj["count"].get<std::int64_t>();
    b.conf_sum = bj["conf_sum"].get<double>();
    b.correct_sum = bj["correct_sum"].get<std::int64_t>();
    bins.push_back(b);
  }
  return bins;
}

}  // namespace

CalibrationReport parse_report(std::istream& in) {
  json obj;
  try {
    obj = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::MalformedLine, e.what());
  }
  CalibrationReport r;
  r.n = obj["n"].get<std::int64_t>();
  r.accuracy = obj["accuracy"].get<double>();
  r.ece_width = obj["ece_width"].get<double>();
  r.ece_mass = obj["ece_mass"].get<double>();
  r.ice = obj["ice"].get<double>();
  r.ice_pos = read_optional(obj, "ice_pos");
  r.ice_neg = read_optional(obj, "ice_neg");
  r.macro_ce = read_optional(obj, "macro_ce");
  r.brier = obj["brier"].get<double>();
  r.bins_width = read_bins(obj["bins_width"]);
  r.bins_mass = read_bins(obj["bins_mass"]);
  for (const json& f : obj["degenerate_flags"]) r.degenerate_flags.push_back(f.get<std::string>());
  return r;
}

bool report_equal(const CalibrationReport& a, const CalibrationReport& b) {
  auto oeq = [](const std::optional<double>& x, const std::optional<double>& y) {
    return x.has_value() == y.has_value() && (!x || *x == *y);
  };
  if (a.n != b.n || a.accuracy != b.accuracy || a.ece_width != b.ece_width ||
      a.ece_mass != b.ece_mass || a.ice != b.ice || a.brier != b.brier) {
    return false;
  }
  if (!oeq(a.ice_pos, b.ice_pos) || !oeq(a.ice_neg, b.ice_neg) || !oeq(a.macro_ce, b.macro_ce)) {
    return false;
  }
  if (a.bins_width.size() != b.bins_width.size() || a.bins_mass.size() != b.bins_mass.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.bins_width.size(); ++i) {
    if (!bucket_equal(a.bins_width[i], b.bins_width[i])) return false;
  }
  for (std::size_t i = 0; i < a.bins_mass.size(); ++i) {
    if (!bucket_equal(a.bins_mass[i], b.bins_mass[i])) return false;
  }
  return a.degenerate_flags == b.degenerate_flags;
}

}  // namespace calikit
