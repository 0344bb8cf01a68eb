#pragma once

#include <iosfwd>
#include <vector>

#include "calikit/types.hpp"

namespace calikit {

struct ParseOptions {
  // Candidate sets larger than this are rejected (the exporters cap at
  // n x k = 100 spans per question).
  int max_candidates = 100;
  // Confidences outside [0,1] by at most this much are clamped; larger
  // violations are hard errors.
  double clamp_tolerance = 1e-9;
};

// All parsers are single-pass and order-preserving: the i-th input line
// yields the i-th record. Lines are UTF-8 JSON objects; blank lines are
// skipped. Errors are thrown as calikit::Error.

std::vector<ScoredPrediction> parse_scored_log(std::istream& in,
                                               const ParseOptions& opts = {});
std::vector<CandidateRecord> parse_candidate_log(std::istream& in,
                                                 const ParseOptions& opts = {});
std::vector<CheckpointTrace> parse_trace_log(std::istream& in);
std::vector<FeatureRecord> parse_feature_log(std::istream& in);

// Writers emit one canonical line per record: fixed key order, reals with 17
// significant digits, absent answers as null. write(parse(x)) is the identity
// on canonical input and parse(write(r)) == r always.
void write_scored_log(std::ostream& out, const std::vector<ScoredPrediction>& preds);
void write_candidate_log(std::ostream& out, const std::vector<CandidateRecord>& recs);
void write_trace_log(std::ostream& out, const std::vector<CheckpointTrace>& traces);
void write_feature_log(std::ostream& out, const std::vector<FeatureRecord>& recs);

// Canonical report JSON: documented key order, 17 significant digit reals,
// absent optional metrics as null. Structurally equal reports serialize to
// byte-identical output. `percent` scales the scalar metric fields by 100
// for display; canonical round-trip output uses percent = false.
void write_report(std::ostream& out, const CalibrationReport& report,
                  bool percent = false);
CalibrationReport parse_report(std::istream& in);

// 17-significant-digit rendering used by every writer (round-trips doubles).
std::string format_real(double x);

}  // namespace calikit
