#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "calikit/rng.hpp"
#include "calikit/types.hpp"

namespace testutil {

// Random scored log: uniform confidences, fair-coin correctness. With
// conf_levels > 0 confidences are quantized to that many values, which
// produces plenty of ties for the sort-order paths.
inline std::vector<calikit::ScoredPrediction> random_log(calikit::Rng& rng, int n,
                                                         int conf_levels = 0) {
  std::vector<calikit::ScoredPrediction> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    calikit::ScoredPrediction p;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "r%05d", i);
    p.id = buf;
    double u = rng.uniform();
    p.confidence =
        conf_levels > 0 ? std::floor(u * conf_levels) / conf_levels : u;
    p.correct = (rng.next_u64() & 1) != 0;
    out.push_back(std::move(p));
  }
  return out;
}

inline bool buckets_equal(const std::vector<calikit::BucketSummary>& a,
                          const std::vector<calikit::BucketSummary>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!calikit::bucket_equal(a[i], b[i])) return false;
  }
  return true;
}

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout only
};

// Runs a shell command, capturing stdout to a file; stderr is dropped.
inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  const std::string out_path = "cmd_stdout.tmp";
  const int status = std::system((cmd + " >" + out_path + " 2>/dev/null").c_str());
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  std::remove(out_path.c_str());
  return r;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace testutil
