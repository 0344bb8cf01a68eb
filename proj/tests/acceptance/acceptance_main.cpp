// Acceptance gate: ten checks, one line each, exit code = number of failures.
// Every tolerance and runtime limit is pinned here on purpose.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "calikit/calibrators.hpp"
#include "calikit/experiments.hpp"
#include "calikit/metrics.hpp"
#include "calikit/oracles.hpp"
#include "calikit/rng.hpp"
#include "calikit/scoring.hpp"
#include "calikit/synthgen.hpp"
#include "support/helpers.hpp"

using namespace calikit;

namespace {

std::string g_cli;

struct Criterion {
  const char* description;
  double limit_seconds;
  std::function<bool(std::string&)> run;
};

bool check(bool ok, std::string& why, const std::string& detail) {
  if (!ok && why.empty()) why = detail;
  return ok;
}

// --- 1: average baseline pins MacroCE to exactly one half -------------------

bool run_average_baseline(std::string& why) {
  Rng rng(8101);
  bool ok = true;
  for (int round = 0; round < 5; ++round) {
    const auto dev = testutil::random_log(rng, 50 + 100 * round);
    const auto test = testutil::random_log(rng, 120 + 60 * round);
    const auto out = average_baseline(dev, test);
    const auto macro = macro_ce_of(ice(out));
    ok = check(macro.has_value(), why, "macro_ce missing on a two-class log") && ok;
    if (macro) {
      ok = check(std::fabs(*macro - 0.5) <= 1e-12, why,
                 "macro_ce " + std::to_string(*macro) + " != 0.5") &&
           ok;
    }
  }
  return ok;
}

// --- 2: equal-mass ECE at M = N degenerates to ICE --------------------------

bool run_mass_equals_ice(std::string& why) {
  Rng rng(8102);
  for (int round = 0; round < 1000; ++round) {
    const int n = 1 + static_cast<int>(rng.uniform_below(500));
    const auto preds = testutil::random_log(rng, n, round % 4 == 0 ? 6 : 0);
    const double lhs = ece(assign_buckets_mass(preds, n));
    const double rhs = ice(preds).ice;
    if (!check(std::fabs(lhs - rhs) <= 1e-12, why,
               "log " + std::to_string(round) + ": |" + std::to_string(lhs) + " - " +
                   std::to_string(rhs) + "| > 1e-12")) {
      return false;
    }
  }
  return true;
}

// --- 3: at 50% accuracy with equal class counts, ICE = MacroCE --------------

bool run_balanced_ice_macro(std::string& why) {
  GeneratorSpec spec;
  spec.n = 10000;
  spec.accuracy = 0.5;
  spec.model = ConfidenceModel::IndependentBeta;
  spec.seed = 8103;
  const auto source = generate_scored(spec);
  ResampleSpec rs;
  rs.target_accuracy = 0.5;
  rs.size = 5000;
  rs.seed = 8113;
  const auto preds = resample_to_accuracy(source, rs);
  const IceTriple t = ice(preds);
  const auto macro = macro_ce_of(t);
  if (!check(macro.has_value(), why, "macro_ce missing")) return false;
  return check(std::fabs(t.ice - *macro) <= 1e-12, why,
               "|ice - macro| = " + std::to_string(std::fabs(t.ice - *macro)));
}

// --- 4: accuracy levels move ECE but not MacroCE ----------------------------

bool run_levels_contrast(std::string& why) {
  GeneratorSpec spec;
  spec.n = 10000;
  spec.accuracy = 0.5;
  spec.model = ConfidenceModel::IndependentBeta;
  spec.beta_a = 8.0;
  spec.beta_b = 2.0;
  spec.seed = 8104;
  const auto source = generate_scored(spec);
  const auto results = run_accuracy_levels(source, {0.1, 0.5, 0.9}, 5000, 8114, 10);
  double lo = 2.0, hi = -1.0;
  bool ok = true;
  for (const LevelResult& r : results) {
    lo = std::min(lo, r.before.ece_width);
    hi = std::max(hi, r.before.ece_width);
    ok = check(r.before.macro_ce.has_value(), why, "macro_ce missing at a level") && ok;
    if (r.before.macro_ce) {
      ok = check(std::fabs(*r.before.macro_ce - 0.5) <= 0.02, why,
                 "macro_ce drifted to " + std::to_string(*r.before.macro_ce)) &&
           ok;
    }
  }
  return check(hi - lo >= 0.30, why,
               "ece range " + std::to_string(hi - lo) + " < 0.30") &&
         ok;
}

// --- 5: dev-fitted temperature collapses under accuracy shift ---------------

bool run_shift_collapse(std::string& why) {
  GeneratorSpec spec;
  spec.n = 4000;
  spec.accuracy = 0.5;
  spec.model = ConfidenceModel::OverconfidentLogits;
  spec.seed = 8105;
  spec.candidates = 10;
  spec.sharpness = 5.0;
  const auto source = generate_candidates(spec);
  const ShiftResult r = run_accuracy_shift(source, source, SchemeMode::Joint,
                                           FitObjective::DevECE, 0.9, 0.1, 800, 800, 8115, 10);
  bool ok = check(r.test_after.ece_width - r.dev_after.ece_width >= 0.2, why,
                  "test-dev ece gap " +
                      std::to_string(r.test_after.ece_width - r.dev_after.ece_width) + " < 0.2");
  ok = check(r.dev_after.macro_ce.has_value() && r.test_after.macro_ce.has_value(), why,
             "macro_ce missing after shift") &&
       ok;
  if (r.dev_after.macro_ce && r.test_after.macro_ce) {
    const double gap = std::fabs(*r.dev_after.macro_ce - *r.test_after.macro_ce);
    ok = check(gap <= 0.05, why, "macro_ce gap " + std::to_string(gap) + " > 0.05") && ok;
  }
  return ok;
}

// --- 6: fitting never hurts and never flips predictions ---------------------

bool run_fit_never_hurts(std::string& why) {
  Rng rng(8106);
  for (int round = 0; round < 100; ++round) {
    GeneratorSpec spec;
    spec.n = 200;
    spec.accuracy = 0.2 + 0.7 * rng.uniform();
    spec.model = ConfidenceModel::OverconfidentLogits;
    spec.seed = 820000 + static_cast<std::uint64_t>(round);
    spec.candidates = 4 + static_cast<int>(rng.uniform_below(9));
    spec.sharpness = 0.3 + 5.7 * rng.uniform();
    const auto dev = generate_candidates(spec);

    const TemperatureFit fit =
        fit_temperature(dev, SchemeMode::Joint, FitObjective::DevECE, 10);
    const double at_one =
        ece(assign_buckets_width(score_log_serial(dev, ScoringScheme{SchemeMode::Joint, 1.0}),
                                 10));
    if (!check(fit.dev_objective <= at_one + 1e-15, why,
               "round " + std::to_string(round) + ": fitted " +
                   std::to_string(fit.dev_objective) + " > uncalibrated " +
                   std::to_string(at_one))) {
      return false;
    }

    GeneratorSpec test_spec = spec;
    test_spec.seed = 830000 + static_cast<std::uint64_t>(round);
    const auto test = generate_candidates(test_spec);
    const auto before = score_log(test, ScoringScheme{SchemeMode::Joint, 1.0});
    const auto after = apply_temperature(test, fit, SchemeMode::Joint);
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (!check(before[i].correct == after[i].correct, why,
                 "round " + std::to_string(round) + ": prediction flipped at record " +
                     std::to_string(i))) {
        return false;
      }
    }
  }
  return true;
}

// --- 7: sweep monotonicity and pinned MacroCE -------------------------------

bool run_sweep_monotone(std::string& why) {
  GeneratorSpec spec;
  spec.n = 500;
  spec.accuracy = 0.5;
  spec.model = ConfidenceModel::OverconfidentLogits;
  spec.seed = 8107;
  spec.candidates = 10;
  spec.sharpness = 4.0;
  const auto base = generate_candidates(spec);

  // correctness-independent twin log: every record once correct, once wrong
  std::vector<CandidateRecord> twins;
  for (const CandidateRecord& rec : base) {
    twins.push_back(rec);
    CandidateRecord flip = rec;
    flip.id += "-twin";
    for (Candidate& c : flip.candidates) c.correct = !c.correct;
    twins.push_back(std::move(flip));
  }

  const auto rows = temperature_sweep(twins, default_sweep_taus(), SchemeMode::Joint, 10);
  bool ok = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].macro_ce) return check(false, why, "macro_ce missing in a sweep row");
    ok = check(std::fabs(*rows[i].macro_ce - 0.5) <= 1e-9, why,
               "macro_ce " + std::to_string(*rows[i].macro_ce) + " off 0.5") &&
         ok;
    if (i > 0) {
      ok = check(*rows[i].ice_pos >= *rows[i - 1].ice_pos - 1e-12, why,
                 "ice_pos decreased between sweep rows") &&
           ok;
      ok = check(*rows[i].ice_neg <= *rows[i - 1].ice_neg + 1e-12, why,
                 "ice_neg increased between sweep rows") &&
           ok;
    }
  }
  return ok;
}

// --- 8: metrics match the brute-force oracles -------------------------------

bool run_oracle_equivalence(std::string& why) {
  Rng rng(8108);
  for (int round = 0; round < 1000; ++round) {
    const int n = 1 + static_cast<int>(rng.uniform_below(200));
    const auto preds = testutil::random_log(rng, n, round % 3 == 0 ? 4 : 0);
    for (int bins : {1, 3, 10, n}) {
      const double w = ece(assign_buckets_width(preds, bins));
      const double ow = oracle_ece(preds, bins, BinningMode::EqualWidth);
      if (!check(std::fabs(w - ow) <= 1e-12, why,
                 "width ece mismatch at log " + std::to_string(round))) {
        return false;
      }
      const double m = ece(assign_buckets_mass(preds, bins));
      const double om = oracle_ece(preds, bins, BinningMode::EqualMass);
      if (!check(std::fabs(m - om) <= 1e-12, why,
                 "mass ece mismatch at log " + std::to_string(round))) {
        return false;
      }
    }
    const IceTriple t = ice(preds);
    const OracleIce ot = oracle_ice(preds);
    if (!check(std::fabs(t.ice - ot.ice) <= 1e-12, why, "ice mismatch")) return false;
    const auto macro = macro_ce_of(t);
    const auto omacro = oracle_macro_ce(preds);
    if (!check(macro.has_value() == omacro.has_value(), why, "macro presence mismatch")) {
      return false;
    }
    if (macro && !check(std::fabs(*macro - *omacro) <= 1e-12, why, "macro mismatch")) {
      return false;
    }
    if (!check(std::fabs(brier(preds) - oracle_brier(preds)) <= 1e-12, why,
               "brier mismatch")) {
      return false;
    }
  }
  return true;
}

// --- 9: the ConsCal contract ------------------------------------------------

bool run_conscal_contract(std::string& why) {
  CheckpointTrace unanimous;
  unanimous.id = "u";
  unanimous.checkpoint_answers = {"x", "x", "x", "x", "x"};
  unanimous.final_correct = true;

  CheckpointTrace two_of_five;
  two_of_five.id = "v";
  two_of_five.checkpoint_answers = {"a", "b", "c", "d", "a"};  // final answer in 2 of 5
  two_of_five.final_correct = false;

  bool ok = true;
  for (int n = 0; n <= 4; ++n) {
    ConsCalConfig cfg;
    cfg.mode = ConsCalMode::Binary;
    cfg.threshold = n;
    const auto out = conscal({unanimous, two_of_five}, cfg);
    ok = check(out[0].confidence == 1.0, why,
               "unanimous trace dropped below 1 at n=" + std::to_string(n)) &&
         ok;
    if (n == 2) {
      ok = check(out[1].confidence == 0.0, why, "2-of-5 trace not cut off at n=2") && ok;
    }
  }

  std::vector<CheckpointTrace> traces;
  const std::vector<std::vector<std::string>> patterns = {
      {"q", "r", "s", "t", "a"}, {"a", "r", "s", "t", "a"}, {"a", "a", "s", "t", "a"},
      {"a", "a", "a", "t", "a"}, {"a", "a", "a", "a", "a"}};
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    CheckpointTrace t;
    t.id = "f" + std::to_string(i);
    t.checkpoint_answers = patterns[i];
    t.final_correct = i % 2 == 0;
    traces.push_back(std::move(t));
  }
  ConsCalConfig freq;
  freq.mode = ConsCalMode::Frequency;
  const auto out = conscal(traces, freq);
  const std::set<double> allowed = {0.2, 0.4, 0.6, 0.8, 1.0};
  for (std::size_t i = 0; i < out.size(); ++i) {
    ok = check(allowed.count(out[i].confidence) == 1, why,
               "frequency confidence " + std::to_string(out[i].confidence) +
                   " outside {0.2,0.4,0.6,0.8,1.0}") &&
         ok;
    const double expected = static_cast<double>(i + 1) / 5.0;
    ok = check(out[i].confidence == expected, why, "frequency ladder broken") && ok;
  }
  return ok;
}

// --- 10: every CLI subcommand is byte-for-byte deterministic ----------------

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool run_cli_determinism(std::string& why) {
  const std::string q = "'" + g_cli + "'";
  std::vector<std::string> scratch;
  auto temp = [&](const std::string& name) {
    const std::string p = "acc10_" + name;
    scratch.push_back(p);
    return p;
  };

  // fixed inputs every command below reads
  const std::string scored = temp("scored.jsonl");
  const std::string scored2 = temp("scored2.jsonl");
  const std::string cands = temp("cands.jsonl");
  const std::string model = temp("model.json");
  const std::string traces = temp("traces.jsonl");
  const std::string feats = temp("feats.jsonl");
  {
    std::ostringstream t;
    for (int i = 0; i < 12; ++i) {
      t << "{\"id\": \"agree" << i << "\", \"checkpoint_answers\": [\"x\", \"x\", \"x\"], "
        << "\"final_correct\": true}\n";
      t << "{\"id\": \"scatter" << i << "\", \"checkpoint_answers\": [\"a" << i << "\", \"b"
        << i << "\", \"c\"], \"final_correct\": false}\n";
    }
    testutil::write_file(traces, t.str());
    std::ostringstream f;
    for (int i = 0; i < 30; ++i) {
      const bool correct = i % 2 == 0;
      f << "{\"id\": \"f" << i << "\", \"features\": [" << (correct ? 1.5 : -1.5)
        << ", 0.25], \"correct\": " << (correct ? "true" : "false") << "}\n";
    }
    testutil::write_file(feats, f.str());
  }
  if (shell(q + " --seed 5 synth --kind scored --model beta -n 500 --accuracy 0.5 -o " +
            scored + " 2>/dev/null") != 0) {
    return check(false, why, "synth scored setup failed");
  }
  if (shell(q + " --seed 6 synth --kind scored --model separated -n 300 --accuracy 0.4 -o " +
            scored2 + " 2>/dev/null") != 0) {
    return check(false, why, "synth separated setup failed");
  }
  if (shell(q + " --seed 7 synth --kind candidates --model logits -n 300 --accuracy 0.5 "
                "--sharpness 4 -o " + cands + " 2>/dev/null") != 0) {
    return check(false, why, "synth candidates setup failed");
  }
  if (shell(q + " --seed 8 fit-logistic --train " + feats + " -o " + model + " 2>/dev/null") !=
      0) {
    return check(false, why, "fit-logistic setup failed");
  }

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth-scored", "--seed 5 synth --kind scored --model beta -n 500 --accuracy 0.5"},
      {"synth-cands",
       "--seed 7 synth --kind candidates --model logits -n 300 --accuracy 0.5 --sharpness 4"},
      {"score", "score -i " + cands + " --mode joint --temperature 1.7"},
      {"score-pipeline", "score -i " + cands + " --mode pipeline"},
      {"fit-temp", "fit-temp --dev " + cands},
      {"fit-temp-nll", "fit-temp --dev " + cands + " --objective nll"},
      {"eval", "eval -i " + scored},
      {"eval-percent", "--percent eval -i " + scored},
      {"baseline-binary", "baseline --kind binary --dev " + scored + " --test " + scored2},
      {"baseline-average", "baseline --kind average --dev " + scored + " --test " + scored2},
      {"baseline-random", "--seed 9 baseline --kind random --test " + scored2},
      {"conscal-binary", "conscal -i " + traces + " --mode binary --dev " + traces},
      {"conscal-frequency", "conscal -i " + traces + " --mode frequency"},
      {"conscal-classifier",
       "--seed 10 conscal -i " + traces + " --mode classifier --dev " + traces},
      {"fit-logistic", "--seed 8 fit-logistic --train " + feats},
      {"apply-logistic", "apply-logistic --model " + model + " -i " + feats},
      {"experiment-levels",
       "--seed 11 --format csv experiment --kind levels -i " + scored +
           " --levels 0.3,0.6 --size 200"},
      {"experiment-levels-fit",
       "--seed 12 experiment --kind levels --candidates " + cands +
           " --levels 0.4 --size 120"},
      {"experiment-shift",
       "--seed 13 experiment --kind shift --dev-candidates " + cands + " --test-candidates " +
           cands + " --dev-acc 0.6 --test-acc 0.4 --dev-size 120 --test-size 120"},
      {"experiment-sweep",
       "--seed 14 --format csv experiment --kind sweep --candidates " + cands +
           " --taus 0.5,1,2"},
      {"diagram", "diagram -i " + scored},
      {"diagram-mass", "--bins 7 diagram -i " + scored2 + " --binning mass"},
  };

  bool ok = true;
  for (const auto& [name, args] : commands) {
    const std::string out1 = temp(name + ".1");
    const std::string out2 = temp(name + ".2");
    const int c1 = shell(q + " " + args + " >" + out1 + " 2>/dev/null");
    const int c2 = shell(q + " " + args + " >" + out2 + " 2>/dev/null");
    ok = check(c1 == 0 && c2 == 0, why,
               name + " exited " + std::to_string(c1) + "/" + std::to_string(c2)) &&
         ok;
    const std::string b1 = testutil::read_file(out1);
    ok = check(!b1.empty(), why, name + " wrote nothing") && ok;
    ok = check(b1 == testutil::read_file(out2), why, name + " output differs between runs") &&
         ok;
  }
  for (const std::string& p : scratch) std::remove(p.c_str());
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli = argv[1];

  const std::vector<Criterion> criteria = {
      {"average baseline MacroCE = 0.5 +/- 1e-12 on two-class logs", 0.1,
       run_average_baseline},
      {"equal-mass ECE at M = N equals ICE +/- 1e-12 on 1000 random logs", 5.0,
       run_mass_equals_ice},
      {"ICE = MacroCE +/- 1e-12 at resampled 50% accuracy", 1.0, run_balanced_ice_macro},
      {"accuracy levels: ECE range >= 0.30 while MacroCE within 0.02 of 0.5", 2.0,
       run_levels_contrast},
      {"90%->10% shift: test ECE - dev ECE >= 0.2, MacroCE gap <= 0.05", 5.0,
       run_shift_collapse},
      {"fitted dev ECE <= uncalibrated dev ECE on 100 logs; accuracy untouched", 30.0,
       run_fit_never_hurts},
      {"sweep: ICE_pos up, ICE_neg down, MacroCE = 0.5 +/- 1e-9 on twin logs", 5.0,
       run_sweep_monotone},
      {"ECE/ICE/MacroCE/Brier match brute-force oracles +/- 1e-12 on 1000 logs", 10.0,
       run_oracle_equivalence},
      {"ConsCal: unanimous -> 1, 2-of-5 -> 0 at n=2, frequency ladder k/5", 1.0,
       run_conscal_contract},
      {"every CLI subcommand twice -> byte-identical output", 10.0, run_cli_determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Criterion& c = criteria[i];
    if (i == 9 && g_cli.empty()) {
      std::printf("FAIL %2zu: %s — no CLI path given\n", i + 1, c.description);
      ++failures;
      continue;
    }
    std::string why;
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = c.run(why);
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ok && seconds >= c.limit_seconds) {
      ok = false;
      why = "runtime " + std::to_string(seconds) + " s exceeded the " +
            std::to_string(c.limit_seconds) + " s limit";
    }
    if (ok) {
      std::printf("PASS %2zu: %s (%.3f s)\n", i + 1, c.description, seconds);
    } else {
      std::printf("FAIL %2zu: %s (%.3f s) — %s\n", i + 1, c.description, seconds,
                  why.c_str());
      ++failures;
    }
  }
  return failures;
}
