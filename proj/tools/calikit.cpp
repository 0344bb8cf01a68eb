// calikit: evaluate and post-hoc calibrate prediction confidence from
// exported JSONL logs. See README.md for the file formats.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "calikit/calibrators.hpp"
#include "calikit/error.hpp"
#include "calikit/experiments.hpp"
#include "calikit/jsonl.hpp"
#include "calikit/metrics.hpp"
#include "calikit/scoring.hpp"
#include "calikit/synthgen.hpp"

namespace {

constexpr const char* kVersion = "calikit 1.0.0";

using namespace calikit;

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MalformedLine, "cannot open " + path);
  return in;
}

// Either a file or stdout; flushes and checks on destruction-free path.
class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(ErrorKind::MalformedLine, "cannot open " + path);
    }
  }
  std::ostream& stream() { return path_.empty() ? std::cout : file_; }
  void finish() {
    stream().flush();
    if (!stream()) throw Error(ErrorKind::MalformedLine, "write failed: " + path_);
  }

 private:
  std::string path_;
  std::ofstream file_;
};

SchemeMode parse_mode(const std::string& s) {
  return s == "pipeline" ? SchemeMode::Pipeline : SchemeMode::Joint;
}

FitObjective parse_objective(const std::string& s) {
  return s == "nll" ? FitObjective::NLL : FitObjective::DevECE;
}

std::vector<ScoredPrediction> read_scored(const std::string& path) {
  std::ifstream in = open_input(path);
  return parse_scored_log(in);
}

std::vector<CandidateRecord> read_candidates(const std::string& path) {
  std::ifstream in = open_input(path);
  return parse_candidate_log(in);
}

std::vector<CheckpointTrace> read_traces(const std::string& path) {
  std::ifstream in = open_input(path);
  return parse_trace_log(in);
}

std::vector<FeatureRecord> read_features(const std::string& path) {
  std::ifstream in = open_input(path);
  return parse_feature_log(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"confidence calibration toolkit for exported prediction logs"};
  app.require_subcommand(1);

  std::uint64_t seed = 42;
  int bins = 10;
  std::string format = "json";
  bool percent = false;
  app.add_option("--seed", seed, "seed for every stochastic step");
  app.add_option("--bins", bins, "bin count M for bucketed metrics")
      ->check(CLI::Range(1, 10000000));
  app.add_option("--format", format, "experiment output format")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--percent", percent, "render metrics multiplied by 100");

  // score
  auto* score_cmd = app.add_subcommand("score", "candidate logits -> scored predictions");
  std::string score_in, score_out, score_mode = "joint";
  double score_tau = 1.0;
  score_cmd->add_option("-i,--input", score_in, "candidates.jsonl")->required();
  score_cmd->add_option("-o,--output", score_out, "scored.jsonl (default stdout)");
  score_cmd->add_option("--mode", score_mode)->check(CLI::IsMember({"joint", "pipeline"}));
  score_cmd->add_option("--temperature", score_tau)->check(CLI::PositiveNumber);

  // fit-temp
  auto* fit_cmd = app.add_subcommand("fit-temp", "tune the temperature on a dev set");
  std::string fit_dev, fit_out, fit_mode = "joint", fit_objective = "ece";
  fit_cmd->add_option("--dev", fit_dev, "dev candidates.jsonl")->required();
  fit_cmd->add_option("-o,--output", fit_out, "fit.json (default stdout)");
  fit_cmd->add_option("--mode", fit_mode)->check(CLI::IsMember({"joint", "pipeline"}));
  fit_cmd->add_option("--objective", fit_objective)->check(CLI::IsMember({"ece", "nll"}));

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "scored predictions -> calibration report");
  std::string eval_in, eval_out;
  eval_cmd->add_option("-i,--input", eval_in, "scored.jsonl")->required();
  eval_cmd->add_option("-o,--output", eval_out, "report.json (default stdout)");

  // baseline
  auto* base_cmd = app.add_subcommand("baseline", "binary / average / random confidence");
  std::string base_kind, base_dev, base_test, base_out;
  base_cmd->add_option("--kind", base_kind)
      ->check(CLI::IsMember({"binary", "average", "random"}))
      ->required();
  base_cmd->add_option("--dev", base_dev, "dev scored.jsonl (binary, average)");
  base_cmd->add_option("--test", base_test, "test scored.jsonl")->required();
  base_cmd->add_option("-o,--output", base_out, "scored.jsonl (default stdout)");

  // conscal
  auto* cons_cmd = app.add_subcommand("conscal", "checkpoint-consistency confidence");
  std::string cons_in, cons_dev, cons_out, cons_mode = "binary", cons_threshold = "auto";
  cons_cmd->add_option("-i,--input", cons_in, "traces.jsonl")->required();
  cons_cmd->add_option("--dev", cons_dev, "dev traces.jsonl (auto threshold, classifier)");
  cons_cmd->add_option("--mode", cons_mode)
      ->check(CLI::IsMember({"binary", "frequency", "classifier"}));
  cons_cmd->add_option("--threshold", cons_threshold,
                       "agreement threshold n, or 'auto' (binary mode)");
  cons_cmd->add_option("-o,--output", cons_out, "scored.jsonl (default stdout)");

  // fit-logistic / apply-logistic
  auto* fitlog_cmd = app.add_subcommand("fit-logistic", "train the feature calibrator");
  std::string fitlog_train, fitlog_out;
  fitlog_cmd->add_option("--train", fitlog_train, "features.jsonl")->required();
  fitlog_cmd->add_option("-o,--output", fitlog_out, "model.json (default stdout)");

  auto* applylog_cmd = app.add_subcommand("apply-logistic", "apply the feature calibrator");
  std::string applylog_model, applylog_in, applylog_out;
  applylog_cmd->add_option("--model", applylog_model, "model.json")->required();
  applylog_cmd->add_option("-i,--input", applylog_in, "features.jsonl")->required();
  applylog_cmd->add_option("-o,--output", applylog_out, "scored.jsonl (default stdout)");

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "accuracy levels / shift / sweep");
  std::string exp_kind, exp_scored, exp_cands, exp_dev_cands, exp_test_cands, exp_out;
  std::string exp_mode = "joint", exp_objective = "ece";
  std::vector<double> exp_levels{0.1, 0.5, 0.9};
  std::vector<double> exp_taus;
  std::int64_t exp_size = 1000, exp_dev_size = 1000, exp_test_size = 1000;
  double exp_dev_acc = 0.9, exp_test_acc = 0.1;
  exp_cmd->add_option("--kind", exp_kind)
      ->check(CLI::IsMember({"levels", "shift", "sweep"}))
      ->required();
  exp_cmd->add_option("-i,--input", exp_scored, "scored.jsonl (levels without fitting)");
  exp_cmd->add_option("--candidates", exp_cands, "candidates.jsonl (levels, sweep)");
  exp_cmd->add_option("--dev-candidates", exp_dev_cands, "candidates.jsonl (shift)");
  exp_cmd->add_option("--test-candidates", exp_test_cands, "candidates.jsonl (shift)");
  exp_cmd->add_option("--levels", exp_levels, "target accuracies")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));
  exp_cmd->add_option("--size", exp_size, "resample size per level")->check(CLI::Range(2, 100000000));
  exp_cmd->add_option("--dev-acc", exp_dev_acc)->check(CLI::Range(0.0, 1.0));
  exp_cmd->add_option("--test-acc", exp_test_acc)->check(CLI::Range(0.0, 1.0));
  exp_cmd->add_option("--dev-size", exp_dev_size)->check(CLI::Range(2, 100000000));
  exp_cmd->add_option("--test-size", exp_test_size)->check(CLI::Range(2, 100000000));
  exp_cmd->add_option("--taus", exp_taus, "sweep temperatures (default 20 log-spaced in [0.1,10])")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  exp_cmd->add_option("--mode", exp_mode)->check(CLI::IsMember({"joint", "pipeline"}));
  exp_cmd->add_option("--objective", exp_objective)->check(CLI::IsMember({"ece", "nll"}));
  exp_cmd->add_option("-o,--output", exp_out, "default stdout");

  // diagram
  auto* diag_cmd = app.add_subcommand("diagram", "reliability diagram CSV");
  std::string diag_in, diag_out, diag_binning = "width";
  diag_cmd->add_option("-i,--input", diag_in, "scored.jsonl")->required();
  diag_cmd->add_option("--binning", diag_binning)->check(CLI::IsMember({"width", "mass"}));
  diag_cmd->add_option("-o,--output", diag_out, "CSV (default stdout)");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate synthetic logs");
  std::string synth_kind = "scored", synth_model = "beta", synth_out;
  GeneratorSpec gen;
  synth_cmd->add_option("--kind", synth_kind)->check(CLI::IsMember({"scored", "candidates"}));
  synth_cmd->add_option("--model", synth_model)
      ->check(CLI::IsMember({"beta", "logits", "separated"}));
  synth_cmd->add_option("-n,--n", gen.n, "record count")->check(CLI::Range(1, 100000000));
  synth_cmd->add_option("--accuracy", gen.accuracy)->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--beta-a", gen.beta_a)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--beta-b", gen.beta_b)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--candidates", gen.candidates, "candidates per record")
      ->check(CLI::Range(2, 1000));
  synth_cmd->add_option("--sharpness", gen.sharpness)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--pos-mean", gen.pos_mean)->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--neg-mean", gen.neg_mean)->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--noise", gen.noise)->check(CLI::Range(0.0, 10.0));
  synth_cmd->add_option("-o,--output", synth_out, "default stdout");

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << kVersion << "\nusage error: " << e.what() << "\n";
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  std::cerr << kVersion << "\nseed: " << seed << "\n";

  try {
    if (*score_cmd) {
      Output out(score_out);
      write_scored_log(out.stream(),
                       score_log(read_candidates(score_in),
                                 ScoringScheme{parse_mode(score_mode), score_tau}));
      out.finish();
    } else if (*fit_cmd) {
      Output out(fit_out);
      write_temperature_fit(out.stream(),
                            fit_temperature(read_candidates(fit_dev), parse_mode(fit_mode),
                                            parse_objective(fit_objective), bins));
      out.finish();
    } else if (*eval_cmd) {
      Output out(eval_out);
      write_report(out.stream(), evaluate(read_scored(eval_in), bins), percent);
      out.finish();
    } else if (*base_cmd) {
      if (base_kind != "random" && base_dev.empty()) {
        std::cerr << "usage error: --kind " << base_kind << " needs --dev\n";
        return 2;
      }
      std::vector<ScoredPrediction> test = read_scored(base_test);
      std::vector<ScoredPrediction> result;
      if (base_kind == "binary") {
        result = binary_baseline(read_scored(base_dev), test);
      } else if (base_kind == "average") {
        result = average_baseline(read_scored(base_dev), test);
      } else {
        result = random_baseline(test, seed);
      }
      Output out(base_out);
      write_scored_log(out.stream(), result);
      out.finish();
    } else if (*cons_cmd) {
      ConsCalConfig cfg;
      cfg.mode = cons_mode == "frequency" ? ConsCalMode::Frequency
                 : cons_mode == "classifier" ? ConsCalMode::Classifier
                                             : ConsCalMode::Binary;
      if (cons_threshold != "auto") {
        try {
          cfg.threshold = std::stoi(cons_threshold);
        } catch (const std::exception&) {
          std::cerr << "usage error: --threshold must be an integer or 'auto'\n";
          return 2;
        }
      }
      cfg.seed = seed;
      std::vector<CheckpointTrace> traces = read_traces(cons_in);
      std::optional<std::vector<CheckpointTrace>> dev;
      if (!cons_dev.empty()) dev = read_traces(cons_dev);
      Output out(cons_out);
      write_scored_log(out.stream(), conscal(traces, cfg, dev ? &*dev : nullptr));
      out.finish();
    } else if (*fitlog_cmd) {
      Output out(fitlog_out);
      write_logistic_model(out.stream(), fit_logistic(read_features(fitlog_train), seed));
      out.finish();
    } else if (*applylog_cmd) {
      std::ifstream model_in = open_input(applylog_model);
      LogisticModel model = parse_logistic_model(model_in);
      Output out(applylog_out);
      write_scored_log(out.stream(), apply_logistic(model, read_features(applylog_in)));
      out.finish();
    } else if (*exp_cmd) {
      const bool csv = format == "csv";
      Output out(exp_out);
      if (exp_kind == "levels") {
        if (exp_scored.empty() == exp_cands.empty()) {
          std::cerr << "usage error: levels needs exactly one of --input / --candidates\n";
          return 2;
        }
        std::vector<LevelResult> results;
        if (!exp_cands.empty()) {
          results = run_accuracy_levels(read_candidates(exp_cands), parse_mode(exp_mode),
                                        parse_objective(exp_objective), exp_levels, exp_size,
                                        seed, bins);
        } else {
          results = run_accuracy_levels(read_scored(exp_scored), exp_levels, exp_size, seed,
                                        bins);
        }
        csv ? write_levels_csv(out.stream(), results, percent)
            : write_levels_json(out.stream(), results, percent);
      } else if (exp_kind == "shift") {
        if (exp_dev_cands.empty() || exp_test_cands.empty()) {
          std::cerr << "usage error: shift needs --dev-candidates and --test-candidates\n";
          return 2;
        }
        ShiftResult result = run_accuracy_shift(
            read_candidates(exp_dev_cands), read_candidates(exp_test_cands),
            parse_mode(exp_mode), parse_objective(exp_objective), exp_dev_acc, exp_test_acc,
            exp_dev_size, exp_test_size, seed, bins);
        csv ? write_shift_csv(out.stream(), result, percent)
            : write_shift_json(out.stream(), result, percent);
      } else {
        if (exp_cands.empty()) {
          std::cerr << "usage error: sweep needs --candidates\n";
          return 2;
        }
        if (exp_taus.empty()) exp_taus = default_sweep_taus();
        std::vector<SweepRow> rows =
            temperature_sweep(read_candidates(exp_cands), exp_taus, parse_mode(exp_mode), bins);
        csv ? write_sweep_csv(out.stream(), rows, percent)
            : write_sweep_json(out.stream(), rows, percent);
      }
      out.finish();
    } else if (*diag_cmd) {
      Output out(diag_out);
      write_diagram_csv(out.stream(),
                        reliability_diagram(read_scored(diag_in), bins,
                                            diag_binning == "mass" ? BinningMode::EqualMass
                                                                   : BinningMode::EqualWidth),
                        percent);
      out.finish();
    } else if (*synth_cmd) {
      gen.seed = seed;
      gen.model = synth_model == "logits" ? ConfidenceModel::OverconfidentLogits
                  : synth_model == "separated" ? ConfidenceModel::Separated
                                               : ConfidenceModel::IndependentBeta;
      if (synth_kind == "candidates" && gen.model != ConfidenceModel::OverconfidentLogits) {
        std::cerr << "usage error: --kind candidates requires --model logits\n";
        return 2;
      }
      Output out(synth_out);
      if (synth_kind == "candidates") {
        write_candidate_log(out.stream(), generate_candidates(gen));
      } else {
        write_scored_log(out.stream(), generate_scored(gen));
      }
      out.finish();
    }
  } catch (const Error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  }

  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  std::cerr << "elapsed: " << elapsed.count() << " ms\n";
  return 0;
}
