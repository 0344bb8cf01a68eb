#include "calikit/calibrators.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include <json.hpp>

#include "calikit/error.hpp"
#include "calikit/jsonl.hpp"
#include "calikit/metrics.hpp"
#include "calikit/rng.hpp"
#include "calikit/rounding.hpp"
#include "calikit/stable_sum.hpp"

namespace calikit {

namespace {

constexpr double kTauMin = 0.01;
constexpr double kTauMax = 10.0;
constexpr int kGridPoints = 200;
constexpr int kGoldenIters = 30;

// Mean negative log of the predicted candidate's softmax entry, computed in
// log space so tiny probabilities cannot round to zero first.
double nll_record(const CandidateRecord& rec, SchemeMode mode, double tau) {
  const CandidateRecord* src = &rec;
  CandidateRecord filtered;
  if (mode == SchemeMode::Pipeline) {
    filtered = pipeline_filter(rec);
    src = &filtered;
  }
  double zmax = 0.0;
  bool have = false;
  for (const Candidate& c : src->candidates) {
    double z = mode == SchemeMode::Joint ? joint_raw_score(c) : c.z_start + c.z_end;
    if (!have || z > zmax) zmax = z, have = true;
  }
  StableSum sum;
  for (const Candidate& c : src->candidates) {
    double z = mode == SchemeMode::Joint ? joint_raw_score(c) : c.z_start + c.z_end;
    sum.add(std::exp((z - zmax) / tau));
  }
  // predicted candidate has z == zmax, so its -log softmax is just log(denom)
  return std::log(sum.value());
}

double fit_objective(const std::vector<CandidateRecord>& dev, SchemeMode mode,
                     FitObjective objective, int bins, double tau) {
  if (objective == FitObjective::DevECE) {
    std::vector<ScoredPrediction> scored =
        score_log_serial(dev, ScoringScheme{mode, tau});
    return ece(assign_buckets_width(scored, bins));
  }
  StableSum total;
  for (const CandidateRecord& rec : dev) total.add(nll_record(rec, mode, tau));
  return total.value() / static_cast<double>(dev.size());
}

}  // namespace

TemperatureFit fit_temperature(const std::vector<CandidateRecord>& dev, SchemeMode mode,
                               FitObjective objective, int bins) {
  if (dev.empty()) throw Error(ErrorKind::EmptyLog, "empty dev log");
  std::vector<double> grid;
  grid.reserve(kGridPoints + 1);
  const double lo = std::log(kTauMin), hi = std::log(kTauMax);
  for (int i = 0; i < kGridPoints; ++i) {
    // pin the endpoints so the at_bound comparison below is exact
    if (i == 0) {
      grid.push_back(kTauMin);
    } else if (i + 1 == kGridPoints) {
      grid.push_back(kTauMax);
    } else {
      grid.push_back(std::exp(lo + (hi - lo) * i / (kGridPoints - 1)));
    }
  }
  grid.push_back(1.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<double> obj(grid.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(grid.size()); ++i) {
    obj[i] = fit_objective(dev, mode, objective, bins, grid[i]);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (obj[i] < obj[best]) best = i;  // ties keep the smaller tau
  }

  // Refine between the grid neighbours of the winner; work in log space.
  std::vector<std::pair<double, double>> evaluated;
  for (std::size_t i = 0; i < grid.size(); ++i) evaluated.push_back({grid[i], obj[i]});
  double a = std::log(grid[best > 0 ? best - 1 : best]);
  double b = std::log(grid[best + 1 < grid.size() ? best + 1 : best]);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = fit_objective(dev, mode, objective, bins, std::exp(x1));
  double f2 = fit_objective(dev, mode, objective, bins, std::exp(x2));
  evaluated.push_back({std::exp(x1), f1});
  evaluated.push_back({std::exp(x2), f2});
  for (int it = 0; it < kGoldenIters; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = fit_objective(dev, mode, objective, bins, std::exp(x1));
      evaluated.push_back({std::exp(x1), f1});
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = fit_objective(dev, mode, objective, bins, std::exp(x2));
      evaluated.push_back({std::exp(x2), f2});
    }
  }

  std::sort(evaluated.begin(), evaluated.end());
  TemperatureFit fit;
  fit.objective = objective;
  fit.bins = bins;
  fit.mode = mode;
  fit.tau = evaluated[0].first;
  fit.dev_objective = evaluated[0].second;
  for (const auto& [tau, value] : evaluated) {
    if (value < fit.dev_objective) {
      fit.tau = tau;
      fit.dev_objective = value;
    }
  }
  fit.at_bound = fit.tau == kTauMin || fit.tau == kTauMax;
  return fit;
}

std::vector<ScoredPrediction> apply_temperature(const std::vector<CandidateRecord>& test,
                                                const TemperatureFit& fit, SchemeMode mode) {
  return score_log(test, ScoringScheme{mode, fit.tau});
}

void write_temperature_fit(std::ostream& out, const TemperatureFit& fit) {
  out << "{\n";
  out << "  \"tau\": " << format_real(fit.tau) << ",\n";
  out << "  \"dev_objective\": " << format_real(fit.dev_objective) << ",\n";
  out << "  \"objective\": \""
      << (fit.objective == FitObjective::DevECE ? "dev_ece" : "nll") << "\",\n";
  out << "  \"bins\": " << fit.bins << ",\n";
  out << "  \"mode\": \"" << (fit.mode == SchemeMode::Joint ? "joint" : "pipeline")
      << "\",\n";
  out << "  \"at_bound\": " << (fit.at_bound ? "true" : "false") << "\n";
  out << "}\n";
}

TemperatureFit parse_temperature_fit(std::istream& in) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::MalformedLine, e.what());
  }
  TemperatureFit fit;
  fit.tau = obj.at("tau").get<double>();
  if (!(fit.tau > 0.0)) throw Error(ErrorKind::NonPositiveTemperature, "in fit file");
  fit.dev_objective = obj.at("dev_objective").get<double>();
  fit.objective =
      obj.at("objective").get<std::string>() == "nll" ? FitObjective::NLL : FitObjective::DevECE;
  fit.bins = obj.at("bins").get<int>();
  fit.mode = obj.at("mode").get<std::string>() == "pipeline" ? SchemeMode::Pipeline
                                                             : SchemeMode::Joint;
  fit.at_bound = obj.at("at_bound").get<bool>();
  return fit;
}

namespace {

double accuracy_of(const std::vector<ScoredPrediction>& preds) {
  if (preds.empty()) throw Error(ErrorKind::EmptyLog, "no predictions");
  std::int64_t correct = 0;
  for (const ScoredPrediction& p : preds) correct += p.correct ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

}  // namespace

std::vector<ScoredPrediction> binary_baseline(const std::vector<ScoredPrediction>& dev,
                                              const std::vector<ScoredPrediction>& test) {
  const double t = accuracy_of(dev);
  if (test.empty()) throw Error(ErrorKind::EmptyLog, "no test predictions");
  const std::int64_t k = round_half_even(t * static_cast<double>(test.size()));
  std::vector<std::size_t> order(test.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (test[a].confidence != test[b].confidence) {
      return test[a].confidence > test[b].confidence;
    }
    return test[a].id < test[b].id;
  });
  std::vector<ScoredPrediction> out = test;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[order[i]].confidence = static_cast<std::int64_t>(i) < k ? 1.0 : 0.0;
  }
  return out;
}

std::vector<ScoredPrediction> average_baseline(const std::vector<ScoredPrediction>& dev,
                                               const std::vector<ScoredPrediction>& test) {
  const double t = accuracy_of(dev);
  if (test.empty()) throw Error(ErrorKind::EmptyLog, "no test predictions");
  std::vector<ScoredPrediction> out = test;
  for (ScoredPrediction& p : out) p.confidence = t;
  return out;
}

std::vector<ScoredPrediction> random_baseline(const std::vector<ScoredPrediction>& test,
                                              std::uint64_t seed) {
  Rng rng(derive_seed(seed, "random-baseline"));
  std::vector<ScoredPrediction> out = test;
  for (ScoredPrediction& p : out) p.confidence = rng.uniform();
  return out;
}

namespace {

// checkpoints agreeing with the final (last) answer; >= 1 by construction
int agreement_count(const CheckpointTrace& t) {
  int k = 0;
  for (const std::string& a : t.checkpoint_answers) {
    if (a == t.checkpoint_answers.back()) ++k;
  }
  return k;
}

std::vector<ScoredPrediction> binary_conscal(const std::vector<CheckpointTrace>& traces,
                                             int threshold) {
  std::vector<ScoredPrediction> out;
  out.reserve(traces.size());
  for (const CheckpointTrace& t : traces) {
    ScoredPrediction p;
    p.id = t.id;
    p.confidence = agreement_count(t) > threshold ? 1.0 : 0.0;
    p.correct = t.final_correct;
    p.answer = t.checkpoint_answers.back();
    out.push_back(std::move(p));
  }
  return out;
}

FeatureRecord agreement_features(const CheckpointTrace& t) {
  FeatureRecord r;
  r.id = t.id;
  r.features.reserve(t.checkpoint_answers.size());
  for (const std::string& a : t.checkpoint_answers) {
    r.features.push_back(a == t.checkpoint_answers.back() ? 1.0 : 0.0);
  }
  r.correct = t.final_correct;
  return r;
}

}  // namespace

int conscal_auto_threshold(const std::vector<CheckpointTrace>& dev) {
  if (dev.empty()) throw Error(ErrorKind::EmptyLog, "empty dev traces");
  const int n_checkpoints = static_cast<int>(dev.front().checkpoint_answers.size());
  int best_n = 0;
  double best_obj = 0.0;
  bool have = false;
  for (int n = 0; n < n_checkpoints; ++n) {
    IceTriple t = ice(binary_conscal(dev, n));
    // single-class dev logs fall back to the side that exists
    double obj = *macro_ce_of(t, DegeneratePolicy::UseDefinedSide);
    if (!have || obj <= best_obj) {  // ties keep the larger n
      best_obj = obj;
      best_n = n;
      have = true;
    }
  }
  return best_n;
}

std::vector<ScoredPrediction> conscal(const std::vector<CheckpointTrace>& traces,
                                      const ConsCalConfig& cfg,
                                      const std::vector<CheckpointTrace>* dev) {
  if (traces.empty()) throw Error(ErrorKind::EmptyLog, "no traces");
  const int n_checkpoints = static_cast<int>(traces.front().checkpoint_answers.size());
  if (dev && !dev->empty() &&
      static_cast<int>(dev->front().checkpoint_answers.size()) != n_checkpoints) {
    throw Error(ErrorKind::InconsistentCheckpointCount,
                "dev traces have " + std::to_string(dev->front().checkpoint_answers.size()) +
                    " checkpoints, main traces " + std::to_string(n_checkpoints));
  }
  switch (cfg.mode) {
    case ConsCalMode::Binary: {
      int threshold;
      if (cfg.threshold) {
        threshold = *cfg.threshold;
        if (threshold < 0 || threshold > n_checkpoints) {
          throw Error(ErrorKind::MalformedLine,
                      "threshold must be in [0, " + std::to_string(n_checkpoints) + "]");
        }
      } else {
        if (!dev || dev->empty()) {
          throw Error(ErrorKind::MissingDevSet, "auto threshold needs dev traces");
        }
        threshold = conscal_auto_threshold(*dev);
      }
      return binary_conscal(traces, threshold);
    }
    case ConsCalMode::Frequency: {
      std::vector<ScoredPrediction> out;
      out.reserve(traces.size());
      for (const CheckpointTrace& t : traces) {
        ScoredPrediction p;
        p.id = t.id;
        p.confidence =
            static_cast<double>(agreement_count(t)) / static_cast<double>(n_checkpoints);
        p.correct = t.final_correct;
        p.answer = t.checkpoint_answers.back();
        out.push_back(std::move(p));
      }
      return out;
    }
    case ConsCalMode::Classifier: {
      if (!dev || dev->empty()) {
        throw Error(ErrorKind::MissingDevSet, "classifier mode needs dev traces");
      }
      std::vector<FeatureRecord> train;
      train.reserve(dev->size());
      for (const CheckpointTrace& t : *dev) train.push_back(agreement_features(t));
      LogisticModel model = fit_logistic(train, cfg.seed);
      std::vector<ScoredPrediction> out;
      out.reserve(traces.size());
      for (const CheckpointTrace& t : traces) {
        ScoredPrediction p;
        p.id = t.id;
        p.confidence = predict_logistic(model, agreement_features(t));
        p.correct = t.final_correct;
        p.answer = t.checkpoint_answers.back();
        out.push_back(std::move(p));
      }
      return out;
    }
  }
  throw Error(ErrorKind::MalformedLine, "unknown conscal mode");
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// numerically stable binary cross-entropy from the raw logit
double cross_entropy(double z, double y) {
  return std::fmax(z, 0.0) - y * z + std::log1p(std::exp(-std::fabs(z)));
}

struct Standardized {
  std::vector<std::vector<double>> x;  // standardized features
  std::vector<double> y;
};

double raw_logit(const std::vector<double>& w, double b, const std::vector<double>& x) {
  StableSum z;
  for (std::size_t j = 0; j < w.size(); ++j) z.add(w[j] * x[j]);
  z.add(b);
  return z.value();
}

double mean_ce(const std::vector<double>& w, double b, const Standardized& data) {
  StableSum loss;
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    loss.add(cross_entropy(raw_logit(w, b, data.x[i]), data.y[i]));
  }
  return loss.value() / static_cast<double>(data.x.size());
}

constexpr double kLambda = 1e-4;
constexpr double kBaseLr = 0.1;
constexpr int kMaxEpochs = 1000;
constexpr int kPatience = 10;
constexpr double kMinImprovement = 1e-6;

double regularized_loss(const std::vector<double>& w, double b, const Standardized& data) {
  StableSum penalty;
  for (double wj : w) penalty.add(wj * wj);
  return mean_ce(w, b, data) + 0.5 * kLambda * penalty.value();
}

}  // namespace

LogisticModel fit_logistic(const std::vector<FeatureRecord>& train, std::uint64_t seed) {
  if (train.size() < 20) {
    throw Error(ErrorKind::TooFewRecords,
                "need at least 20 records, got " + std::to_string(train.size()));
  }
  const std::size_t dim = train.front().features.size();
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].features.size() != dim) {
      throw Error(ErrorKind::DimensionMismatch, train[i].id);
    }
    (train[i].correct ? pos : neg).push_back(i);
  }
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorKind::SingleClassTrainingSet,
                pos.empty() ? "no correct records" : "no incorrect records");
  }
  // Balance by downsampling the majority class, keeping original order.
  const std::size_t per_class = std::min(pos.size(), neg.size());
  if (per_class < 3) {
    throw Error(ErrorKind::TooFewRecords, "need at least 3 records in each class");
  }
  {
    Rng rng(derive_seed(seed, "balance"));
    std::vector<std::size_t>& majority = pos.size() > neg.size() ? pos : neg;
    rng.shuffle(majority);
    majority.resize(per_class);
    std::sort(majority.begin(), majority.end());
  }
  // 10% validation hold-out (at least 2 records), stratified by class so the
  // training side keeps its balance to within one record
  const std::size_t v_total = std::max<std::size_t>(
      2, static_cast<std::size_t>(round_half_even(0.1 * static_cast<double>(2 * per_class))));
  const std::size_t v_pos = v_total / 2;
  const std::size_t v_neg = v_total - v_pos;
  Rng pos_rng(derive_seed(seed, "holdout-pos"));
  pos_rng.shuffle(pos);
  Rng neg_rng(derive_seed(seed, "holdout-neg"));
  neg_rng.shuffle(neg);
  std::vector<std::size_t> val_ids(pos.begin(), pos.begin() + v_pos);
  val_ids.insert(val_ids.end(), neg.begin(), neg.begin() + v_neg);
  std::vector<std::size_t> train_ids(pos.begin() + v_pos, pos.end());
  train_ids.insert(train_ids.end(), neg.begin() + v_neg, neg.end());
  std::sort(val_ids.begin(), val_ids.end());
  std::sort(train_ids.begin(), train_ids.end());

  LogisticModel model;
  model.feature_means.assign(dim, 0.0);
  model.feature_stds.assign(dim, 1.0);
  std::vector<bool> frozen(dim, false);
  for (std::size_t j = 0; j < dim; ++j) {
    StableSum s;
    for (std::size_t i : train_ids) s.add(train[i].features[j]);
    model.feature_means[j] = s.value() / static_cast<double>(train_ids.size());
    StableSum sq;
    for (std::size_t i : train_ids) {
      const double d = train[i].features[j] - model.feature_means[j];
      sq.add(d * d);
    }
    const double var = sq.value() / static_cast<double>(train_ids.size());
    if (var > 0.0) {
      model.feature_stds[j] = std::sqrt(var);
    } else {
      frozen[j] = true;  // constant feature: std 1, weight pinned at 0
    }
  }

  auto standardize = [&](const std::vector<std::size_t>& ids) {
    Standardized d;
    for (std::size_t i : ids) {
      std::vector<double> x(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        x[j] = (train[i].features[j] - model.feature_means[j]) / model.feature_stds[j];
      }
      d.x.push_back(std::move(x));
      d.y.push_back(train[i].correct ? 1.0 : 0.0);
    }
    return d;
  };
  const Standardized tr = standardize(train_ids);
  const Standardized va = standardize(val_ids);

  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  double train_loss = regularized_loss(w, b, tr);
  double lr = kBaseLr;
  std::vector<double> best_w = w;
  double best_b = b;
  double best_val = mean_ce(w, b, va);
  int since_improvement = 0;
  int epoch = 0;
  const double inv_n = 1.0 / static_cast<double>(tr.x.size());

  while (epoch < kMaxEpochs) {
    std::vector<StableSum> gw(dim);
    StableSum gb;
    for (std::size_t i = 0; i < tr.x.size(); ++i) {
      const double r = sigmoid(raw_logit(w, b, tr.x[i])) - tr.y[i];
      for (std::size_t j = 0; j < dim; ++j) gw[j].add(r * tr.x[i][j]);
      gb.add(r);
    }
    std::vector<double> grad(dim);
    for (std::size_t j = 0; j < dim; ++j) grad[j] = gw[j].value() * inv_n + kLambda * w[j];
    const double grad_b = gb.value() * inv_n;

    // Shrink the step until the training loss stops increasing.
    bool accepted = false;
    std::vector<double> w_next(dim);
    double b_next = 0.0, loss_next = 0.0;
    for (int half = 0; half < 40; ++half) {
      for (std::size_t j = 0; j < dim; ++j) {
        w_next[j] = frozen[j] ? 0.0 : w[j] - lr * grad[j];
      }
      b_next = b - lr * grad_b;
      loss_next = regularized_loss(w_next, b_next, tr);
      if (loss_next <= train_loss) {
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;  // cannot descend further
    w = w_next;
    b = b_next;
    train_loss = loss_next;
    ++epoch;

    const double val = mean_ce(w, b, va);
    if (val < best_val - kMinImprovement) {
      best_val = val;
      best_w = w;
      best_b = b;
      since_improvement = 0;
    } else {
      ++since_improvement;
      if (since_improvement >= kPatience) break;
    }
  }

  model.weights = best_w;
  model.bias = best_b;
  model.epochs = epoch;
  model.final_validation_loss = best_val;
  return model;
}

double predict_logistic(const LogisticModel& model, const FeatureRecord& rec) {
  if (rec.features.size() != model.weights.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                rec.id + ": model has " + std::to_string(model.weights.size()) +
                    " features, record " + std::to_string(rec.features.size()));
  }
  StableSum z;
  for (std::size_t j = 0; j < model.weights.size(); ++j) {
    z.add(model.weights[j] * (rec.features[j] - model.feature_means[j]) /
          model.feature_stds[j]);
  }
  z.add(model.bias);
  return sigmoid(z.value());
}

std::vector<ScoredPrediction> apply_logistic(const LogisticModel& model,
                                             const std::vector<FeatureRecord>& recs) {
  std::vector<ScoredPrediction> out;
  out.reserve(recs.size());
  for (const FeatureRecord& r : recs) {
    ScoredPrediction p;
    p.id = r.id;
    p.confidence = predict_logistic(model, r);
    p.correct = r.correct;
    out.push_back(std::move(p));
  }
  return out;
}

void write_logistic_model(std::ostream& out, const LogisticModel& model) {
  auto write_vec = [&](const std::vector<double>& v) {
    out << "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out << ", ";
      out << format_real(v[i]);
    }
    out << "]";
  };
  out << "{\n  \"weights\": ";
  write_vec(model.weights);
  out << ",\n  \"bias\": " << format_real(model.bias);
  out << ",\n  \"feature_means\": ";
  write_vec(model.feature_means);
  out << ",\n  \"feature_stds\": ";
  write_vec(model.feature_stds);
  out << ",\n  \"train_meta\": {\"epochs\": " << model.epochs
      << ", \"final_validation_loss\": " << format_real(model.final_validation_loss)
      << "}\n}\n";
}

LogisticModel parse_logistic_model(std::istream& in) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::MalformedLine, e.what());
  }
  LogisticModel m;
  m.weights = obj.at("weights").get<std::vector<double>>();
  m.bias = obj.at("bias").get<double>();
  m.feature_means = obj.at("feature_means").get<std::vector<double>>();
  m.feature_stds = obj.at("feature_stds").get<std::vector<double>>();
  if (m.feature_means.size() != m.weights.size() ||
      m.feature_stds.size() != m.weights.size()) {
    throw Error(ErrorKind::DimensionMismatch, "model file fields disagree on dimension");
  }
  m.epochs = obj.at("train_meta").at("epochs").get<int>();
  m.final_validation_loss = obj.at("train_meta").at("final_validation_loss").get<double>();
  return m;
}

}  // namespace calikit
