#include "xconsist/toytrain.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xconsist/rng.hpp"
#include "xconsist/softrank.hpp"
#include "xconsist/text.hpp"

namespace xconsist::toy {

namespace {

// Stream tags so dataset, init and training draws never overlap.
constexpr std::uint64_t kTrainSetTag = 0x7472'6169'6e00ULL;
constexpr std::uint64_t kTestSetTag = 0x7465'7374'0000ULL;
constexpr std::uint64_t kInitTag = 0x696e'6974'0000ULL;
constexpr std::uint64_t kStepTag = 0x7374'6570'0000ULL;

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64_mix(splitmix64_mix(seed) ^ tag);
}

// Uniform in (0, 1], so "r <= gamma" never fires for gamma = 0 and always
// fires for gamma = 1.
double open_closed_unit(SplitMix64& rng) {
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

struct HeadPass {
  Eigen::VectorXd h;
  Eigen::VectorXd logp;
  Eigen::VectorXd p;
};

HeadPass forward(const ToyModel& model, const Eigen::VectorXd& x, int task) {
  HeadPass out;
  out.h = model.embedding.transpose() * x;
  const Eigen::VectorXd z = model.heads[task].transpose() * out.h;
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  out.logp = z.array() - lse;
  out.p = out.logp.array().exp();
  return out;
}

LossAndGrad zero_grads(const ToyModel& model) {
  LossAndGrad g;
  g.grad_embedding = Eigen::MatrixXd::Zero(model.embedding.rows(), model.embedding.cols());
  for (const auto& head : model.heads) {
    g.grad_heads.push_back(Eigen::MatrixXd::Zero(head.rows(), head.cols()));
  }
  return g;
}

// Accumulates the parameter gradient for dL/dz = dz on one head.
void backprop(const ToyModel& model, const Eigen::VectorXd& x, int task, const HeadPass& pass,
              const Eigen::VectorXd& dz, LossAndGrad& g) {
  g.grad_heads[task].noalias() += pass.h * dz.transpose();
  const Eigen::VectorXd dh = model.heads[task] * dz;
  g.grad_embedding.noalias() += x * dh.transpose();
}

void check_model_instance(const ToyModel& model, const ToyInstance& inst) {
  if (inst.features.size() != model.concepts()) {
    throw ValidationError("instance feature size does not match the model");
  }
  if (static_cast<int>(inst.eval_labels.size()) + 1 != model.tasks()) {
    throw ValidationError("instance label count does not match the model's task count");
  }
}

}  // namespace

ToyDataset make_synthetic_dataset(const DatasetConfig& config, std::uint64_t seed) {
  std::vector<std::string> errs;
  if (config.n < 0) errs.push_back("n must be >= 0");
  if (config.k_contrasts < 2) errs.push_back("k_contrasts must be >= 2");
  if (config.concepts <= config.k_contrasts) errs.push_back("concepts must exceed k_contrasts");
  if (!(config.noise >= 0.0) || !std::isfinite(config.noise)) errs.push_back("noise must be >= 0");
  if (config.eval_tasks < 1) errs.push_back("eval_tasks must be >= 1");
  if (!(config.eval_label_fraction >= 0.0 && config.eval_label_fraction <= 1.0)) {
    errs.push_back("eval_label_fraction must lie in [0, 1]");
  }
  if (!(config.eval_label_noise >= 0.0 && config.eval_label_noise <= 1.0)) {
    errs.push_back("eval_label_noise must lie in [0, 1]");
  }
  if (!errs.empty()) throw ValidationError(std::move(errs));

  SplitMix64 rng(seed);
  ToyDataset data;
  data.config = config;
  data.instances.reserve(config.n);
  const auto V = static_cast<std::uint64_t>(config.concepts);
  for (int i = 0; i < config.n; ++i) {
    ToyInstance inst;
    inst.gold = static_cast<int>(rng.below(V));
    inst.features.resize(config.concepts);
    for (int v = 0; v < config.concepts; ++v) {
      inst.features[v] = (v == inst.gold ? 1.0 : 0.0) + config.noise * rng.normal();
    }
    std::set<int> used{inst.gold};
    while (static_cast<int>(inst.contrasts.size()) < config.k_contrasts) {
      const int c = static_cast<int>(rng.below(V));
      if (used.insert(c).second) inst.contrasts.push_back(c);
    }
    for (int t = 0; t < config.eval_tasks; ++t) {
      int label = -1;
      if (rng.uniform01() < config.eval_label_fraction) {
        label = inst.gold;
        if (rng.uniform01() < config.eval_label_noise) {
          label = static_cast<int>(rng.below(V - 1));
          if (label >= inst.gold) ++label;
        }
      }
      inst.eval_labels.push_back(label);
    }
    data.instances.push_back(std::move(inst));
  }
  return data;
}

Eigen::VectorXd ToyModel::log_probs(const Eigen::VectorXd& features, int task) const {
  return forward(*this, features, task).logp;
}

bool ToyModel::operator==(const ToyModel& other) const {
  if (embedding.rows() != other.embedding.rows() || embedding.cols() != other.embedding.cols() ||
      heads.size() != other.heads.size()) {
    return false;
  }
  if (embedding != other.embedding) return false;
  for (std::size_t t = 0; t < heads.size(); ++t) {
    if (heads[t] != other.heads[t]) return false;
  }
  return true;
}

ToyModel init_model(int concepts, int dim, int tasks, double init_scale, std::uint64_t seed) {
  if (concepts < 2 || dim < 1 || tasks < 2) {
    throw ValidationError("model needs concepts >= 2, dim >= 1 and at least 2 tasks");
  }
  SplitMix64 rng(seed);
  ToyModel m;
  m.embedding.resize(concepts, dim);
  for (int r = 0; r < concepts; ++r)
    for (int c = 0; c < dim; ++c) m.embedding(r, c) = init_scale * rng.normal();
  for (int t = 0; t < tasks; ++t) {
    Eigen::MatrixXd head(dim, concepts);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < concepts; ++c) head(r, c) = init_scale * rng.normal();
    m.heads.push_back(std::move(head));
  }
  return m;
}

LossAndGrad consistency_objective(const ToyModel& model, const ToyInstance& inst, int eval_task,
                                  const TrainConfig& config) {
  check_model_instance(model, inst);
  if (eval_task < 1 || eval_task >= model.tasks()) {
    throw ValidationError("eval_task must name a non-anchor head");
  }
  LossAndGrad g = zero_grads(model);
  const HeadPass pa = forward(model, inst.features, 0);
  const HeadPass pe = forward(model, inst.features, eval_task);

  std::vector<int> cands{inst.gold};
  cands.insert(cands.end(), inst.contrasts.begin(), inst.contrasts.end());
  const auto n = cands.size();

  Eigen::VectorXd dza = pa.p - Eigen::VectorXd::Unit(pa.p.size(), inst.gold);
  g.ce = -pa.logp[inst.gold];
  Eigen::VectorXd dze = Eigen::VectorXd::Zero(pe.p.size());
  const int eval_label = inst.eval_labels[eval_task - 1];
  if (eval_label >= 0) {
    dze = pe.p - Eigen::VectorXd::Unit(pe.p.size(), eval_label);
    g.ce += -pe.logp[eval_label];
  }

  if (config.consistency_loss) {
    std::vector<double> la(n), le(n);
    for (std::size_t i = 0; i < n; ++i) {
      la[i] = -pa.logp[cands[i]];
      le[i] = -pe.logp[cands[i]];
    }
    const auto cl = consistency_loss(
        la, le, {config.epsilon, RankDirection::HigherScoreHigherRank});
    g.consistency = cl.loss;
    // dL_i/dz = p - e_{c_i}
    auto lift = [&](const std::vector<double>& gl, const Eigen::VectorXd& p) {
      double s = 0.0;
      for (double v : gl) s += v;
      Eigen::VectorXd dz = s * p;
      for (std::size_t i = 0; i < n; ++i) dz[cands[i]] -= gl[i];
      return dz;
    };
    dza += config.lambda * lift(cl.grad_anchor, pa.p);
    dze += config.lambda * lift(cl.grad_eval, pe.p);
  }
  g.total = combined_loss(g.ce, g.consistency, config.lambda);
  backprop(model, inst.features, 0, pa, dza, g);
  backprop(model, inst.features, eval_task, pe, dze, g);
  return g;
}

LossAndGrad standard_objective(const ToyModel& model, const ToyInstance& inst) {
  check_model_instance(model, inst);
  LossAndGrad g = zero_grads(model);
  for (int t = 0; t < model.tasks(); ++t) {
    const int label = t == 0 ? inst.gold : inst.eval_labels[t - 1];
    if (label < 0) continue;
    const HeadPass pass = forward(model, inst.features, t);
    g.ce += -pass.logp[label];
    const Eigen::VectorXd dz = pass.p - Eigen::VectorXd::Unit(pass.p.size(), label);
    backprop(model, inst.features, t, pass, dz, g);
  }
  g.total = g.ce;
  return g;
}

DivergenceError::DivergenceError(int step)
    : NumericError("training diverged at step " + std::to_string(step) +
                   " (non-finite loss)"),
      step_(step) {}

TrainResult train(ToyModel model, const ToyDataset& data, const TrainConfig& config) {
  std::vector<std::string> errs;
  if (!(config.gamma >= 0.0 && config.gamma <= 1.0)) errs.push_back("gamma must lie in [0, 1]");
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) {
    errs.push_back("lambda must be finite and >= 0");
  }
  if (!(config.epsilon > 0.0)) errs.push_back("epsilon must be > 0");
  if (!(config.lr > 0.0) || !std::isfinite(config.lr)) errs.push_back("lr must be finite and > 0");
  if (config.steps < 0) errs.push_back("steps must be >= 0");
  if (data.instances.empty()) errs.push_back("training set is empty");
  if (!errs.empty()) throw ValidationError(std::move(errs));

  TrainResult result;
  result.log.reserve(config.steps);
  SplitMix64 rng(derive(config.seed, kStepTag));
  const auto n = static_cast<std::uint64_t>(data.instances.size());
  const auto evals = static_cast<std::uint64_t>(model.tasks() - 1);

  for (int step = 0; step < config.steps; ++step) {
    const double r = open_closed_unit(rng);
    const auto& inst = data.instances[rng.below(n)];
    StepLog entry;
    entry.step = step;
    LossAndGrad g;
    if (r <= config.gamma) {
      entry.branch = Branch::Consistency;
      entry.eval_task = 1 + static_cast<int>(rng.below(evals));
      g = consistency_objective(model, inst, entry.eval_task, config);
    } else {
      g = standard_objective(model, inst);
    }
    if (!std::isfinite(g.total)) throw DivergenceError(step);
    entry.ce = g.ce;
    entry.consistency = g.consistency;
    entry.total = g.total;
    result.log.push_back(entry);

    model.embedding -= config.lr * g.grad_embedding;
    for (int t = 0; t < model.tasks(); ++t) model.heads[t] -= config.lr * g.grad_heads[t];
    if (!model.embedding.allFinite()) throw DivergenceError(step);
  }
  result.model = std::move(model);
  return result;
}

std::string step_log_to_csv(const std::vector<StepLog>& log) {
  std::ostringstream os;
  os << "step,branch,L_ce,L_const,total\n";
  for (const auto& e : log) {
    os << e.step << ',' << (e.branch == Branch::Consistency ? "consistency" : "standard") << ','
       << format_real(e.ce) << ',' << format_real(e.consistency) << ',' << format_real(e.total)
       << '\n';
  }
  return os.str();
}

std::string task_name(int task) {
  if (task == 0) return "anchor";
  if (task == 1) return "eval";
  return "eval" + std::to_string(task);
}

EvaluationBundle export_eval_bundle(const ToyModel& model, const ToyDataset& data) {
  std::vector<ContrastSample> samples;
  std::vector<LikelihoodRecord> records;
  char id[32];
  for (std::size_t i = 0; i < data.instances.size(); ++i) {
    const auto& inst = data.instances[i];
    check_model_instance(model, inst);
    std::snprintf(id, sizeof id, "toy-%06zu", i);
    ContrastSample s;
    s.sample_id = id;
    s.image_id = id;
    const std::string prefix = "a photo of ";
    const std::string gold = "concept_" + std::to_string(inst.gold);
    s.caption = prefix + gold;
    s.concept_span = {prefix.size(), prefix.size() + gold.size()};
    s.category = Category::Misc;
    for (std::size_t c = 0; c < inst.contrasts.size(); ++c) {
      s.contrasts.push_back(
          {"c" + std::to_string(c + 1), "concept_" + std::to_string(inst.contrasts[c])});
    }
    for (int t = 0; t < model.tasks(); ++t) {
      const Eigen::VectorXd logp = model.log_probs(inst.features, t);
      LikelihoodRecord r;
      r.sample_id = s.sample_id;
      r.task = task_name(t);
      r.gold_loglik = logp[inst.gold];
      for (std::size_t c = 0; c < inst.contrasts.size(); ++c) {
        r.contrasts.push_back({s.contrasts[c].contrast_id, logp[inst.contrasts[c]]});
      }
      records.push_back(std::move(r));
    }
    samples.push_back(std::move(s));
  }
  return make_bundle(std::move(samples), std::move(records), task_name(0));
}

ExperimentRun run_experiment(const ExperimentConfig& config, std::uint64_t seed) {
  ExperimentRun run;
  const ToyDataset train_set = make_synthetic_dataset(config.data, derive(seed, kTrainSetTag));
  DatasetConfig test_cfg = config.data;
  test_cfg.n = config.n_test;
  run.test = make_synthetic_dataset(test_cfg, derive(seed, kTestSetTag));

  ToyModel model = init_model(config.data.concepts, config.dim, config.data.eval_tasks + 1,
                              config.init_scale, derive(seed, kInitTag));
  TrainConfig tc = config.train;
  tc.seed = seed;
  run.trained = train(std::move(model), train_set, tc);
  run.bundle = export_eval_bundle(run.trained.model, run.test);
  run.report = build_report(run.bundle, task_name(0), task_name(1), 1);

  auto& s = run.summary;
  s.c1 = run.report.consistency_at_k.at(1);
  s.eval_accuracy = run.report.preference_accuracy_at_k.at(1);
  s.anchor_accuracy = run.report.anchor_preference_accuracy_at_k.at(1);
  s.rho = run.report.rho_rank.value_or(0.0);

  // Mean ranking loss over consistency steps in the first and last quarter.
  const auto& log = run.trained.log;
  const std::size_t quarter = log.size() / 4;
  auto mean_const = [&](std::size_t b, std::size_t e) {
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = b; i < e; ++i) {
      if (log[i].branch == Branch::Consistency) {
        sum += log[i].consistency;
        ++cnt;
      }
    }
    return cnt ? sum / static_cast<double>(cnt) : 0.0;
  };
  s.mean_consistency_first_quarter = mean_const(0, quarter);
  s.mean_consistency_last_quarter = mean_const(log.size() - quarter, log.size());
  return run;
}

namespace {

using json = nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where, std::vector<std::string>& errs) {
  if (!obj.is_object()) {
    errs.push_back(where + " must be an object");
    return;
  }
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) errs.push_back(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void take(const json& obj, const char* key, T& out, const std::string& where,
          std::vector<std::string>& errs) {
  if (!obj.is_object() || !obj.contains(key)) return;
  try {
    const auto& v = obj.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw std::runtime_error("expected a boolean");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw std::runtime_error("expected a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw std::runtime_error("expected an integer");
    } else {
      if (!v.is_number()) throw std::runtime_error("expected a number");
    }
    out = v.get<T>();
  } catch (const std::exception& e) {
    errs.push_back(where + "." + key + ": " + e.what());
  }
}

}  // namespace

ExperimentConfig read_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  std::vector<std::string> errs;
  ExperimentConfig c;
  reject_unknown(j, {"data", "train", "dim", "init_scale", "n_test", "seed"}, "config", errs);
  if (!errs.empty()) throw ValidationError(std::move(errs));
  take(j, "dim", c.dim, "config", errs);
  take(j, "init_scale", c.init_scale, "config", errs);
  take(j, "n_test", c.n_test, "config", errs);
  take(j, "seed", c.seed, "config", errs);
  if (j.contains("data")) {
    const auto& d = j["data"];
    reject_unknown(d,
                   {"n", "concepts", "noise", "k_contrasts", "eval_tasks",
                    "eval_label_fraction", "eval_label_noise"},
                   "data", errs);
    take(d, "n", c.data.n, "data", errs);
    take(d, "concepts", c.data.concepts, "data", errs);
    take(d, "noise", c.data.noise, "data", errs);
    take(d, "k_contrasts", c.data.k_contrasts, "data", errs);
    take(d, "eval_tasks", c.data.eval_tasks, "data", errs);
    take(d, "eval_label_fraction", c.data.eval_label_fraction, "data", errs);
    take(d, "eval_label_noise", c.data.eval_label_noise, "data", errs);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    reject_unknown(t, {"gamma", "lambda", "epsilon", "lr", "steps", "consistency_loss"}, "train",
                   errs);
    take(t, "gamma", c.train.gamma, "train", errs);
    take(t, "lambda", c.train.lambda, "train", errs);
    take(t, "epsilon", c.train.epsilon, "train", errs);
    take(t, "lr", c.train.lr, "train", errs);
    take(t, "steps", c.train.steps, "train", errs);
    take(t, "consistency_loss", c.train.consistency_loss, "train", errs);
  }
  if (c.dim < 1) errs.push_back("config.dim must be >= 1");
  if (c.n_test < 1) errs.push_back("config.n_test must be >= 1");
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return c;
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["data"] = {{"n", c.data.n},
               {"concepts", c.data.concepts},
               {"noise", c.data.noise},
               {"k_contrasts", c.data.k_contrasts},
               {"eval_tasks", c.data.eval_tasks},
               {"eval_label_fraction", c.data.eval_label_fraction},
               {"eval_label_noise", c.data.eval_label_noise}};
  j["train"] = {{"gamma", c.train.gamma},     {"lambda", c.train.lambda},
                {"epsilon", c.train.epsilon}, {"lr", c.train.lr},
                {"steps", c.train.steps},     {"consistency_loss", c.train.consistency_loss}};
  j["dim"] = c.dim;
  j["init_scale"] = c.init_scale;
  j["n_test"] = c.n_test;
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

}  // namespace xconsist::toy
