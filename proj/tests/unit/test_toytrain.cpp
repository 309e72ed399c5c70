#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "xconsist/metrics.hpp"
#include "xconsist/toytrain.hpp"

using namespace xconsist;
using namespace xconsist::toy;

namespace {

DatasetConfig small_data(int n = 200) {
  DatasetConfig d;
  d.n = n;
  d.concepts = 10;
  d.k_contrasts = 3;
  d.eval_label_fraction = 0.5;
  return d;
}

TrainConfig short_train(int steps = 500) {
  TrainConfig t;
  t.steps = steps;
  t.seed = 3;
  return t;
}

// Flattened parameter view for finite differences.
std::vector<double*> parameters(ToyModel& m) {
  std::vector<double*> p;
  for (Eigen::Index i = 0; i < m.embedding.size(); ++i) p.push_back(m.embedding.data() + i);
  for (auto& h : m.heads)
    for (Eigen::Index i = 0; i < h.size(); ++i) p.push_back(h.data() + i);
  return p;
}

std::vector<double> flat_grads(const LossAndGrad& g) {
  std::vector<double> out(g.grad_embedding.data(), g.grad_embedding.data() + g.grad_embedding.size());
  for (const auto& h : g.grad_heads) out.insert(out.end(), h.data(), h.data() + h.size());
  return out;
}

double c1_of(const ToyModel& m, const ToyDataset& d) {
  const auto b = export_eval_bundle(m, d);
  return *consistency_at_k(b, task_name(0), task_name(1), 1).value;
}

}  // namespace

TEST_CASE("dataset shape and determinism") {
  const auto a = make_synthetic_dataset(small_data(), 4);
  const auto b = make_synthetic_dataset(small_data(), 4);
  REQUIRE(a.instances.size() == 200);
  int labeled = 0;
  for (std::size_t i = 0; i < a.instances.size(); ++i) {
    const auto& x = a.instances[i];
    CHECK(x.features.size() == 10);
    CHECK(x.contrasts.size() == 3);
    CHECK(std::find(x.contrasts.begin(), x.contrasts.end(), x.gold) == x.contrasts.end());
    CHECK(x.features == b.instances[i].features);
    CHECK(x.contrasts == b.instances[i].contrasts);
    REQUIRE(x.eval_labels.size() == 1);
    labeled += x.eval_labels[0] >= 0;
  }
  CHECK(labeled > 60);
  CHECK(labeled < 140);
  CHECK(make_synthetic_dataset({0, 10, 0.5, 3, 1, 0.5, 0.0}, 1).instances.empty());
  CHECK_THROWS_AS(make_synthetic_dataset({10, 3, 0.5, 3, 1, 0.5, 0.0}, 1), ValidationError);
  CHECK_THROWS_AS(make_synthetic_dataset({10, 10, 0.5, 1, 1, 0.5, 0.0}, 1), ValidationError);
}

TEST_CASE("objective gradients match finite differences") {
  const auto data = make_synthetic_dataset(small_data(20), 8);
  ToyModel m = init_model(10, 4, 2, 0.5, 2);
  TrainConfig cfg;
  cfg.lambda = 0.7;
  cfg.epsilon = 0.8;
  for (int i = 0; i < 5; ++i) {
    const auto& inst = data.instances[i];
    for (int which = 0; which < 2; ++which) {
      auto objective = [&](const ToyModel& mm) {
        return which == 0 ? consistency_objective(mm, inst, 1, cfg) : standard_objective(mm, inst);
      };
      const auto analytic = flat_grads(objective(m));
      ToyModel probe = m;
      auto params = parameters(probe);
      std::vector<double> fd(params.size());
      const double h = 1e-6;
      for (std::size_t p = 0; p < params.size(); ++p) {
        const double keep = *params[p];
        *params[p] = keep + h;
        const double up = objective(probe).total;
        *params[p] = keep - h;
        const double down = objective(probe).total;
        *params[p] = keep;
        fd[p] = (up - down) / (2 * h);
      }
      CHECK(oracle::relative_error(analytic, fd) < 1e-4);
    }
  }
}

TEST_CASE("objective decomposes into lambda * L_const + CE") {
  const auto data = make_synthetic_dataset(small_data(5), 8);
  const ToyModel m = init_model(10, 4, 2, 0.5, 2);
  TrainConfig cfg;
  cfg.lambda = 0.25;
  const auto g = consistency_objective(m, data.instances[0], 1, cfg);
  CHECK(g.total == doctest::Approx(cfg.lambda * g.consistency + g.ce).epsilon(1e-12));
  CHECK(g.consistency >= 0.0);
}

TEST_CASE("training is bit-deterministic") {
  const auto data = make_synthetic_dataset(small_data(), 4);
  const auto m0 = init_model(10, 8, 2, 0.5, 1);
  const auto a = train(m0, data, short_train());
  const auto b = train(m0, data, short_train());
  CHECK(a.model == b.model);
  CHECK(step_log_to_csv(a.log) == step_log_to_csv(b.log));
  auto other = short_train();
  other.seed = 4;
  CHECK_FALSE(train(m0, data, other).model == a.model);
}

TEST_CASE("lambda 0 matches training with the ranking loss switched off") {
  const auto data = make_synthetic_dataset(small_data(), 4);
  const auto m0 = init_model(10, 8, 2, 0.5, 1);
  auto zero = short_train();
  zero.lambda = 0.0;
  auto off = short_train();
  off.consistency_loss = false;
  CHECK(train(m0, data, zero).model == train(m0, data, off).model);
}

TEST_CASE("gamma selects the branch") {
  const auto data = make_synthetic_dataset(small_data(), 4);
  const auto m0 = init_model(10, 8, 2, 0.5, 1);
  auto never = short_train();
  never.gamma = 0.0;
  for (const auto& s : train(m0, data, never).log) CHECK(s.branch == Branch::Standard);
  auto always = short_train();
  always.gamma = 1.0;
  for (const auto& s : train(m0, data, always).log) CHECK(s.branch == Branch::Consistency);
  int consistency = 0;
  for (const auto& s : train(m0, data, short_train(2000)).log) consistency += s.branch == Branch::Consistency;
  CHECK(consistency > 850);
  CHECK(consistency < 1150);
}

TEST_CASE("divergence is reported with its step") {
  const auto data = make_synthetic_dataset(small_data(), 4);
  auto cfg = short_train();
  cfg.lr = 1e12;
  try {
    train(init_model(10, 8, 2, 0.5, 1), data, cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() >= 0);
    CHECK(e.step() < cfg.steps);
  }
}

TEST_CASE("an untrained model is consistent about half the time") {
  DatasetConfig d;
  d.n = 2000;
  const auto test = make_synthetic_dataset(d, 77);
  const auto m = init_model(d.concepts, 32, 2, 0.5, 78);
  CHECK(std::abs(c1_of(m, test) - 0.5) < 0.05);
}

TEST_CASE("noise-free data is learned perfectly") {
  DatasetConfig d = small_data(300);
  d.noise = 0.0;
  d.eval_label_fraction = 1.0;
  const auto data = make_synthetic_dataset(d, 5);
  auto cfg = short_train(6000);
  cfg.lr = 0.1;
  const auto r = train(init_model(10, 8, 2, 0.5, 6), data, cfg);
  const auto b = export_eval_bundle(r.model, data);
  CHECK(*preference_accuracy_at_k(b, task_name(0), task_name(0), 1).value == 1.0);
  CHECK(*preference_accuracy_at_k(b, task_name(0), task_name(1), 1).value == 1.0);
  CHECK(c1_of(r.model, data) == 1.0);
}

TEST_CASE("default experiment: ranking loss shrinks and baseline is imperfect") {
  int shrinking = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig cfg;
    const auto run = run_experiment(cfg, seed);
    shrinking += run.summary.mean_consistency_last_quarter <= run.summary.mean_consistency_first_quarter;
    cfg.train.lambda = 0.0;
    const auto base = run_experiment(cfg, seed);
    CHECK(base.summary.anchor_accuracy > 0.5);
    CHECK(base.summary.anchor_accuracy < 1.0);
    CHECK(base.summary.eval_accuracy > 0.5);
    CHECK(base.summary.eval_accuracy < 1.0);
  }
  CHECK(shrinking >= 3);
}

TEST_CASE("experiment config JSON round trip and strict keys") {
  ExperimentConfig c;
  c.train.lambda = 0.5;
  c.data.n = 123;
  const auto back = read_experiment_config(experiment_config_to_json(c));
  CHECK(back.train.lambda == 0.5);
  CHECK(back.data.n == 123);
  CHECK(experiment_config_to_json(back) == experiment_config_to_json(c));
  CHECK_THROWS_AS(read_experiment_config("{\"dim\": 4, \"colour\": 1}"), ValidationError);
  CHECK_THROWS_AS(read_experiment_config("{\"seed\": -1}"), ValidationError);
  CHECK_THROWS_AS(read_experiment_config("{\"train\": {\"steps\": \"many\"}}"), ValidationError);
  CHECK_THROWS_AS(read_experiment_config("not json"), ValidationError);
  CHECK(read_experiment_config("{}").dim == ExperimentConfig{}.dim);
}

TEST_CASE("exported bundle is valid and names tasks") {
  const auto data = make_synthetic_dataset(small_data(10), 4);
  const auto b = export_eval_bundle(init_model(10, 4, 2, 0.5, 1), data);
  CHECK(check_bundle(b).empty());
  CHECK(b.samples.size() == 10);
  CHECK(b.records.size() == 20);
  REQUIRE(b.anchor() != nullptr);
  CHECK(b.anchor()->name == "anchor");
  CHECK(task_name(1) == "eval");
  CHECK(task_name(2) == "eval2");
}
