#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xconsist/errors.hpp"
#include "xconsist/metrics.hpp"
#include "xconsist/model.hpp"

namespace xconsist::toy {

// One synthetic pivot: a latent concept observed through a noisy one-hot
// feature vector shared by every task, plus the candidate contrast concepts.
struct ToyInstance {
  Eigen::VectorXd features;
  int gold = 0;
  std::vector<int> contrasts;
  // Label seen by each evaluation task's cross-entropy; -1 when the instance
  // carries no label for that task.
  std::vector<int> eval_labels;
};

struct DatasetConfig {
  int n = 2000;
  int concepts = 50;  // V
  double noise = 0.5;
  int k_contrasts = 4;
  int eval_tasks = 1;
  // Fraction of instances labeled for the evaluation tasks.
  // Scarce evaluation labels are what leave the two heads disagreeing after
  // plain cross-entropy training.
  double eval_label_fraction = 0.05;
  // Probability an evaluation label is replaced by a uniformly drawn wrong concept.
  double eval_label_noise = 0.0;
};

struct ToyDataset {
  DatasetConfig config;
  std::vector<ToyInstance> instances;
};

// Deterministic in (config, seed). Throws ValidationError unless
// concepts > k_contrasts >= 2 and n >= 0.
ToyDataset make_synthetic_dataset(const DatasetConfig& config, std::uint64_t seed);

// Shared embedding (V x d) followed by one linear head (d x V) per task;
// head 0 is the anchor.
struct ToyModel {
  Eigen::MatrixXd embedding;
  std::vector<Eigen::MatrixXd> heads;

  int concepts() const { return static_cast<int>(embedding.rows()); }
  int tasks() const { return static_cast<int>(heads.size()); }
  // Log-probabilities over the V concepts for one task.
  Eigen::VectorXd log_probs(const Eigen::VectorXd& features, int task) const;
  bool operator==(const ToyModel& other) const;
};

ToyModel init_model(int concepts, int dim, int tasks, double init_scale, std::uint64_t seed);

struct TrainConfig {
  double gamma = 0.5;
  double lambda = 0.25;
  double epsilon = 1.0;
  double lr = 1e-2;
  int steps = 40000;
  std::uint64_t seed = 0;
  // When false the consistency branch still runs its cross-entropy terms but
  // never evaluates the ranking loss.
  bool consistency_loss = true;
};

enum class Branch { Consistency, Standard };

struct StepLog {
  int step = 0;
  Branch branch = Branch::Standard;
  int eval_task = 0;  // head index used by a consistency step
  double ce = 0.0;
  double consistency = 0.0;
  double total = 0.0;
};

struct LossAndGrad {
  double ce = 0.0;
  double consistency = 0.0;
  double total = 0.0;
  Eigen::MatrixXd grad_embedding;
  std::vector<Eigen::MatrixXd> grad_heads;
};

// Consistency step objective on one instance:
//   lambda * 0.5 * ||softrank(L_anchor) - softrank(L_eval)||^2 + CE_anchor + CE_eval
// where L_t are the cross-entropy losses of [gold, contrasts...] under task t,
// ranked so the lowest loss gets rank 1. CE terms use the task's label (the
// evaluation term is dropped when the instance has none).
LossAndGrad consistency_objective(const ToyModel& model, const ToyInstance& instance,
                                  int eval_task, const TrainConfig& config);

// Standard step objective: sum of every task's cross-entropy on its label.
LossAndGrad standard_objective(const ToyModel& model, const ToyInstance& instance);

class DivergenceError : public NumericError {
 public:
  explicit DivergenceError(int step);
  int step() const { return step_; }

 private:
  int step_;
};

struct TrainResult {
  ToyModel model;
  std::vector<StepLog> log;
};

// One instance per step: with probability gamma a consistency update against
// a uniformly chosen evaluation task, otherwise a standard update; plain
// gradient descent at rate lr. Throws DivergenceError on a non-finite loss.
TrainResult train(ToyModel model, const ToyDataset& data, const TrainConfig& config);

std::string step_log_to_csv(const std::vector<StepLog>& log);

std::string task_name(int task);  // "anchor", "eval" or "eval<i>"

// Gold and contrast log-likelihoods of every instance under every head.
EvaluationBundle export_eval_bundle(const ToyModel& model, const ToyDataset& data);

struct ExperimentConfig {
  DatasetConfig data;
  TrainConfig train;
  int dim = 32;
  double init_scale = 0.5;
  int n_test = 2000;
  std::uint64_t seed = 1;
};

struct ArmResult {
  double c1 = 0.0;
  double eval_accuracy = 0.0;
  double anchor_accuracy = 0.0;
  double rho = 0.0;
  double mean_consistency_first_quarter = 0.0;
  double mean_consistency_last_quarter = 0.0;
};

struct ExperimentRun {
  TrainResult trained;
  ToyDataset test;
  EvaluationBundle bundle;
  ConsistencyReport report;
  ArmResult summary;
};

// Builds train/test sets from `seed`, trains, exports the held-out bundle and
// evaluates anchor vs the first evaluation task. The training seed inside
// `config.train` is replaced by `seed`.
ExperimentRun run_experiment(const ExperimentConfig& config, std::uint64_t seed);

ExperimentConfig read_experiment_config(const std::string& json_text);
std::string experiment_config_to_json(const ExperimentConfig& config);

}  // namespace xconsist::toy
