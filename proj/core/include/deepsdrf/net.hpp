#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace deepsdrf {

enum class OutputHead { kVector, kPerStepSigmoid };
enum class Arch { kRecurrent, kLinear };
enum class LossKind { kMse, kCde, kMaskedBce };
enum class Optimizer { kSgd, kAdam };

// Architecture and training settings of a sequence regressor.
struct NetConfig {
  int history_u = 1;  // sequence length consumed by the net
  int input_dim = 1;  // features per step
  int dense_layers = 2;
  int dense_units = 4;
  int recurrent_units = 8;
  int output_dim = 1;  // J for the vector head; must be 1 for per-step sigmoid
  OutputHead head = OutputHead::kVector;
  Arch arch = Arch::kRecurrent;
  int batch_size = 128;
  double learning_rate = 0.01;
  int epochs = 50;
  Optimizer optimizer = Optimizer::kSgd;
  std::uint64_t seed = 0;

  void validate() const;
};

// A batch of fixed-length sequences. `inputs` is step-major: the features of
// step t occupy columns [t*features, (t+1)*features). `mask` is a per-patient
// prefix mask (1 while observed, 0 afterwards); an empty mask means all ones.
// Targets: vector head -> n x output_dim, per-step head -> n x steps.
struct SequenceBatch {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd mask;
  Eigen::MatrixXd targets;
  int steps = 0;
  int features = 0;

  int rows() const { return static_cast<int>(inputs.rows()); }
  void validate_shapes() const;
  Eigen::MatrixXd effective_mask() const;  // all-ones when mask is empty
  SequenceBatch take(const std::vector<int>& row_indices) const;
};

struct TrainingDivergence : std::runtime_error {
  explicit TrainingDivergence(const std::string& what) : std::runtime_error(what) {}
};

// Gated-recurrent sequence regressor with a dense stack on top, trained by
// backpropagation through time. Update/reset-gate equations:
//   z_t = sigmoid(Wz x_t + Uz h_{t-1} + bz)
//   r_t = sigmoid(Wr x_t + Ur h_{t-1} + br)
//   c_t = tanh(Wh x_t + Uh (r_t . h_{t-1}) + bh)
//   h_t = (1 - z_t) . h_{t-1} + z_t . c_t
// Masked steps carry the previous state through unchanged and contribute
// nothing to the loss. The linear arch is a single affine map over the
// masked, flattened input window.
class Network {
 public:
  Network() = default;
  explicit Network(const NetConfig& cfg);  // deterministic init from cfg.seed

  const NetConfig& config() const { return cfg_; }

  // Returns n x output_dim (vector head) or n x steps of sigmoid
  // probabilities (per-step head). Targets are not consulted.
  Eigen::MatrixXd forward(const SequenceBatch& batch) const;

  double loss(const SequenceBatch& batch, LossKind kind) const;
  // Loss and the gradient with respect to all parameters (flat layout).
  double loss_and_gradient(const SequenceBatch& batch, LossKind kind,
                           Eigen::VectorXd& grad) const;

  int parameter_count() const { return static_cast<int>(theta_.size()); }
  const Eigen::VectorXd& parameters_flat() const { return theta_; }
  void set_parameters_flat(const Eigen::VectorXd& p);

  // Named views into the flat parameter vector, in layout order.
  struct ParamBlock {
    std::string name;
    int offset = 0, rows = 0, cols = 0;
  };
  const std::vector<ParamBlock>& layout() const { return layout_; }

 private:
  struct Cache;
  void check_batch(const SequenceBatch& batch) const;
  Eigen::MatrixXd run_forward(const SequenceBatch& batch, Cache* cache) const;

  NetConfig cfg_;
  Eigen::VectorXd theta_;
  std::vector<ParamBlock> layout_;
};

struct TrainResult {
  // Full-data loss before training (index 0) and after each epoch.
  std::vector<double> epoch_loss;
  bool restored_best = false;  // best-epoch weights restored at the end
};

// Mini-batch training with the configured optimizer. Throws
// TrainingDivergence when the loss becomes non-finite. Bit-deterministic
// given (config, data, seed).
TrainResult train(Network& net, const SequenceBatch& data, LossKind kind);

// Max relative error between backprop and central finite differences
// (step 1e-5) over every parameter; relative to max(|a|, |b|, 1).
double gradient_check(const Network& net, const SequenceBatch& sample, LossKind kind);

// Hyperparameter search ranges. Defaults derive from the follow-up horizon,
// the covariate dimension and the sample size.
struct TuningRanges {
  int history_min = 1, history_max = 1;
  int batch_min = 1, batch_max = 1;
  int dense_layers_min = 1, dense_layers_max = 1;
  int dense_units_min = 1, dense_units_max = 1;
  int recurrent_min = 1, recurrent_max = 1;
  int basis_min = 30, basis_max = 60;

  static TuningRanges defaults(int max_followup, int dim_d, int n_samples);
};

NetConfig sample_net_config(const NetConfig& base, const TuningRanges& ranges,
                            std::mt19937_64& rng);

// Draws `candidates` random configurations, scores each with `score`
// (lower is better), and returns the best one. The base configuration is
// always scored as well, so the result never regresses below it.
NetConfig random_search(const NetConfig& base, const TuningRanges& ranges, int candidates,
                        std::uint64_t seed,
                        const std::function<double(const NetConfig&)>& score);

}  // namespace deepsdrf
