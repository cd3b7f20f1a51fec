#ifndef SDWANFP_SEQNET_HPP
#define SDWANFP_SEQNET_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sdwanfp/features.hpp"
#include "json.hpp"

namespace sdwanfp {

// Binary head (sigmoid) for control-vs-data, multiclass head (softmax) for
// protocol identification.
enum class Task : std::uint8_t { binary, multiclass };

std::string_view to_string(Task t);

inline constexpr double kProbClip = 1e-12;
inline constexpr int kCheckpointVersion = 1;

struct ModelDims {
  Task task = Task::binary;
  int input = 3;
  int hidden = 200;          // per direction; e_s has 2 * hidden entries
  int session_dim = 16;      // binary task only
  int dense_width = 32;
  int direction_width = 8;
  int classes = 2;           // 2 for binary, 3 for multiclass

  int output_rows() const { return task == Task::binary ? 1 : classes; }
  int representation_width() const {
    return 2 * hidden + (task == Task::binary ? session_dim : 0) + dense_width;
  }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Per-column standardization of S and scaling of the session count, fitted
/// on the training split and stored with the model.
struct Normalizer {
  std::array<double, 3> mean{0, 0, 0};
  std::array<double, 3> scale{1, 1, 1};
  double session_scale = 1.0;

  static Normalizer fit(std::span<const SequenceSample> samples);
};

struct ParamBlock {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

/// All learnable parameters live in one flat vector; blocks are column-major
/// views into it.
class SequenceModel {
 public:
  SequenceModel() = default;
  /// All parameters zero.
  explicit SequenceModel(const ModelDims& dims);
  /// Uniform(-0.08, 0.08) weights, forget-gate bias +1.
  static SequenceModel initialized(const ModelDims& dims, std::uint64_t seed);

  const ModelDims& dims() const { return dims_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block_info(std::string_view name) const;

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  Eigen::Map<Eigen::MatrixXd> block(std::string_view name);
  Eigen::Map<const Eigen::MatrixXd> block(std::string_view name) const;

  Normalizer normalizer;

 private:
  void add_block(std::string name, Eigen::Index rows, Eigen::Index cols);

  ModelDims dims_;
  std::vector<ParamBlock> blocks_;
  std::vector<double> params_;
};

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

/// One LSTM cell step, gate rows ordered input, forget, candidate, output.
LstmState lstm_step(const Eigen::Ref<const Eigen::MatrixXd>& w_input,
                    const Eigen::Ref<const Eigen::MatrixXd>& w_recurrent,
                    const Eigen::Ref<const Eigen::VectorXd>& bias,
                    const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& h_prev,
                    const Eigen::VectorXd& c_prev);

/// [h_fwd(T), h_bwd(1)] for the normalized sequence.
Eigen::VectorXd encode_sequence(const SequenceModel& model, const Sequence& S);

/// Sigmoid probability that a two-tuple sample is control traffic.
double forward_phase1(const SequenceModel& model, const SequenceSample& sample);
/// Softmax distribution over {RAFT, SWIM, OPENFLOW}.
Eigen::VectorXd forward_phase2(const SequenceModel& model, const SequenceSample& sample);

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

/// Mean binary cross-entropy with probabilities clipped to [eps, 1 - eps].
double bce_loss(std::span<const double> predicted, std::span<const int> truth);
/// Mean over rows of -log p(true class); rows of `truth` are one-hot.
double ce_loss(const Eigen::Ref<const Eigen::MatrixXd>& predicted,
               const Eigen::Ref<const Eigen::MatrixXd>& truth);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // same layout as SequenceModel::params()
};

/// Mean task loss over the batch and its exact gradient w.r.t. every parameter.
LossAndGradient backward(const SequenceModel& model, std::span<const SequenceSample> batch);

/// Mean task loss only.
double batch_loss(const SequenceModel& model, std::span<const SequenceSample> batch);

/// Class probabilities per sample (binary: [P(data), P(control)]).
std::vector<Eigen::VectorXd> predict_proba(const SequenceModel& model,
                                           std::span<const SequenceSample> samples,
                                           int chunk = 256);
std::vector<int> predict(const SequenceModel& model, std::span<const SequenceSample> samples);

struct TrainConfig {
  int hidden = 200;
  double learning_rate = 1e-4;
  int batch_size = 256;
  int epochs = 20;
  std::uint64_t seed = 1;
  int session_dim = 16;
  int dense_width = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // 0 or 1 disables cross-validation.
  int cv_folds = 0;
};

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;
};

struct EvalReport {
  std::vector<std::string> class_names;
  std::vector<ClassMetrics> per_class;
  double macro_f1 = 0;
  double accuracy = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [actual][predicted]
};

EvalReport evaluate_predictions(std::span<const int> predicted, std::span<const int> actual,
                                std::vector<std::string> class_names);
EvalReport evaluate(const SequenceModel& model, std::span<const SequenceSample> samples);

struct TrainReport {
  std::vector<double> epoch_losses;  // mean minibatch loss per epoch
  std::vector<double> fold_macro_f1;
  double cv_macro_f1 = 0;
  double train_accuracy = 0;
};

struct TrainResult {
  SequenceModel model;
  TrainReport report;
};

/// Adam minibatch training; bit-stable for a fixed seed on one platform.
TrainResult train(std::span<const SequenceSample> samples, const TrainConfig& config, Task task);

std::vector<std::string> class_names(Task task);

nlohmann::json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const SequenceModel& model, const TrainConfig& config);
SequenceModel model_from_json(const nlohmann::json& j);

}  // namespace sdwanfp

#endif  // SDWANFP_SEQNET_HPP
