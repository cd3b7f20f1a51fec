#include "sdwanfp/seqnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace sdwanfp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(Task t) { return t == Task::binary ? "binary" : "multiclass"; }

std::vector<std::string> class_names(Task task) {
  if (task == Task::binary) return {"DATA", "CONTROL"};
  return {"RAFT", "SWIM", "OPENFLOW"};
}

Normalizer Normalizer::fit(std::span<const SequenceSample> samples) {
  Normalizer n;
  double count = 0;
  std::array<double, 3> sum{0, 0, 0}, sq{0, 0, 0};
  double sess_sq = 0;
  for (const auto& s : samples) {
    for (const auto& row : s.S) {
      for (std::size_t c = 0; c < 3; ++c) {
        sum[c] += row[c];
        sq[c] += row[c] * row[c];
      }
      count += 1;
    }
    sess_sq += static_cast<double>(s.sessions) * s.sessions;
  }
  if (count > 0) {
    for (std::size_t c = 0; c < 3; ++c) {
      n.mean[c] = sum[c] / count;
      const double var = std::max(0.0, sq[c] / count - n.mean[c] * n.mean[c]);
      n.scale[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
  }
  if (!samples.empty() && sess_sq > 0) {
    n.session_scale = std::sqrt(sess_sq / static_cast<double>(samples.size()));
  }
  return n;
}

// ---------------------------------------------------------------------------
// Parameter layout

SequenceModel::SequenceModel(const ModelDims& dims) : dims_(dims) {
  if (dims.input < 1 || dims.hidden < 1 || dims.dense_width < 1 || dims.direction_width < 0 ||
      (dims.task == Task::binary && dims.session_dim < 1)) {
    throw ShapeError("model dimensions must be positive");
  }
  if (dims.task == Task::binary && dims.classes != 2) throw ShapeError("binary task has 2 classes");
  if (dims.task == Task::multiclass && dims.classes < 2) throw ShapeError("need >= 2 classes");
  const Index h = dims.hidden;
  for (const char* dir : {"fwd", "bwd"}) {
    add_block(std::string(dir) + ".W_x", 4 * h, dims.input);
    add_block(std::string(dir) + ".W_h", 4 * h, h);
    add_block(std::string(dir) + ".b", 4 * h, 1);
  }
  if (dims.task == Task::binary) add_block("session.omega", dims.session_dim, 1);
  add_block("dense.W", dims.dense_width, dims.direction_width);
  add_block("dense.b", dims.dense_width, 1);
  add_block("out.W", dims.output_rows(), dims.representation_width());
  add_block("out.b", dims.output_rows(), 1);
}

void SequenceModel::add_block(std::string name, Index rows, Index cols) {
  ParamBlock b{std::move(name), rows, cols, params_.size()};
  params_.resize(params_.size() + b.size(), 0.0);
  blocks_.push_back(std::move(b));
}

SequenceModel SequenceModel::initialized(const ModelDims& dims, std::uint64_t seed) {
  SequenceModel m(dims);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.08, 0.08);
  for (auto& p : m.params_) p = u(rng);
  for (const char* name : {"fwd.b", "bwd.b"}) {
    auto b = m.block(name);
    b.setZero();
    b.middleRows(dims.hidden, dims.hidden).setOnes();
  }
  m.block("dense.b").setZero();
  m.block("out.b").setZero();
  return m;
}

const ParamBlock& SequenceModel::block_info(std::string_view name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return b;
  }
  throw ShapeError("no parameter block named " + std::string(name));
}

Eigen::Map<MatrixXd> SequenceModel::block(std::string_view name) {
  const auto& b = block_info(name);
  return {params_.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<const MatrixXd> SequenceModel::block(std::string_view name) const {
  const auto& b = block_info(name);
  return {params_.data() + b.offset, b.rows, b.cols};
}

// ---------------------------------------------------------------------------
// Cell math

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

template <typename Derived>
auto sigm(const Eigen::MatrixBase<Derived>& a) {
  return a.unaryExpr([](double z) { return sigmoid(z); });
}

}  // namespace

LstmState lstm_step(const Eigen::Ref<const MatrixXd>& w_input,
                    const Eigen::Ref<const MatrixXd>& w_recurrent,
                    const Eigen::Ref<const VectorXd>& bias, const Eigen::Ref<const VectorXd>& x,
                    const VectorXd& h_prev, const VectorXd& c_prev) {
  const Index h = w_recurrent.cols();
  if (w_input.rows() != 4 * h || w_recurrent.rows() != 4 * h || bias.size() != 4 * h ||
      w_input.cols() != x.size() || h_prev.size() != h || c_prev.size() != h) {
    throw ShapeError("lstm_step: inconsistent shapes");
  }
  if (!x.allFinite() || !h_prev.allFinite() || !c_prev.allFinite()) {
    throw ValidationError("lstm_step: non-finite input");
  }
  const VectorXd a = w_input * x + w_recurrent * h_prev + bias;
  const VectorXd i = sigm(a.segment(0, h));
  const VectorXd f = sigm(a.segment(h, h));
  const VectorXd g = a.segment(2 * h, h).array().tanh();
  const VectorXd o = sigm(a.segment(3 * h, h));
  LstmState s;
  s.c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  s.h = o.cwiseProduct(s.c.array().tanh().matrix());
  return s;
}

VectorXd softmax(const Eigen::Ref<const VectorXd>& logits) {
  const double m = logits.maxCoeff();
  VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

// ---------------------------------------------------------------------------
// Batched forward / backward

namespace {

struct Batch {
  Index steps = 0;
  Index size = 0;
  std::vector<MatrixXd> x;  // steps entries of input x size
  Eigen::RowVectorXd sessions;
  MatrixXd delta;           // direction_width x size
  std::vector<int> labels;
};

Batch make_batch(const SequenceModel& model, std::span<const SequenceSample> samples) {
  const auto& dims = model.dims();
  const auto& norm = model.normalizer;
  Batch b;
  b.size = static_cast<Index>(samples.size());
  if (samples.empty()) return b;
  b.steps = static_cast<Index>(samples.front().S.size());
  if (b.steps < 1) throw ShapeError("sequence must have at least one step");
  b.x.assign(static_cast<std::size_t>(b.steps), MatrixXd(dims.input, b.size));
  b.sessions.resize(b.size);
  b.delta.resize(dims.direction_width, b.size);
  b.labels.reserve(samples.size());
  for (Index n = 0; n < b.size; ++n) {
    const auto& s = samples[static_cast<std::size_t>(n)];
    if (static_cast<Index>(s.S.size()) != b.steps) {
      throw ShapeError("all sequences in a batch must have the same length");
    }
    if (static_cast<int>(s.direction.values.size()) != dims.direction_width) {
      throw ShapeError("direction encoding has " + std::to_string(s.direction.values.size()) +
                       " entries, model expects " + std::to_string(dims.direction_width));
    }
    for (Index t = 0; t < b.steps; ++t) {
      const auto& row = s.S[static_cast<std::size_t>(t)];
      for (Index c = 0; c < 3; ++c) {
        b.x[static_cast<std::size_t>(t)](c, n) = (row[c] - norm.mean[c]) / norm.scale[c];
      }
    }
    b.sessions(n) = static_cast<double>(s.sessions) / norm.session_scale;
    for (Index d = 0; d < dims.direction_width; ++d) {
      b.delta(d, n) = s.direction.values[static_cast<std::size_t>(d)];
    }
    b.labels.push_back(s.label);
  }
  return b;
}

struct LstmCache {
  std::vector<MatrixXd> gates;  // activated i, f, g, o stacked, per step
  std::vector<MatrixXd> c;      // c[0] is the zero initial state
  std::vector<MatrixXd> h;
};

struct LstmWeights {
  Eigen::Map<const MatrixXd> w_x;
  Eigen::Map<const MatrixXd> w_h;
  Eigen::Map<const MatrixXd> b;
};

LstmWeights lstm_weights(const SequenceModel& m, const std::string& dir) {
  return {m.block(dir + ".W_x"), m.block(dir + ".W_h"), m.block(dir + ".b")};
}

// `order(t)` maps processing step to input step.
template <typename Order>
void lstm_forward(const LstmWeights& w, const Batch& batch, Order order, LstmCache& cache) {
  const Index h = w.w_h.cols();
  const Index n = batch.size;
  const auto steps = static_cast<std::size_t>(batch.steps);
  cache.gates.resize(steps);
  cache.c.assign(steps + 1, MatrixXd::Zero(h, n));
  cache.h.assign(steps + 1, MatrixXd::Zero(h, n));
  for (std::size_t t = 0; t < steps; ++t) {
    MatrixXd a = w.w_x * batch.x[order(t)] + w.w_h * cache.h[t];
    a.colwise() += w.b.col(0);
    a.topRows(2 * h) = sigm(a.topRows(2 * h));
    a.middleRows(2 * h, h) = a.middleRows(2 * h, h).array().tanh();
    a.bottomRows(h) = sigm(a.bottomRows(h));
    cache.c[t + 1] = a.middleRows(h, h).cwiseProduct(cache.c[t]) +
                     a.topRows(h).cwiseProduct(a.middleRows(2 * h, h));
    cache.h[t + 1] = a.bottomRows(h).cwiseProduct(cache.c[t + 1].array().tanh().matrix());
    cache.gates[t] = std::move(a);
  }
}

struct LstmGrads {
  Eigen::Map<MatrixXd> w_x;
  Eigen::Map<MatrixXd> w_h;
  Eigen::Map<MatrixXd> b;
};

template <typename Order>
void lstm_backward(const LstmWeights& w, const Batch& batch, Order order, const LstmCache& cache,
                   MatrixXd dh, LstmGrads& g) {
  const Index h = w.w_h.cols();
  const Index n = batch.size;
  MatrixXd dc = MatrixXd::Zero(h, n);
  MatrixXd da(4 * h, n);
  for (std::size_t t = static_cast<std::size_t>(batch.steps); t-- > 0;) {
    const MatrixXd& a = cache.gates[t];
    const auto i = a.topRows(h).array();
    const auto f = a.middleRows(h, h).array();
    const auto cand = a.middleRows(2 * h, h).array();
    const auto o = a.bottomRows(h).array();
    const Eigen::ArrayXXd tc = cache.c[t + 1].array().tanh();
    dc.array() += dh.array() * o * (1.0 - tc.square());
    da.bottomRows(h) = (dh.array() * tc * o * (1.0 - o)).matrix();
    da.topRows(h) = (dc.array() * cand * i * (1.0 - i)).matrix();
    da.middleRows(h, h) = (dc.array() * cache.c[t].array() * f * (1.0 - f)).matrix();
    da.middleRows(2 * h, h) = (dc.array() * i * (1.0 - cand.square())).matrix();
    g.w_x.noalias() += da * batch.x[order(t)].transpose();
    g.w_h.noalias() += da * cache.h[t].transpose();
    g.b.col(0) += da.rowwise().sum();
    dh.noalias() = w.w_h.transpose() * da;
    dc.array() *= f;
  }
}

struct ForwardPass {
  LstmCache fwd, bwd;
  MatrixXd dense;   // tanh activations, dense_width x n
  MatrixXd rep;     // e_p, representation_width x n
  MatrixXd logits;  // output_rows x n
};

ForwardPass run_forward(const SequenceModel& m, const Batch& batch) {
  const auto& dims = m.dims();
  const auto steps = static_cast<std::size_t>(batch.steps);
  ForwardPass fp;
  lstm_forward(lstm_weights(m, "fwd"), batch, [](std::size_t t) { return t; }, fp.fwd);
  lstm_forward(lstm_weights(m, "bwd"), batch, [steps](std::size_t t) { return steps - 1 - t; },
               fp.bwd);
  fp.dense = m.block("dense.W") * batch.delta;
  fp.dense.colwise() += m.block("dense.b").col(0);
  fp.dense = fp.dense.array().tanh();

  const Index h = dims.hidden;
  fp.rep.resize(dims.representation_width(), batch.size);
  fp.rep.topRows(h) = fp.fwd.h.back();
  fp.rep.middleRows(h, h) = fp.bwd.h.back();
  Index row = 2 * h;
  if (dims.task == Task::binary) {
    fp.rep.middleRows(row, dims.session_dim) = m.block("session.omega").col(0) * batch.sessions;
    row += dims.session_dim;
  }
  fp.rep.middleRows(row, dims.dense_width) = fp.dense;
  fp.logits = m.block("out.W") * fp.rep;
  fp.logits.colwise() += m.block("out.b").col(0);
  return fp;
}

double clip(double p) { return std::clamp(p, kProbClip, 1.0 - kProbClip); }

// Mean loss over the batch; fills d(loss)/d(logits) when `dlogits` is set.
double head_loss(const ModelDims& dims, const MatrixXd& logits, const std::vector<int>& labels,
                 MatrixXd* dlogits) {
  const Index n = logits.cols();
  double total = 0;
  if (dlogits) dlogits->setZero(logits.rows(), n);
  for (Index j = 0; j < n; ++j) {
    const int y = labels[static_cast<std::size_t>(j)];
    if (y < 0 || y >= dims.classes) throw ValidationError("sample label outside task classes");
    if (dims.task == Task::binary) {
      const double p = sigmoid(logits(0, j));
      const double pc = clip(p);
      total += -(y * std::log(pc) + (1 - y) * std::log(1 - pc));
      if (dlogits && p > kProbClip && p < 1 - kProbClip) (*dlogits)(0, j) = (p - y) / n;
    } else {
      const VectorXd p = softmax(logits.col(j));
      const double py = p(y);
      total += -std::log(clip(py));
      if (dlogits && py > kProbClip && py < 1 - kProbClip) {
        dlogits->col(j) = p / n;
        (*dlogits)(y, j) -= 1.0 / n;
      }
    }
  }
  return total / static_cast<double>(n);
}

Eigen::Map<MatrixXd> grad_block(const SequenceModel& m, std::vector<double>& grad,
                                std::string_view name) {
  const auto& b = m.block_info(name);
  return {grad.data() + b.offset, b.rows, b.cols};
}

LossAndGradient backward_batch(const SequenceModel& m, const Batch& batch) {
  const auto& dims = m.dims();
  LossAndGradient out;
  out.gradient.assign(m.params().size(), 0.0);
  if (batch.size == 0) return out;
  const ForwardPass fp = run_forward(m, batch);
  MatrixXd dz;
  out.loss = head_loss(dims, fp.logits, batch.labels, &dz);

  auto& grad = out.gradient;
  grad_block(m, grad, "out.W").noalias() = dz * fp.rep.transpose();
  grad_block(m, grad, "out.b").col(0) = dz.rowwise().sum();
  const MatrixXd drep = m.block("out.W").transpose() * dz;

  const Index h = dims.hidden;
  Index row = 2 * h;
  if (dims.task == Task::binary) {
    grad_block(m, grad, "session.omega").col(0) =
        drep.middleRows(row, dims.session_dim) * batch.sessions.transpose();
    row += dims.session_dim;
  }
  const MatrixXd dpre =
      (drep.middleRows(row, dims.dense_width).array() * (1.0 - fp.dense.array().square())).matrix();
  grad_block(m, grad, "dense.W").noalias() = dpre * batch.delta.transpose();
  grad_block(m, grad, "dense.b").col(0) = dpre.rowwise().sum();

  const auto steps = static_cast<std::size_t>(batch.steps);
  LstmGrads gf{grad_block(m, grad, "fwd.W_x"), grad_block(m, grad, "fwd.W_h"),
               grad_block(m, grad, "fwd.b")};
  lstm_backward(lstm_weights(m, "fwd"), batch, [](std::size_t t) { return t; }, fp.fwd,
                drep.topRows(h), gf);
  LstmGrads gb{grad_block(m, grad, "bwd.W_x"), grad_block(m, grad, "bwd.W_h"),
               grad_block(m, grad, "bwd.b")};
  lstm_backward(lstm_weights(m, "bwd"), batch, [steps](std::size_t t) { return steps - 1 - t; },
                fp.bwd, drep.middleRows(h, h), gb);
  return out;
}

void require_task(const SequenceModel& m, Task task, Granularity g, const SequenceSample& s) {
  if (m.dims().task != task) throw ValidationError("model task does not match the phase");
  if (s.granularity != g) throw ValidationError("sample granularity does not match the phase");
}

}  // namespace

VectorXd encode_sequence(const SequenceModel& model, const Sequence& S) {
  SequenceSample probe;
  probe.S = S;
  probe.direction.values.assign(static_cast<std::size_t>(model.dims().direction_width), 0);
  probe.label = 0;
  const SequenceSample one[] = {probe};
  const Batch batch = make_batch(model, one);
  LstmCache fwd, bwd;
  const auto steps = static_cast<std::size_t>(batch.steps);
  lstm_forward(lstm_weights(model, "fwd"), batch, [](std::size_t t) { return t; }, fwd);
  lstm_forward(lstm_weights(model, "bwd"), batch, [steps](std::size_t t) { return steps - 1 - t; },
               bwd);
  const Index h = model.dims().hidden;
  VectorXd e(2 * h);
  e.head(h) = fwd.h.back().col(0);
  e.tail(h) = bwd.h.back().col(0);
  return e;
}

double forward_phase1(const SequenceModel& model, const SequenceSample& sample) {
  require_task(model, Task::binary, Granularity::two_tuple, sample);
  const SequenceSample one[] = {sample};
  const ForwardPass fp = run_forward(model, make_batch(model, one));
  return sigmoid(fp.logits(0, 0));
}

VectorXd forward_phase2(const SequenceModel& model, const SequenceSample& sample) {
  require_task(model, Task::multiclass, Granularity::five_tuple, sample);
  const SequenceSample one[] = {sample};
  const ForwardPass fp = run_forward(model, make_batch(model, one));
  return softmax(fp.logits.col(0));
}

double bce_loss(std::span<const double> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw ShapeError("bce_loss: length mismatch");
  if (predicted.empty()) return 0.0;
  double total = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double p = clip(predicted[i]);
    total += -(truth[i] * std::log(p) + (1 - truth[i]) * std::log(1 - p));
  }
  return total / static_cast<double>(predicted.size());
}

double ce_loss(const Eigen::Ref<const MatrixXd>& predicted, const Eigen::Ref<const MatrixXd>& truth) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols()) {
    throw ShapeError("ce_loss: shape mismatch");
  }
  if (predicted.rows() == 0) return 0.0;
  double total = 0;
  for (Index i = 0; i < predicted.rows(); ++i) {
    for (Index c = 0; c < predicted.cols(); ++c) {
      if (truth(i, c) != 0) total += -truth(i, c) * std::log(clip(predicted(i, c)));
    }
  }
  return total / static_cast<double>(predicted.rows());
}

LossAndGradient backward(const SequenceModel& model, std::span<const SequenceSample> batch) {
  return backward_batch(model, make_batch(model, batch));
}

double batch_loss(const SequenceModel& model, std::span<const SequenceSample> batch) {
  const Batch b = make_batch(model, batch);
  if (b.size == 0) return 0.0;
  return head_loss(model.dims(), run_forward(model, b).logits, b.labels, nullptr);
}

std::vector<VectorXd> predict_proba(const SequenceModel& model,
                                    std::span<const SequenceSample> samples, int chunk) {
  std::vector<VectorXd> out;
  out.reserve(samples.size());
  const std::size_t step = static_cast<std::size_t>(std::max(chunk, 1));
  for (std::size_t start = 0; start < samples.size(); start += step) {
    const auto part = samples.subspan(start, std::min(step, samples.size() - start));
    const ForwardPass fp = run_forward(model, make_batch(model, part));
    for (Index j = 0; j < fp.logits.cols(); ++j) {
      if (model.dims().task == Task::binary) {
        const double p = sigmoid(fp.logits(0, j));
        VectorXd v(2);
        v << 1 - p, p;
        out.push_back(std::move(v));
      } else {
        out.push_back(softmax(fp.logits.col(j)));
      }
    }
  }
  return out;
}

std::vector<int> predict(const SequenceModel& model, std::span<const SequenceSample> samples) {
  std::vector<int> out;
  for (const auto& p : predict_proba(model, samples)) {
    Index best = 0;
    p.maxCoeff(&best);
    out.push_back(static_cast<int>(best));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

EvalReport evaluate_predictions(std::span<const int> predicted, std::span<const int> actual,
                                std::vector<std::string> names) {
  if (predicted.size() != actual.size()) throw ShapeError("evaluate: length mismatch");
  const std::size_t k = names.size();
  EvalReport r;
  r.class_names = std::move(names);
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] < 0) continue;
    const auto a = static_cast<std::size_t>(actual[i]);
    const auto p = static_cast<std::size_t>(predicted[i]);
    if (a >= k || p >= k) throw ValidationError("evaluate: class id out of range");
    ++r.confusion[a][p];
    ++total;
    correct += a == p;
  }
  r.per_class.resize(k);
  double f1_sum = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t tp = r.confusion[c][c], fp = 0, fn = 0;
    for (std::size_t o = 0; o < k; ++o) {
      if (o == c) continue;
      fp += r.confusion[o][c];
      fn += r.confusion[c][o];
    }
    auto& m = r.per_class[c];
    m.support = tp + fn;
    m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    f1_sum += m.f1;
  }
  r.macro_f1 = k ? f1_sum / static_cast<double>(k) : 0.0;
  r.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  return r;
}

EvalReport evaluate(const SequenceModel& model, std::span<const SequenceSample> samples) {
  const auto predicted = predict(model, samples);
  std::vector<int> actual;
  actual.reserve(samples.size());
  for (const auto& s : samples) actual.push_back(s.label);
  return evaluate_predictions(predicted, actual, class_names(model.dims().task));
}

// ---------------------------------------------------------------------------
// Training

namespace {

void check_trainable(std::span<const SequenceSample> samples, Task task) {
  if (samples.empty()) throw ValidationError("train: no samples");
  const int classes = task == Task::binary ? 2 : 3;
  std::set<int> present;
  for (const auto& s : samples) {
    if (s.label < 0 || s.label >= classes) {
      throw ValidationError("train: sample label outside task classes");
    }
    present.insert(s.label);
  }
  if (present.size() < 2) throw ValidationError("train: dataset contains a single class");
}

std::vector<SequenceSample> gather(std::span<const SequenceSample> samples,
                                   std::span<const std::size_t> idx) {
  std::vector<SequenceSample> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(samples[i]);
  return out;
}

TrainResult fit(std::span<const SequenceSample> samples, const TrainConfig& cfg, Task task) {
  ModelDims dims;
  dims.task = task;
  dims.hidden = cfg.hidden;
  dims.session_dim = cfg.session_dim;
  dims.dense_width = cfg.dense_width;
  dims.direction_width = static_cast<int>(samples.front().direction.values.size());
  dims.classes = task == Task::binary ? 2 : 3;

  TrainResult result;
  result.model = SequenceModel::initialized(dims, cfg.seed);
  SequenceModel& model = result.model;
  model.normalizer = Normalizer::fit(samples);

  // Inputs are normalized once; minibatches gather columns from here.
  const Batch all = make_batch(model, samples);
  auto& params = model.params();
  std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t bs = static_cast<std::size_t>(std::max(cfg.batch_size, 1));
  long step = 0;

  Batch mb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t n = std::min(bs, order.size() - start);
      mb.size = static_cast<Index>(n);
      mb.steps = all.steps;
      mb.x.assign(all.x.size(), MatrixXd());
      for (std::size_t t = 0; t < all.x.size(); ++t) {
        mb.x[t].resize(all.x[t].rows(), mb.size);
        for (std::size_t j = 0; j < n; ++j) mb.x[t].col(static_cast<Index>(j)) = all.x[t].col(static_cast<Index>(order[start + j]));
      }
      mb.sessions.resize(mb.size);
      mb.delta.resize(all.delta.rows(), mb.size);
      mb.labels.resize(n);
      for (std::size_t j = 0; j < n; ++j) {
        const auto src = static_cast<Index>(order[start + j]);
        mb.sessions(static_cast<Index>(j)) = all.sessions(src);
        mb.delta.col(static_cast<Index>(j)) = all.delta.col(src);
        mb.labels[j] = all.labels[order[start + j]];
      }
      const LossAndGradient lg = backward_batch(model, mb);
      loss_sum += lg.loss * static_cast<double>(n);
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < params.size(); ++p) {
        const double g = lg.gradient[p];
        m[p] = cfg.beta1 * m[p] + (1 - cfg.beta1) * g;
        v[p] = cfg.beta2 * v[p] + (1 - cfg.beta2) * g * g;
        params[p] -= cfg.learning_rate * (m[p] / c1) / (std::sqrt(v[p] / c2) + cfg.adam_eps);
      }
    }
    result.report.epoch_losses.push_back(loss_sum / static_cast<double>(order.size()));
  }
  result.report.train_accuracy = evaluate(model, samples).accuracy;
  return result;
}

}  // namespace

TrainResult train(std::span<const SequenceSample> samples, const TrainConfig& config, Task task) {
  check_trainable(samples, task);
  if (config.hidden < 1 || config.batch_size < 1 || config.epochs < 0 ||
      !(config.learning_rate > 0) || config.session_dim < 1 || config.dense_width < 1) {
    throw ValidationError("train: config values must be positive");
  }
  std::vector<double> fold_f1;
  if (config.cv_folds > 1) {
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(config.seed + 7);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto k = static_cast<std::size_t>(config.cv_folds);
    for (std::size_t fold = 0; fold < k; ++fold) {
      std::vector<std::size_t> tr, te;
      for (std::size_t i = 0; i < idx.size(); ++i) (i % k == fold ? te : tr).push_back(idx[i]);
      const auto train_part = gather(samples, tr);
      const auto test_part = gather(samples, te);
      std::set<int> present;
      for (const auto& s : train_part) present.insert(s.label);
      if (present.size() < 2 || test_part.empty()) continue;
      const TrainResult sub = fit(train_part, config, task);
      fold_f1.push_back(evaluate(sub.model, test_part).macro_f1);
    }
  }
  TrainResult result = fit(samples, config, task);
  result.report.fold_macro_f1 = fold_f1;
  if (!fold_f1.empty()) {
    result.report.cv_macro_f1 =
        std::accumulate(fold_f1.begin(), fold_f1.end(), 0.0) / static_cast<double>(fold_f1.size());
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["classes"] = r.class_names;
  j["macro_f1"] = r.macro_f1;
  j["accuracy"] = r.accuracy;
  j["confusion"] = r.confusion;
  auto& per = j["per_class"] = nlohmann::json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    per.push_back({{"class", r.class_names[c]},
                   {"precision", m.precision},
                   {"recall", m.recall},
                   {"f1", m.f1},
                   {"support", m.support}});
  }
  return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.class_names = j.at("classes").get<std::vector<std::string>>();
  r.macro_f1 = j.at("macro_f1").get<double>();
  r.accuracy = j.value("accuracy", 0.0);
  r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
  for (const auto& c : j.at("per_class")) {
    ClassMetrics m;
    m.precision = c.at("precision").get<double>();
    m.recall = c.at("recall").get<double>();
    m.f1 = c.at("f1").get<double>();
    m.support = c.at("support").get<std::size_t>();
    r.per_class.push_back(m);
  }
  if (r.per_class.size() != r.class_names.size()) {
    throw ValidationError("eval report: per_class and classes differ in length");
  }
  return r;
}

nlohmann::json model_to_json(const SequenceModel& model, const TrainConfig& config) {
  const auto& d = model.dims();
  nlohmann::json j;
  j["format"] = "sdwanfp-model";
  j["version"] = kCheckpointVersion;
  j["task"] = std::string(to_string(d.task));
  j["dims"] = {{"input", d.input},
               {"hidden", d.hidden},
               {"session_dim", d.session_dim},
               {"dense_width", d.dense_width},
               {"direction_width", d.direction_width},
               {"classes", d.classes}};
  j["config"] = {{"hidden", config.hidden},
                 {"learning_rate", config.learning_rate},
                 {"batch_size", config.batch_size},
                 {"epochs", config.epochs},
                 {"seed", config.seed},
                 {"session_dim", config.session_dim},
                 {"dense_width", config.dense_width},
                 {"optimizer", "adam"}};
  j["normalizer"] = {{"mean", model.normalizer.mean},
                     {"scale", model.normalizer.scale},
                     {"session_scale", model.normalizer.session_scale}};
  auto& blocks = j["params"] = nlohmann::json::array();
  for (const auto& b : model.blocks()) {
    std::vector<double> data(model.params().begin() + static_cast<std::ptrdiff_t>(b.offset),
                             model.params().begin() + static_cast<std::ptrdiff_t>(b.offset + b.size()));
    blocks.push_back({{"name", b.name}, {"shape", {b.rows, b.cols}}, {"order", "column_major"},
                      {"data", std::move(data)}});
  }
  return j;
}

SequenceModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "sdwanfp-model") {
    throw ValidationError("checkpoint: field 'format' must be \"sdwanfp-model\"");
  }
  if (!j.contains("version") || j["version"] != kCheckpointVersion) {
    throw ValidationError("checkpoint: field 'version' is " +
                          (j.contains("version") ? j["version"].dump() : std::string("missing")) +
                          ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  ModelDims d;
  const auto task = j.at("task").get<std::string>();
  if (task != "binary" && task != "multiclass") throw ValidationError("checkpoint: bad task");
  d.task = task == "binary" ? Task::binary : Task::multiclass;
  const auto& jd = j.at("dims");
  d.input = jd.at("input").get<int>();
  d.hidden = jd.at("hidden").get<int>();
  d.session_dim = jd.at("session_dim").get<int>();
  d.dense_width = jd.at("dense_width").get<int>();
  d.direction_width = jd.at("direction_width").get<int>();
  d.classes = jd.at("classes").get<int>();
  SequenceModel m(d);
  const auto& jn = j.at("normalizer");
  m.normalizer.mean = jn.at("mean").get<std::array<double, 3>>();
  m.normalizer.scale = jn.at("scale").get<std::array<double, 3>>();
  m.normalizer.session_scale = jn.at("session_scale").get<double>();
  const auto& jp = j.at("params");
  if (jp.size() != m.blocks().size()) throw ShapeError("checkpoint: parameter block count mismatch");
  for (std::size_t i = 0; i < jp.size(); ++i) {
    const auto& b = m.blocks()[i];
    const auto& e = jp[i];
    const auto shape = e.at("shape").get<std::vector<Index>>();
    if (e.at("name").get<std::string>() != b.name || shape.size() != 2 || shape[0] != b.rows ||
        shape[1] != b.cols) {
      throw ShapeError("checkpoint: block " + b.name + " has unexpected name or shape");
    }
    const auto data = e.at("data").get<std::vector<double>>();
    if (data.size() != b.size()) throw ShapeError("checkpoint: block " + b.name + " size mismatch");
    std::copy(data.begin(), data.end(), m.params().begin() + static_cast<std::ptrdiff_t>(b.offset));
  }
  return m;
}

}  // namespace sdwanfp
