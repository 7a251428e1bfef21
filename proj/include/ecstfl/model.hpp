#pragma once

// Tiny reference network and its trainer.
//
//   frame (F) -> tanh(W1 . + b1) -> tanh(W2 . + b2)   per frame
//             -> mean over the 16 aligned frames
//             -> W3 . + b3 = feature x (d, linear embedding)
//             -> Wc x + bc = logits (7)
//
// Gradients are written out by hand. Training is plain mini-batch gradient
// descent; the learning rate drops tenfold whenever the best epoch loss has
// stalled for `patience_epochs` epochs.

#include "ecstfl/core.hpp"
#include "ecstfl/data.hpp"
#include "ecstfl/losses.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ecstfl {

struct EncoderShape {
  int input_dim = 16;
  int hidden1 = 32;
  int hidden2 = 32;
  int feature_dim = 64;

  void validate() const {
    require(input_dim >= 1 && hidden1 >= 1 && hidden2 >= 1 && feature_dim >= 1,
            "all layer widths must be positive");
  }
  friend bool operator==(const EncoderShape&, const EncoderShape&) = default;
};

struct EncoderParams {
  EncoderShape shape;
  Matrix w1, w2, w3, wc;  // out x in
  Vector b1, b2, b3, bc;

  static EncoderParams zeros(const EncoderShape& shape) {
    shape.validate();
    EncoderParams p;
    p.shape = shape;
    p.w1 = Matrix::Zero(shape.hidden1, shape.input_dim);
    p.w2 = Matrix::Zero(shape.hidden2, shape.hidden1);
    p.w3 = Matrix::Zero(shape.feature_dim, shape.hidden2);
    p.wc = Matrix::Zero(kNumClasses, shape.feature_dim);
    p.b1 = Vector::Zero(shape.hidden1);
    p.b2 = Vector::Zero(shape.hidden2);
    p.b3 = Vector::Zero(shape.feature_dim);
    p.bc = Vector::Zero(kNumClasses);
    return p;
  }

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases alike.
  static EncoderParams random(const EncoderShape& shape, std::uint64_t seed) {
    EncoderParams p = zeros(shape);
    auto rng = make_rng(seed, Stream::init);
    auto fill = [&](Matrix& w, Vector& b) {
      const double a = 1.0 / std::sqrt(static_cast<double>(w.cols()));
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = uniform(rng, -a, a);
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = uniform(rng, -a, a);
    };
    fill(p.w1, p.b1);
    fill(p.w2, p.b2);
    fill(p.w3, p.b3);
    fill(p.wc, p.bc);
    return p;
  }

  // Visits every tensor as a flat span of doubles, in a fixed order.
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    fn("W1", w1.data(), w1.size());
    fn("b1", b1.data(), b1.size());
    fn("W2", w2.data(), w2.size());
    fn("b2", b2.data(), b2.size());
    fn("W3", w3.data(), w3.size());
    fn("b3", b3.data(), b3.size());
    fn("Wc", wc.data(), wc.size());
    fn("bc", bc.data(), bc.size());
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    const_cast<EncoderParams*>(this)->for_each_tensor(
        [&](const char* name, double* data, Eigen::Index n) { fn(name, static_cast<const double*>(data), n); });
  }

  bool all_finite() const {
    bool ok = true;
    for_each_tensor([&](const char*, const double* d, Eigen::Index n) {
      for (Eigen::Index i = 0; i < n; ++i) ok = ok && std::isfinite(d[i]);
    });
    return ok;
  }

  // this += scale * other
  void axpy(double scale, const EncoderParams& other) {
    w1 += scale * other.w1;
    w2 += scale * other.w2;
    w3 += scale * other.w3;
    wc += scale * other.wc;
    b1 += scale * other.b1;
    b2 += scale * other.b2;
    b3 += scale * other.b3;
    bc += scale * other.bc;
  }
};

struct ForwardCache {
  Matrix input;     // (B*16) x F
  Matrix z1, z2;    // per-frame activations
  Matrix pooled;    // B x H2
  Matrix features;  // B x d
  Matrix logits;    // B x 7
};

inline void check_aligned(const ClipSequence& clip, int input_dim) {
  if (clip.length() != kAlignedFrames) {
    throw ValidationError("clip " + clip.clip_id + " has " + std::to_string(clip.length()) +
                          " frames; align it to 16 with interpolate_to_length first");
  }
  require(clip.frames.cols() == input_dim, "clip " + clip.clip_id + " has feature dim " +
                                               std::to_string(clip.frames.cols()) + ", model expects " +
                                               std::to_string(input_dim));
}

inline ForwardCache forward_batch(const EncoderParams& p, const std::vector<const ClipSequence*>& clips) {
  const auto batch = static_cast<Eigen::Index>(clips.size());
  ForwardCache c;
  c.input.resize(batch * kAlignedFrames, p.shape.input_dim);
  for (Eigen::Index b = 0; b < batch; ++b) {
    check_aligned(*clips[static_cast<std::size_t>(b)], p.shape.input_dim);
    c.input.middleRows(b * kAlignedFrames, kAlignedFrames) = clips[static_cast<std::size_t>(b)]->frames;
  }
  c.z1 = ((c.input * p.w1.transpose()).rowwise() + p.b1.transpose()).array().tanh();
  c.z2 = ((c.z1 * p.w2.transpose()).rowwise() + p.b2.transpose()).array().tanh();
  c.pooled.resize(batch, p.shape.hidden2);
  for (Eigen::Index b = 0; b < batch; ++b)
    c.pooled.row(b) = c.z2.middleRows(b * kAlignedFrames, kAlignedFrames).colwise().sum() / kAlignedFrames;
  c.features = (c.pooled * p.w3.transpose()).rowwise() + p.b3.transpose();
  c.logits = (c.features * p.wc.transpose()).rowwise() + p.bc.transpose();
  return c;
}

struct ForwardOutput {
  Vector feature;
  Vector logits;
};

inline ForwardOutput forward(const EncoderParams& p, const ClipSequence& clip) {
  const ForwardCache c = forward_batch(p, {&clip});
  return {c.features.row(0).transpose(), c.logits.row(0).transpose()};
}

// Parameter gradients given dL/dlogits and any loss gradient that lands on
// the features directly.
inline EncoderParams backward_batch(const EncoderParams& p, const ForwardCache& c, const Matrix& grad_logits,
                                    const Matrix& grad_features) {
  EncoderParams g = EncoderParams::zeros(p.shape);
  const Eigen::Index batch = c.logits.rows();
  g.wc = grad_logits.transpose() * c.features;
  g.bc = grad_logits.colwise().sum().transpose();
  const Matrix d_a3 = grad_logits * p.wc + grad_features;
  g.w3 = d_a3.transpose() * c.pooled;
  g.b3 = d_a3.colwise().sum().transpose();
  const Matrix d_pooled = d_a3 * p.w3;
  Matrix d_z2(batch * kAlignedFrames, p.shape.hidden2);
  for (Eigen::Index b = 0; b < batch; ++b)
    d_z2.middleRows(b * kAlignedFrames, kAlignedFrames).rowwise() = d_pooled.row(b) / kAlignedFrames;
  const Matrix d_a2 = d_z2.array() * (1.0 - c.z2.array().square());
  g.w2 = d_a2.transpose() * c.z1;
  g.b2 = d_a2.colwise().sum().transpose();
  const Matrix d_a1 = (d_a2 * p.w2).array() * (1.0 - c.z1.array().square());
  g.w1 = d_a1.transpose() * c.input;
  g.b1 = d_a1.colwise().sum().transpose();
  return g;
}

enum class LossMode { softmax, softmax_ecstfl, softmax_center };

inline std::string to_string(LossMode m) {
  switch (m) {
    case LossMode::softmax: return "softmax";
    case LossMode::softmax_ecstfl: return "softmax+ecstfl";
    case LossMode::softmax_center: return "softmax+center";
  }
  return "?";
}

inline LossMode parse_loss_mode(const std::string& s) {
  if (s == "softmax") return LossMode::softmax;
  if (s == "softmax+ecstfl") return LossMode::softmax_ecstfl;
  if (s == "softmax+center") return LossMode::softmax_center;
  throw ValidationError("unknown loss mode '" + s + "' (softmax, softmax+ecstfl, softmax+center)");
}

inline constexpr double kLrDecayFactor = 10.0;

struct TrainConfig {
  double learning_rate = 0.1;
  int patience_epochs = 3;
  double min_improvement = 1e-4;
  int batch_size = 24;
  double lambda = kDefaultLambda;
  double center_coef = kDefaultCenterCoef;
  double center_update_rate = 0.5;
  int epochs = 80;
  std::uint64_t seed = 1;
  LossMode loss_mode = LossMode::softmax_ecstfl;
  EncoderShape shape;

  void validate() const {
    require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning rate must be positive");
    require(patience_epochs >= 1, "patience must be at least 1 epoch");
    require(min_improvement >= 0.0, "min improvement must be non-negative");
    require(batch_size >= 1, "batch size must be positive");
    require(lambda >= 0.0, "lambda must be non-negative");
    require(center_coef >= 0.0, "center coefficient must be non-negative");
    require(center_update_rate > 0.0 && center_update_rate <= 1.0, "center update rate must lie in (0, 1]");
    require(epochs >= 1, "epochs must be positive");
    shape.validate();
  }
};

inline nlohmann::json to_json(const EncoderShape& s) {
  return {{"input_dim", s.input_dim}, {"hidden1", s.hidden1}, {"hidden2", s.hidden2}, {"feature_dim", s.feature_dim}};
}

inline EncoderShape shape_from_json(const nlohmann::json& j) {
  EncoderShape s;
  s.input_dim = j.at("input_dim").get<int>();
  s.hidden1 = j.at("hidden1").get<int>();
  s.hidden2 = j.at("hidden2").get<int>();
  s.feature_dim = j.at("feature_dim").get<int>();
  s.validate();
  return s;
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"lr_decay_factor", kLrDecayFactor},
          {"patience_epochs", c.patience_epochs},
          {"min_improvement", c.min_improvement},
          {"batch_size", c.batch_size},
          {"lambda", c.lambda},
          {"center_coef", c.center_coef},
          {"center_update_rate", c.center_update_rate},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"loss_mode", to_string(c.loss_mode)},
          {"shape", to_json(c.shape)}};
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.patience_epochs = j.at("patience_epochs").get<int>();
  c.min_improvement = j.at("min_improvement").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.lambda = j.at("lambda").get<double>();
  c.center_coef = j.at("center_coef").get<double>();
  c.center_update_rate = j.at("center_update_rate").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.loss_mode = parse_loss_mode(j.at("loss_mode").get<std::string>());
  c.shape = shape_from_json(j.at("shape"));
  c.validate();
  return c;
}

struct StepRecord {
  std::size_t step = 0;
  double softmax = 0.0;
  double auxiliary = 0.0;
  double total = 0.0;
  bool skipped = false;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double softmax = 0.0;    // batch means
  double auxiliary = 0.0;
  double total = 0.0;
  int skipped_batches = 0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::vector<StepRecord> steps;
};

struct TrainResult {
  EncoderParams params;
  TrainHistory history;
  std::optional<ClassCenters> centers;
};

// A step produced a non-finite loss or parameter.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, int epoch, std::size_t batch, std::size_t step)
      : NumericalError(what + " (epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) +
                       ", step " + std::to_string(step) + ")"),
        epoch(epoch), batch(batch), step(step) {}
  int epoch;
  std::size_t batch;
  std::size_t step;
};

inline std::vector<int> labels_of(const std::vector<const ClipSequence*>& clips) {
  std::vector<int> labels;
  labels.reserve(clips.size());
  for (const auto* c : clips) {
    require(c->label.has_value(), "clip " + c->clip_id + " has no label");
    labels.push_back(*c->label);
  }
  return labels;
}

struct BatchLoss {
  JointLossResult joint;
  ForwardCache cache;
};

inline BatchLoss batch_loss(const EncoderParams& params, const std::vector<const ClipSequence*>& clips,
                            const TrainConfig& cfg, ClassCenters* centers) {
  BatchLoss out;
  out.cache = forward_batch(params, clips);
  if (!all_finite(out.cache.logits) || !all_finite(out.cache.features))
    throw NumericalError("non-finite activations in the forward pass");
  const std::vector<int> labels = labels_of(clips);
  FeatureBatch fb{out.cache.features, labels};
  switch (cfg.loss_mode) {
    case LossMode::softmax: out.joint = joint_loss(fb, out.cache.logits, 0.0); break;
    case LossMode::softmax_ecstfl: out.joint = joint_loss(fb, out.cache.logits, cfg.lambda); break;
    case LossMode::softmax_center: {
      out.joint = joint_loss(fb, out.cache.logits, 0.0);
      const LossResult c = center_loss(fb, *centers);
      out.joint.auxiliary = c.value;
      out.joint.value = out.joint.softmax + cfg.center_coef * c.value;
      out.joint.grad_features = cfg.center_coef * c.grad;
      break;
    }
  }
  return out;
}

inline TrainResult train(const std::vector<ClipSequence>& dataset, const TrainConfig& cfg) {
  cfg.validate();
  require(!dataset.empty(), "cannot train on an empty dataset");
  for (const auto& clip : dataset) {
    check_aligned(clip, cfg.shape.input_dim);
    require(clip.label.has_value(), "training clip " + clip.clip_id + " has no label");
  }

  TrainResult result{EncoderParams::random(cfg.shape, cfg.seed), {}, std::nullopt};
  if (cfg.loss_mode == LossMode::softmax_center)
    result.centers = ClassCenters::zeros(cfg.shape.feature_dim, cfg.center_update_rate);

  auto shuffle_rng = make_rng(cfg.seed, Stream::shuffle);
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double lr = cfg.learning_rate;
  double best = std::numeric_limits<double>::infinity();
  int stalled = 0;
  std::size_t step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, shuffle_rng);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const ClipSequence*> batch;
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&dataset[order[i]]);

      BatchLoss bl;
      try {
        bl = batch_loss(result.params, batch, cfg, result.centers ? &*result.centers : nullptr);
      } catch (const NumericalError& e) {
        throw DivergenceError(e.what(), epoch, n_batches, step);
      }
      const JointLossResult& j = bl.joint;
      if (!std::isfinite(j.value)) throw DivergenceError("non-finite training loss", epoch, n_batches, step);

      const EncoderParams grad = backward_batch(result.params, bl.cache, j.grad_logits, j.grad_features);
      result.params.axpy(-lr, grad);
      if (!result.params.all_finite())
        throw DivergenceError("non-finite parameters after update", epoch, n_batches, step);

      const bool skipped = cfg.loss_mode == LossMode::softmax_ecstfl && j.skipped;
      result.history.steps.push_back({step, j.softmax, j.auxiliary, j.value, skipped});
      rec.softmax += j.softmax;
      rec.auxiliary += j.auxiliary;
      rec.total += j.value;
      rec.skipped_batches += skipped ? 1 : 0;
      ++n_batches;
      ++step;
    }
    rec.softmax /= static_cast<double>(n_batches);
    rec.auxiliary /= static_cast<double>(n_batches);
    rec.total /= static_cast<double>(n_batches);
    result.history.epochs.push_back(rec);

    if (rec.total < best - cfg.min_improvement) {
      best = rec.total;
      stalled = 0;
    } else if (++stalled >= cfg.patience_epochs) {
      lr /= kLrDecayFactor;
      stalled = 0;
    }
  }
  return result;
}

struct Predictions {
  Matrix features;                  // n x d
  std::vector<int> predicted;       // argmax, lowest index on ties
  std::vector<double> sample_loss;  // -log softmax of the true class; NaN if unlabeled
};

inline Predictions predict(const EncoderParams& params, const std::vector<ClipSequence>& clips,
                           std::size_t chunk = 256) {
  Predictions out;
  out.features.resize(static_cast<Eigen::Index>(clips.size()), params.shape.feature_dim);
  for (std::size_t start = 0; start < clips.size(); start += chunk) {
    const std::size_t stop = std::min(clips.size(), start + chunk);
    std::vector<const ClipSequence*> batch;
    for (std::size_t i = start; i < stop; ++i) batch.push_back(&clips[i]);
    const ForwardCache c = forward_batch(params, batch);
    out.features.middleRows(static_cast<Eigen::Index>(start), c.features.rows()) = c.features;
    for (Eigen::Index r = 0; r < c.logits.rows(); ++r) {
      Eigen::Index arg = 0;
      c.logits.row(r).maxCoeff(&arg);
      out.predicted.push_back(static_cast<int>(arg));
      const auto& clip = clips[start + static_cast<std::size_t>(r)];
      if (clip.label) {
        const double top = c.logits.row(r).maxCoeff();
        const double lse = top + std::log((c.logits.row(r).array() - top).exp().sum());
        out.sample_loss.push_back(lse - c.logits(r, *clip.label));
      } else {
        out.sample_loss.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
  }
  return out;
}

inline double mean_softmax_loss(const EncoderParams& params, const std::vector<ClipSequence>& clips) {
  const Predictions p = predict(params, clips);
  double total = 0.0;
  for (double l : p.sample_loss) total += l;
  return total / static_cast<double>(p.sample_loss.size());
}

struct GridOutcome {
  double rate = 0.0;
  bool diverged = false;
  double validation_loss = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

struct GridSearchResult {
  double best_rate = 0.0;
  std::vector<GridOutcome> outcomes;
};

// Holds out 20% of `dataset` (seeded), trains config.epochs per rate and
// keeps the rate with the lowest held-out softmax loss. Ties go to the
// smaller rate; diverging rates are dropped.
inline GridSearchResult lr_grid_search(const std::vector<ClipSequence>& dataset, const std::vector<double>& grid,
                                       const TrainConfig& config) {
  require(!grid.empty(), "learning-rate grid is empty");
  require(dataset.size() >= 2, "grid search needs at least 2 clips");
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto rng = make_rng(config.seed, Stream::validation);
  shuffle(order, rng);
  const std::size_t n_val = std::max<std::size_t>(1, dataset.size() / 5);
  std::vector<ClipSequence> val, fit;
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_val ? val : fit).push_back(dataset[order[i]]);

  GridSearchResult result;
  std::optional<std::size_t> best;
  for (double rate : grid) {
    GridOutcome o;
    o.rate = rate;
    TrainConfig cfg = config;
    cfg.learning_rate = rate;
    try {
      const TrainResult tr = train(fit, cfg);
      o.validation_loss = mean_softmax_loss(tr.params, val);
      if (!std::isfinite(o.validation_loss)) {
        o.diverged = true;
        o.note = "non-finite validation loss";
      }
    } catch (const NumericalError& e) {
      o.diverged = true;
      o.note = e.what();
    }
    result.outcomes.push_back(o);
    if (o.diverged) continue;
    const std::size_t idx = result.outcomes.size() - 1;
    if (!best) {
      best = idx;
      continue;
    }
    const GridOutcome& b = result.outcomes[*best];
    if (o.validation_loss < b.validation_loss || (o.validation_loss == b.validation_loss && o.rate < b.rate))
      best = idx;
  }
  if (!best) {
    std::string msg = "every learning rate diverged:";
    for (const auto& o : result.outcomes) msg += " [" + format_double(o.rate) + ": " + o.note + "]";
    throw NumericalError(msg);
  }
  result.best_rate = result.outcomes[*best].rate;
  return result;
}

// ---- persistence -----------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

// `fold` is the held-out fold the model was trained without (0 = none).
inline nlohmann::json checkpoint_json(const TrainResult& tr, const TrainConfig& cfg, int fold = 0) {
  nlohmann::json params = nlohmann::json::object();
  tr.params.for_each_tensor([&](const char* name, const double* d, Eigen::Index n) {
    params[name] = std::vector<double>(d, d + n);
  });
  nlohmann::json j{{"format", "ecstfl-checkpoint"},
                   {"version", kCheckpointVersion},
                   {"shape", to_json(tr.params.shape)},
                   {"config", to_json(cfg)},
                   {"seed", cfg.seed},
                   {"fold", fold},
                   {"activation", "tanh per-frame, linear embedding"},
                   {"init", "uniform(+-1/sqrt(fan_in))"},
                   {"params", params}};
  if (tr.centers) {
    const Matrix& c = tr.centers->centers;
    j["centers"] = std::vector<double>(c.data(), c.data() + c.size());
  }
  return j;
}

struct Checkpoint {
  EncoderParams params;
  TrainConfig config;
  int fold = 0;
  std::optional<Matrix> centers;
};

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  require(j.value("format", "") == "ecstfl-checkpoint", "not a checkpoint file");
  require(j.value("version", 0) == kCheckpointVersion, "unsupported checkpoint version");
  Checkpoint ck;
  ck.config = config_from_json(j.at("config"));
  ck.fold = j.value("fold", 0);
  ck.params = EncoderParams::zeros(shape_from_json(j.at("shape")));
  require(ck.params.shape == ck.config.shape, "checkpoint shape disagrees with its config");
  const auto& params = j.at("params");
  ck.params.for_each_tensor([&](const char* name, double* d, Eigen::Index n) {
    const auto values = params.at(name).get<std::vector<double>>();
    require(static_cast<Eigen::Index>(values.size()) == n, std::string("tensor ") + name + " has the wrong size");
    std::copy(values.begin(), values.end(), d);
  });
  if (j.contains("centers")) {
    const auto values = j.at("centers").get<std::vector<double>>();
    Matrix c(kNumClasses, ck.params.shape.feature_dim);
    require(static_cast<Eigen::Index>(values.size()) == c.size(), "centers have the wrong size");
    std::copy(values.begin(), values.end(), c.data());
    ck.centers = c;
  }
  return ck;
}

inline void write_history_csv(std::ostream& out, const TrainHistory& h) {
  out << "epoch,lr,L_s,L_ecstfl,L_total,skipped_batches\n";
  for (const auto& e : h.epochs) {
    out << e.epoch << ',' << format_double(e.lr) << ',' << format_double(e.softmax) << ','
        << format_double(e.auxiliary) << ',' << format_double(e.total) << ',' << e.skipped_batches << '\n';
  }
}

inline void write_loss_trace_csv(std::ostream& out, const TrainHistory& h) {
  out << "step,L_s,L_ecstfl,L_total,skipped\n";
  for (const auto& s : h.steps) {
    out << s.step << ',' << format_double(s.softmax) << ',' << format_double(s.auxiliary) << ','
        << format_double(s.total) << ',' << (s.skipped ? 1 : 0) << '\n';
  }
}

}  // namespace ecstfl
