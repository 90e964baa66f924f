#include "sp2net/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <string>

namespace sp2net {

namespace {
constexpr double kMaxSnrDb = 40.0;
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kValidationStream = 2;
}  // namespace

TargetSpec::TargetSpec(std::size_t m)
    : m_target(m), geom(make_ula(m)), delta_deg((2.0 / static_cast<double>(m)) * (180.0 / kPi)) {}

void TrainConfig::validate() const {
  if (k_hypotheses == 0 || k_hypotheses % 2 != 0) {
    throw std::invalid_argument("TrainConfig: k_hypotheses must be a positive even number");
  }
  if (scenarios_per_iteration == 0) throw std::invalid_argument("TrainConfig: scenarios_per_iteration must be > 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (validation_size == 0) throw std::invalid_argument("TrainConfig: validation_size must be > 0");
  if (eval_interval == 0) throw std::invalid_argument("TrainConfig: eval_interval must be > 0");
  if (patience == 0) throw std::invalid_argument("TrainConfig: patience must be > 0");
  if (!(weight_floor >= 0.0 && weight_floor <= 1.0)) {
    throw std::invalid_argument("TrainConfig: weight_floor must be in [0, 1]");
  }
  if (batch_chunk == 0) throw std::invalid_argument("TrainConfig: batch_chunk must be > 0");
}

double target_score(const TargetSpec& spec, double theta_hyp, std::span<const double> true_angles) {
  if (true_angles.empty()) throw std::invalid_argument("target_score: no true angles");
  const ComplexVector hyp = steering_vector(spec.geom, theta_hyp);
  double best = 0.0;
  for (double th : true_angles) {
    best = std::max(best, std::norm(hyp.dot(steering_vector(spec.geom, th))));
  }
  // Rounding can push |a^H a|^2 a hair above one.
  return std::min(best, 1.0);
}

std::vector<double> sample_hypotheses(const TargetSpec& spec, std::size_t k, double true_angle,
                                      const FieldOfView& fov, Rng& rng) {
  if (k % 2 != 0) throw std::invalid_argument("sample_hypotheses: K must be even");
  if (!fov.contains(true_angle)) throw std::invalid_argument("sample_hypotheses: true angle outside FOV");
  const double half = 0.5 * spec.delta_deg;
  const double lo = std::max(fov.lo, true_angle - half);
  const double hi = std::min(fov.hi, true_angle + half);
  if (fov.width() <= hi - lo) throw std::invalid_argument("sample_hypotheses: band covers the whole FOV");

  std::vector<double> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k / 2; ++i) out.push_back(rng.uniform(lo, hi));
  while (out.size() < k) {
    const double th = rng.uniform(fov.lo, fov.hi);
    if (std::abs(th - true_angle) > half) out.push_back(th);
  }
  return out;
}

double snr_weight(double snr_db) {
  if (!(snr_db >= 0.0 && snr_db <= kMaxSnrDb)) {
    throw std::invalid_argument("snr_weight: SNR must be within [0, 40] dB");
  }
  return std::pow(10.0, (snr_db - kMaxSnrDb) / 10.0);
}

double snr_weight(double snr_db, double floor) { return std::max(snr_weight(snr_db), floor); }

SampleSet draw_sample_set(const ArrayGeometry& geom, const TargetSpec& spec, const TrainConfig& cfg,
                          std::size_t num_scenarios, Rng& rng) {
  const FieldOfView fov;
  SampleSet set;
  set.scenarios.reserve(num_scenarios);
  for (std::size_t s = 0; s < num_scenarios; ++s) {
    set.scenarios.push_back(sample_training_scenario(geom, rng));
    const Scenario& sc = set.scenarios.back();
    const std::vector<double> angles = sc.sorted_angles();
    const double w = snr_weight(sc.snr_db, cfg.weight_floor);
    for (const auto& src : sc.sources) {
      for (double th : sample_hypotheses(spec, cfg.k_hypotheses, src.theta_deg, fov, rng)) {
        set.samples.push_back({s, th, target_score(spec, th, angles), w});
      }
    }
  }
  return set;
}

Matrix encode_samples(const ArrayGeometry& geom, const SampleSet& set, std::size_t first,
                      std::size_t count) {
  const auto m = static_cast<Eigen::Index>(geom.num_elements());
  Matrix in(4 * m + 1, static_cast<Eigen::Index>(count));
  for (std::size_t j = 0; j < count; ++j) {
    const TrainingSample& smp = set.samples[first + j];
    const Scenario& sc = set.scenarios[smp.scenario_index];
    encode_into(sc.snapshot, steering_vector(geom, smp.theta_hyp), sc.sigma_v,
                in.col(static_cast<Eigen::Index>(j)));
  }
  return in;
}

double weighted_mse(const ModelParams& model, const ArrayGeometry& geom, const SampleSet& set,
                    std::size_t chunk) {
  if (set.samples.empty()) throw std::invalid_argument("weighted_mse: empty sample set");
  double acc = 0.0;
  for (std::size_t first = 0; first < set.samples.size(); first += chunk) {
    const std::size_t count = std::min(chunk, set.samples.size() - first);
    const Vector y = forward_batch(model, encode_samples(geom, set, first, count));
    for (std::size_t j = 0; j < count; ++j) {
      const auto& smp = set.samples[first + j];
      const double d = y[static_cast<Eigen::Index>(j)] - smp.target;
      acc += smp.loss_weight * d * d;
    }
  }
  return acc / static_cast<double>(set.samples.size());
}

double constant_predictor_wmse(const SampleSet& set, double prediction) {
  if (set.samples.empty()) throw std::invalid_argument("constant_predictor_wmse: empty sample set");
  double acc = 0.0;
  for (const auto& smp : set.samples) {
    const double d = prediction - smp.target;
    acc += smp.loss_weight * d * d;
  }
  return acc / static_cast<double>(set.samples.size());
}

TrainResult train(ModelParams model, const TrainConfig& cfg, const TargetSpec& spec,
                  const ArrayGeometry& geom, const TrainLogCallback& on_log) {
  cfg.validate();
  model.validate();
  if (model.input_width() != 4 * geom.num_elements() + 1) {
    throw std::invalid_argument("train: model input width does not match 4M+1 for the array");
  }

  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  Rng val_rng(cfg.validation_seed, kValidationStream);
  const SampleSet validation = draw_sample_set(geom, spec, cfg, cfg.validation_size, val_rng);

  AdamState adam = AdamState::for_model(model, cfg.learning_rate);
  TrainResult res;
  res.best_model = model;
  res.best_validation_wmse = weighted_mse(model, geom, validation);
  res.best_iteration = 0;

  auto record = [&](TrainLogRecord rec) {
    res.log.push_back(rec);
    if (on_log) on_log(rec);
  };
  record({0, std::nan(""), res.best_validation_wmse, elapsed()});

  const Rng train_root(cfg.seed, kTrainStream);
  std::size_t since_best = 0;
  double train_acc = 0.0;
  std::size_t train_count = 0;

  for (std::size_t it = 1; cfg.max_iterations == 0 || it <= cfg.max_iterations; ++it) {
    Rng rng = train_root.substream(it);
    const SampleSet batch = draw_sample_set(geom, spec, cfg, cfg.scenarios_per_iteration, rng);

    Gradients grad = Gradients::zeros_like(model);
    std::vector<double> targets, weights;
    double loss_sum = 0.0;
    for (std::size_t first = 0; first < batch.samples.size(); first += cfg.batch_chunk) {
      const std::size_t count = std::min(cfg.batch_chunk, batch.samples.size() - first);
      targets.resize(count);
      weights.resize(count);
      for (std::size_t j = 0; j < count; ++j) {
        targets[j] = batch.samples[first + j].target;
        weights[j] = batch.samples[first + j].loss_weight;
      }
      loss_sum += accumulate_gradients(model, encode_samples(geom, batch, first, count), targets,
                                       weights, grad);
    }
    const double n = static_cast<double>(batch.samples.size());
    const double loss = loss_sum / n;
    if (!std::isfinite(loss)) {
      throw TrainingAborted("train: non-finite loss at iteration " + std::to_string(it),
                            res.best_model, it);
    }
    grad *= 1.0 / n;
    try {
      adam_step(model, adam, grad);
    } catch (const std::domain_error& e) {
      throw TrainingAborted(std::string("train: ") + e.what(), res.best_model, it);
    }
    train_acc += loss;
    ++train_count;
    res.iterations_run = it;

    const bool last = cfg.max_iterations != 0 && it == cfg.max_iterations;
    if (it % cfg.eval_interval == 0 || last) {
      const double val = weighted_mse(model, geom, validation);
      if (!std::isfinite(val)) {
        throw TrainingAborted("train: non-finite validation loss at iteration " + std::to_string(it),
                              res.best_model, it);
      }
      record({it, train_acc / static_cast<double>(train_count), val, elapsed()});
      train_acc = 0.0;
      train_count = 0;
      if (val < res.best_validation_wmse) {
        res.best_validation_wmse = val;
        res.best_model = model;
        res.best_iteration = it;
        since_best = 0;
        if (!cfg.checkpoint_prefix.empty()) {
          auto path = cfg.checkpoint_prefix;
          path += ".iter" + std::to_string(it) + ".sp2n";
          save_model(model, path);
        }
      } else if (++since_best >= cfg.patience) {
        res.stopped_on_patience = true;
        break;
      }
    }
  }
  return res;
}

void write_log_record(std::ostream& os, const TrainLogRecord& rec) {
  os << rec.iteration << ' ' << rec.train_wmse << ' ' << rec.validation_wmse << ' '
     << rec.wall_seconds << '\n';
}

}  // namespace sp2net
