#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "sp2net/array_model.hpp"
#include "sp2net/neural_net.hpp"
#include "sp2net/rng.hpp"
#include "sp2net/scenario.hpp"

namespace sp2net {

/// Noise-free virtual ULA that defines the training targets.
struct TargetSpec {
  explicit TargetSpec(std::size_t m_target = 64);

  std::size_t m_target;
  ArrayGeometry geom;
  /// Width of the main-lobe band around each source, (2 / M_tg)(180 / pi).
  double delta_deg;
};

struct TrainConfig {
  std::size_t k_hypotheses = 80;             // per source, half inside the main-lobe band
  std::size_t scenarios_per_iteration = 200;
  double learning_rate = 1e-3;
  std::size_t validation_size = 1000;        // scenarios
  std::size_t eval_interval = 50;            // iterations between validation passes
  std::size_t patience = 20;                 // evaluations without improvement
  std::size_t max_iterations = 0;            // 0: stop on patience only
  std::uint64_t seed = 1;
  std::uint64_t validation_seed = 0x5eed5eedULL;
  double weight_floor = 0.0;                 // 0 disables the floor
  std::size_t batch_chunk = 512;             // samples per backprop block
  std::filesystem::path checkpoint_prefix;   // empty: no checkpoint files

  void validate() const;
};

/// t = max_q |a_tg(theta_hyp)^H a_tg(theta_q)|^2.
double target_score(const TargetSpec& spec, double theta_hyp, std::span<const double> true_angles);

/// K hypothesis angles for one source: K/2 uniform on the main-lobe band
/// [theta - delta/2, theta + delta/2] clipped to the field of view, and K/2
/// uniform on the rest of the field of view (by rejection).
std::vector<double> sample_hypotheses(const TargetSpec& spec, std::size_t k_hypotheses,
                                      double true_angle, const FieldOfView& fov, Rng& rng);

/// 10^(snr/10) / 10^4, so 40 dB maps to 1. Throws outside [0, 40].
double snr_weight(double snr_db);
double snr_weight(double snr_db, double floor);

struct TrainingSample {
  std::size_t scenario_index = 0;
  double theta_hyp = 0.0;
  double target = 0.0;
  double loss_weight = 0.0;
};

struct SampleSet {
  std::vector<Scenario> scenarios;
  std::vector<TrainingSample> samples;
};

/// `num_scenarios` training-distribution scenarios, each source expanded
/// into K weighted hypothesis samples.
SampleSet draw_sample_set(const ArrayGeometry& geom, const TargetSpec& spec, const TrainConfig& cfg,
                          std::size_t num_scenarios, Rng& rng);

/// Input columns for samples [first, first + count).
Matrix encode_samples(const ArrayGeometry& geom, const SampleSet& set, std::size_t first,
                      std::size_t count);

/// Mean over samples of w * (prediction - target)^2.
double weighted_mse(const ModelParams& model, const ArrayGeometry& geom, const SampleSet& set,
                    std::size_t chunk = 4096);
double constant_predictor_wmse(const SampleSet& set, double prediction);

struct TrainLogRecord {
  std::size_t iteration = 0;
  double train_wmse = 0.0;       // mean over iterations since the previous record
  double validation_wmse = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  ModelParams best_model;
  std::size_t best_iteration = 0;
  double best_validation_wmse = 0.0;
  std::size_t iterations_run = 0;
  bool stopped_on_patience = false;
  std::vector<TrainLogRecord> log;
};

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, ModelParams last_good, std::size_t iteration)
      : std::runtime_error(what), last_good_(std::move(last_good)), iteration_(iteration) {}
  const ModelParams& last_good() const { return last_good_; }
  std::size_t iteration() const { return iteration_; }

 private:
  ModelParams last_good_;
  std::size_t iteration_;
};

using TrainLogCallback = std::function<void(const TrainLogRecord&)>;

/// Adam on the SNR-weighted MSE with on-the-fly scenarios: one update per
/// iteration of `scenarios_per_iteration` scenarios. Validation runs every
/// `eval_interval` iterations (and at iteration 0); training stops after
/// `patience` evaluations without improvement or at `max_iterations`, and
/// returns the best-validation parameters.
TrainResult train(ModelParams model, const TrainConfig& cfg, const TargetSpec& spec,
                  const ArrayGeometry& geom, const TrainLogCallback& on_log = {});

void write_log_record(std::ostream& os, const TrainLogRecord& rec);

}  // namespace sp2net
