#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "sp2net/training.hpp"

namespace sp2net {
namespace {

TEST(TargetSpec, MainLobeBandWidth) {
  const TargetSpec spec;
  EXPECT_EQ(spec.m_target, 64u);
  EXPECT_EQ(spec.geom.num_elements(), 64u);
  EXPECT_NEAR(spec.delta_deg, 2.0 / 64.0 * 180.0 / oracle::kPi, 1e-12);
  EXPECT_NEAR(spec.delta_deg, 1.7904931097838226, 1e-12);
}

TEST(TargetScore, OneAtTrueAngleAndNullAtFirstZero) {
  const TargetSpec spec;
  const std::vector<double> one{90.0};
  EXPECT_NEAR(target_score(spec, 90.0, one), 1.0, 1e-12);
  // First null of a 64-element half-wavelength ULA steered to 90 degrees:
  // pi cos(theta) = 2 pi / 64.
  const double null = std::acos(1.0 / 32.0) * 180.0 / oracle::kPi;
  EXPECT_NEAR(null, 88.20916, 1e-4);
  EXPECT_LT(target_score(spec, null, one), 1e-20);
  EXPECT_LT(target_score(spec, 180.0 - null, one), 1e-20);
}

TEST(TargetScore, MatchesDirichletOracleAndMaxOverSources) {
  const TargetSpec spec;
  Rng rng(5);
  for (int rep = 0; rep < 500; ++rep) {
    const double h = rng.uniform(45, 135);
    const std::vector<double> srcs{rng.uniform(45, 135), rng.uniform(45, 135), rng.uniform(45, 135)};
    double expect = 0.0;
    for (double s : srcs) {
      const double single = target_score(spec, h, std::span<const double>(&s, 1));
      EXPECT_NEAR(single, oracle::ula_beampattern(64, h, s), 1e-12);
      // Symmetric in hypothesis and source.
      EXPECT_NEAR(single, target_score(spec, s, std::span<const double>(&h, 1)), 1e-12);
      expect = std::max(expect, single);
    }
    EXPECT_EQ(target_score(spec, h, srcs), expect);
    const double t = target_score(spec, h, srcs);
    EXPECT_GE(t, 0.0);
    EXPECT_LE(t, 1.0);
  }
  const std::vector<double> dup{100.0, 100.0}, single{100.0};
  EXPECT_EQ(target_score(spec, 101.3, dup), target_score(spec, 101.3, single));
  EXPECT_THROW(target_score(spec, 90.0, std::vector<double>{}), std::invalid_argument);
}

TEST(SampleHypotheses, HalfInsideBandHalfOutside) {
  const TargetSpec spec;
  const FieldOfView fov;
  Rng rng(8);
  for (double th : {45.0, 45.5, 90.0, 134.7, 135.0}) {
    const auto hyp = sample_hypotheses(spec, 80, th, fov, rng);
    ASSERT_EQ(hyp.size(), 80u);
    for (std::size_t i = 0; i < 80; ++i) {
      EXPECT_GE(hyp[i], 45.0);
      EXPECT_LE(hyp[i], 135.0);
      const bool inside = std::abs(hyp[i] - th) <= spec.delta_deg / 2;
      EXPECT_EQ(inside, i < 40) << "theta " << th << " sample " << i;
    }
  }
  EXPECT_THROW(sample_hypotheses(spec, 3, 90.0, fov, rng), std::invalid_argument);
}

TEST(SampleHypotheses, UniformWithinEachRegion) {
  const TargetSpec spec;
  const FieldOfView fov;
  Rng rng(10);
  const double th = 100.0, half = spec.delta_deg / 2;
  std::vector<double> in, out;
  for (int rep = 0; rep < 250; ++rep) {
    const auto hyp = sample_hypotheses(spec, 80, th, fov, rng);
    in.insert(in.end(), hyp.begin(), hyp.begin() + 40);
    out.insert(out.end(), hyp.begin() + 40, hyp.end());
  }
  const double d_in = oracle::ks_statistic(in, [&](double v) { return (v - (th - half)) / (2 * half); });
  EXPECT_LT(d_in, oracle::ks_critical_1pct(in.size()));
  // Outside region: [45, th - half) U (th + half, 135] with a gap.
  const double left = th - half - 45.0, total = 90.0 - 2 * half;
  const double d_out = oracle::ks_statistic(out, [&](double v) {
    if (v <= th - half) return (v - 45.0) / total;
    if (v < th + half) return left / total;
    return (left + v - (th + half)) / total;
  });
  EXPECT_LT(d_out, oracle::ks_critical_1pct(out.size()));
}

TEST(SnrWeight, ReferencePoints) {
  EXPECT_EQ(snr_weight(40), 1.0);
  EXPECT_NEAR(snr_weight(0), 1e-4, 1e-18);
  EXPECT_NEAR(snr_weight(20), 1e-2, 1e-16);
  EXPECT_THROW(snr_weight(41), std::invalid_argument);
  EXPECT_THROW(snr_weight(-1), std::invalid_argument);
  EXPECT_EQ(snr_weight(0, 1e-3), 1e-3);
  EXPECT_EQ(snr_weight(40, 1e-3), 1.0);
}

TEST(SampleSet, ShapesAndWeights) {
  const auto g = make_ula(16);
  const TargetSpec spec;
  TrainConfig cfg;
  Rng rng(3);
  const auto set = draw_sample_set(g, spec, cfg, 50, rng);
  std::size_t expected = 0;
  for (const auto& sc : set.scenarios) expected += 80 * sc.sources.size();
  ASSERT_EQ(set.samples.size(), expected);
  for (const auto& smp : set.samples) {
    const auto& sc = set.scenarios[smp.scenario_index];
    EXPECT_EQ(smp.loss_weight, snr_weight(sc.snr_db));
    EXPECT_EQ(smp.target, target_score(spec, smp.theta_hyp, sc.sorted_angles()));
  }
  const Matrix cols = encode_samples(g, set, 5, 3);
  EXPECT_EQ(cols.rows(), 65);
  EXPECT_EQ(cols.cols(), 3);
  EXPECT_DOUBLE_EQ(constant_predictor_wmse(set, 0.5), [&] {
    double acc = 0;
    for (const auto& s : set.samples) acc += s.loss_weight * (0.5 - s.target) * (0.5 - s.target);
    return acc / static_cast<double>(set.samples.size());
  }());
}

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.scenarios_per_iteration = 20;
  cfg.validation_size = 100;
  cfg.eval_interval = 10;
  cfg.max_iterations = 50;
  cfg.learning_rate = 1e-2;
  cfg.seed = 11;
  return cfg;
}

ModelParams toy_model(std::uint64_t seed) {
  Rng rng(seed);
  return initialize_model(16, make_architecture(16, std::vector<std::uint32_t>{8}, {}), rng);
}

TEST(Train, ToyNetworkBeatsConstantBaseline) {
  const auto g = make_ula(16);
  const TargetSpec spec;
  const auto cfg = toy_config();
  const auto res = train(toy_model(1), cfg, spec, g);
  Rng val_rng(cfg.validation_seed, 2);
  const auto val = draw_sample_set(g, spec, cfg, cfg.validation_size, val_rng);
  const double baseline = constant_predictor_wmse(val, 0.5);
  EXPECT_LT(res.best_validation_wmse, baseline);
  EXPECT_EQ(res.iterations_run, 50u);
  EXPECT_NEAR(weighted_mse(res.best_model, g, val), res.best_validation_wmse, 1e-15);
  ASSERT_EQ(res.log.size(), 6u);  // iterations 0, 10, ..., 50
  EXPECT_EQ(res.log.front().iteration, 0u);
  EXPECT_EQ(res.log.back().iteration, 50u);
}

TEST(Train, PatienceReturnsBestCheckpoint) {
  const auto g = make_ula(16);
  const TargetSpec spec;
  auto cfg = toy_config();
  cfg.eval_interval = 1;
  cfg.patience = 2;
  cfg.max_iterations = 300;
  cfg.learning_rate = 0.05;
  const auto res = train(toy_model(2), cfg, spec, g);
  ASSERT_TRUE(res.stopped_on_patience);
  auto best = std::min_element(res.log.begin(), res.log.end(), [](const auto& a, const auto& b) {
    return a.validation_wmse < b.validation_wmse;
  });
  EXPECT_EQ(best->iteration, res.best_iteration);
  EXPECT_EQ(best->validation_wmse, res.best_validation_wmse);
  EXPECT_EQ(res.log.back().iteration, res.best_iteration + cfg.patience);
  Rng val_rng(cfg.validation_seed, 2);
  const auto val = draw_sample_set(g, spec, cfg, cfg.validation_size, val_rng);
  EXPECT_NEAR(weighted_mse(res.best_model, g, val), res.best_validation_wmse, 1e-15);
}

TEST(Train, DeterministicGivenSeeds) {
  const auto g = make_ula(16);
  const TargetSpec spec;
  auto cfg = toy_config();
  cfg.max_iterations = 20;
  const auto a = train(toy_model(3), cfg, spec, g);
  const auto b = train(toy_model(3), cfg, spec, g);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].iteration, b.log[i].iteration);
    EXPECT_EQ(a.log[i].validation_wmse, b.log[i].validation_wmse);
    if (i > 0) EXPECT_EQ(a.log[i].train_wmse, b.log[i].train_wmse);
  }
  EXPECT_TRUE(bitwise_equal(a.best_model, b.best_model));
  cfg.seed = 12;
  const auto c = train(toy_model(3), cfg, spec, g);
  EXPECT_NE(c.log.back().train_wmse, a.log.back().train_wmse);
}

TEST(Train, WritesCheckpointsOnImprovement) {
  const auto g = make_ula(16);
  const TargetSpec spec;
  auto cfg = toy_config();
  const auto dir = std::filesystem::temp_directory_path() / "sp2net_train_ckpt";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  cfg.checkpoint_prefix = dir / "toy";
  const auto res = train(toy_model(4), cfg, spec, g);
  const auto path = dir / ("toy.iter" + std::to_string(res.best_iteration) + ".sp2n");
  if (res.best_iteration > 0) {
    ASSERT_TRUE(std::filesystem::exists(path));
    EXPECT_TRUE(bitwise_equal(load_model(path), res.best_model));
  }
  std::filesystem::remove_all(dir);
}

TEST(Train, RejectsMismatchedModelAndConfig) {
  const auto g = make_ula(8);
  const TargetSpec spec;
  EXPECT_THROW(train(toy_model(1), toy_config(), spec, g), std::invalid_argument);
  auto cfg = toy_config();
  cfg.k_hypotheses = 3;
  EXPECT_THROW(train(toy_model(1), cfg, spec, make_ula(16)), std::invalid_argument);
}

}  // namespace
}  // namespace sp2net
