#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "oracles.hpp"
#include "seedrej/daer.hpp"
#include "seedrej/scorers.hpp"
#include "seedrej/synthetic.hpp"

using namespace seedrej;
using Catch::Matchers::WithinAbs;

namespace {

SyntheticTaskConfig small_coarse_fine(std::uint64_t seed, double p_noise,
                                      std::size_t n = 1200) {
  SyntheticTaskConfig cfg;
  cfg.kind = TaskKind::coarse_fine;
  cfg.n_samples = n;
  cfg.feature_dim = 10;
  cfg.n_coarse = 3;
  cfg.n_fine = 12;
  cfg.p_noise = p_noise;
  cfg.rng_seed = seed;
  cfg.task_model.hidden = {32, 32};
  cfg.task_model.epochs = 20;
  return cfg;
}

}  // namespace

TEST_CASE("coarse_fine candidate seeds follow the flip probability") {
  SECTION("p_noise 0 keeps every candidate equal to its gold seed") {
    auto corpus = generate_corpus(small_coarse_fine(1, 0.0, 500));
    for (const auto& item : corpus.items) CHECK(item.candidate_seed == item.gold_seed);
  }
  SECTION("p_noise 1 with two coarse classes flips every seed") {
    SyntheticTaskConfig cfg = small_coarse_fine(2, 1.0, 500);
    cfg.n_coarse = 2;
    cfg.n_fine = 12;
    auto corpus = generate_corpus(cfg);
    for (const auto& item : corpus.items) {
      auto gold = std::get<CategoricalSeed>(item.gold_seed).index;
      auto cand = std::get<CategoricalSeed>(item.candidate_seed).index;
      CHECK(cand == 1 - gold);
    }
  }
  SECTION("empirical flip fraction concentrates around p_noise") {
    auto corpus = generate_corpus(small_coarse_fine(3, 0.3, 10000));
    std::size_t flips = 0;
    for (const auto& item : corpus.items)
      if (!(item.candidate_seed == item.gold_seed)) ++flips;
    CHECK_THAT(static_cast<double>(flips) / 10000.0, WithinAbs(0.3, 0.02));
  }
}

TEST_CASE("coarse_fine requires n_fine divisible by n_coarse") {
  SyntheticTaskConfig cfg = small_coarse_fine(4, 0.3);
  cfg.n_fine = 10;  // not divisible by 3
  CHECK_THROWS_WITH(generate_corpus(cfg), Catch::Matchers::ContainsSubstring("divisible"));
}

TEST_CASE("grid_angle candidate cells") {
  SyntheticTaskConfig cfg;
  cfg.kind = TaskKind::grid_angle;
  cfg.n_samples = 2000;
  cfg.feature_dim = 6;
  cfg.grid_size = 8;
  cfg.rng_seed = 5;

  SECTION("p_noise 0 copies the gold cell") {
    cfg.p_noise = 0.0;
    auto corpus = generate_corpus(cfg);
    for (const auto& item : corpus.items) CHECK(item.candidate_seed == item.gold_seed);
  }
  SECTION("heavy jitter never leaves the grid") {
    cfg.p_noise = 0.9;
    auto corpus = generate_corpus(cfg);
    for (const auto& item : corpus.items) {
      const auto& c = std::get<GridSeed>(item.candidate_seed);
      CHECK(c.row < cfg.grid_size);
      CHECK(c.col < cfg.grid_size);
    }
  }
  SECTION("grid size below 2 is an error") {
    cfg.grid_size = 1;
    CHECK_THROWS_AS(generate_corpus(cfg), std::invalid_argument);
  }
}

TEST_CASE("grid jitter magnitudes match the discretized-Gaussian law") {
  Rng rng(6);
  const double sigma = 2.0;
  std::vector<double> magnitudes;
  magnitudes.reserve(10000);
  for (int i = 0; i < 10000; ++i) {
    auto [dr, dc] = sample_grid_jitter(rng, sigma);
    magnitudes.push_back(std::hypot(static_cast<double>(dr), static_cast<double>(dc)));
  }
  auto exact = oracles::jitter_magnitude_distribution(sigma, 30);
  CHECK(oracles::ks_distance(magnitudes, exact) <= 0.05);
}

TEST_CASE("generation is deterministic per rng seed") {
  auto a = generate_corpus(small_coarse_fine(7, 0.3, 300));
  auto b = generate_corpus(small_coarse_fine(7, 0.3, 300));
  REQUIRE(a.items.size() == b.items.size());
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    CHECK(a.items[i].x == b.items[i].x);
    CHECK(a.items[i].target == b.items[i].target);
    CHECK(a.items[i].candidate_seed == b.items[i].candidate_seed);
  }
}

TEST_CASE("task model training") {
  SECTION("default coarse_fine config reaches 0.9 holdout accuracy") {
    SyntheticTaskConfig cfg;  // declared defaults
    cfg.rng_seed = 6;
    auto corpus = generate_corpus(cfg);
    TaskModel f = train_task_model(corpus, cfg.task_model, 22);
    CHECK(f.holdout_accuracy >= 0.9);
  }
  SECTION("an adversarially wrong coarse seed costs accuracy") {
    SyntheticTaskConfig cfg = small_coarse_fine(9, 0.0);
    auto corpus = generate_corpus(cfg);
    TaskModel f = train_task_model(corpus, cfg.task_model, 909);
    std::size_t gold_correct = 0, wrong_correct = 0;
    for (const auto& item : corpus.items) {
      if (f.predict(item.x, item.gold_seed) == item.target) ++gold_correct;
      auto gold = std::get<CategoricalSeed>(item.gold_seed).index;
      SeedValue wrong = CategoricalSeed{(gold + 1) % cfg.n_coarse};
      if (f.predict(item.x, wrong) == item.target) ++wrong_correct;
    }
    CHECK(wrong_correct < gold_correct);
  }
  SECTION("training is deterministic per rng seed") {
    SyntheticTaskConfig cfg = small_coarse_fine(10, 0.3, 400);
    cfg.task_model.hidden = {16};
    cfg.task_model.epochs = 3;
    auto corpus = generate_corpus(cfg);
    TaskModel a = train_task_model(corpus, cfg.task_model, 111);
    TaskModel b = train_task_model(corpus, cfg.task_model, 111);
    CHECK(a.output.w == b.output.w);
    for (std::size_t l = 0; l < a.trunk.size(); ++l) CHECK(a.trunk[l].w == b.trunk[l].w);
    CHECK(a.holdout_accuracy == b.holdout_accuracy);
  }
}

TEST_CASE("evaluate_pair applies the exact AE oracle") {
  SyntheticTaskConfig cfg = small_coarse_fine(11, 0.4);
  auto corpus = generate_corpus(cfg);
  TaskModel f = train_task_model(corpus, cfg.task_model, 1111);

  bool saw_equal_seeds = false, saw_both_correct = false, saw_candidate_only_wrong = false;
  for (const auto& item : corpus.items) {
    PairEval e = evaluate_pair(f, item);
    CHECK(e.ae >= 0.0);
    CHECK((e.loss_candidate == 0.0 || e.loss_candidate == 100.0));
    CHECK((e.loss_gold == 0.0 || e.loss_gold == 100.0));
    if (item.candidate_seed == item.gold_seed) {
      saw_equal_seeds = true;
      CHECK(e.ae == 0.0);  // identical evaluations, exactly
    }
    if (e.loss_candidate == 0.0 && e.loss_gold == 0.0) {
      saw_both_correct = true;
      CHECK(e.ae == 0.0);
    }
    if (e.loss_candidate == 100.0 && e.loss_gold == 0.0) {
      saw_candidate_only_wrong = true;
      CHECK(e.ae == 100.0);
    }
  }
  CHECK(saw_equal_seeds);
  CHECK(saw_both_correct);
  CHECK(saw_candidate_only_wrong);
}

TEST_CASE("corpus_to_dataset produces valid, lossless records") {
  SyntheticTaskConfig cfg = small_coarse_fine(12, 0.3, 400);
  auto corpus = generate_corpus(cfg);
  TaskModel f = train_task_model(corpus, cfg.task_model, 1212);
  Dataset ds = corpus_to_dataset(corpus, f);

  REQUIRE(ds.size() == corpus.items.size());
  std::set<std::string> ids;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& s = ds.samples[i];
    CHECK(ids.insert(s.sample_id).second);
    REQUIRE(s.has_gold_losses());
    PairEval e = evaluate_pair(f, corpus.items[i]);
    CHECK(sample_additional_error(s) == e.ae);  // stored losses reproduce the oracle AE
    CHECK(s.features.at("probs").size() == cfg.n_fine);
    CHECK(s.features.at("seed").size() == cfg.n_coarse);
  }

  // lossless round-trip through the record format
  std::string once = serialize_records(ds);
  Dataset reparsed = parse_records(once);
  REQUIRE(reparsed.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(reparsed.samples[i].loss_candidate == ds.samples[i].loss_candidate);
    CHECK(reparsed.samples[i].loss_gold == ds.samples[i].loss_gold);
    CHECK(reparsed.samples[i].features == ds.samples[i].features);
  }
}

TEST_CASE("with p_noise 0 every scorer has AMAE exactly zero") {
  SyntheticTaskConfig cfg = small_coarse_fine(13, 0.0, 300);
  auto corpus = generate_corpus(cfg);
  TaskModel f = train_task_model(corpus, cfg.task_model, 1313);
  Dataset ds = corpus_to_dataset(corpus, f);

  double mean_ae = 0.0;
  for (const auto& s : ds.samples) mean_ae += sample_additional_error(s);
  CHECK(mean_ae == 0.0);

  for (ScorerKind kind : {ScorerKind::softmax_response, ScorerKind::entropy,
                          ScorerKind::oracle_ae, ScorerKind::constant}) {
    ScorerSpec spec;
    spec.kind = kind;
    spec.n_samples = 200;
    auto scores = score_dataset(ds, spec);
    CHECK(rejection_curve(ds, rank_by_score(ds, scores)).amae == 0.0);
  }
}

TEST_CASE("a trained rejection model beats constant and reversed-oracle rankings") {
  SyntheticTaskConfig cfg = small_coarse_fine(14, 0.3, 1600);
  auto corpus = generate_corpus(cfg);
  TaskModel f = train_task_model(corpus, cfg.task_model, 1414);
  Dataset ds = corpus_to_dataset(corpus, f);

  Dataset train_ds, val_ds;
  train_ds.schema = val_ds.schema = ds.schema;
  for (std::size_t i = 0; i < ds.size(); ++i)
    (i % 4 == 0 ? val_ds : train_ds).samples.push_back(ds.samples[i]);

  TrainConfig tc;
  tc.hidden = {32};
  tc.bins = {32, 100.0};
  tc.optimizer = nn::Optimizer::adam;
  tc.learning_rate = 1e-3;
  tc.max_epochs = 30;
  tc.patience = 6;
  tc.rng_seed = 1441;
  RejectionModel model = train(train_ds, val_ds, tc);
  DaerScorer scorer = make_daer_scorer(model, tc);

  auto daer_scores = score_dataset(val_ds, scorer);
  double daer_amae = rejection_curve(val_ds, rank_by_score(val_ds, daer_scores)).amae;

  std::vector<double> constants(val_ds.size(), 0.0);
  double constant_amae = rejection_curve(val_ds, rank_by_score(val_ds, constants)).amae;

  std::vector<double> reversed;
  for (const auto& s : val_ds.samples) reversed.push_back(-sample_additional_error(s));
  double reversed_amae = rejection_curve(val_ds, rank_by_score(val_ds, reversed)).amae;

  CHECK(daer_amae < constant_amae);
  CHECK(daer_amae < reversed_amae);
}
