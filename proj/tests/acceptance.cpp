// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances and runtime bounds are pinned in code.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "seedrej/runner.hpp"

using namespace seedrej;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& name, double time_limit_s,
               const std::function<std::string()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = true;
  try {
    detail = body();
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (time_limit_s > 0.0 && dt > time_limit_s) {
    ok = false;
    detail += " [exceeded time limit]";
  }
  std::string timing = time_limit_s > 0.0
                           ? " / limit " + std::to_string(static_cast<int>(time_limit_s)) + " s"
                           : "";
  if (!ok) ++g_failures;
  std::printf("[%s] criterion %2d: %s (%.2f s%s)%s%s\n", ok ? "PASS" : "FAIL", number,
              name.c_str(), dt, timing.c_str(), detail.empty() ? "" : " - ", detail.c_str());
}

struct Violation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
  if (!cond) throw Violation(msg);
}

nlohmann::json ordering_config(std::uint64_t seed) {
  nlohmann::json doc;
  doc["seed"] = seed;
  doc["synthetic"] = {{"kind", "coarse_fine"}, {"n_samples", 5000}, {"p_noise", 0.3}};
  doc["folds"] = 5;
  doc["scorers"] = nlohmann::json::array({
      {{"name", "oracle_ae"}},
      {{"name", "constant"}},
      {{"name", "softmax_response"}},
      {{"name", "daer"}, {"label", "daer_full"}},
      {{"name", "daer"}, {"ablation", "no_seed"}, {"label", "daer_no_seed"}},
  });
  doc["daer"] = {{"hidden", {64, 64}},
                 {"bins", {{"count", 32}, {"ae_max", 100.0}}},
                 {"optimizer", "adam"},
                 {"learning_rate", 1e-3},
                 {"batch_size", 32},
                 {"max_epochs", 60},
                 {"patience", 12}};
  return doc;
}

nlohmann::json small_run_config() {
  nlohmann::json doc;
  doc["seed"] = 515;
  doc["synthetic"] = {{"kind", "coarse_fine"},
                      {"n_samples", 300},
                      {"feature_dim", 8},
                      {"task_model", {{"hidden", {16}}, {"epochs", 6}}}};
  doc["folds"] = 3;
  doc["scorers"] = nlohmann::json::array(
      {{{"name", "oracle_ae"}}, {{"name", "softmax_response"}}, {{"name", "daer"}}});
  doc["daer"] = {{"hidden", {8}},
                 {"bins", {{"count", 8}, {"ae_max", 100.0}}},
                 {"learning_rate", 0.05},
                 {"batch_size", 16},
                 {"max_epochs", 4},
                 {"patience", 4}};
  return doc;
}

}  // namespace

int main() {
  criterion(1, "metric identities on 1000 random datasets", 5.0, [] {
    Rng rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
      std::size_t n = 1 + rng.uniform_index(200);
      std::vector<double> aes(n);
      for (double& ae : aes) ae = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.0, 50.0);
      RejectionCurve curve = rejection_curve(aes);
      double brute = oracles::amae_brute_force(aes);
      require(std::abs(curve.amae - brute) <= 1e-12, "AMAE != brute-force prefix mean");
      double mean = std::accumulate(aes.begin(), aes.end(), 0.0) / static_cast<double>(n);
      require(std::abs(curve.points.back().mae - mean) <= 1e-12,
              "MAE at coverage 1.0 != dataset mean AE");
    }
    return std::string("AMAE == brute force and MAE(1.0) == mean AE to 1e-12");
  });

  criterion(2, "oracle ranking optimality on 200 random datasets", 10.0, [] {
    Rng rng(202);
    for (int trial = 0; trial < 200; ++trial) {
      std::size_t n = 2 + rng.uniform_index(120);
      std::vector<double> aes(n);
      for (double& ae : aes)
        ae = rng.uniform() < 0.4 ? 0.0 : static_cast<double>(rng.uniform_index(8));
      std::vector<double> sorted = aes;
      std::sort(sorted.begin(), sorted.end());
      RejectionCurve best = rejection_curve(sorted);
      std::vector<double> perm = aes;
      for (int p = 0; p < 100; ++p) {
        rng.shuffle(perm);
        RejectionCurve other = rejection_curve(perm);
        require(best.amae <= other.amae + 1e-12, "oracle AMAE exceeded a permutation's AMAE");
        if (std::abs(best.amae - other.amae) <= 1e-12) {
          for (std::size_t i = 0; i < n; ++i)
            require(std::abs(best.points[i].mae - other.points[i].mae) <= 1e-12,
                    "equal AMAE without coinciding prefix means");
        }
      }
    }
    return std::string("oracle AMAE minimal; equality only with coinciding prefix means");
  });

  criterion(3, "additional-error clamp under fuzzing", 0.0, [] {
    Rng rng(303);
    for (int i = 0; i < 100000; ++i) {
      double lc = rng.uniform(0.0, 100.0);
      double lg = rng.uniform(0.0, 100.0);
      double ae = additional_error(lc, lg);
      require(ae >= 0.0, "AE < 0");
      if (lc <= lg) require(ae == 0.0, "AE != 0 although candidate loss <= gold loss");
    }
    return std::string("AE >= 0 on 1e5 pairs; AE == 0 whenever loss_c <= loss_gs");
  });

  criterion(4, "rotation identities on 1e4 random pairs", 5.0, [] {
    Rng rng(404);
    const double two_sqrt2 = 2.0 * std::sqrt(2.0);
    for (int i = 0; i < 10000; ++i) {
      Rotation a = random_rotation(rng);
      Rotation b = random_rotation(rng);
      double geo = geodesic_distance(a, b);
      double lar = larochelle_distance(a, b);
      require(std::abs(lar - two_sqrt2 * std::sin(geo / 2.0)) <= 1e-9,
              "larochelle != 2*sqrt(2)*sin(geodesic/2)");
      require(std::abs(geo - geodesic_distance(b, a)) <= 1e-12, "geodesic not symmetric");
      require(std::abs(lar - larochelle_distance(b, a)) <= 1e-12, "larochelle not symmetric");
    }
    const double pi = 3.14159265358979323846;
    require(std::abs(geodesic_distance(Rotation::identity(), rot_z(pi)) - pi) <= 1e-9,
            "geodesic(I, Rz(pi)) != pi");
    return std::string("consistency 1e-9, symmetry 1e-12, half-turn exact");
  });

  criterion(5, "analytic gradients vs central finite differences", 0.0, [] {
    Rng rng(505);
    int model_count = 0;
    for (int trial = 0; trial < 20; ++trial) {
      std::size_t primary_dim = 3 + rng.uniform_index(4);
      std::size_t seed_dim = 1 + rng.uniform_index(3);
      std::size_t batch_n = 2 + rng.uniform_index(4);
      Dataset ds = helpers::dataset_with_aes(std::vector<double>(batch_n, 0.0));
      for (auto& s : ds.samples) {
        s.loss_candidate = rng.uniform() < 0.5 ? rng.uniform(0.5, 9.5) : 0.0;
        std::vector<double> probs(primary_dim), seed(seed_dim);
        for (double& v : probs) v = rng.normal();
        for (double& v : seed) v = rng.normal();
        s.features["probs"] = probs;
        s.features["seed"] = seed;
      }
      std::vector<std::size_t> batch(batch_n);
      std::iota(batch.begin(), batch.end(), std::size_t{0});

      for (Ablation ab : {Ablation::full, Ablation::correctness_only, Ablation::regression_only,
                          Ablation::no_seed}) {
        TrainConfig cfg;
        cfg.hidden = {1 + rng.uniform_index(5)};
        cfg.bins = {4 + rng.uniform_index(5), 10.0};
        cfg.smoothing_sigma = rng.uniform(0.0, 2.0);
        cfg.ablation = ab;
        RejectionModel m =
            make_rejection_model(primary_dim, seed_dim, cfg.hidden, cfg.bins.count, rng);
        ModelGrads grads(m);
        compute_gradients(m, ds, batch, cfg, grads);

        std::vector<double> analytic;
        auto add = [&](const nn::LayerGrads& lg) {
          analytic.insert(analytic.end(), lg.dw.begin(), lg.dw.end());
          analytic.insert(analytic.end(), lg.db.begin(), lg.db.end());
        };
        for (const auto& lg : grads.trunk) add(lg);
        add(grads.correctness);
        add(grads.regression);

        std::vector<double*> params;
        auto addp = [&](nn::Layer& l) {
          for (auto& v : l.w) params.push_back(&v);
          for (auto& v : l.b) params.push_back(&v);
        };
        for (auto& l : m.trunk) addp(l);
        addp(m.correctness_head);
        addp(m.regression_head);

        const double h = 1e-5;
        for (std::size_t p = 0; p < params.size(); ++p) {
          double orig = *params[p];
          *params[p] = orig + h;
          double up = compute_losses(m, ds, batch, cfg).total();
          *params[p] = orig - h;
          double down = compute_losses(m, ds, batch, cfg).total();
          *params[p] = orig;
          double fd = (up - down) / (2.0 * h);
          double scale = std::max({1.0, std::abs(fd), std::abs(analytic[p])});
          require(std::abs(fd - analytic[p]) / scale <= 1e-4,
                  "gradient mismatch in ablation " + std::string(ablation_name(ab)));
        }
      }
      ++model_count;
    }
    return std::to_string(model_count) + " models x 4 ablations within 1e-4 relative error";
  });

  criterion(6, "regression-head conditioning contract", 0.0, [] {
    Rng rng(606);
    for (int trial = 0; trial < 10; ++trial) {
      Dataset ds = helpers::dataset_with_aes(std::vector<double>(6, 0.0));  // all AE 0
      for (auto& s : ds.samples) {
        s.features["probs"] = {rng.normal(), rng.normal(), rng.normal()};
        s.features["seed"] = {rng.normal()};
      }
      std::vector<std::size_t> batch{0, 1, 2, 3, 4, 5};

      TrainConfig cfg;
      cfg.hidden = {4};
      cfg.bins = {6, 10.0};
      RejectionModel m = make_rejection_model(3, 1, cfg.hidden, cfg.bins.count, rng);
      ModelGrads grads(m);
      compute_gradients(m, ds, batch, cfg, grads);
      for (double g : grads.regression.dw) require(g == 0.0, "nonzero regression weight gradient");
      for (double g : grads.regression.db) require(g == 0.0, "nonzero regression bias gradient");

      // correctness_only must leave the regression head bitwise unchanged
      for (auto& s : ds.samples) s.loss_candidate = rng.uniform() < 0.5 ? 7.0 : 0.0;
      cfg.ablation = Ablation::correctness_only;
      RejectionModel before = m;
      OptimizerState opt(m);
      train_step(m, ds, batch, cfg, opt);
      require(m.regression_head.w == before.regression_head.w &&
                  m.regression_head.b == before.regression_head.b,
              "regression head changed under correctness_only");
    }
    return std::string("zero-incorrect batches give exactly zero regression gradient");
  });

  criterion(7, "desk-scale method ordering over 5 seeds", 300.0, [] {
    std::map<std::string, double> mean_amae;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      RunConfig cfg = parse_run_config(ordering_config(seed));
      helpers::TempDir out("acc_ordering_" + std::to_string(seed));
      EvalResult res = run_eval(cfg, out.path());
      for (const auto& [label, entry] : res.report["scorers"].items())
        mean_amae[label] += entry["fold_mean_amae"].get<double>() / 5.0;
    }
    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "oracle %.3f < daer %.3f < no_seed %.3f; constant %.3f; softmax %.3f",
                  mean_amae["oracle_ae"], mean_amae["daer_full"], mean_amae["daer_no_seed"],
                  mean_amae["constant"], mean_amae["softmax_response"]);
    require(mean_amae["oracle_ae"] < mean_amae["daer_full"], "oracle_ae !< daer_full");
    require(mean_amae["daer_full"] < mean_amae["daer_no_seed"], "daer_full !< no_seed ablation");
    require(mean_amae["daer_full"] < mean_amae["constant"], "daer_full !< constant");
    require(mean_amae["daer_full"] <= mean_amae["softmax_response"],
            "daer_full !<= softmax_response");
    return std::string(detail);
  });

  criterion(8, "coverage at target MAE on the 0/0/0/100 sequence", 0.0, [] {
    RejectionCurve curve = rejection_curve(std::vector<double>{0, 0, 0, 100});
    require(coverage_at_target_mae(curve, 1.0) == 0.75, "coverage at target 1.0 != 0.75");
    require(coverage_at_target_mae(curve, 25.0) == 1.0, "coverage at target 25.0 != 1.0");
    return std::string("0.75 at target 1.0 and 1.0 at target 25.0, exactly");
  });

  criterion(9, "byte-identical reruns of eval and train-daer", 0.0, [] {
    RunConfig cfg = parse_run_config(small_run_config());
    helpers::TempDir a("acc_repro_a"), b("acc_repro_b");
    EvalResult ea = run_eval(cfg, a.path());
    EvalResult eb = run_eval(cfg, b.path());
    require(helpers::slurp(ea.report_path) == helpers::slurp(eb.report_path),
            "reports differ between identical runs");
    require(ea.curve_paths.size() == eb.curve_paths.size(), "curve file count differs");
    for (std::size_t i = 0; i < ea.curve_paths.size(); ++i)
      require(helpers::slurp(ea.curve_paths[i]) == helpers::slurp(eb.curve_paths[i]),
              "curve files differ between identical runs");

    TrainDaerResult ta = run_train_daer(cfg, a.path());
    TrainDaerResult tb = run_train_daer(cfg, b.path());
    require(helpers::slurp(ta.checkpoint_path) == helpers::slurp(tb.checkpoint_path),
            "checkpoints differ between identical runs");
    require(helpers::slurp(ta.log_path) == helpers::slurp(tb.log_path),
            "training logs differ between identical runs");
    return std::string("reports, curves, checkpoints, and logs are byte-identical");
  });

  criterion(10, "percentile sampler convergence and defaults", 0.0, [] {
    ScorerSpec defaults;
    require(defaults.n_samples == 10000, "default n_samples != 10000");
    require(defaults.percentile == 80.0, "default percentile != 80");

    std::vector<double> probs{0.6, 0.25, 0.15};
    std::vector<double> values{0, 1, 2};
    double exact = oracles::percentile_cdf_oracle(probs, values, 80.0);
    double mc = mc_percentile_score(probs, values, 100000, 80.0, 1010);
    char detail[128];
    std::snprintf(detail, sizeof(detail), "mc %.4f vs exact %.4f; defaults n=10000, pct=80", mc,
                  exact);
    require(std::abs(mc - exact) <= 0.01, "sampler missed the CDF oracle by more than 0.01");
    return std::string(detail);
  });

  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", g_failures);
  return 1;
}
