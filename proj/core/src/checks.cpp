// SPDX-License-Identifier: Apache-2.0
#include "motiac/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "motiac/agent.hpp"
#include "motiac/io_util.hpp"
#include "motiac/nn.hpp"
#include "motiac/objectives.hpp"
#include "motiac/priority.hpp"
#include "motiac/rtb_env.hpp"
#include "motiac/tiny_mdp.hpp"

namespace motiac::checks {

namespace {

CheckResult Make(std::string name, double value, double tol, bool pass, std::string detail = {}) {
  return CheckResult{std::move(name), pass, value, tol, std::move(detail)};
}

CheckResult AtMost(std::string name, double value, double tol) {
  return Make(std::move(name), value, tol, value <= tol);
}

nn::Params RandomParams(const nn::NetLayout& layout, std::mt19937_64& rng) {
  nn::Params p(layout);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> flat(p.size());
  for (auto& v : flat) v = u(rng);
  p.Assign(flat);
  return p;
}

std::vector<double> SimplexPoint(std::size_t k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(k);
  double s = 0.0;
  for (auto& v : w) s += (v = e(rng));
  for (auto& v : w) v /= s;
  double head = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) head += w[i];
  w.back() = 1.0 - head;
  return w;
}

}  // namespace

std::vector<CheckResult> Rewards() {
  struct Case {
    const char* fn;
    double x;
    double want;
  };
  const double inf = objectives::kInfinity;
  const Case cases[] = {
      {"cpa", 0.5, 1.0},   {"cpa", 1.0, 1.0},    {"cpa", 1.1, -0.1},  {"cpa", 1.2, -0.2},
      {"cpa", 1.3, -1.69}, {"cpa", 1.4, -1.96},  {"cpa", 1.5, -2.0},  {"cpa", inf, -2.0},
      {"conv", 1.2, 1.0},  {"conv", 1.0, 1.0},   {"conv", 0.9, 0.9},  {"conv", 0.8, 0.0},
      {"conv", 0.5, -0.3},
  };
  std::vector<CheckResult> out;
  for (const auto& c : cases) {
    const double got = std::string_view(c.fn) == "cpa" ? objectives::RewardCpa(c.x) : objectives::RewardConv(c.x);
    const double err = std::abs(got - c.want);
    char name[64];
    std::snprintf(name, sizeof name, "reward_%s(%g)", c.fn, c.x);
    out.push_back(AtMost(name, err, 1e-12));
  }
  return out;
}

std::vector<CheckResult> Gradients(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> width(1, 6);
  std::uniform_int_distribution<int> depth(0, 2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_backward = 0.0;
  for (int n = 0; n < instances; ++n) {
    std::vector<std::size_t> sizes{static_cast<std::size_t>(width(rng))};
    const int hidden = depth(rng);
    for (int h = 0; h < hidden; ++h) sizes.push_back(static_cast<std::size_t>(width(rng)));
    sizes.push_back(static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 3)(rng)));
    const nn::NetLayout layout(sizes, nn::Activation::kTanh);
    const auto params = RandomParams(layout, rng);
    const int batch = std::uniform_int_distribution<int>(1, 4)(rng);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(layout.input_size()), batch);
    Eigen::MatrixXd g(static_cast<Eigen::Index>(layout.output_size()), batch);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = u(rng);
    const auto pass = nn::Forward(params, x);
    const auto analytic = nn::Backward(params, pass.cache, g);
    const auto numeric = nn::FiniteDiffGrad(
        params, [&](const nn::Params& p) { return (nn::Predict(p, x).array() * g.array()).sum(); }, 1e-5);
    worst_backward = std::max(worst_backward, nn::MaxRelativeError(analytic, numeric));
  }

  double worst_actor = 0.0;
  double worst_critic = 0.0;
  const agent::LossWeights weights;
  for (int n = 0; n < instances; ++n) {
    const nn::NetLayout actor_layout({rtb::kStateDim, 5, 2}, nn::Activation::kTanh);
    const nn::NetLayout critic_layout({rtb::kStateDim, 5, 1}, nn::Activation::kTanh);
    auto actor = RandomParams(actor_layout, rng);
    // Keep the raw log-sigma head inside the clamp so the loss is smooth.
    actor.layer(1).weight.row(1) *= 0.1;
    actor.layer(1).bias(1) = -0.5;
    const auto critic = RandomParams(critic_layout, rng);

    agent::Trajectory traj;
    for (int s = 0; s < 3; ++s) {
      agent::Transition t;
      t.state.resize(rtb::kStateDim);
      for (auto& v : t.state) v = u(rng);
      t.action.z = u(rng);
      t.reward = u(rng);
      traj.steps.push_back(t);
    }
    const auto update = agent::ComputeUpdate(traj, actor, critic, weights, 0.9);
    const auto states = agent::StateMatrix(std::span(&traj, 1));
    std::vector<double> rewards;
    std::vector<double> z;
    for (const auto& s : traj.steps) {
      rewards.push_back(s.reward);
      z.push_back(s.action.z);
    }
    const auto returns = agent::DiscountedReturns(rewards, 0.9);
    const auto values = nn::Predict(critic, states);
    std::vector<double> adv(returns.size());
    for (std::size_t i = 0; i < adv.size(); ++i) adv[i] = returns[i] - values(0, static_cast<Eigen::Index>(i));

    const auto actor_fd = nn::FiniteDiffGrad(
        actor, [&](const nn::Params& p) { return agent::ActorLoss(p, states, z, adv, weights); }, 1e-5);
    const auto critic_fd = nn::FiniteDiffGrad(
        critic, [&](const nn::Params& p) { return agent::CriticLoss(p, states, returns, weights); }, 1e-5);
    worst_actor = std::max(worst_actor, nn::MaxRelativeError(update.actor_grad, actor_fd));
    worst_critic = std::max(worst_critic, nn::MaxRelativeError(update.critic_grad, critic_fd));
  }
  return {AtMost("backward vs finite differences", worst_backward, 1e-4),
          AtMost("actor loss gradient vs finite differences", worst_actor, 1e-4),
          AtMost("critic loss gradient vs finite differences", worst_critic, 1e-4)};
}

std::vector<CheckResult> Posterior(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lik(0.05, 5.0);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  double simplex = 0.0;
  double bounds_ok = 1.0;
  double invariance = 0.0;
  double fixed_point = 0.0;
  for (int n = 0; n < 200; ++n) {
    const std::size_t k = 2 + static_cast<std::size_t>(n % 4);
    const priority::PriorityWeights prior(SimplexPoint(k, rng));
    std::vector<double> l(k);
    for (auto& v : l) v = lik(rng);
    const auto post = priority::PosteriorUpdate(prior, l);
    double sum = 0.0;
    for (double w : post.values()) {
      sum += w;
      if (w < 0.0 || w > 1.0) bounds_ok = 0.0;
    }
    simplex = std::max(simplex, std::abs(sum - 1.0));

    const double c = scale(rng);
    std::vector<double> scaled(l);
    for (auto& v : scaled) v *= c;
    const auto post2 = priority::PosteriorUpdate(prior, scaled);
    for (std::size_t j = 0; j < k; ++j) invariance = std::max(invariance, std::abs(post[j] - post2[j]));

    const std::vector<double> flat(k, lik(rng));
    const auto same = priority::PosteriorUpdate(prior, flat);
    for (std::size_t j = 0; j < k; ++j) fixed_point = std::max(fixed_point, std::abs(same[j] - prior[j]));
  }
  const auto hand = priority::PosteriorUpdate(priority::PriorInit(2), std::vector<double>{2.0, 1.0});
  const double hand_err = std::max(std::abs(hand[0] - 2.0 / 3.0), std::abs(hand[1] - 1.0 / 3.0));
  return {AtMost("posterior sums to 1", simplex, 1e-12),
          Make("posterior entries in [0, 1]", 1.0 - bounds_ok, 0.0, bounds_ok == 1.0),
          AtMost("likelihood scale invariance", invariance, 1e-12),
          AtMost("equal likelihoods keep the prior", fixed_point, 1e-12),
          AtMost("prior [0.5,0.5] x [2,1] -> [2/3,1/3]", hand_err, 1e-12)};
}

std::vector<CheckResult> Partition(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const nn::NetLayout layout({rtb::kStateDim, 6, 2}, nn::Activation::kTanh);
  auto actor = RandomParams(layout, rng);
  actor.layer(1).bias(1) = -0.5;
  actor.layer(1).weight.row(1) *= 0.1;
  const Eigen::Index n = 12;
  Eigen::MatrixXd states(static_cast<Eigen::Index>(rtb::kStateDim), n);
  for (Eigen::Index i = 0; i < states.size(); ++i) states.data()[i] = u(rng);
  std::vector<double> z(static_cast<std::size_t>(n));
  for (auto& v : z) v = u(rng);

  std::vector<std::vector<double>> returns(2, std::vector<double>(z.size()));
  for (auto& r : returns) {
    for (auto& v : r) v = 3.0 * u(rng);
  }
  std::vector<double> v_shared(z.size());
  for (auto& v : v_shared) v = u(rng);

  double shared = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto w = SimplexPoint(2, rng);
    const std::vector<std::vector<double>> values{v_shared, v_shared};
    shared = std::max(shared, analysis::PartitionCombinationDeviation(actor, states, z, returns, values, w));
  }
  std::vector<double> v_other(v_shared);
  for (auto& v : v_other) v += 1.0 + u(rng);
  const std::vector<std::vector<double>> distinct{v_shared, v_other};
  const std::vector<double> half{0.5, 0.5};
  const double split = analysis::PartitionCombinationDeviation(actor, states, z, returns, distinct, half);
  return {AtMost("shared critic: partition == combination", shared, 1e-9),
          Make("distinct critics: identity fails", split, 1e-3, split >= 1e-3)};
}

std::vector<CheckResult> Pareto(int weight_vectors, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto mdp = analysis::TinyMdp::Committed();
  const auto theta = analysis::CommittedLogits();
  double worst = 0.0;
  for (int n = 0; n < weight_vectors; ++n) {
    const auto l = SimplexPoint(2, rng);
    worst = std::max(worst, analysis::ScalarizationCheck(mdp, theta, l));
  }
  const std::vector<double> corner{1.0, 0.0};
  const double single = analysis::ScalarizationCheck(mdp, theta, corner);
  return {AtMost("scalarized partition direction vs finite differences", worst, 1e-3),
          AtMost("l = [1, 0] single-objective gradient", single, 1e-3)};
}

std::vector<CheckResult> Environment(int episodes, std::uint64_t seed) {
  rtb::EnvConfig cfg;
  cfg.n_ads = 20;
  const auto catalog = rtb::GenerateCatalog(cfg.n_ads, cfg.catalog, cfg.catalog_seed);
  rtb::Environment env(catalog, cfg, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.5);

  long violations = 0;
  std::vector<double> bids(catalog.size());
  for (int ep = 0; ep < episodes; ++ep) {
    env.Reset(ep, io::DeriveSeed(seed, static_cast<std::uint64_t>(ep)));
    std::vector<objectives::AdTotals> sums(catalog.size());
    while (!env.day_over()) {
      std::vector<int> offered(catalog.size());
      for (std::size_t i = 0; i < catalog.size(); ++i) {
        bids[i] = catalog[i].cpa_target * env.predicted_cvr(i) * std::exp(noise(rng));
        offered[i] = env.offered_impressions(i);
      }
      const auto out = env.Step(bids);
      for (std::size_t i = 0; i < catalog.size(); ++i) {
        const auto& o = out[i];
        sums[i].clicks += o.clicks;
        sums[i].conversions += o.conversions;
        sums[i].cost += o.cost;
        if (o.conversions > o.clicks || o.clicks > o.won_impressions || o.won_impressions > offered[i]) ++violations;
        if (o.cost != static_cast<double>(o.clicks) * o.price_per_click) ++violations;
        if (o.won_impressions > 0 && (o.price_per_click > bids[i] || o.price_per_click < cfg.reserve)) ++violations;
      }
    }
    for (std::size_t i = 0; i < catalog.size(); ++i) {
      if (!(sums[i] == env.totals(i))) ++violations;
    }
  }

  // Click rate of a lone bidder with CTR 0.5.
  rtb::AdCampaign ad;
  ad.id = 1;
  ad.cpa_target = 10.0;
  ad.true_ctr = 0.5;
  ad.true_cvr = 0.1;
  ad.impressions_lo = 100;
  ad.impressions_hi = 100;
  rtb::EnvConfig solo;
  solo.market.rivals = 0;
  rtb::Environment lone({ad}, solo, seed + 1);
  std::int64_t won = 0;
  std::int64_t clicks = 0;
  const std::vector<double> one_bid{1.0};
  while (won < 10000) {
    const auto o = lone.Step(one_bid);
    won += o[0].won_impressions;
    clicks += o[0].clicks;
    if (lone.day_over()) lone.Reset(lone.clock().day_index, seed + 2 + static_cast<std::uint64_t>(won));
  }
  const double rate = static_cast<double>(clicks) / static_cast<double>(won);
  const double z = std::abs(rate - 0.5) / std::sqrt(0.25 / static_cast<double>(won));
  char detail[96];
  std::snprintf(detail, sizeof detail, "rate %.4f over %lld impressions", rate, static_cast<long long>(won));
  return {Make("accounting and auction invariants", static_cast<double>(violations), 0.0, violations == 0),
          Make("click rate within 3 standard errors", z, 3.0, z <= 3.0, detail)};
}

std::vector<std::string_view> SuiteNames() {
  return {"rewards", "gradients", "posterior", "partition", "pareto", "env", "all"};
}

bool IsSuite(std::string_view name) {
  const auto names = SuiteNames();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::vector<CheckResult> RunSuite(std::string_view name) {
  if (name == "rewards") return Rewards();
  if (name == "gradients") return Gradients();
  if (name == "posterior") return Posterior();
  if (name == "partition") return Partition();
  if (name == "pareto") return Pareto();
  if (name == "env") return Environment();
  if (name == "all") {
    std::vector<CheckResult> all;
    for (auto s : SuiteNames()) {
      if (s == "all") continue;
      auto r = RunSuite(s);
      all.insert(all.end(), r.begin(), r.end());
    }
    return all;
  }
  throw std::invalid_argument("unknown check suite '" + std::string(name) + "'");
}

bool Print(std::ostream& out, const std::vector<CheckResult>& results) {
  bool ok = true;
  for (const auto& r : results) {
    char line[256];
    std::snprintf(line, sizeof line, "%s  %-52s value %.3e  tol %.1e", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                  r.value, r.tolerance);
    out << line;
    if (!r.detail.empty()) out << "  (" << r.detail << ')';
    out << '\n';
    ok = ok && r.pass;
  }
  return ok;
}

}  // namespace motiac::checks
