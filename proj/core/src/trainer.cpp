// SPDX-License-Identifier: Apache-2.0
#include "motiac/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <stdexcept>
#include <thread>

#include "motiac/io_util.hpp"
#include "motiac/objectives.hpp"

namespace motiac::train {

namespace {

constexpr std::uint64_t kEnvStream = 0x656e76;     // "env"
constexpr std::uint64_t kWorkerStream = 0x776b72;  // "wkr"
constexpr std::uint64_t kInitStream = 0x696e6974;  // "init"

// Runs fn(task) for task in [0, n) on up to `threads` threads; fn also gets
// the index of the thread so it can reuse per-thread state. Rethrows the
// first exception.
template <typename Fn>
void ParallelFor(int n, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i, t);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

ReportRow RowFrom(const WeightedUpdate& upd) {
  ReportRow row;
  row.iteration = upd.iteration;
  row.group = upd.group;
  row.worker = upd.worker;
  row.revenue = upd.metrics.revenue;
  row.cost = upd.metrics.cost;
  row.roi = upd.metrics.roi;
  row.weights.assign(upd.weights.values().begin(), upd.weights.values().end());
  row.actor_loss = upd.stats.actor_loss;
  row.critic_loss = upd.stats.critic_loss;
  row.entropy = upd.stats.mean_entropy;
  return row;
}

}  // namespace

std::string_view ToString(Mode mode) {
  return mode == Mode::kDeterministic ? "deterministic" : "concurrent";
}

Mode ParseMode(std::string_view name) {
  name = io::Trim(name);
  if (name == "deterministic") return Mode::kDeterministic;
  if (name == "concurrent") return Mode::kConcurrent;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

nn::NetLayout TrainConfig::actor_layout() const {
  std::vector<std::size_t> sizes{rtb::kStateDim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(2);
  return nn::NetLayout(std::move(sizes), activation);
}

nn::NetLayout TrainConfig::critic_layout() const {
  std::vector<std::size_t> sizes{rtb::kStateDim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return nn::NetLayout(std::move(sizes), activation);
}

void TrainConfig::Validate() const {
  if (groups.empty()) throw std::invalid_argument("train: need at least one worker group");
  for (const auto& mix : groups) {
    if (mix.size() != static_cast<std::size_t>(objectives::kNumObjectives)) {
      throw std::invalid_argument("train: each group needs one coefficient per objective");
    }
    for (double c : mix) {
      if (!std::isfinite(c)) throw std::invalid_argument("train: non-finite reward coefficient");
    }
  }
  if (workers_per_group < 1) throw std::invalid_argument("train: workers per group must be >= 1");
  if (iterations < 1) throw std::invalid_argument("train: iterations must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("train: gamma outside [0, 1]");
  if (threads < 0) throw std::invalid_argument("train: threads must be >= 0");
  for (const auto* a : {&actor_adam, &critic_adam}) {
    if (!(a->step_size > 0.0)) throw std::invalid_argument("train: Adam step size must be > 0");
  }
  loss.Validate();
  schedule.Validate();
  if (schedule.kind == priority::PrioritySchedule::Kind::kChanging && num_groups() > 2) {
    throw std::invalid_argument("train: the changing schedule is defined for two groups");
  }
  (void)actor_layout();
}

int ResolveThreads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MOTIAC_THREADS"); env != nullptr && *env != '\0') {
    const auto n = io::ParseInt(env);
    if (n > 0) return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

GlobalParams::GlobalParams(nn::Params actor, std::vector<nn::Params> critics,
                           const nn::AdamConfig& actor_adam, const nn::AdamConfig& critic_adam)
    : actor_(std::move(actor)), actor_adam_(actor_.layout(), actor_adam) {
  if (critics.empty()) throw std::invalid_argument("GlobalParams: need at least one critic");
  const auto k = static_cast<int>(critics.size());
  const nn::NetLayout layout = critics.front().layout();
  for (auto& c : critics) {
    if (!(c.layout() == layout)) {
      throw std::invalid_argument("GlobalParams: critics must share one layout");
    }
    critics_.push_back(std::make_unique<CriticSlot>(std::move(c), critic_adam));
    critics_.back()->prior = priority::PriorInit(k);
  }
}

GlobalParams::Snapshot GlobalParams::Take(int group) const {
  const auto& slot = *critics_.at(static_cast<std::size_t>(group));
  Snapshot s;
  {
    std::lock_guard lock(actor_mu_);
    s.actor = actor_;
    s.actor_version = actor_version_;
  }
  std::lock_guard lock(slot.mu);
  s.critic = slot.params;
  s.critic_version = slot.version;
  s.prior = slot.prior;
  return s;
}

bool GlobalParams::Apply(const WeightedUpdate& upd, const priority::PrioritySchedule& schedule) {
  auto& slot = *critics_.at(static_cast<std::size_t>(upd.group));
  if (!upd.actor_grad.AllFinite() || !upd.critic_grad.AllFinite()) {
    std::cerr << "motiac: rejected non-finite update (iteration " << upd.iteration << ", group "
              << upd.group << ", worker " << upd.worker << ")\n";
    return false;
  }
  {
    std::lock_guard lock(actor_mu_);
    actor_adam_.Apply(actor_, upd.actor_grad);
    ++actor_version_;
  }
  std::lock_guard lock(slot.mu);
  slot.adam.Apply(slot.params, upd.critic_grad);
  ++slot.version;
  if (schedule.kind == priority::PrioritySchedule::Kind::kBayesian && schedule.carry_prior) {
    slot.prior = upd.weights;
  }
  return true;
}

nn::Params GlobalParams::actor() const {
  std::lock_guard lock(actor_mu_);
  return actor_;
}

nn::Params GlobalParams::critic(int k) const {
  const auto& slot = *critics_.at(static_cast<std::size_t>(k));
  std::lock_guard lock(slot.mu);
  return slot.params;
}

std::uint64_t GlobalParams::actor_version() const {
  std::lock_guard lock(actor_mu_);
  return actor_version_;
}

std::uint64_t GlobalParams::critic_version(int k) const {
  const auto& slot = *critics_.at(static_cast<std::size_t>(k));
  std::lock_guard lock(slot.mu);
  return slot.version;
}

priority::PriorityWeights GlobalParams::prior(int k) const {
  const auto& slot = *critics_.at(static_cast<std::size_t>(k));
  std::lock_guard lock(slot.mu);
  return slot.prior;
}

double CpcBid(const agent::GaussianAction& action, const rtb::AdCampaign& ad, double pcvr) {
  return action.bid * ad.cpa_target * pcvr;
}

std::array<double, objectives::kNumObjectives> ObjectiveRewards(const rtb::Environment& env,
                                                                std::size_t ad_index) {
  return {objectives::RewardCpa(env.CpaRatio(ad_index)),
          objectives::RewardConv(env.ConversionRatio(ad_index).value)};
}

EpisodeMetrics SummarizeEpisode(const rtb::Environment& env) {
  EpisodeMetrics m;
  for (std::size_t i = 0; i < env.catalog().size(); ++i) {
    const auto& t = env.totals(i);
    m.revenue += objectives::Revenue(static_cast<double>(t.conversions), env.catalog()[i].cpa_target);
    m.cost += t.cost;
    m.clicks += t.clicks;
    m.conversions += t.conversions;
  }
  m.roi = objectives::Roi(m.revenue, m.cost);
  return m;
}

Rollout RolloutEpisode(const nn::Params& actor, rtb::Environment& env,
                       std::span<const double> reward_mix, int group, std::mt19937_64& rng) {
  if (reward_mix.size() != static_cast<std::size_t>(objectives::kNumObjectives)) {
    throw std::invalid_argument("RolloutEpisode: one reward coefficient per objective required");
  }
  const auto& catalog = env.catalog();
  const std::size_t n = catalog.size();
  Rollout out;
  out.trajectories.resize(n);
  for (auto& t : out.trajectories) t.steps.reserve(rtb::kSessionsPerDay);

  Eigen::MatrixXd states(static_cast<Eigen::Index>(rtb::kStateDim), static_cast<Eigen::Index>(n));
  std::vector<double> bids(n);
  while (!env.day_over()) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = env.ObserveIndex(i);
      for (std::size_t r = 0; r < rtb::kStateDim; ++r) {
        states(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = s[r];
      }
    }
    const Eigen::MatrixXd heads = nn::Predict(actor, states);
    for (std::size_t i = 0; i < n; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      const auto head = agent::HeadFromOutput(heads(0, col), heads(1, col));
      auto& step = out.trajectories[i].steps.emplace_back();
      step.state.assign(states.col(col).data(), states.col(col).data() + rtb::kStateDim);
      step.action = agent::SampleBid(head, rng);
      step.objective = group;
      bids[i] = CpcBid(step.action, catalog[i], env.predicted_cvr(i));
    }
    env.Step(bids);
    for (std::size_t i = 0; i < n; ++i) {
      auto& step = out.trajectories[i].steps.back();
      step.objective_rewards = ObjectiveRewards(env, i);
      step.reward = 0.0;
      for (std::size_t j = 0; j < reward_mix.size(); ++j) {
        step.reward += reward_mix[j] * step.objective_rewards[j];
      }
    }
  }
  for (auto& t : out.trajectories) t.terminal = true;
  out.metrics = SummarizeEpisode(env);
  return out;
}

std::uint64_t EnvSeed(const TrainConfig& cfg, int iteration, int group, int worker) {
  return io::DeriveSeed(io::Mix(cfg.seed ^ kEnvStream), static_cast<std::uint64_t>(iteration),
                        static_cast<std::uint64_t>(group), static_cast<std::uint64_t>(worker));
}

std::uint64_t WorkerSeed(const TrainConfig& cfg, int iteration, int group, int worker) {
  return io::DeriveSeed(io::Mix(cfg.seed ^ kWorkerStream), static_cast<std::uint64_t>(iteration),
                        static_cast<std::uint64_t>(group), static_cast<std::uint64_t>(worker));
}

WeightedUpdate WorkerIteration(int iteration, int group, int worker,
                               const GlobalParams::Snapshot& snapshot, rtb::Environment& env,
                               const TrainConfig& cfg) {
  const int k = cfg.num_groups();
  if (group < 0 || group >= k) throw std::out_of_range("WorkerIteration: group out of range");
  env.Reset(iteration, EnvSeed(cfg, iteration, group, worker));
  std::mt19937_64 rng(WorkerSeed(cfg, iteration, group, worker));

  const auto& mix = cfg.groups[static_cast<std::size_t>(group)];
  auto rollout = RolloutEpisode(snapshot.actor, env, mix, group, rng);

  WeightedUpdate upd{.iteration = iteration, .group = group, .worker = worker};
  upd.actor_version = snapshot.actor_version;
  upd.critic_version = snapshot.critic_version;
  upd.metrics = rollout.metrics;
  upd.mean_rewards.resize(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    upd.mean_rewards[static_cast<std::size_t>(j)] =
        priority::MeanMixedReward(rollout.trajectories, cfg.groups[static_cast<std::size_t>(j)]);
  }
  const bool carry = cfg.schedule.carry_prior && snapshot.prior.size() == static_cast<std::size_t>(k);
  const auto prior = carry ? snapshot.prior : priority::PriorInit(k);
  upd.weights = priority::ScheduleWeights(cfg.schedule, k, iteration, upd.mean_rewards, prior, rng);
  upd.weight = upd.weights[static_cast<std::size_t>(group)];

  auto result = agent::ComputeUpdate(rollout.trajectories, snapshot.actor, snapshot.critic, cfg.loss,
                                     cfg.gamma);
  upd.actor_grad = std::move(result.actor_grad);
  upd.critic_grad = std::move(result.critic_grad);
  upd.actor_grad *= upd.weight;
  upd.critic_grad *= upd.weight;
  upd.stats = result.stats;
  return upd;
}

TrainReport Train(const TrainConfig& cfg, const EnvFactory& make_env, std::string model) {
  cfg.Validate();
  const int k = cfg.num_groups();
  const int per_iteration = k * cfg.workers_per_group;
  const int threads = std::min(ResolveThreads(cfg.threads), per_iteration);

  std::vector<nn::Params> critics;
  for (int j = 0; j < k; ++j) {
    critics.push_back(nn::InitParams(cfg.critic_layout(),
                                     io::DeriveSeed(cfg.seed, kInitStream, 1, static_cast<std::uint64_t>(j))));
  }
  GlobalParams global(nn::InitParams(cfg.actor_layout(), io::DeriveSeed(cfg.seed, kInitStream, 0)),
                      std::move(critics), cfg.actor_adam, cfg.critic_adam);

  // Environments are reset from (iteration, group, worker) seeds every
  // episode, so one per thread is enough.
  std::vector<rtb::Environment> envs;
  envs.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) envs.push_back(make_env());

  TrainReport report;
  report.model = std::move(model);
  report.num_groups = k;
  report.rows.reserve(static_cast<std::size_t>(cfg.iterations * per_iteration));

  auto record = [&](const WeightedUpdate& upd, bool applied) {
    report.rows.push_back(RowFrom(upd));
    ++report.episodes;
    if (!applied) ++report.rejected_updates;
  };

  if (cfg.mode == Mode::kDeterministic) {
    std::vector<std::optional<WeightedUpdate>> updates(static_cast<std::size_t>(per_iteration));
    for (int it = 0; it < cfg.iterations; ++it) {
      std::vector<GlobalParams::Snapshot> snaps;
      for (int g = 0; g < k; ++g) snaps.push_back(global.Take(g));
      ParallelFor(per_iteration, threads, [&](int task, int thread) {
        const int g = task / cfg.workers_per_group;
        const int w = task % cfg.workers_per_group;
        updates[static_cast<std::size_t>(task)] =
            WorkerIteration(it, g, w, snaps[static_cast<std::size_t>(g)],
                            envs[static_cast<std::size_t>(thread)], cfg);
      });
      for (auto& upd : updates) {
        record(*upd, global.Apply(*upd, cfg.schedule));
        upd.reset();
      }
    }
  } else {
    std::mutex report_mu;
    const int total = cfg.iterations * per_iteration;
    ParallelFor(total, threads, [&](int task, int thread) {
      const int it = task / per_iteration;
      const int g = (task % per_iteration) / cfg.workers_per_group;
      const int w = task % cfg.workers_per_group;
      const auto snap = global.Take(g);
      auto upd = WorkerIteration(it, g, w, snap, envs[static_cast<std::size_t>(thread)], cfg);
      const bool applied = global.Apply(upd, cfg.schedule);
      std::lock_guard lock(report_mu);
      record(upd, applied);
    });
    std::sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
      return std::tie(a.iteration, a.group, a.worker) < std::tie(b.iteration, b.group, b.worker);
    });
  }

  report.actor = global.actor();
  for (int j = 0; j < k; ++j) report.critics.push_back(global.critic(j));
  return report;
}

FinalMetrics Final(const TrainReport& report, int window) {
  if (window < 1) throw std::invalid_argument("Final: window must be >= 1");
  if (report.rows.empty()) throw std::invalid_argument("Final: empty report");
  int last = 0;
  for (const auto& r : report.rows) last = std::max(last, r.iteration);
  const int first = last - window + 1;
  FinalMetrics m;
  std::size_t n = 0;
  for (const auto& r : report.rows) {
    if (r.iteration < first) continue;
    m.revenue += r.revenue;
    m.cost += r.cost;
    ++n;
  }
  m.roi = objectives::Roi(m.revenue, m.cost);
  m.revenue /= static_cast<double>(n);
  m.cost /= static_cast<double>(n);
  return m;
}

}  // namespace motiac::train
