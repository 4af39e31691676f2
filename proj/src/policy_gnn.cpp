#include "flp/policy_gnn.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

namespace flp {

PolicyGraph make_policy_graph(const ProblemInstance& instance, int k) {
  const std::size_t n = instance.size();
  PolicyGraph g;
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(std::max(0, k)), n > 0 ? n - 1 : 0);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * n * kk);
  std::vector<std::pair<double, NodeId>> order;
  order.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<NodeId>(i);
    order.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = instance.dist(ii, static_cast<NodeId>(j));
      g.diameter = std::max(g.diameter, d);
      order.emplace_back(d, static_cast<NodeId>(j));
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end());
    for (std::size_t q = 0; q < kk; ++q) {
      triplets.emplace_back(ii, order[q].second, 1.0);
      triplets.emplace_back(order[q].second, ii, 1.0);
    }
  }
  g.adjacency.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  g.adjacency.setFromTriplets(triplets.begin(), triplets.end(), [](double a, double) { return a; });

  g.min_x = g.max_x = instance.nodes().front().x;
  g.min_y = g.max_y = instance.nodes().front().y;
  for (const auto& r : instance.nodes()) {
    g.min_x = std::min(g.min_x, r.x);
    g.max_x = std::max(g.max_x, r.x);
    g.min_y = std::min(g.min_y, r.y);
    g.max_y = std::max(g.max_y, r.y);
  }
  return g;
}

Eigen::MatrixXd node_features(const ProblemInstance& instance, const PolicyGraph& graph, const AssignmentState& state) {
  const std::size_t n = instance.size();
  const auto& h = instance.demand(state.type);
  const double hmax = *std::max_element(h.begin(), h.end());
  const double xr = graph.max_x - graph.min_x;
  const double yr = graph.max_y - graph.min_y;
  const double ac = state.ac;

  const Eigen::VectorXd gain = gain_vector(instance, state);
  Eigen::VectorXd loss = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (state.size() >= 2) loss = loss_vector(instance, state);

  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), kNodeFeatures);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto& node = instance.nodes()[i];
    a(r, 0) = hmax > 0.0 ? h[i] / hmax : 0.0;
    a(r, 1) = state.open[i] ? 1.0 : 0.0;
    a(r, 2) = xr > 0.0 ? (node.x - graph.min_x) / xr : 0.0;
    a(r, 3) = yr > 0.0 ? (node.y - graph.min_y) / yr : 0.0;
    a(r, 4) = graph.diameter > 0.0 ? state.d1[i] / graph.diameter : 0.0;
    a(r, 5) = ac > 0.0 ? gain[r] / ac : 0.0;
    a(r, 6) = (ac > 0.0 && state.open[i]) ? loss[r] / ac : 0.0;
  }
  return a;
}

Eigen::VectorXd score_edges(const Eigen::MatrixXd& embeddings, std::span<const Edge> candidates, const Policy& params) {
  if (candidates.empty()) throw Error("cannot score an empty candidate list", "candidates");
  return softmax<double>(score_candidates<double>(embeddings, candidates, params));
}

std::size_t select_action(const Eigen::VectorXd& distribution, SelectMode mode, std::mt19937_64& rng) {
  if (distribution.size() == 0) throw Error("empty distribution", "distribution");
  if (mode == SelectMode::greedy) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < distribution.size(); ++c)
      if (distribution[c] > distribution[best]) best = c;
    return static_cast<std::size_t>(best);
  }
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double cum = 0.0;
  for (Eigen::Index c = 0; c < distribution.size(); ++c) {
    cum += distribution[c];
    if (u < cum) return static_cast<std::size_t>(c);
  }
  // Rounding left u beyond the final partial sum; take the last non-zero entry.
  for (Eigen::Index c = distribution.size() - 1; c > 0; --c)
    if (distribution[c] > 0.0) return static_cast<std::size_t>(c);
  return 0;
}

GnnPolicySelector::GnnPolicySelector(std::shared_ptr<const Policy> params, SelectMode mode)
    : params_(std::move(params)), mode_(mode) {
  if (!params_) throw Error("policy parameters are required", "policy");
  params_->check_consistent();
}

namespace {

// The k-NN graph depends only on the geometry, so that is what the cache is keyed on.
std::uint64_t geometry_key(const ProblemInstance& instance) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  mix(static_cast<std::uint64_t>(instance.metric()));
  mix(instance.size());
  for (const auto& r : instance.nodes()) {
    mix(std::bit_cast<std::uint64_t>(r.x));
    mix(std::bit_cast<std::uint64_t>(r.y));
  }
  return h;
}

}  // namespace

std::shared_ptr<const PolicyGraph> GnnPolicySelector::graph_for(const ProblemInstance& instance) {
  const std::uint64_t key = geometry_key(instance);
  if (!graph_ || cached_key_ != key) {
    graph_ = std::make_shared<const PolicyGraph>(make_policy_graph(instance));
    cached_key_ = key;
  }
  return graph_;
}

std::size_t GnnPolicySelector::select(const SelectionContext& ctx) {
  const auto graph = graph_for(ctx.instance);
  Eigen::MatrixXd features = node_features(ctx.instance, *graph, ctx.state);
  const Eigen::MatrixXd emb = node_embed<double>(features, graph->adjacency, *params_);
  const Eigen::VectorXd dist = score_edges(emb, ctx.candidates, *params_);
  const std::size_t pick = select_action(dist, mode_, ctx.rng);
  if (recorder_)
    recorder_->push_back({std::move(features), std::vector<Edge>(ctx.candidates.begin(), ctx.candidates.end()), pick});
  return pick;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive", "learning_rate");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) throw Error("baseline decay must lie in [0,1)", "baseline_decay");
  if (episodes_per_batch < 1) throw Error("episodes per batch must be >= 1", "episodes_per_batch");
  if (max_steps < 0) throw Error("max steps must be >= 0", "max_steps");
  if (layers < 0 || hidden < 1) throw Error("invalid network shape", "layers");
  if (entropy_weight < 0.0) throw Error("entropy weight must be non-negative", "entropy_weight");
}

namespace {

void accumulate_step(const Policy& params, const PolicyGraph& graph, const StepSample& s, double advantage,
                     double entropy_weight, double scale, Policy& grad, double& objective, double& entropy_out) {
  using Matrix = Eigen::MatrixXd;
  const auto d = params.hidden();
  ForwardCache<double> cache;
  const Matrix emb = node_embed<double>(s.features, graph.adjacency, params, &cache);
  const auto wt = params.head_hidden.topRows(d);
  const auto wb = params.head_hidden.bottomRows(d);
  const Matrix u = emb * wt;
  const Matrix v = emb * wb;

  const auto m = static_cast<Eigen::Index>(s.candidates.size());
  Matrix act(m, d);
  Eigen::VectorXd scores(m);
  for (Eigen::Index c = 0; c < m; ++c) {
    const auto& e = s.candidates[static_cast<std::size_t>(c)];
    act.row(c) = (u.row(e.insert) + v.row(e.remove)).array().tanh();
    scores[c] = act.row(c).dot(params.head_out.transpose());
  }
  const double smax = scores.maxCoeff();
  const double lse = smax + std::log((scores.array() - smax).exp().sum());
  const Eigen::VectorXd logp = (scores.array() - lse).matrix();
  const Eigen::VectorXd prob = logp.array().exp().matrix();
  const double entropy = -(prob.array() * logp.array()).sum();
  const auto a = static_cast<Eigen::Index>(s.chosen);

  objective += -scale * (advantage * logp[a] + entropy_weight * entropy);
  entropy_out += entropy;

  // dJ/ds_c
  Eigen::VectorXd gs(m);
  for (Eigen::Index c = 0; c < m; ++c) {
    const double dlogp = (c == a ? 1.0 : 0.0) - prob[c];
    const double dent = -prob[c] * (logp[c] + entropy);
    gs[c] = -scale * (advantage * dlogp + entropy_weight * dent);
  }

  grad.head_out += act.transpose() * gs;
  Matrix du = Matrix::Zero(emb.rows(), d);
  Matrix dv = Matrix::Zero(emb.rows(), d);
  for (Eigen::Index c = 0; c < m; ++c) {
    const auto& e = s.candidates[static_cast<std::size_t>(c)];
    const Eigen::RowVectorXd dz =
        (gs[c] * params.head_out.transpose().array() * (1.0 - act.row(c).array().square())).matrix();
    du.row(e.insert) += dz;
    dv.row(e.remove) += dz;
  }
  grad.head_hidden.topRows(d) += emb.transpose() * du;
  grad.head_hidden.bottomRows(d) += emb.transpose() * dv;

  Matrix dn = du * wt.transpose() + dv * wb.transpose();
  for (int l = params.num_layers() - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    const Matrix dzl = (dn.array() * (1.0 - cache.activations[li].array().square())).matrix();
    grad.layers[li] += cache.aggregated[li].transpose() * dzl;
    dn += graph.adjacency.transpose() * (dzl * params.layers[li].transpose());
  }
  grad.input += s.features.transpose() * dn;
}

bool all_finite(const Policy& p) {
  bool ok = true;
  p.for_each_block([&ok](const auto& m) { ok = ok && m.allFinite(); });
  return ok;
}

double squared_norm(const Policy& p) {
  double s = 0.0;
  p.for_each_block([&s](const auto& m) { s += m.squaredNorm(); });
  return s;
}

}  // namespace

PolicyGradient policy_gradient(const Policy& params, std::span<const RolloutSample> batch, double baseline,
                               double entropy_weight) {
  PolicyGradient out;
  out.grad = Policy::zeros(params.num_layers(), params.hidden());
  std::size_t total_steps = 0;
  for (const auto& r : batch) {
    if (r.steps.size() != r.rewards.size()) throw Error("rollout steps and rewards differ in length", "batch");
    total_steps += r.steps.size();
  }
  if (total_steps == 0) return out;
  const double scale = 1.0 / static_cast<double>(total_steps);

  double return_sum = 0.0;
  double entropy_sum = 0.0;
  for (const auto& r : batch) {
    const double norm = r.initial_ac > 0.0 ? r.initial_ac : 1.0;
    double to_go = 0.0;
    std::vector<double> returns(r.rewards.size());
    for (std::size_t t = r.rewards.size(); t-- > 0;) {
      to_go += r.rewards[t];
      returns[t] = to_go / norm;
    }
    for (std::size_t t = 0; t < r.steps.size(); ++t) {
      return_sum += returns[t];
      accumulate_step(params, *r.graph, r.steps[t], returns[t] - baseline, entropy_weight, scale, out.grad,
                      out.objective, entropy_sum);
    }
  }
  out.mean_return = return_sum * scale;
  out.mean_entropy = entropy_sum * scale;
  return out;
}

ReinforceTrainer::ReinforceTrainer(Policy params, TrainConfig config)
    : params_(std::move(params)), config_(config) {
  config_.validate();
  params_.check_consistent();
  m_ = Policy::zeros(params_.num_layers(), params_.hidden());
  v_ = m_;
}

TrainStats ReinforceTrainer::update(std::span<const RolloutSample> batch) {
  TrainStats stats;
  if (!baseline_ready_) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : batch) {
      const double norm = r.initial_ac > 0.0 ? r.initial_ac : 1.0;
      double to_go = 0.0;
      for (std::size_t t = r.rewards.size(); t-- > 0;) {
        to_go += r.rewards[t];
        sum += to_go / norm;
        ++count;
      }
    }
    baseline_ = count ? sum / static_cast<double>(count) : 0.0;
    baseline_ready_ = true;
  }

  PolicyGradient pg = policy_gradient(params_, batch, baseline_, config_.entropy_weight);
  stats.objective = pg.objective;
  stats.mean_return = pg.mean_return;
  stats.mean_entropy = pg.mean_entropy;
  stats.grad_norm = std::sqrt(squared_norm(pg.grad));
  if (!all_finite(pg.grad)) {
    stats.skipped = true;
    stats.baseline = baseline_;
    return stats;
  }

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  const double lr = config_.learning_rate;

  std::vector<Eigen::Map<Eigen::VectorXd>> theta, g, m, v;
  auto collect = [](std::vector<Eigen::Map<Eigen::VectorXd>>& out) {
    return [&out](auto& block) { out.emplace_back(block.data(), block.size()); };
  };
  params_.for_each_block(collect(theta));
  pg.grad.for_each_block(collect(g));
  m_.for_each_block(collect(m));
  v_.for_each_block(collect(v));
  for (std::size_t b = 0; b < theta.size(); ++b) {
    m[b] = beta1 * m[b] + (1.0 - beta1) * g[b];
    v[b] = beta2 * v[b] + (1.0 - beta2) * g[b].cwiseAbs2();
    theta[b].array() -= lr * (m[b].array() / c1) / ((v[b].array() / c2).sqrt() + eps);
  }

  if (std::isfinite(pg.mean_return))
    baseline_ = config_.baseline_decay * baseline_ + (1.0 - config_.baseline_decay) * pg.mean_return;
  stats.baseline = baseline_;
  return stats;
}

RolloutSample collect_rollout(const ProblemInstance& instance, std::size_t type, int p,
                              std::shared_ptr<const Policy> params, const EpisodeConfig& config,
                              const EpisodeOptions& options) {
  GnnPolicySelector selector(std::move(params), SelectMode::sample);
  RolloutSample out;
  selector.record_into(&out.steps);
  const Trajectory traj = run_episode(instance, type, p, selector, config, options);
  out.graph = selector.graph_for(instance);
  out.initial_ac = traj.initial_ac;
  out.rewards.reserve(traj.steps.size());
  for (const auto& s : traj.steps) out.rewards.push_back(-s.delta);
  return out;
}

TrainReport train_policy(const TrainingFamily& family, const TrainConfig& config,
                         const std::function<void(int, const TrainStats&)>& on_batch) {
  config.validate();
  if (family.members.empty()) throw Error("training family is empty", "members");
  const auto t0 = std::chrono::steady_clock::now();
  ReinforceTrainer trainer(Policy::random(config.layers, config.hidden, config.seed), config);
  TrainReport report;

  std::uint64_t episode = 0;
  for (int b = 0; b < config.batches; ++b) {
    if (config.time_limit_s > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >= config.time_limit_s)
      break;
    auto snapshot = std::make_shared<const Policy>(trainer.params());
    std::vector<RolloutSample> batch;
    for (int e = 0; e < config.episodes_per_batch; ++e, ++episode) {
      const auto& member = family.members[episode % family.members.size()];
      const ProblemInstance inst = maybe_with_distance_matrix(
          generate_synthetic(member.n, member.types, family.seed + episode, family.demand_model));
      const std::size_t type = static_cast<std::size_t>(episode / family.members.size()) % inst.num_types();
      const int p = inst.budget(type);
      EpisodeConfig ec;
      ec.max_steps = config.max_steps > 0 ? config.max_steps : 2 * p;
      ec.tabu_tenure = config.tabu_tenure;
      ec.seed = config.seed * 0x9E3779B97F4A7C15ULL + episode;
      RolloutSample r = collect_rollout(inst, type, p, snapshot, ec);
      if (!r.steps.empty()) batch.push_back(std::move(r));
    }
    const TrainStats stats = trainer.update(batch);
    report.history.push_back(stats);
    report.batches_run = b + 1;
    if (on_batch) on_batch(b, stats);
  }
  report.params = trainer.params();
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace flp
