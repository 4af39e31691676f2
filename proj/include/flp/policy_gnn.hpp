#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "flp/cost_engine.hpp"
#include "flp/instance.hpp"
#include "flp/swap_search.hpp"

namespace flp {

inline constexpr int kNodeFeatures = 7;
inline constexpr int kNeighbors = 10;

/// Weights of the edge-scoring policy.
///
/// Node embeddings are row vectors: N0 = A * input, then for each layer
/// N_{l} = N_{l-1} + tanh((Adj * N_{l-1}) * layers[l-1]). An edge (i, j) is
/// scored as head_out . tanh(head_hidden^T [N_i | N_j]).
template <typename Scalar>
struct PolicyParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix input;                // kNodeFeatures × d
  std::vector<Matrix> layers;  // L matrices, d × d
  Matrix head_hidden;          // 2d × d
  Vector head_out;             // d

  int num_layers() const { return static_cast<int>(layers.size()); }
  int hidden() const { return static_cast<int>(input.cols()); }

  static PolicyParams zeros(int num_layers, int hidden) {
    PolicyParams p;
    p.input = Matrix::Zero(kNodeFeatures, hidden);
    p.layers.assign(static_cast<std::size_t>(num_layers), Matrix::Zero(hidden, hidden));
    p.head_hidden = Matrix::Zero(2 * hidden, hidden);
    p.head_out = Vector::Zero(hidden);
    return p;
  }

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], seeded.
  static PolicyParams random(int num_layers, int hidden, std::uint64_t seed) {
    PolicyParams p = zeros(num_layers, hidden);
    std::mt19937_64 rng(seed);
    auto fill = [&rng](auto& m, double fan_in) {
      std::uniform_real_distribution<double> u(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<Scalar>(u(rng));
    };
    fill(p.input, kNodeFeatures);
    for (auto& w : p.layers) fill(w, hidden);
    fill(p.head_hidden, 2.0 * hidden);
    fill(p.head_out, hidden);
    return p;
  }

  /// Applies f to every weight block in a fixed order (input, layers..., head_hidden, head_out).
  template <typename F>
  void for_each_block(F&& f) {
    f(input);
    for (auto& w : layers) f(w);
    f(head_hidden);
    f(head_out);
  }
  template <typename F>
  void for_each_block(F&& f) const {
    f(input);
    for (const auto& w : layers) f(w);
    f(head_hidden);
    f(head_out);
  }

  void check_consistent() const {
    const auto d = input.cols();
    if (input.rows() != kNodeFeatures) throw Error("input weight must have 7 rows", "input.rows");
    for (const auto& w : layers)
      if (w.rows() != d || w.cols() != d) throw Error("layer weight must be d×d", "layers");
    if (head_hidden.rows() != 2 * d || head_hidden.cols() != d) throw Error("head_hidden must be 2d×d", "head_hidden");
    if (head_out.size() != d) throw Error("head_out must have length d", "head_out");
  }
};

using Policy = PolicyParams<double>;

/// Per-instance geometry the policy needs: symmetrized k-NN message graph,
/// diameter and coordinate bounds for feature normalization.
struct PolicyGraph {
  Eigen::SparseMatrix<double> adjacency;
  double diameter = 0.0;
  double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
};

PolicyGraph make_policy_graph(const ProblemInstance& instance, int k = kNeighbors);

/// n × 7 attribute table: [h/max h, occupied, x, y, d1/D, gain/ac, loss/ac].
Eigen::MatrixXd node_features(const ProblemInstance& instance, const PolicyGraph& graph, const AssignmentState& state);

template <typename Scalar>
struct ForwardCache {
  using Matrix = typename PolicyParams<Scalar>::Matrix;
  std::vector<Matrix> states;        // N_0..N_L
  std::vector<Matrix> aggregated;    // Adj * N_{l-1}, l = 1..L
  std::vector<Matrix> activations;   // tanh outputs, l = 1..L
};

template <typename Scalar>
typename PolicyParams<Scalar>::Matrix node_embed(const typename PolicyParams<Scalar>::Matrix& features,
                                                 const Eigen::SparseMatrix<Scalar>& adjacency,
                                                 const PolicyParams<Scalar>& params,
                                                 ForwardCache<Scalar>* cache = nullptr) {
  using Matrix = typename PolicyParams<Scalar>::Matrix;
  if (features.cols() != params.input.rows())
    throw Error("feature width does not match input weight rows", "features");
  if (adjacency.rows() != features.rows() || adjacency.cols() != features.rows())
    throw Error("adjacency must be n×n", "adjacency");
  Matrix n_cur = features * params.input;
  if (cache) {
    cache->states.assign(1, n_cur);
    cache->aggregated.clear();
    cache->activations.clear();
  }
  for (const auto& w : params.layers) {
    Matrix agg = adjacency * n_cur;
    Matrix act = (agg * w).array().tanh().matrix();
    n_cur += act;
    if (cache) {
      cache->aggregated.push_back(std::move(agg));
      cache->activations.push_back(std::move(act));
      cache->states.push_back(n_cur);
    }
  }
  return n_cur;
}

template <typename Scalar>
typename PolicyParams<Scalar>::Vector edge_embed(const typename PolicyParams<Scalar>::Matrix& embeddings, Edge edge) {
  const auto d = embeddings.cols();
  typename PolicyParams<Scalar>::Vector e(2 * d);
  e.head(d) = embeddings.row(edge.insert).transpose();
  e.tail(d) = embeddings.row(edge.remove).transpose();
  return e;
}

/// Scalar score of one edge embedding.
template <typename Scalar>
Scalar score_edge(const typename PolicyParams<Scalar>::Vector& edge_embedding, const PolicyParams<Scalar>& params) {
  return params.head_out.dot((params.head_hidden.transpose() * edge_embedding).array().tanh().matrix());
}

/// Scores every candidate. The first head layer is split into per-node
/// projections so each edge costs O(d).
template <typename Scalar>
typename PolicyParams<Scalar>::Vector score_candidates(const typename PolicyParams<Scalar>::Matrix& embeddings,
                                                       std::span<const Edge> candidates,
                                                       const PolicyParams<Scalar>& params) {
  using Matrix = typename PolicyParams<Scalar>::Matrix;
  const auto d = params.hidden();
  const Matrix u = embeddings * params.head_hidden.topRows(d);
  const Matrix v = embeddings * params.head_hidden.bottomRows(d);
  typename PolicyParams<Scalar>::Vector s(static_cast<Eigen::Index>(candidates.size()));
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& e = candidates[c];
    s[static_cast<Eigen::Index>(c)] =
        (u.row(e.insert) + v.row(e.remove)).array().tanh().matrix().dot(params.head_out.transpose());
  }
  return s;
}

/// Numerically stable softmax.
template <typename Scalar>
typename PolicyParams<Scalar>::Vector softmax(const typename PolicyParams<Scalar>::Vector& scores) {
  if (scores.size() == 0) throw Error("softmax over an empty candidate list", "candidates");
  const Scalar m = scores.maxCoeff();
  typename PolicyParams<Scalar>::Vector e = (scores.array() - m).exp().matrix();
  return e / e.sum();
}

/// Distribution over the wired candidates.
Eigen::VectorXd score_edges(const Eigen::MatrixXd& embeddings, std::span<const Edge> candidates, const Policy& params);

enum class SelectMode { sample, greedy };

/// Greedy: argmax, first index on ties (candidates are in lexicographic order).
/// Sample: inverse-CDF draw using one 53-bit uniform from `rng`.
std::size_t select_action(const Eigen::VectorXd& distribution, SelectMode mode, std::mt19937_64& rng);

/// What a training rollout keeps per step to replay the forward pass.
struct StepSample {
  Eigen::MatrixXd features;
  std::vector<Edge> candidates;
  std::size_t chosen = 0;
};

struct RolloutSample {
  std::shared_ptr<const PolicyGraph> graph;
  std::vector<StepSample> steps;
  std::vector<double> rewards;  // one per step, AC before minus after
  double initial_ac = 1.0;
};

/// Edge selector backed by the GNN. Optionally records every decision for
/// policy-gradient training.
class GnnPolicySelector final : public EdgeSelector {
 public:
  GnnPolicySelector(std::shared_ptr<const Policy> params, SelectMode mode);

  std::size_t select(const SelectionContext& ctx) override;
  std::string_view name() const override { return "drl"; }

  /// Subsequent decisions are appended to `sink` (nullptr to stop).
  void record_into(std::vector<StepSample>* sink) { recorder_ = sink; }
  std::shared_ptr<const PolicyGraph> graph_for(const ProblemInstance& instance);

 private:
  std::shared_ptr<const Policy> params_;
  SelectMode mode_;
  std::uint64_t cached_key_ = 0;
  std::shared_ptr<const PolicyGraph> graph_;
  std::vector<StepSample>* recorder_ = nullptr;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int episodes_per_batch = 8;
  double baseline_decay = 0.99;
  double entropy_weight = 0.01;
  int max_steps = 0;  // 0: 2p per episode
  std::uint64_t seed = 0;
  int batches = 100;
  double time_limit_s = 0.0;  // 0: no limit
  int tabu_tenure = 7;
  int layers = 3;
  int hidden = 64;

  void validate() const;
};

struct TrainStats {
  double objective = 0.0;
  double mean_return = 0.0;  // normalized by initial AC
  double mean_entropy = 0.0;
  double baseline = 0.0;
  double grad_norm = 0.0;
  bool skipped = false;  // non-finite gradient
};

/// Surrogate loss and its gradient for a batch with a fixed baseline:
/// J = -(1/T) Σ_t [(G_t/AC_0 - b) log π(a_t) + β H(π_t)].
struct PolicyGradient {
  double objective = 0.0;
  double mean_return = 0.0;
  double mean_entropy = 0.0;
  Policy grad;
};

PolicyGradient policy_gradient(const Policy& params, std::span<const RolloutSample> batch, double baseline,
                               double entropy_weight);

/// REINFORCE trainer with an EMA baseline and Adam steps.
class ReinforceTrainer {
 public:
  ReinforceTrainer(Policy params, TrainConfig config);

  TrainStats update(std::span<const RolloutSample> batch);

  const Policy& params() const noexcept { return params_; }
  double baseline() const noexcept { return baseline_; }
  void set_baseline(double b) {
    baseline_ = b;
    baseline_ready_ = true;
  }

 private:
  Policy params_;
  TrainConfig config_;
  Policy m_, v_;
  long long t_ = 0;
  double baseline_ = 0.0;
  bool baseline_ready_ = false;
};

/// One training instance shape: node count and per-type budgets.
struct FamilyMember {
  std::size_t n = 0;
  std::vector<std::pair<std::string, int>> types;
};

struct TrainingFamily {
  std::vector<FamilyMember> members;
  DemandModel demand_model = DemandModel::uniform;
  std::uint64_t seed = 1;
};

struct TrainReport {
  Policy params;
  std::vector<TrainStats> history;
  int batches_run = 0;
  double wall_time_s = 0.0;
};

/// Trains on freshly generated instances of the family. Deterministic for a
/// fixed config unless the time limit cuts the run short.
TrainReport train_policy(const TrainingFamily& family, const TrainConfig& config,
                         const std::function<void(int, const TrainStats&)>& on_batch = {});

/// Collects one on-policy rollout (sample mode) from a given start.
RolloutSample collect_rollout(const ProblemInstance& instance, std::size_t type, int p,
                              std::shared_ptr<const Policy> params, const EpisodeConfig& config,
                              const EpisodeOptions& options = {});

}  // namespace flp
