#pragma once

#include <cmath>
#include <vector>

#include "flp/policy_gnn.hpp"

namespace flp::test {

// Loop-level re-derivation of the policy forward pass, sharing no code with
// the library. Returns the REINFORCE surrogate for a batch.
inline double naive_surrogate(const Policy& P, std::span<const RolloutSample> batch, double baseline, double beta) {
  const int d = P.hidden();
  std::size_t total = 0;
  for (const auto& r : batch) total += r.steps.size();
  if (total == 0) return 0.0;
  double J = 0.0;
  for (const auto& r : batch) {
    const Eigen::MatrixXd adj(r.graph->adjacency);
    const int n = static_cast<int>(adj.rows());
    const double norm = r.initial_ac > 0.0 ? r.initial_ac : 1.0;
    for (std::size_t t = 0; t < r.steps.size(); ++t) {
      double G = 0.0;
      for (std::size_t q = t; q < r.rewards.size(); ++q) G += r.rewards[q];
      G /= norm;
      const auto& A = r.steps[t].features;
      std::vector<std::vector<double>> N(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d), 0.0));
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c)
          for (int f = 0; f < kNodeFeatures; ++f) N[i][c] += A(i, f) * P.input(f, c);
      for (const auto& W : P.layers) {
        auto next = N;
        for (int i = 0; i < n; ++i)
          for (int c = 0; c < d; ++c) {
            double z = 0.0;
            for (int j = 0; j < n; ++j) {
              if (adj(i, j) == 0.0) continue;
              for (int q = 0; q < d; ++q) z += adj(i, j) * N[j][q] * W(q, c);
            }
            next[i][c] += std::tanh(z);
          }
        N = std::move(next);
      }
      const auto& cands = r.steps[t].candidates;
      std::vector<double> s(cands.size(), 0.0);
      for (std::size_t c = 0; c < cands.size(); ++c)
        for (int k = 0; k < d; ++k) {
          double z = 0.0;
          for (int q = 0; q < d; ++q)
            z += N[cands[c].insert][q] * P.head_hidden(q, k) + N[cands[c].remove][q] * P.head_hidden(d + q, k);
          s[c] += P.head_out(k) * std::tanh(z);
        }
      double mx = s[0];
      for (double v : s) mx = std::max(mx, v);
      double Z = 0.0;
      for (double v : s) Z += std::exp(v - mx);
      double H = 0.0;
      for (double v : s) {
        const double lp = v - mx - std::log(Z);
        H -= std::exp(lp) * lp;
      }
      const double logpa = s[r.steps[t].chosen] - mx - std::log(Z);
      J += -((G - baseline) * logpa + beta * H) / static_cast<double>(total);
    }
  }
  return J;
}

struct GradCheck {
  double worst_rel = 0.0;
  std::size_t checked = 0;
};

// Central differences of naive_surrogate against policy_gradient, every block.
inline GradCheck finite_difference_check(const Policy& params, std::span<const RolloutSample> batch, double baseline,
                                         double beta, double eps = 1e-5) {
  const PolicyGradient pg = policy_gradient(params, batch, baseline, beta);
  GradCheck out;
  Policy work = params;
  std::vector<double> analytic;
  pg.grad.for_each_block([&](const auto& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) analytic.push_back(m(r, c));
  });
  std::size_t idx = 0;
  work.for_each_block([&](auto& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double keep = m(r, c);
        m(r, c) = keep + eps;
        const double up = naive_surrogate(work, batch, baseline, beta);
        m(r, c) = keep - eps;
        const double down = naive_surrogate(work, batch, baseline, beta);
        m(r, c) = keep;
        const double fd = (up - down) / (2.0 * eps);
        const double an = analytic[idx++];
        const double rel = std::abs(fd - an) / std::max(1e-6, std::max(std::abs(fd), std::abs(an)));
        out.worst_rel = std::max(out.worst_rel, rel);
        ++out.checked;
      }
  });
  return out;
}

}  // namespace flp::test
