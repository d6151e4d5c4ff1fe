#pragma once

#include <cstddef>
#include <vector>

#include "csynth/tape.hpp"
#include "csynth/tensor.hpp"

namespace csynth::loss {

struct SinkhornConfig {
  double epsilon = 0.1;
  std::size_t iterations = 100;
  /// Early stop once the row-marginal L1 violation drops below this.
  double tolerance = 1e-12;
  /// Weight of the critic-defined causal term in the COTGAN ground cost.
  double causal_weight = 1.0;

  void validate() const;
};

/// Log-domain Sinkhorn between uniform empirical measures.
struct SinkhornResult {
  /// Entropic OT value <f, a> + <g, b>.
  double value = 0.0;
  /// Unregularised transport cost <P, C>.
  double transport_cost = 0.0;
  Tensor plan;
  std::vector<double> f;
  std::vector<double> g;
  /// Row-marginal L1 violation after each iteration.
  std::vector<double> violation;
  std::size_t iterations = 0;
  bool converged = false;
};

inline constexpr double kMarginalWarningLevel = 1e-6;

[[nodiscard]] SinkhornResult sinkhorn(const Tensor& cost, const SinkhornConfig& cfg);

/// Squared Euclidean cost between the rows of x (n x D) and y (m x D).
[[nodiscard]] Tensor squared_distance(const Tensor& x, const Tensor& y);
ad::Var squared_distance(ad::Tape& tape, ad::Var x, ad::Var y);

struct DivergenceInfo {
  double value = 0.0;
  double xy = 0.0;
  double xx = 0.0;
  double yy = 0.0;
  double max_violation = 0.0;
  /// Set when some Sinkhorn run ended with marginal violation above 1e-6.
  bool warning = false;
};

/// Entropic OT term on the tape. The gradient follows the envelope theorem:
/// d OT / d C = P*, so the plan enters as a constant.
ad::Var entropic_ot(ad::Tape& tape, ad::Var cost, const SinkhornConfig& cfg,
                    SinkhornResult* result = nullptr);

/// Debiased divergence OT(X,Y) - OT(X,X)/2 - OT(Y,Y)/2 on flattened paths (rows).
ad::Var sinkhorn_divergence(ad::Tape& tape, ad::Var x, ad::Var y, const SinkhornConfig& cfg,
                            DivergenceInfo* info = nullptr);
[[nodiscard]] double sinkhorn_divergence(const Tensor& x, const Tensor& y,
                                         const SinkhornConfig& cfg, DivergenceInfo* info = nullptr);

}  // namespace csynth::loss
