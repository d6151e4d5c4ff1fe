#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csynth/dataio.hpp"
#include "csynth/nn.hpp"
#include "csynth/params.hpp"
#include "csynth/tape.hpp"

namespace csynth::hedge {

enum class PayoffKind { kCall, kSpreadCall };

/// call: (S_T[index] - K)^+; spread call: (S_T[long_index] - S_T[short_index] - K)^+.
struct Payoff {
  PayoffKind kind = PayoffKind::kCall;
  double strike = 0.0;
  std::size_t index = 0;
  std::size_t long_index = 0;
  std::size_t short_index = 0;

  static Payoff call(std::size_t index, double strike);
  static Payoff spread_call(std::size_t long_index, std::size_t short_index, double strike);

  /// Underlying level the payoff is written on (S_T, or the spread).
  [[nodiscard]] double underlying(std::span<const double> terminal) const;
  [[nodiscard]] double operator()(std::span<const double> terminal) const;
  void validate(std::size_t dims) const;
};

struct HedgingSpec {
  std::string case_name = "call";
  Payoff payoff;
  /// Dimensions the hedger may trade; the control vector has this many entries.
  std::vector<std::size_t> tradable;
  /// Number of hedge dates N; price paths carry N + 1 points.
  std::size_t steps = 30;
  double maturity = 30.0 / 252.0;
  /// Start prices of the sampler paths.
  std::vector<double> s0;

  void validate(std::size_t dims) const;
  [[nodiscard]] bool is_proxy() const;
  [[nodiscard]] nlohmann::ordered_json to_json() const;
  static HedgingSpec from_json(const nlohmann::json& j);
};

/// Payoff values for every path of the batch.
[[nodiscard]] std::vector<double> payoffs(const data::PathBatch& prices, const HedgingSpec& spec);

struct HedgerConfig {
  std::size_t hidden = 32;
  std::size_t layers = 2;
  std::size_t iterations = 2000;
  std::size_t batch_size = 256;
  double learning_rate = 2e-3;
  /// Learning rate decays geometrically to learning_rate * lr_final_ratio.
  double lr_final_ratio = 0.05;
  /// Premium learning rate, in units of the pilot payoff standard deviation.
  double premium_lr = 1e-2;
  double grad_clip = 10.0;
  std::size_t test_every = 50;
  std::size_t pilot_size = 2000;
  std::uint64_t seed = 11;

  void validate() const;
  [[nodiscard]] nlohmann::ordered_json to_json() const;
  static HedgerConfig from_json(const nlohmann::json& j);
};

/// Shared control network Delta(t_j / T, scaled tradable prices) plus premium p.
class HedgerPolicy {
 public:
  HedgerPolicy() = default;
  HedgerPolicy(const HedgingSpec& spec, const HedgerConfig& cfg, std::vector<double> price_scale);

  void init(Rng& rng, double premium);

  /// n x |tradable| positions at hedge date j, from the step-j slice only.
  ad::Var controls(ad::Tape& tape, std::size_t j, const Tensor& slice) const;
  /// n x 1 terminal portfolio value p + sum_j Delta_j . (S_{j+1} - S_j).
  ad::Var terminal(ad::Tape& tape, const data::PathBatch& prices) const;
  [[nodiscard]] Tensor control_values(std::size_t j, const Tensor& slice) const;

  [[nodiscard]] double premium() const;
  [[nodiscard]] const HedgingSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const HedgerConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const std::vector<double>& price_scale() const noexcept { return price_scale_; }
  [[nodiscard]] ad::ParamSet& params() noexcept { return params_; }
  [[nodiscard]] const ad::ParamSet& params() const noexcept { return params_; }

  void save(const std::filesystem::path& path) const;
  static HedgerPolicy load(const std::filesystem::path& path);

 private:
  HedgingSpec spec_;
  HedgerConfig cfg_;
  std::vector<double> price_scale_;
  nn::Mlp net_;
  ad::ParamSet params_;
};

inline constexpr const char* kPremiumParam = "hedger.premium";

/// Terminal portfolio value per path for arbitrary controls: premium + sum_j controls[j] . dS.
/// controls[j] is n x |tradable|.
[[nodiscard]] std::vector<double> replicate_terminal(const data::PathBatch& prices, const HedgingSpec& spec,
                                                     std::span<const Tensor> controls,
                                                     std::span<const double> premium);
[[nodiscard]] std::vector<double> replicate_terminal(const HedgerPolicy& policy,
                                                     const data::PathBatch& prices);

struct HedgeEval {
  double repl_loss = 0.0;
  double init_risk = 0.0;
  std::vector<double> underlying;
  std::vector<double> payoff;
  std::vector<double> portfolio;
};

[[nodiscard]] HedgeEval evaluate(const data::PathBatch& prices, const HedgingSpec& spec,
                                 std::vector<double> portfolio);
[[nodiscard]] HedgeEval eval_hedger(const HedgerPolicy& policy, const data::PathBatch& prices);

struct BsStrategy {
  std::vector<Tensor> controls;
  std::vector<double> premium;
  HedgeEval eval;
};

/// Black-Scholes delta hedge of a vanilla call on a single tradable underlying.
[[nodiscard]] BsStrategy bs_delta_strategy(const data::PathBatch& prices, const HedgingSpec& spec, double sigma);

/// Price paths of n samples with N + 1 points starting at spec.s0.
using Sampler = std::function<data::PathBatch(std::size_t n, std::uint64_t seed)>;

struct HedgerCurves {
  std::vector<std::size_t> iteration;
  std::vector<double> train_loss;
  std::vector<std::size_t> test_iteration;
  std::vector<double> test_loss;

  /// Header iteration,train_loss,test_loss; test_loss empty between evaluations.
  [[nodiscard]] std::string to_csv() const;
};

struct HedgerTraining {
  HedgerPolicy policy;
  HedgerCurves curves;
};

/// Minimize the empirical quadratic replication error; a fresh sampler batch is
/// drawn at every iteration and `test` (if non-empty) is scored every test_every iterations.
[[nodiscard]] HedgerTraining train_hedger(const Sampler& sampler, const HedgingSpec& spec,
                                          const HedgerConfig& cfg, const data::PathBatch& test = {});

}  // namespace csynth::hedge
