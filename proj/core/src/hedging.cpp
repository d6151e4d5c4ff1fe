#include "csynth/hedging.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "csynth/adam.hpp"
#include "csynth/checkpoint.hpp"
#include "csynth/errors.hpp"
#include "csynth/hash.hpp"
#include "csynth/rng.hpp"
#include "csynth/stochastic.hpp"

namespace csynth::hedge {

namespace {

void check_prices(const data::PathBatch& prices, const HedgingSpec& spec) {
  spec.validate(prices.dims());
  if (prices.steps() != spec.steps + 1) {
    throw ShapeError("hedging: price paths have " + std::to_string(prices.steps()) + " points, spec needs " +
                     std::to_string(spec.steps + 1));
  }
  if (prices.empty()) throw ShapeError("hedging: empty price batch");
}

std::string kind_name(PayoffKind k) { return k == PayoffKind::kCall ? "call" : "spread_call"; }

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

Payoff Payoff::call(std::size_t index, double strike) {
  Payoff p;
  p.kind = PayoffKind::kCall;
  p.index = index;
  p.strike = strike;
  return p;
}

Payoff Payoff::spread_call(std::size_t long_index, std::size_t short_index, double strike) {
  Payoff p;
  p.kind = PayoffKind::kSpreadCall;
  p.long_index = long_index;
  p.short_index = short_index;
  p.strike = strike;
  return p;
}

double Payoff::underlying(std::span<const double> s) const {
  return kind == PayoffKind::kCall ? s[index] : s[long_index] - s[short_index];
}

double Payoff::operator()(std::span<const double> s) const { return std::max(underlying(s) - strike, 0.0); }

void Payoff::validate(std::size_t dims) const {
  if (!std::isfinite(strike)) throw ConfigError("payoff: strike must be finite");
  if (kind == PayoffKind::kCall) {
    if (index >= dims) throw ConfigError("payoff: index out of range");
  } else {
    if (long_index >= dims || short_index >= dims) throw ConfigError("payoff: spread index out of range");
    if (long_index == short_index) throw ConfigError("payoff: spread legs must differ");
  }
}

void HedgingSpec::validate(std::size_t dims) const {
  payoff.validate(dims);
  if (tradable.empty()) throw ConfigError("hedging spec: tradable set is empty");
  for (std::size_t i = 0; i < tradable.size(); ++i) {
    if (tradable[i] >= dims) throw ConfigError("hedging spec: tradable index out of range");
    for (std::size_t j = 0; j < i; ++j) {
      if (tradable[j] == tradable[i]) throw ConfigError("hedging spec: duplicate tradable index");
    }
  }
  if (steps < 1) throw ConfigError("hedging spec: steps must be >= 1");
  if (!(maturity > 0.0)) throw ConfigError("hedging spec: maturity must be > 0");
  if (!s0.empty() && s0.size() != dims) throw ConfigError("hedging spec: s0 dimension mismatch");
}

bool HedgingSpec::is_proxy() const {
  auto traded = [this](std::size_t k) { return std::find(tradable.begin(), tradable.end(), k) != tradable.end(); };
  if (payoff.kind == PayoffKind::kCall) return !traded(payoff.index);
  return !traded(payoff.long_index) || !traded(payoff.short_index);
}

nlohmann::ordered_json HedgingSpec::to_json() const {
  nlohmann::ordered_json j;
  j["case"] = case_name;
  j["payoff"] = {{"kind", kind_name(payoff.kind)},
                 {"strike", payoff.strike},
                 {"index", payoff.index},
                 {"long_index", payoff.long_index},
                 {"short_index", payoff.short_index}};
  j["tradable"] = tradable;
  j["steps"] = steps;
  j["maturity"] = maturity;
  j["s0"] = s0;
  return j;
}

HedgingSpec HedgingSpec::from_json(const nlohmann::json& j) {
  HedgingSpec s;
  try {
    s.case_name = j.at("case").get<std::string>();
    const auto& p = j.at("payoff");
    const auto kind = p.at("kind").get<std::string>();
    if (kind == "call") {
      s.payoff = Payoff::call(p.at("index").get<std::size_t>(), p.at("strike").get<double>());
    } else if (kind == "spread_call") {
      s.payoff = Payoff::spread_call(p.at("long_index").get<std::size_t>(), p.at("short_index").get<std::size_t>(),
                                     p.at("strike").get<double>());
    } else {
      throw ConfigError("hedging spec: unknown payoff kind '" + kind + "'");
    }
    s.tradable = j.at("tradable").get<std::vector<std::size_t>>();
    s.steps = j.at("steps").get<std::size_t>();
    s.maturity = j.at("maturity").get<double>();
    s.s0 = j.at("s0").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("hedging spec: ") + e.what());
  }
  return s;
}

std::vector<double> payoffs(const data::PathBatch& prices, const HedgingSpec& spec) {
  std::vector<double> out(prices.samples());
  std::vector<double> last(prices.dims());
  for (std::size_t s = 0; s < prices.samples(); ++s) {
    for (std::size_t k = 0; k < prices.dims(); ++k) last[k] = prices(s, prices.steps() - 1, k);
    out[s] = spec.payoff(last);
  }
  return out;
}

void HedgerConfig::validate() const {
  if (hidden == 0 || layers == 0) throw ConfigError("hedger config: hidden and layers must be >= 1");
  if (batch_size == 0) throw ConfigError("hedger config: batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !(premium_lr >= 0.0)) throw ConfigError("hedger config: learning rates must be > 0");
  if (!(lr_final_ratio > 0.0) || lr_final_ratio > 1.0) throw ConfigError("hedger config: lr_final_ratio must be in (0, 1]");
  if (!(grad_clip > 0.0)) throw ConfigError("hedger config: grad_clip must be > 0");
  if (test_every == 0) throw ConfigError("hedger config: test_every must be >= 1");
  if (pilot_size < 2) throw ConfigError("hedger config: pilot_size must be >= 2");
}

nlohmann::ordered_json HedgerConfig::to_json() const {
  nlohmann::ordered_json j;
  j["hidden"] = hidden;
  j["layers"] = layers;
  j["iterations"] = iterations;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["lr_final_ratio"] = lr_final_ratio;
  j["premium_lr"] = premium_lr;
  j["grad_clip"] = grad_clip;
  j["test_every"] = test_every;
  j["pilot_size"] = pilot_size;
  j["seed"] = seed;
  return j;
}

HedgerConfig HedgerConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("hedger config: expected a JSON object");
  HedgerConfig c;
  const auto known = c.to_json();
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("hedger config: unknown key '" + key + "'");
  }
  try {
    c.hidden = j.value("hidden", c.hidden);
    c.layers = j.value("layers", c.layers);
    c.iterations = j.value("iterations", c.iterations);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.lr_final_ratio = j.value("lr_final_ratio", c.lr_final_ratio);
    c.premium_lr = j.value("premium_lr", c.premium_lr);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.test_every = j.value("test_every", c.test_every);
    c.pilot_size = j.value("pilot_size", c.pilot_size);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("hedger config: ") + e.what());
  }
  c.validate();
  return c;
}

HedgerPolicy::HedgerPolicy(const HedgingSpec& spec, const HedgerConfig& cfg, std::vector<double> price_scale)
    : spec_(spec),
      cfg_(cfg),
      price_scale_(std::move(price_scale)),
      net_("hedger.net", 1 + spec.tradable.size(), cfg.hidden, cfg.layers, spec.tradable.size()),
      params_(cfg.seed) {
  if (price_scale_.size() != spec.tradable.size()) throw ShapeError("hedger: price scale must cover the tradables");
  if (spec.s0.empty()) throw ConfigError("hedger: spec.s0 is required");
}

void HedgerPolicy::init(Rng& rng, double premium) {
  net_.init(params_, rng);
  params_.add(kPremiumParam, Tensor::scalar(premium));
}

ad::Var HedgerPolicy::controls(ad::Tape& tape, std::size_t j, const Tensor& slice) const {
  const std::size_t n = slice.rows();
  const std::size_t m = spec_.tradable.size();
  Tensor in = Tensor::matrix(n, 1 + m);
  const double tau = static_cast<double>(j) / static_cast<double>(spec_.steps);
  for (std::size_t s = 0; s < n; ++s) {
    in(s, 0) = tau;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t k = spec_.tradable[i];
      in(s, 1 + i) = (slice(s, k) / spec_.s0[k] - 1.0) / price_scale_[i];
    }
  }
  return net_(tape, params_, tape.constant(std::move(in)));
}

Tensor HedgerPolicy::control_values(std::size_t j, const Tensor& slice) const {
  ad::Tape tape;
  return controls(tape, j, slice).value();
}

ad::Var HedgerPolicy::terminal(ad::Tape& tape, const data::PathBatch& prices) const {
  check_prices(prices, spec_);
  const std::size_t n = prices.samples();
  const std::size_t m = spec_.tradable.size();
  ad::Var value = tape.mul(tape.constant(Tensor::matrix(n, 1, 1.0)), tape.param(params_, kPremiumParam));
  Tensor now = prices.time_slice(0);
  for (std::size_t j = 0; j < spec_.steps; ++j) {
    Tensor next = prices.time_slice(j + 1);
    Tensor ds = Tensor::matrix(n, m);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t k = spec_.tradable[i];
        ds(s, i) = next(s, k) - now(s, k);
      }
    }
    const ad::Var delta = controls(tape, j, now);
    value = tape.add(value, tape.sum_cols(tape.mul(delta, tape.constant(std::move(ds)))));
    now = std::move(next);
  }
  return value;
}

double HedgerPolicy::premium() const { return params_.at(kPremiumParam)[0]; }

void HedgerPolicy::save(const std::filesystem::path& path) const {
  ckpt::Checkpoint c;
  c.kind = "hedger";
  c.cfg_hash = hex64(fnv1a64(cfg_.to_json().dump() + spec_.to_json().dump()));
  c.seq_len = spec_.steps + 1;
  c.dim = spec_.s0.size();
  c.params = params_;
  c.aux["price_scale"] = Tensor({1, price_scale_.size()}, price_scale_);
  c.metadata["spec"] = spec_.to_json();
  c.metadata["config"] = cfg_.to_json();
  ckpt::save(c, path);
}

HedgerPolicy HedgerPolicy::load(const std::filesystem::path& path) {
  const ckpt::Checkpoint c = ckpt::load(path, "hedger");
  try {
    const HedgingSpec spec = HedgingSpec::from_json(c.metadata.at("spec"));
    const HedgerConfig cfg = HedgerConfig::from_json(c.metadata.at("config"));
    HedgerPolicy p(spec, cfg, c.aux.at("price_scale").values());
    p.params_ = c.params;
    return p;
  } catch (const std::out_of_range&) {
    throw DataError("hedger checkpoint '" + path.string() + "' lacks price_scale");
  } catch (const nlohmann::json::exception& e) {
    throw DataError("hedger checkpoint '" + path.string() + "': " + e.what());
  }
}

std::vector<double> replicate_terminal(const data::PathBatch& prices, const HedgingSpec& spec,
                                       std::span<const Tensor> controls, std::span<const double> premium) {
  check_prices(prices, spec);
  const std::size_t n = prices.samples();
  const std::size_t m = spec.tradable.size();
  if (controls.size() != spec.steps) throw ShapeError("replicate_terminal: need one control block per hedge date");
  if (premium.size() != n && premium.size() != 1) throw ShapeError("replicate_terminal: premium size mismatch");
  std::vector<double> x(n);
  for (std::size_t s = 0; s < n; ++s) x[s] = premium.size() == 1 ? premium[0] : premium[s];
  for (std::size_t j = 0; j < spec.steps; ++j) {
    if (controls[j].rows() != n || controls[j].cols() != m) {
      throw ShapeError("replicate_terminal: control block " + std::to_string(j) + " has shape " +
                       shape_string(controls[j].shape()));
    }
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t k = spec.tradable[i];
        x[s] += controls[j](s, i) * (prices(s, j + 1, k) - prices(s, j, k));
      }
    }
  }
  return x;
}

std::vector<double> replicate_terminal(const HedgerPolicy& policy, const data::PathBatch& prices) {
  ad::Tape tape;
  const Tensor v = policy.terminal(tape, prices).value();
  return v.values();
}

HedgeEval evaluate(const data::PathBatch& prices, const HedgingSpec& spec, std::vector<double> portfolio) {
  HedgeEval e;
  e.payoff = payoffs(prices, spec);
  e.portfolio = std::move(portfolio);
  e.underlying.resize(prices.samples());
  std::vector<double> last(prices.dims());
  for (std::size_t s = 0; s < prices.samples(); ++s) {
    for (std::size_t k = 0; k < prices.dims(); ++k) last[k] = prices(s, prices.steps() - 1, k);
    e.underlying[s] = spec.payoff.underlying(last);
    const double r = e.portfolio[s] - e.payoff[s];
    e.repl_loss += r * r;
    e.init_risk += e.payoff[s] * e.payoff[s];
  }
  const auto n = static_cast<double>(prices.samples());
  e.repl_loss /= n;
  e.init_risk /= n;
  return e;
}

HedgeEval eval_hedger(const HedgerPolicy& policy, const data::PathBatch& prices) {
  return evaluate(prices, policy.spec(), replicate_terminal(policy, prices));
}

BsStrategy bs_delta_strategy(const data::PathBatch& prices, const HedgingSpec& spec, double sigma) {
  check_prices(prices, spec);
  if (spec.payoff.kind != PayoffKind::kCall || spec.tradable.size() != 1 || spec.tradable[0] != spec.payoff.index) {
    throw ConfigError("bs_delta_strategy: defined only for a vanilla call on its single traded underlying");
  }
  const std::size_t k = spec.payoff.index;
  const double dt = spec.maturity / static_cast<double>(spec.steps);
  BsStrategy out;
  out.premium.resize(prices.samples());
  for (std::size_t s = 0; s < prices.samples(); ++s) {
    out.premium[s] = stoch::bs_price(prices(s, 0, k), spec.payoff.strike, sigma, spec.maturity);
  }
  for (std::size_t j = 0; j < spec.steps; ++j) {
    Tensor c = Tensor::matrix(prices.samples(), 1);
    const double tau = spec.maturity - static_cast<double>(j) * dt;
    for (std::size_t s = 0; s < prices.samples(); ++s) {
      c(s, 0) = stoch::bs_delta(prices(s, j, k), spec.payoff.strike, sigma, std::max(tau, 0.0));
    }
    out.controls.push_back(std::move(c));
  }
  out.eval = evaluate(prices, spec, replicate_terminal(prices, spec, out.controls, out.premium));
  return out;
}

std::string HedgerCurves::to_csv() const {
  std::string out = "iteration,train_loss,test_loss\n";
  std::size_t ti = 0;
  for (std::size_t i = 0; i < iteration.size(); ++i) {
    out += std::to_string(iteration[i]) + ',' + shortest(train_loss[i]) + ',';
    if (ti < test_iteration.size() && test_iteration[ti] == iteration[i]) out += shortest(test_loss[ti++]);
    out += '\n';
  }
  return out;
}

HedgerTraining train_hedger(const Sampler& sampler, const HedgingSpec& spec, const HedgerConfig& cfg,
                            const data::PathBatch& test) {
  cfg.validate();
  if (spec.s0.empty()) throw ConfigError("train_hedger: spec.s0 is required");
  spec.validate(spec.s0.size());

  // Pilot batch: premium start (mean payoff) and input scaling of the tradables.
  const data::PathBatch pilot = sampler(cfg.pilot_size, derive_seed(cfg.seed, "pilot"));
  check_prices(pilot, spec);
  const auto pay = payoffs(pilot, spec);
  double mean = 0.0;
  for (double v : pay) mean += v;
  mean /= static_cast<double>(pay.size());
  double var = 0.0;
  for (double v : pay) var += (v - mean) * (v - mean);
  const double pay_std = std::sqrt(var / static_cast<double>(pay.size()));
  std::vector<double> scale;
  for (std::size_t k : spec.tradable) {
    double acc = 0.0;
    for (std::size_t s = 0; s < pilot.samples(); ++s) {
      const double r = pilot(s, pilot.steps() - 1, k) / spec.s0[k] - 1.0;
      acc += r * r;
    }
    scale.push_back(std::max(std::sqrt(acc / static_cast<double>(pilot.samples())), 1e-6));
  }

  HedgerTraining out{HedgerPolicy(spec, cfg, scale), {}};
  HedgerPolicy& policy = out.policy;
  Rng init_rng(derive_seed(cfg.seed, "hedger-init"));
  policy.init(init_rng, mean);
  ad::Adam opt_net(ad::AdamConfig{cfg.learning_rate});
  ad::Adam opt_premium(ad::AdamConfig{cfg.premium_lr * std::max(pay_std, 1e-8)});
  const double premium_lr0 = opt_premium.config().learning_rate;
  const std::uint64_t batch_seed = derive_seed(cfg.seed, "batches");

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const double frac = cfg.iterations > 1 ? static_cast<double>(it) / static_cast<double>(cfg.iterations - 1) : 0.0;
    const double decay = std::pow(cfg.lr_final_ratio, frac);
    opt_net.set_learning_rate(cfg.learning_rate * decay);
    opt_premium.set_learning_rate(premium_lr0 * decay);

    const data::PathBatch batch = sampler(cfg.batch_size, derive_seed(batch_seed, it));
    check_prices(batch, spec);
    const auto g = payoffs(batch, spec);
    ad::Tape tape;
    const ad::Var x = policy.terminal(tape, batch);
    const ad::Var diff = tape.sub(x, tape.constant(Tensor({g.size(), 1}, g)));
    const ad::Var loss = tape.mean(tape.mul(diff, diff));
    const double lv = loss.item();
    if (!std::isfinite(lv)) {
      throw NumericError("hedger training aborted at iteration " + std::to_string(it) + ": replication loss is not finite");
    }
    ad::Gradients grads = tape.backward(loss);
    ad::Gradients net_grads = grads.filtered({"hedger.net"});
    ad::clip_global_norm(net_grads, cfg.grad_clip);
    opt_net.step(policy.params(), net_grads);
    opt_premium.step(policy.params(), grads.filtered({kPremiumParam}));

    out.curves.iteration.push_back(it);
    out.curves.train_loss.push_back(lv);
    if (!test.empty() && (it % cfg.test_every == 0 || it + 1 == cfg.iterations)) {
      out.curves.test_iteration.push_back(it);
      out.curves.test_loss.push_back(eval_hedger(policy, test).repl_loss);
    }
  }
  return out;
}

}  // namespace csynth::hedge
