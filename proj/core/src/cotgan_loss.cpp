#include "csynth/cotgan_loss.hpp"

#include <algorithm>

#include "csynth/errors.hpp"

namespace csynth::loss {

CotganCritic::CotganCritic(std::string prefix, std::size_t dim, std::size_t hidden,
                           std::size_t features)
    : prefix_(std::move(prefix)),
      features_(features),
      h_cell_(prefix_ + ".h_rnn", dim, hidden),
      m_cell_(prefix_ + ".m_rnn", dim, hidden),
      h_head_(prefix_ + ".h_out", hidden, features),
      m_head_(prefix_ + ".m_out", hidden, features) {
  if (features == 0) throw ConfigError("cotgan critic: features must be >= 1");
}

void CotganCritic::init(ad::ParamSet& params, Rng& rng) const {
  h_cell_.init(params, rng);
  m_cell_.init(params, rng);
  h_head_.init(params, rng);
  m_head_.init(params, rng);
}

CotganCritic::Features CotganCritic::operator()(ad::Tape& tape, const ad::ParamSet& params,
                                                std::span<const ad::Var> points) const {
  if (points.size() < 2) throw ShapeError("cotgan critic: need at least 2 time steps");
  const auto hs = h_cell_.run(tape, params, points);
  const auto ms = m_cell_.run(tape, params, points);
  std::vector<ad::Var> h_parts;
  std::vector<ad::Var> dm_parts;
  ad::Var m_prev = tape.tanh(m_head_(tape, params, ms[0]));
  for (std::size_t t = 0; t + 1 < points.size(); ++t) {
    h_parts.push_back(tape.tanh(h_head_(tape, params, hs[t])));
    const ad::Var m_next = tape.tanh(m_head_(tape, params, ms[t + 1]));
    dm_parts.push_back(tape.sub(m_next, m_prev));
    m_prev = m_next;
  }
  return Features{tape.concat_cols(h_parts), tape.concat_cols(dm_parts)};
}

ad::Var causal_cost(ad::Tape& tape, ad::Var x, const CotganCritic::Features& fx, ad::Var y,
                    const CotganCritic::Features& fy, double lambda) {
  const ad::Var base = squared_distance(tape, x, y);
  if (lambda == 0.0) return base;
  const ad::Var penalty = tape.matmul(fx.dm, tape.transpose(fy.h));
  return tape.add(base, tape.scale(penalty, lambda));
}

CotganLosses cotgan_losses(ad::Tape& tape, std::span<const ad::Var> real,
                           std::span<const ad::Var> fake, const CotganCritic& critic,
                           const ad::ParamSet& critic_params, const SinkhornConfig& cfg,
                           double penalty_weight) {
  cfg.validate();
  if (real.size() != fake.size()) throw ShapeError("cotgan_losses: real and fake lengths differ");
  const ad::Var x = tape.concat_cols(real);
  const ad::Var y = tape.concat_cols(fake);
  if (x.cols() != y.cols()) throw ShapeError("cotgan_losses: real and fake dimensions differ");
  const auto fx = critic(tape, critic_params, real);
  const auto fy = critic(tape, critic_params, fake);
  const double lambda = cfg.causal_weight;

  SinkhornResult rxy;
  SinkhornResult rxx;
  SinkhornResult ryy;
  const ad::Var wxy = entropic_ot(tape, causal_cost(tape, x, fx, y, fy, lambda), cfg, &rxy);
  const ad::Var wxx = entropic_ot(tape, causal_cost(tape, x, fx, x, fx, lambda), cfg, &rxx);
  const ad::Var wyy = entropic_ot(tape, causal_cost(tape, y, fy, y, fy, lambda), cfg, &ryy);

  CotganLosses out;
  out.divergence = tape.sub(wxy, tape.scale(tape.add(wxx, wyy), 0.5));
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  const ad::Var mean_dm = tape.scale(tape.sum_rows(fx.dm), inv_n);
  out.martingale_penalty = tape.sum(tape.mul(mean_dm, mean_dm));
  out.generator_loss = out.divergence;
  out.critic_loss =
      tape.add(tape.scale(out.divergence, -1.0), tape.scale(out.martingale_penalty, penalty_weight));
  out.info.value = out.divergence.item();
  out.info.xy = rxy.value;
  out.info.xx = rxx.value;
  out.info.yy = ryy.value;
  for (const SinkhornResult* r : {&rxy, &rxx, &ryy}) {
    out.info.max_violation = std::max(out.info.max_violation, r->violation.back());
    if (!r->converged) out.info.warning = true;
  }
  return out;
}

}  // namespace csynth::loss
