#include "relab/agents/dqn.hpp"

#include <cmath>
#include <stdexcept>

namespace relab {

Scalar epsilon_at(std::int64_t t, const EpsilonSchedule& s) {
  if (t < 0) throw std::invalid_argument("epsilon_at: negative step");
  std::int64_t local = t;
  if (s.informed && s.interval > 0) local = t % s.interval;
  const Scalar decay_steps = s.fraction * static_cast<Scalar>(s.horizon);
  if (decay_steps <= 0) return s.final_value;
  Scalar frac = static_cast<Scalar>(local) / decay_steps;
  if (frac >= 1) return s.final_value;
  return s.initial + frac * (s.final_value - s.initial);
}

void DqnHyperparams::validate() const {
  if (buffer_capacity < batch_size)
    throw std::invalid_argument("dqn: buffer capacity below batch size");
  if (epsilon.initial < 0 || epsilon.initial > 1 || epsilon.final_value < 0 ||
      epsilon.final_value > 1)
    throw std::invalid_argument("dqn: epsilon outside [0,1]");
  if (gamma < 0 || gamma >= 1) throw std::invalid_argument("dqn: gamma must lie in [0,1)");
}

Vector dqn_targets(const Vector& rewards, const Matrix& next_q, Scalar gamma, bool soft_q,
                   Scalar tau) {
  Vector y(rewards.size());
  for (Eigen::Index i = 0; i < rewards.size(); ++i) {
    Scalar v;
    if (soft_q) {
      ArrayX q = next_q.row(i).transpose().array() / tau;
      Scalar mx = q.maxCoeff();
      v = tau * (mx + std::log((q - mx).exp().sum()));
    } else {
      v = next_q.row(i).maxCoeff();
    }
    y(i) = rewards(i) + gamma * v;
  }
  return y;
}

int select_action(const Vector& q_values, ActionMode mode, Scalar param, std::mt19937_64& rng) {
  if (!q_values.allFinite()) throw std::invalid_argument("select_action: non-finite Q-values");
  const int n = static_cast<int>(q_values.size());
  std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
  if (mode == ActionMode::EpsilonGreedy) {
    if (unit(rng) < param) {
      std::uniform_int_distribution<int> dist(0, n - 1);
      return dist(rng);
    }
    int best = 0;
    q_values.maxCoeff(&best);
    return best;
  }
  // softmax(Q / temperature)
  ArrayX z = q_values.array() / param;
  z -= z.maxCoeff();
  ArrayX p = z.exp();
  p /= p.sum();
  Scalar u = unit(rng), acc = 0;
  for (int i = 0; i < n; ++i) {
    acc += p(i);
    if (u < acc) return i;
  }
  return n - 1;
}

DqnAgent::DqnAgent(std::vector<LayerSpec> q_specs, std::vector<int> input_shape,
                   DqnHyperparams hp, std::uint64_t seed)
    : qnet(q_specs, input_shape, seed),
      target(q_specs, input_shape, seed),
      hp_(std::move(hp)) {
  hp_.validate();
  opt = qnet.make_adam_state();
  target.copy_parameters_from(qnet);
}

int DqnAgent::act(const Vector& obs, std::int64_t t, std::mt19937_64& rng) {
  Vector q = qnet.forward(obs.transpose()).row(0).transpose();
  if (hp_.stochastic_action)
    return select_action(q, ActionMode::Stochastic, hp_.stochastic_temperature, rng);
  return select_action(q, ActionMode::EpsilonGreedy, epsilon_at(t, hp_.epsilon), rng);
}

DqnLossReport DqnAgent::gradient_step(ReplayBuffer& buffer, std::mt19937_64& rng,
                                      const Vector* rewards_in,
                                      const std::vector<int>* fixed_indices) {
  DqnLossReport report;
  std::vector<int> idx =
      fixed_indices ? *fixed_indices : buffer.sample(hp_.batch_size, rng);
  const int m = static_cast<int>(idx.size());
  const int obs_size = static_cast<int>(buffer.at(idx[0]).obs->size());

  Matrix obs(m, obs_size), next_obs(m, obs_size);
  Vector rewards(m);
  std::vector<int> actions(m);
  for (int i = 0; i < m; ++i) {
    const Transition& tr = buffer.at(idx[i]);
    obs.row(i) = tr.obs->transpose();
    next_obs.row(i) = tr.next_obs->transpose();
    rewards(i) = rewards_in ? (*rewards_in)(i) : tr.reward;
    actions[i] = tr.action;
  }

  Matrix next_q = target.forward(next_obs);
  Vector y = dqn_targets(rewards, next_q, hp_.gamma, hp_.soft_q, hp_.soft_q_temperature);

  Matrix q = qnet.forward(obs);
  Vector td(m);
  Matrix dq = Matrix::Zero(m, q.cols());
  Scalar loss = 0;
  for (int i = 0; i < m; ++i) {
    Scalar diff = q(i, actions[i]) - y(i);
    td(i) = diff;
    // Huber with unit threshold
    if (std::abs(diff) <= 1) {
      loss += 0.5 * diff * diff / m;
      dq(i, actions[i]) = diff / m;
    } else {
      loss += (std::abs(diff) - 0.5) / m;
      dq(i, actions[i]) = (diff > 0 ? Scalar(1) : Scalar(-1)) / m;
    }
  }
  if (!std::isfinite(loss)) return report;

  Gradients g = qnet.backward(dq);
  clip_gradient_norm({&g}, hp_.max_grad_norm);
  qnet.adam_step(g, opt, hp_.learning_rate);
  buffer.update_priorities(idx, td);

  report.td_loss = loss;
  report.updated = true;
  return report;
}

}  // namespace relab
