#include "relab/agents/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace relab {

void PpoHyperparams::validate() const {
  if (gamma < 0 || gamma >= 1) throw std::invalid_argument("ppo: gamma must lie in [0,1)");
  if (clip_range <= 0) throw std::invalid_argument("ppo: clip_range must be positive");
  if (gae_lambda < 0 || gae_lambda > 1)
    throw std::invalid_argument("ppo: gae_lambda must lie in [0,1]");
  if (rollout_steps <= 0 || minibatch_size <= 0 || epochs <= 0)
    throw std::invalid_argument("ppo: rollout/minibatch/epochs must be positive");
}

ActorCritic::ActorCritic(std::vector<LayerSpec> trunk_specs, std::vector<int> input_shape,
                         int feature_dim, int action_count, std::uint64_t seed)
    : trunk(std::move(trunk_specs), input_shape, seed),
      pi_head({LayerSpec::linear(feature_dim, action_count)}, {feature_dim}, seed ^ 0x70690001ULL),
      v_head({LayerSpec::linear(feature_dim, 1)}, {feature_dim}, seed ^ 0x76660002ULL),
      action_count_(action_count) {
  trunk_opt = trunk.make_adam_state();
  pi_opt = pi_head.make_adam_state();
  v_opt = v_head.make_adam_state();
  if (trunk.output_size() != feature_dim)
    throw std::invalid_argument("ActorCritic: trunk output does not match feature_dim");
}

void ActorCritic::evaluate(const Matrix& obs, Matrix& logits, Vector& values) {
  const Matrix& feat = trunk.forward(obs);
  logits = pi_head.forward(feat);
  values = v_head.forward(feat).col(0);
}

int ActorCritic::act(const Vector& obs, std::mt19937_64& rng, Scalar* log_prob, Scalar* value) {
  Matrix logits;
  Vector values;
  evaluate(obs.transpose(), logits, values);
  Matrix lp = log_softmax(logits);
  ArrayX p = lp.row(0).transpose().array().exp();
  std::uniform_real_distribution<Scalar> dist(0.0, 1.0);
  Scalar u = dist(rng), acc = 0;
  int a = action_count_ - 1;
  for (int i = 0; i < action_count_; ++i) {
    acc += p(i);
    if (u < acc) {
      a = i;
      break;
    }
  }
  if (log_prob) *log_prob = lp(0, a);
  if (value) *value = values(0);
  return a;
}

Scalar ActorCritic::value_of(const Vector& obs) {
  Matrix logits;
  Vector values;
  evaluate(obs.transpose(), logits, values);
  return values(0);
}

Matrix log_softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Scalar mx = logits.row(r).maxCoeff();
    ArrayX shifted = logits.row(r).transpose().array() - mx;
    Scalar lse = std::log(shifted.exp().sum());
    out.row(r) = (shifted - lse).matrix().transpose();
  }
  return out;
}

PpoLossReport ppo_update(ActorCritic& ac, const RolloutBuffer& rollout, const Vector& advantages,
                         const Vector& returns, const PpoHyperparams& hp, std::mt19937_64& rng) {
  hp.validate();
  if (!rollout.full()) throw std::logic_error("ppo_update: rollout not full");
  const int n = rollout.size();
  const int A = ac.action_count();

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  PpoLossReport report;
  int minibatches = 0;

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start + hp.minibatch_size <= n; start += hp.minibatch_size) {
      const int m = hp.minibatch_size;
      Matrix obs_mb(m, rollout.observations().cols());
      Vector adv(m), ret(m), lp_old(m);
      std::vector<int> act(m);
      for (int i = 0; i < m; ++i) {
        int idx = order[start + i];
        obs_mb.row(i) = rollout.observations().row(idx);
        adv(i) = advantages(idx);
        ret(i) = returns(idx);
        lp_old(i) = rollout.log_probs()(idx);
        act[i] = rollout.actions()[idx];
      }
      if (hp.normalize_advantage) {
        Scalar mean = adv.mean();
        Scalar sd = std::sqrt((adv.array() - mean).square().mean());
        adv = (adv.array() - mean) / (sd + 1e-8);
      }

      const Matrix& feat = ac.trunk.forward(obs_mb);
      Matrix logits = ac.pi_head.forward(feat);
      Vector values = ac.v_head.forward(feat).col(0);
      Matrix lp = log_softmax(logits);

      // clipped surrogate
      Scalar pg_loss = 0, ent_sum = 0;
      Vector coef(m);
      for (int i = 0; i < m; ++i) {
        Scalar ratio = std::exp(lp(i, act[i]) - lp_old(i));
        Scalar clipped = std::clamp(ratio, 1 - hp.clip_range, 1 + hp.clip_range);
        Scalar l1 = ratio * adv(i), l2 = clipped * adv(i);
        pg_loss += -std::min(l1, l2) / m;
        coef(i) = (l2 < l1) ? Scalar(0) : -adv(i) * ratio / m;
      }

      Matrix dlogits(m, A);
      for (int i = 0; i < m; ++i) {
        ArrayX p = lp.row(i).transpose().array().exp();
        for (int a = 0; a < A; ++a)
          dlogits(i, a) = coef(i) * ((a == act[i] ? Scalar(1) : Scalar(0)) - p(a));
        Scalar H = -(p * lp.row(i).transpose().array()).sum();
        ent_sum += H / m;
        if (hp.entropy_coef != 0) {
          for (int a = 0; a < A; ++a)
            dlogits(i, a) += hp.entropy_coef * p(a) * (lp(i, a) + H) / m;
        }
      }

      Vector vdiff = values - ret;
      Scalar v_loss = vdiff.squaredNorm() / m;
      Matrix dv = (2 * hp.value_coef / m) * vdiff;

      Scalar total = pg_loss + hp.value_coef * v_loss - hp.entropy_coef * ent_sum;
      if (!std::isfinite(total)) {
        ++report.skipped_minibatches;
        continue;
      }

      Gradients g_pi = ac.pi_head.backward(dlogits);
      Gradients g_v = ac.v_head.backward(Eigen::Map<Matrix>(dv.data(), m, 1));
      Matrix dfeat = g_pi.input + g_v.input;
      Gradients g_trunk = ac.trunk.backward(dfeat);

      clip_gradient_norm({&g_trunk, &g_pi, &g_v}, hp.max_grad_norm);
      ac.trunk.adam_step(g_trunk, ac.trunk_opt, hp.learning_rate);
      ac.pi_head.adam_step(g_pi, ac.pi_opt, hp.learning_rate);
      ac.v_head.adam_step(g_v, ac.v_opt, hp.learning_rate);

      report.policy_loss += pg_loss;
      report.value_loss += v_loss;
      report.entropy += ent_sum;
      ++minibatches;
    }
  }
  if (minibatches > 0) {
    report.policy_loss /= minibatches;
    report.value_loss /= minibatches;
    report.entropy /= minibatches;
  }
  return report;
}

}  // namespace relab
