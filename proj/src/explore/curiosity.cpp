#include "relab/explore/curiosity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "relab/net/architectures.hpp"

namespace relab {

IntrinsicWeights::IntrinsicWeights(Scalar a, Scalar b, Scalar scale)
    : alpha(a), beta(b), reward_error_scale(scale) {
  if (a < 0 || b < 0 || a > 1 || b > 1)
    throw std::invalid_argument("IntrinsicWeights: alpha and beta must lie in [0,1]");
  if (a + b > 1)
    throw std::invalid_argument("IntrinsicWeights: alpha + beta must not exceed 1");
  if (scale <= 0) throw std::invalid_argument("IntrinsicWeights: scale must be positive");
}

MixedReward mix(const IntrinsicWeights& w, Scalar r_obs, Scalar r_rew, Scalar r_ext) {
  MixedReward out;
  out.r_obs = r_obs;
  out.r_rew = r_rew;
  out.r_ext = r_ext;
  out.combined = w.alpha * r_obs + w.beta * r_rew + w.lambda() * r_ext;
  return out;
}

Scalar reward_intrinsic(Scalar prediction, Scalar r_ext, Scalar scale) {
  Scalar diff = prediction - r_ext;
  return 0.5 * diff * diff * scale;
}

Scalar observation_intrinsic(const Vector& prediction, const Vector& target) {
  if (prediction.size() != target.size())
    throw std::invalid_argument("observation_intrinsic: dimension mismatch");
  return 0.5 * (prediction - target).squaredNorm() / prediction.size();
}

// ---------------------------------------------------------------- Icm

Icm::Icm(std::vector<LayerSpec> encoder_specs, std::vector<int> input_shape, int action_count,
         int latent_dim, Scalar learning_rate, std::uint64_t seed)
    : encoder(std::move(encoder_specs), std::move(input_shape), seed),
      forward_net(forward_model(action_count, latent_dim), {latent_dim}, seed ^ 0x66770001ULL),
      inverse_net(inverse_model(action_count, latent_dim), {2 * latent_dim},
                  seed ^ 0x69760002ULL),
      action_count_(action_count),
      latent_dim_(latent_dim),
      lr_(learning_rate) {
  if (encoder.output_size() != latent_dim)
    throw std::invalid_argument("Icm: encoder output does not match latent_dim");
  enc_opt = encoder.make_adam_state();
  fwd_opt = forward_net.make_adam_state();
  inv_opt = inverse_net.make_adam_state();
}

Matrix Icm::one_hot(const std::vector<int>& actions) const {
  Matrix oh = Matrix::Zero(static_cast<int>(actions.size()), action_count_);
  for (int i = 0; i < static_cast<int>(actions.size()); ++i) oh(i, actions[i]) = 1;
  return oh;
}

Vector Icm::encode(const Vector& obs) {
  return encoder.forward(obs.transpose()).row(0).transpose();
}

Matrix Icm::encode_batch(const Matrix& obs) { return encoder.forward(obs); }

Scalar Icm::intrinsic_from_latents(const Vector& latent_t, int action, const Vector& latent_next) {
  Matrix oh = one_hot({action});
  Vector pred = forward_net.forward(latent_t.transpose(), oh).row(0).transpose();
  return observation_intrinsic(pred, latent_next);
}

Scalar Icm::intrinsic(const Vector& obs_t, int action, const Vector& obs_next) {
  Vector lt = encode(obs_t);
  Vector ln = encode(obs_next);
  return intrinsic_from_latents(lt, action, ln);
}

Scalar Icm::inverse_loss(const Vector& obs_t, const Vector& obs_next, int action) {
  Vector lt = encode(obs_t);
  Vector ln = encode(obs_next);
  Vector x(2 * latent_dim_);
  x << lt, ln;
  Vector logits = inverse_net.forward(x.transpose()).row(0).transpose();
  Scalar mx = logits.maxCoeff();
  Scalar lse = mx + std::log((logits.array() - mx).exp().sum());
  return lse - logits(action);
}

Icm::Losses Icm::update(const Matrix& obs_t, const std::vector<int>& actions,
                        const Matrix& obs_next) {
  const int m = static_cast<int>(obs_t.rows());
  if (obs_next.rows() != m || static_cast<int>(actions.size()) != m)
    throw std::invalid_argument("Icm::update: batch size mismatch");
  Losses losses;

  Matrix stacked(2 * m, obs_t.cols());
  stacked.topRows(m) = obs_t;
  stacked.bottomRows(m) = obs_next;
  const Matrix& latents = encoder.forward(stacked);
  Matrix phi_t = latents.topRows(m);
  Matrix phi_next = latents.bottomRows(m);

  // forward model on detached latents
  Matrix oh = one_hot(actions);
  const Matrix& pred = forward_net.forward(phi_t, oh);
  Matrix fdiff = pred - phi_next;
  losses.forward_loss = 0.5 * fdiff.squaredNorm() / (latent_dim_ * m);
  Matrix dpred = fdiff / (static_cast<Scalar>(latent_dim_) * m);
  Gradients g_fwd = forward_net.backward(dpred);
  forward_net.adam_step(g_fwd, fwd_opt, lr_);

  // inverse model; its gradient flows back into the encoder
  Matrix x(m, 2 * latent_dim_);
  x.leftCols(latent_dim_) = phi_t;
  x.rightCols(latent_dim_) = phi_next;
  const Matrix& logits = inverse_net.forward(x);
  Matrix dlogits(m, action_count_);
  for (int i = 0; i < m; ++i) {
    Scalar mx = logits.row(i).maxCoeff();
    ArrayX sh = logits.row(i).transpose().array() - mx;
    ArrayX p = sh.exp();
    p /= p.sum();
    losses.inverse_loss += -std::log(std::max(p(actions[i]), Scalar(1e-300))) / m;
    for (int a = 0; a < action_count_; ++a)
      dlogits(i, a) = (p(a) - (a == actions[i] ? 1 : 0)) / m;
  }
  Gradients g_inv = inverse_net.backward(dlogits);

  Matrix denc(2 * m, latent_dim_);
  denc.topRows(m) = g_inv.input.leftCols(latent_dim_);
  denc.bottomRows(m) = g_inv.input.rightCols(latent_dim_);
  Gradients g_enc = encoder.backward(denc);

  inverse_net.adam_step(g_inv, inv_opt, lr_);
  encoder.adam_step(g_enc, enc_opt, lr_);
  return losses;
}

// ---------------------------------------------------------------- RewardModel

RewardModel::RewardModel(std::vector<LayerSpec> specs, std::vector<int> input_shape,
                         int action_count, Scalar learning_rate, std::uint64_t seed)
    : net(std::move(specs), std::move(input_shape), seed),
      action_count_(action_count),
      lr_(learning_rate) {
  if (net.output_size() != 1)
    throw std::invalid_argument("RewardModel: network must produce one scalar");
  if (net.aux_size() != action_count)
    throw std::invalid_argument("RewardModel: concat width must match the action count");
  opt = net.make_adam_state();
}

Matrix RewardModel::one_hot(const std::vector<int>& actions) const {
  Matrix oh = Matrix::Zero(static_cast<int>(actions.size()), action_count_);
  for (int i = 0; i < static_cast<int>(actions.size()); ++i) oh(i, actions[i]) = 1;
  return oh;
}

Scalar RewardModel::predict(const Vector& obs, int action) {
  return net.forward(obs.transpose(), one_hot({action}))(0, 0);
}

Vector RewardModel::predict_batch(const Matrix& obs, const std::vector<int>& actions) {
  return net.forward(obs, one_hot(actions)).col(0);
}

Scalar RewardModel::update(const Matrix& obs, const std::vector<int>& actions,
                           const Vector& rewards) {
  const int m = static_cast<int>(obs.rows());
  Vector pred = net.forward(obs, one_hot(actions)).col(0);
  Vector diff = pred - rewards;
  Scalar loss = 0.5 * diff.squaredNorm() / m;
  Matrix dpred = diff / m;
  dpred.resize(m, 1);
  Gradients g = net.backward(dpred);
  net.adam_step(g, opt, lr_);
  return loss;
}

// ---------------------------------------------------------------- Rnd

Rnd::Rnd(std::vector<LayerSpec> specs, std::vector<int> input_shape, Scalar learning_rate,
         std::uint64_t seed)
    : target_net(specs, input_shape, seed ^ 0x726E6400ULL),
      predictor(specs, input_shape, seed),
      lr_(learning_rate) {
  opt = predictor.make_adam_state();
}

Scalar Rnd::intrinsic(const Vector& obs) {
  Vector t = target_net.forward(obs.transpose()).row(0).transpose();
  Vector p = predictor.forward(obs.transpose()).row(0).transpose();
  return 0.5 * (p - t).squaredNorm() / target_net.output_size();
}

Vector Rnd::intrinsic_batch(const Matrix& obs) {
  Matrix t = target_net.forward(obs);
  Matrix p = predictor.forward(obs);
  return 0.5 * (p - t).rowwise().squaredNorm() / target_net.output_size();
}

Scalar Rnd::update(const Matrix& obs) {
  const int m = static_cast<int>(obs.rows());
  const int d = target_net.output_size();
  Matrix t = target_net.forward(obs);
  const Matrix& p = predictor.forward(obs);
  Matrix diff = p - t;
  Scalar loss = 0.5 * diff.squaredNorm() / (static_cast<Scalar>(d) * m);
  Matrix dp = diff / (static_cast<Scalar>(d) * m);
  Gradients g = predictor.backward(dp);
  predictor.adam_step(g, opt, lr_);
  return loss;
}

// ---------------------------------------------------------------- visit counts

int RolloutVisitTable::visit(std::uint64_t key) { return ++counts_[key]; }

int RolloutVisitTable::count(std::uint64_t key) const {
  auto it = counts_.find(key);
  return it == counts_.end() ? 0 : it->second;
}

std::int64_t RolloutVisitTable::total() const {
  std::int64_t n = 0;
  for (const auto& [k, c] : counts_) n += c;
  return n;
}

std::uint64_t RolloutVisitTable::key_of(const Vector& obs, int levels) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (Eigen::Index i = 0; i < obs.size(); ++i) {
    auto q = static_cast<std::int64_t>(std::floor(obs(i) * levels));
    auto u = static_cast<std::uint64_t>(q);
    for (int b = 0; b < 8; ++b) {
      h ^= (u >> (8 * b)) & 0xffULL;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

Scalar rollout_novelty_bonus(RolloutVisitTable& table, NoveltyVariant variant, Scalar novelty_t,
                             Scalar novelty_next, std::uint64_t key_next, Scalar noveld_c) {
  int count = table.visit(key_next);
  if (variant == NoveltyVariant::Ride) return novelty_next / std::sqrt(static_cast<Scalar>(count));
  if (count > 1) return 0;
  return std::max(novelty_next - noveld_c * novelty_t, Scalar(0));
}

// ---------------------------------------------------------------- stack

ExploreVariant parse_explore_variant(const std::string& name) {
  if (name == "none") return ExploreVariant::None;
  if (name == "icm") return ExploreVariant::Icm;
  if (name == "rnd") return ExploreVariant::Rnd;
  if (name == "ride") return ExploreVariant::Ride;
  if (name == "noveld") return ExploreVariant::Noveld;
  throw std::invalid_argument("unknown exploration variant: " + name);
}

std::string explore_variant_name(ExploreVariant v) {
  switch (v) {
    case ExploreVariant::None: return "none";
    case ExploreVariant::Icm: return "icm";
    case ExploreVariant::Rnd: return "rnd";
    case ExploreVariant::Ride: return "ride";
    case ExploreVariant::Noveld: return "noveld";
  }
  return "none";
}

ExplorationStack::ExplorationStack(const ExplorationConfig& config, std::vector<int> obs_shape,
                                   int action_count, std::uint64_t seed)
    : config_(config), action_count_(action_count) {
  const bool spatial = obs_shape.size() == 3;
  const int flat = spatial ? obs_shape[0] * obs_shape[1] * obs_shape[2] : obs_shape[0];
  const Scalar lr = config.model_learning_rate;
  const auto v = config.variant;

  auto encoder_specs = spatial ? grid_encoder(obs_shape[2]) : cartpole_encoder(flat);
  if (v == ExploreVariant::Icm || v == ExploreVariant::Ride)
    icm.emplace(encoder_specs, obs_shape, action_count, kLatentDim, lr, seed ^ 0x69636D00ULL);
  if (v == ExploreVariant::Rnd || v == ExploreVariant::Noveld)
    rnd.emplace(encoder_specs, obs_shape, lr, seed ^ 0x726E6401ULL);

  if (v == ExploreVariant::Icm || config.weights.beta > 0) {
    auto rm_specs = spatial ? grid_reward_model(action_count, obs_shape[2])
                            : cartpole_reward_model(flat, action_count);
    reward_model.emplace(rm_specs, obs_shape, action_count, lr, seed ^ 0x72657700ULL);
  }
  if (v == ExploreVariant::None && (config.weights.alpha != 0 || config.weights.beta != 0))
    throw std::invalid_argument("exploration: nonzero mixing weights require a variant");
}

void ExplorationStack::begin_rollout(const Vector& obs0) {
  visit_table.clear();
  if (icm) prev_latent_ = icm->encode(obs0);
  if (rnd) prev_rnd_err_ = rnd->intrinsic(obs0);
  if (config_.variant == ExploreVariant::Ride || config_.variant == ExploreVariant::Noveld)
    visit_table.visit(RolloutVisitTable::key_of(obs0));
  primed_ = true;
}

StepIntrinsics ExplorationStack::on_step(const Vector& obs_t, int action, const Vector& obs_next,
                                         Scalar r_ext) {
  StepIntrinsics out;
  if (!active()) {
    out.mixed = mix(config_.weights, 0, 0, r_ext);
    return out;
  }
  if (!primed_) begin_rollout(obs_t);

  switch (config_.variant) {
    case ExploreVariant::Icm: {
      Vector latent_next = icm->encode(obs_next);
      out.fwd_err = icm->intrinsic_from_latents(prev_latent_, action, latent_next);
      out.r_obs = out.fwd_err;
      prev_latent_ = latent_next;
      break;
    }
    case ExploreVariant::Ride: {
      Vector latent_next = icm->encode(obs_next);
      out.fwd_err = icm->intrinsic_from_latents(prev_latent_, action, latent_next);
      Scalar dist = (latent_next - prev_latent_).norm();
      out.r_obs = rollout_novelty_bonus(visit_table, NoveltyVariant::Ride, 0, dist,
                                        RolloutVisitTable::key_of(obs_next));
      prev_latent_ = latent_next;
      break;
    }
    case ExploreVariant::Rnd: {
      out.fwd_err = rnd->intrinsic(obs_next);
      out.r_obs = out.fwd_err;
      prev_rnd_err_ = out.fwd_err;
      break;
    }
    case ExploreVariant::Noveld: {
      Scalar err_next = rnd->intrinsic(obs_next);
      out.fwd_err = err_next;
      out.r_obs = rollout_novelty_bonus(visit_table, NoveltyVariant::Noveld, prev_rnd_err_,
                                        err_next, RolloutVisitTable::key_of(obs_next));
      prev_rnd_err_ = err_next;
      break;
    }
    case ExploreVariant::None:
      break;
  }

  if (reward_model) {
    Scalar pred = reward_model->predict(obs_t, action);
    out.rm_err = reward_intrinsic(pred, r_ext, 1.0);
    out.r_rew = out.rm_err * config_.weights.reward_error_scale;
  }
  out.mixed = mix(config_.weights, out.r_obs, out.r_rew, r_ext);
  return out;
}

ExplorationLosses ExplorationStack::update(const Matrix& obs_t, const std::vector<int>& actions,
                                           const Matrix& obs_next, const Vector& ext_rewards,
                                           int minibatch_size, std::mt19937_64& rng) {
  ExplorationLosses out;
  if (!active()) return out;
  const int n = static_cast<int>(obs_t.rows());
  if (minibatch_size <= 0 || minibatch_size > n) minibatch_size = n;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  int batches = 0;
  for (int start = 0; start < n; start += minibatch_size) {
    const int m = std::min(minibatch_size, n - start);
    Matrix o_t(m, obs_t.cols()), o_n(m, obs_t.cols());
    Vector r(m);
    std::vector<int> act(m);
    for (int i = 0; i < m; ++i) {
      int idx = order[start + i];
      o_t.row(i) = obs_t.row(idx);
      o_n.row(i) = obs_next.row(idx);
      r(i) = ext_rewards(idx);
      act[i] = actions[idx];
    }
    if (icm) {
      Icm::Losses l = icm->update(o_t, act, o_n);
      out.forward_loss += l.forward_loss;
      out.inverse_loss += l.inverse_loss;
    }
    if (rnd) out.rnd_loss += rnd->update(o_n);
    if (reward_model) out.reward_loss += reward_model->update(o_t, act, r);
    ++batches;
  }
  if (batches > 0) {
    out.forward_loss /= batches;
    out.inverse_loss /= batches;
    out.rnd_loss /= batches;
    out.reward_loss /= batches;
    out.any = true;
  }
  return out;
}

Vector ExplorationStack::mixed_batch_rewards(const ReplayBuffer& buffer,
                                             const std::vector<int>& indices) {
  const int m = static_cast<int>(indices.size());
  Vector combined(m);
  if (!active()) {
    for (int i = 0; i < m; ++i) combined(i) = buffer.at(indices[i]).reward;
    return combined;
  }
  if (config_.variant == ExploreVariant::Ride || config_.variant == ExploreVariant::Noveld)
    throw std::logic_error("exploration: rollout-scoped bonuses require on-policy training");

  const int obs_size = static_cast<int>(buffer.at(indices[0]).obs->size());
  Matrix o_t(m, obs_size), o_n(m, obs_size);
  Vector r_ext(m);
  std::vector<int> act(m);
  for (int i = 0; i < m; ++i) {
    const Transition& tr = buffer.at(indices[i]);
    o_t.row(i) = tr.obs->transpose();
    o_n.row(i) = tr.next_obs->transpose();
    r_ext(i) = tr.reward;
    act[i] = tr.action;
  }

  Vector r_obs = Vector::Zero(m);
  if (config_.variant == ExploreVariant::Icm) {
    Matrix stacked(2 * m, obs_size);
    stacked.topRows(m) = o_t;
    stacked.bottomRows(m) = o_n;
    Matrix latents = icm->encode_batch(stacked);
    Matrix oh = Matrix::Zero(m, action_count_);
    for (int i = 0; i < m; ++i) oh(i, act[i]) = 1;
    Matrix pred = icm->forward_net.forward(latents.topRows(m), oh);
    r_obs = 0.5 * (pred - latents.bottomRows(m)).rowwise().squaredNorm() / icm->latent_dim();
  } else if (config_.variant == ExploreVariant::Rnd) {
    r_obs = rnd->intrinsic_batch(o_n);
  }

  Vector r_rew = Vector::Zero(m);
  if (reward_model) {
    Vector pred = reward_model->predict_batch(o_t, act);
    r_rew = 0.5 * (pred - r_ext).array().square() * config_.weights.reward_error_scale;
  }

  for (int i = 0; i < m; ++i)
    combined(i) = mix(config_.weights, r_obs(i), r_rew(i), r_ext(i)).combined;
  return combined;
}

}  // namespace relab
