#pragma once

#include <vector>

#include "relab/net/network.hpp"

namespace relab {

// Layer stacks used throughout the gridworld and cart-pole experiments.
// Image observations are 11x11x3; latent width is 128 everywhere.

constexpr int kGridObsSide = 11;
constexpr int kGridObsChannels = 3;
constexpr int kLatentDim = 128;

/// conv(3x3,s2) -> relu -> conv(3x3,s2) -> relu -> flatten -> linear(128) -> relu
std::vector<LayerSpec> grid_feature_extractor(int obs_channels = kGridObsChannels);

/// Same stack as the policy extractor, used as the shared curiosity encoder.
std::vector<LayerSpec> grid_encoder(int obs_channels = kGridObsChannels);

/// concat(one-hot action) -> 3 linear/relu blocks -> latent prediction
std::vector<LayerSpec> forward_model(int action_len, int latent = kLatentDim);

/// linear(2*latent -> .. -> action logits)
std::vector<LayerSpec> inverse_model(int action_len, int latent = kLatentDim);

/// conv stack -> flatten -> concat(action) -> linear x3 -> scalar
std::vector<LayerSpec> grid_reward_model(int action_len, int obs_channels = kGridObsChannels);

/// linear(obs -> 128) x3 with relu, flat-vector observations
std::vector<LayerSpec> cartpole_encoder(int obs_len, int latent = kLatentDim);

/// concat(action) -> linear 128 x3 -> scalar
std::vector<LayerSpec> cartpole_reward_model(int obs_len, int action_len);

/// relu MLP trunk for cart-pole policies/Q-networks
std::vector<LayerSpec> mlp_trunk(int obs_len, int hidden = 64);

}  // namespace relab
