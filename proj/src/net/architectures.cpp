#include "relab/net/architectures.hpp"

namespace relab {

namespace {

std::vector<LayerSpec> conv_stack(int obs_channels) {
  return {
      LayerSpec::conv2d(obs_channels, 32, 3, 2),
      LayerSpec::relu(),
      LayerSpec::conv2d(32, 64, 3, 2),
      LayerSpec::relu(),
      LayerSpec::flatten(),
  };
}

// flattened width after the two stride-2 convolutions on an 11x11 input
constexpr int kConvFlat = 2 * 2 * 64;

}  // namespace

std::vector<LayerSpec> grid_feature_extractor(int obs_channels) {
  auto specs = conv_stack(obs_channels);
  specs.push_back(LayerSpec::linear(kConvFlat, kLatentDim));
  specs.push_back(LayerSpec::relu());
  return specs;
}

std::vector<LayerSpec> grid_encoder(int obs_channels) {
  return grid_feature_extractor(obs_channels);
}

std::vector<LayerSpec> forward_model(int action_len, int latent) {
  return {
      LayerSpec::concat(action_len),
      LayerSpec::linear(latent + action_len, 128),
      LayerSpec::relu(),
      LayerSpec::linear(128, 128),
      LayerSpec::relu(),
      LayerSpec::linear(128, latent),
  };
}

std::vector<LayerSpec> inverse_model(int action_len, int latent) {
  return {
      LayerSpec::linear(2 * latent, 128),
      LayerSpec::relu(),
      LayerSpec::linear(128, 128),
      LayerSpec::relu(),
      LayerSpec::linear(128, action_len),
  };
}

std::vector<LayerSpec> grid_reward_model(int action_len, int obs_channels) {
  auto specs = conv_stack(obs_channels);
  specs.push_back(LayerSpec::concat(action_len));
  specs.push_back(LayerSpec::linear(kConvFlat + action_len, 128));
  specs.push_back(LayerSpec::relu());
  specs.push_back(LayerSpec::linear(128, 128));
  specs.push_back(LayerSpec::relu());
  specs.push_back(LayerSpec::linear(128, 1));
  return specs;
}

std::vector<LayerSpec> cartpole_encoder(int obs_len, int latent) {
  return {
      LayerSpec::linear(obs_len, 128),
      LayerSpec::relu(),
      LayerSpec::linear(128, 128),
      LayerSpec::relu(),
      LayerSpec::linear(128, latent),
  };
}

std::vector<LayerSpec> cartpole_reward_model(int obs_len, int action_len) {
  return {
      LayerSpec::concat(action_len),
      LayerSpec::linear(obs_len + action_len, 128),
      LayerSpec::relu(),
      LayerSpec::linear(128, 128),
      LayerSpec::relu(),
      LayerSpec::linear(128, 128),
      LayerSpec::relu(),
      LayerSpec::linear(128, 1),
  };
}

std::vector<LayerSpec> mlp_trunk(int obs_len, int hidden) {
  return {
      LayerSpec::linear(obs_len, hidden),
      LayerSpec::relu(),
      LayerSpec::linear(hidden, hidden),
      LayerSpec::relu(),
  };
}

}  // namespace relab
