#include "mhgmm/prior.hpp"

#include <cmath>

#include "mhgmm/errors.hpp"

namespace mhgmm {

namespace {

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// ln C_d, C_d = (1 - e^{-(d+1)}) / (1 - e^{-1}).
double log_support_normalizer(int d) {
  return std::log1p(-std::exp(-(d + 1.0))) - std::log1p(-std::exp(-1.0));
}

}  // namespace

double log_prior_clusters(int k, const PriorParams& params) {
  if (k < 1) throw ConfigError("cluster count must be >= 1");
  if (params.intensity <= 0.0) throw ConfigError("prior intensity must be positive");
  return -params.intensity + k * std::log(params.intensity) - std::lgamma(k + 1.0);
}

double log_prior_support(int support_size, const PriorParams& params) {
  if (support_size < 0 || support_size > params.d)
    throw ConfigError("support size outside [0, d]");
  return -log_binomial(params.d, support_size) - support_size - log_support_normalizer(params.d);
}

double log_prior(const Configuration& config, const PriorParams& params) {
  if (config.k > params.k_max)
    throw ConfigError("K = " + std::to_string(config.k) + " exceeds K_max = " + std::to_string(params.k_max));
  if (!config.support.empty() && config.support.back() >= params.d)
    throw ConfigError("support index exceeds d");
  return log_prior_clusters(config.k, params) + log_prior_support(config.support_size(), params);
}

}  // namespace mhgmm
