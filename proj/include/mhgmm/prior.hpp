#pragma once

#include "mhgmm/gmm.hpp"

namespace mhgmm {

struct PriorParams {
  int d = 1;
  int k_max = 10;
  /// Poisson intensity of the cluster-count prior.
  double intensity = 1.0;
};

/// ln pi_clust(K) = -intensity + K ln(intensity) - ln K!  (unnormalized over K >= 1).
double log_prior_clusters(int k, const PriorParams& params);

/// ln pi_supp(S) = -ln C(d, |S|) - |S| - ln C_d, with C_d = sum_{k=0}^{d} e^{-k}.
double log_prior_support(int support_size, const PriorParams& params);

/// ln pi_clust(K) + ln pi_supp(S). Throws ConfigError when K > K_max or S
/// does not fit in d.
double log_prior(const Configuration& config, const PriorParams& params);

}  // namespace mhgmm
