#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

namespace ewsg {

/// A single pseudo-random substream. Each chain owns two of these (one for
/// integrator noise, one for index proposals/acceptances), derived from
/// (master seed, chain id, stream tag) so that streams are independent and
/// replayable, and adding chains never perturbs earlier chains.
class RngStream {
public:
  enum Tag : std::uint64_t { kNoise = 0x6e6f6973, kIndex = 0x696e6478 };

  RngStream(std::uint64_t master_seed, std::uint64_t chain_id, std::uint64_t tag);

  /// Uniform in [0, 1).
  double uniform();

  /// Standard normal via Box-Muller (two uniforms per draw, no cached state,
  /// so stream consumption is exactly predictable).
  double normal();

  void fill_normal(Eigen::VectorXd& out);

  /// Uniform integer in [0, n), unbiased.
  int uniform_index(int n);

  /// b distinct indices from [0, n), uniformly over b-subsets, returned sorted.
  std::vector<int> sample_without_replacement(int n, int b);

private:
  std::mt19937_64 engine_;
};

}  // namespace ewsg
