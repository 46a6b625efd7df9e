#include "ewsg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ewsg {

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t chain_id,
                     std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(chain_id),
                    static_cast<std::uint32_t>(chain_id >> 32),
                    static_cast<std::uint32_t>(tag)};
  engine_.seed(seq);
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  // Box-Muller; u1 bounded away from 0 so log is finite.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

void RngStream::fill_normal(Eigen::VectorXd& out) {
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = normal();
}

int RngStream::uniform_index(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_index: n must be positive");
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<int>(x % un);
}

std::vector<int> RngStream::sample_without_replacement(int n, int b) {
  if (b < 1 || b > n)
    throw std::invalid_argument("sample_without_replacement: need 1 <= b <= n");
  // Floyd's algorithm; consumption is exactly b index draws.
  std::vector<int> out;
  out.reserve(b);
  for (int j = n - b; j < n; ++j) {
    int t = uniform_index(j + 1);
    if (std::find(out.begin(), out.end(), t) != out.end()) t = j;
    out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ewsg
