#include "oapf/rng.hpp"

#include <vector>

namespace oapf {

namespace {

std::mt19937_64 seeded_engine(std::initializer_list<std::uint64_t> words) {
  std::vector<std::uint32_t> seeds;
  seeds.reserve(2 * words.size());
  for (std::uint64_t w : words) {
    seeds.push_back(static_cast<std::uint32_t>(w & 0xffffffffu));
    seeds.push_back(static_cast<std::uint32_t>(w >> 32));
  }
  std::seed_seq seq(seeds.begin(), seeds.end());
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : engine_(seeded_engine({seed})) {}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t run_index, std::uint64_t tag)
    : engine_(seeded_engine({master_seed, run_index, tag})) {}

double RngStream::uniform() { return uniform_(engine_); }

double RngStream::normal() { return normal_(engine_); }

Eigen::VectorXd RngStream::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal_(engine_);
  return v;
}

}  // namespace oapf
