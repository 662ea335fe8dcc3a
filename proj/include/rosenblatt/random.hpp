#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace rosenblatt {

//! splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

//! Seed of stream `index` under master `seed`; a pure function of both.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index)
{
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

//! Discrete white noise for one sample: xi is drawn from stream (seed, index).
struct GaussianState
{
  Eigen::VectorXd xi;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;

  Eigen::Index dimension() const { return xi.size(); }
};

//! Fills `out` with i.i.d. N(0,1) from stream (seed, index).
template <typename Derived>
void fill_normals(std::uint64_t seed, std::uint64_t index, Eigen::DenseBase<Derived>& out)
{
  std::mt19937_64 engine(derive_seed(seed, index));
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out.derived().coeffRef(i) = normal(engine);
}

inline GaussianState gaussian_state(std::uint64_t seed, std::uint64_t index, Eigen::Index dimension)
{
  GaussianState s;
  s.seed = seed;
  s.index = index;
  s.xi.resize(dimension);
  fill_normals(seed, index, s.xi);
  return s;
}

} // namespace rosenblatt
