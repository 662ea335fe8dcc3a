#pragma once

#include "rosenblatt/chaos_system.hpp"
#include "rosenblatt/random.hpp"
#include "rosenblatt/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rosenblatt {

// ---------------------------------------------------------------------------
// Single-sample primitives.

//! (Z_{t_1} - Z_{t_0}, ..., Z_{t_m} - Z_{t_{m-1}}) with Z_t = xi^T M_t xi - tr M_t and one shared xi.
Eigen::VectorXd sample_increment_vector(const std::vector<SecondChaosMatrix>& matrices, const GaussianState& state);

//! How sample_series accounts for the modes it does not draw explicitly.
enum class TailMode
{
  none,        // retained modes only
  discarded,   // Gaussian stand-in with the variance of the discarded discrete modes
  extrapolated // explicit modes up to tail_start, Gaussian stand-in for the Weyl-extrapolated rest
};

//! Number of explicit modes sample_series draws.
Eigen::Index series_modes(const Spectrum& spectrum, TailMode tail);
//! Required GaussianState dimension: series_modes plus one draw for the remainder.
Eigen::Index series_dimension(const Spectrum& spectrum, TailMode tail);
//! Variance of the Gaussian remainder added by sample_series.
double series_remainder_variance(const Spectrum& spectrum, TailMode tail);

//! sum_j lambda_j (eta_j^2 - 1) over the explicit modes, plus the remainder if requested.
double sample_series(const Spectrum& spectrum, const GaussianState& state, TailMode tail = TailMode::none);

//! Cumulative sum: (y1, y1 + y2, ..., sum y).
Eigen::VectorXd level_from_increments(const Eigen::VectorXd& increments);
//! First differences, the inverse of level_from_increments.
Eigen::VectorXd increments_from_levels(const Eigen::VectorXd& levels);
//! Lower unit-triangular matrix of level_from_increments.
Eigen::MatrixXd level_map_matrix(int m);

// ---------------------------------------------------------------------------
// Batches.

//! Samples are processed in fixed blocks of this many consecutive indices;
//! chunks are unions of whole blocks, so the arithmetic never depends on the layout.
inline constexpr Eigen::Index kSampleBlock = 256;

struct SamplingPlan
{
  std::uint64_t seed = 0;
  std::int64_t n_samples = 0;
  int chunks = 1;
  int threads = 1;
  double time_budget_seconds = 0.0; // 0 means unlimited
};

//! Thrown when a batch stops early; `completed` samples (a prefix) were finished.
struct PartialBatchError : std::runtime_error
{
  PartialBatchError(const std::string& what, std::int64_t done) : std::runtime_error(what), completed(done) {}
  std::int64_t completed;
};

//! Noise and cell loadings for samples [first, first + count).
struct NoiseBlock
{
  Eigen::Index first = 0;
  Eigen::Index count = 0;
  Eigen::MatrixXd eta; // J x kSampleBlock, columns past count are zero padding
  Eigen::MatrixXd Y;   // cells x kSampleBlock, Y = W eta; empty when loadings were not requested
};

//! Sample index i always uses the stream (seed, i) of dimension J.
NoiseBlock noise_block(const ChaosSystem& system,
                       std::uint64_t seed,
                       Eigen::Index first,
                       Eigen::Index count,
                       bool loadings = true);

std::string stream_layout(const SamplingPlan& plan);

//! Calls fn(block) for every block of the plan; chunks are spread over plan.threads.
//! fn must only write output rows [block.first, block.first + block.count).
void for_each_block(const ChaosSystem& system,
                    const SamplingPlan& plan,
                    const std::function<void(const NoiseBlock&)>& fn,
                    bool loadings = true);

//! Increments of one block, count x m.
Eigen::MatrixXd block_increments(const ChaosSystem& system, const NoiseBlock& block);

struct SampleBatch
{
  Eigen::MatrixXd values; // n_samples x m increments
  TimePartition partition;
  std::uint64_t seed = 0;
  std::string stream_layout;
  double H = 0.0;
  std::string grid_descriptor;
  double coverage = 1.0; // min over levels of 2 ||M_t||_F^2 / t^{2H}
  std::vector<std::string> warnings;
};

SampleBatch run_batch(const ChaosSystem& system, const SamplingPlan& plan);

//! n_samples draws of sample_series; sample i uses stream (seed, i).
Eigen::VectorXd run_series_batch(const Spectrum& spectrum, const SamplingPlan& plan, TailMode tail = TailMode::none);

//! CSV with one row per sample plus `<path>.json` sidecar.
void write_sample_batch(const SampleBatch& batch, const std::filesystem::path& csv_path);

} // namespace rosenblatt
