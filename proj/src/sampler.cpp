#include "rosenblatt/sampler.hpp"

#include "rosenblatt/io.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace rosenblatt {

Eigen::VectorXd sample_increment_vector(const std::vector<SecondChaosMatrix>& matrices, const GaussianState& state)
{
  if (matrices.empty())
    return {};
  const Eigen::Index n = matrices.front().dimension();
  for (const auto& M : matrices)
    if (M.dimension() != n || M.grid != matrices.front().grid)
      throw std::invalid_argument("sample_increment_vector: matrices do not share one grid");
  if (state.dimension() != n)
    throw std::invalid_argument("sample_increment_vector: noise dimension does not match the grid");
  Eigen::VectorXd levels(matrices.size());
  for (std::size_t j = 0; j < matrices.size(); ++j)
    levels(j) = state.xi.dot(matrices[j].M * state.xi) - matrices[j].M.trace();
  return increments_from_levels(levels);
}

Eigen::Index series_modes(const Spectrum& spectrum, TailMode tail)
{
  if (tail == TailMode::extrapolated && spectrum.extrapolated())
    return std::min(spectrum.size(), spectrum.tail_start);
  return spectrum.size();
}

Eigen::Index series_dimension(const Spectrum& spectrum, TailMode tail)
{
  return series_modes(spectrum, tail) + (tail == TailMode::none ? 0 : 1);
}

double series_remainder_variance(const Spectrum& spectrum, TailMode tail)
{
  if (tail == TailMode::none)
    return 0.0;
  const double drawn = spectrum.eigenvalues.head(series_modes(spectrum, tail)).squaredNorm();
  const double target =
      tail == TailMode::extrapolated && spectrum.extrapolated() ? spectrum.head_sq + spectrum.tail_sq : spectrum.total_sq;
  return 2.0 * std::max(0.0, target - drawn);
}

double sample_series(const Spectrum& spectrum, const GaussianState& state, TailMode tail)
{
  const Eigen::Index k = series_modes(spectrum, tail);
  if (state.dimension() < series_dimension(spectrum, tail))
    throw std::invalid_argument("sample_series: noise dimension too small for the spectrum");
  double z = 0.0;
  for (Eigen::Index j = 0; j < k; ++j)
    z += spectrum.eigenvalues(j) * (state.xi(j) * state.xi(j) - 1.0);
  if (tail != TailMode::none)
    z += std::sqrt(series_remainder_variance(spectrum, tail)) * state.xi(k);
  return z;
}

Eigen::VectorXd level_from_increments(const Eigen::VectorXd& increments)
{
  Eigen::VectorXd out(increments.size());
  double acc = 0.0;
  for (Eigen::Index j = 0; j < increments.size(); ++j)
    out(j) = acc += increments(j);
  return out;
}

Eigen::VectorXd increments_from_levels(const Eigen::VectorXd& levels)
{
  Eigen::VectorXd out(levels.size());
  for (Eigen::Index j = 0; j < levels.size(); ++j)
    out(j) = levels(j) - (j > 0 ? levels(j - 1) : 0.0);
  return out;
}

Eigen::MatrixXd level_map_matrix(int m)
{
  return Eigen::MatrixXd::Ones(m, m).triangularView<Eigen::Lower>();
}

namespace {

// Runs fn(first, count) over all blocks of n samples; chunk c owns blocks
// [c nb / C, (c + 1) nb / C) and chunks are handed to threads in order.
void schedule_blocks(std::int64_t n, const SamplingPlan& plan, const std::function<void(Eigen::Index, Eigen::Index)>& fn)
{
  if (n < 0)
    throw std::invalid_argument("sampling plan: n_samples must be nonnegative");
  if (plan.chunks < 1 || plan.threads < 1)
    throw std::invalid_argument("sampling plan: chunks and threads must be positive");
  const std::int64_t nb = (n + kSampleBlock - 1) / kSampleBlock;
  const std::int64_t chunks = std::min<std::int64_t>(plan.chunks, std::max<std::int64_t>(nb, 1));
  const auto start = std::chrono::steady_clock::now();
  auto out_of_time = [&] {
    if (plan.time_budget_seconds <= 0.0)
      return false;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > plan.time_budget_seconds;
  };

  std::vector<char> done(static_cast<std::size_t>(nb), 0);
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::int64_t c = next++;
      if (c >= chunks || stop)
        return;
      for (std::int64_t b = c * nb / chunks; b < (c + 1) * nb / chunks; ++b) {
        if (stop || out_of_time()) {
          stop = true;
          return;
        }
        try {
          const Eigen::Index first = b * kSampleBlock;
          fn(first, std::min<Eigen::Index>(kSampleBlock, n - first));
          done[static_cast<std::size_t>(b)] = 1;
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error)
            error = std::current_exception();
          stop = true;
          return;
        }
      }
    }
  };

  const int threads = static_cast<int>(std::min<std::int64_t>(plan.threads, std::max<std::int64_t>(chunks, 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k)
      pool.emplace_back(worker);
    for (auto& th : pool)
      th.join();
  }
  if (error)
    std::rethrow_exception(error);
  if (stop) {
    std::int64_t prefix = 0;
    while (prefix < nb && done[static_cast<std::size_t>(prefix)])
      ++prefix;
    const std::int64_t completed = std::min(n, prefix * kSampleBlock);
    throw PartialBatchError("sampling stopped at the time budget after " + std::to_string(completed) + " samples",
                            completed);
  }
}

} // namespace

NoiseBlock noise_block(const ChaosSystem& system, std::uint64_t seed, Eigen::Index first, Eigen::Index count, bool loadings)
{
  NoiseBlock b;
  b.first = first;
  b.count = count;
  b.eta = Eigen::MatrixXd::Zero(system.dimension(), kSampleBlock);
  for (Eigen::Index i = 0; i < count; ++i) {
    auto col = b.eta.col(i);
    fill_normals(seed, static_cast<std::uint64_t>(first + i), col);
  }
  if (loadings)
    b.Y.noalias() = system.noise_map() * b.eta;
  return b;
}

std::string stream_layout(const SamplingPlan& plan)
{
  return "sample i draws from mt19937_64 seeded with splitmix(seed, i); blocks of " + std::to_string(kSampleBlock) +
         " samples; " + std::to_string(plan.chunks) + " chunk(s) over " + std::to_string(plan.threads) + " thread(s)";
}

void for_each_block(const ChaosSystem& system,
                    const SamplingPlan& plan,
                    const std::function<void(const NoiseBlock&)>& fn,
                    bool loadings)
{
  schedule_blocks(plan.n_samples, plan, [&](Eigen::Index first, Eigen::Index count) {
    fn(noise_block(system, plan.seed, first, count, loadings));
  });
}

Eigen::MatrixXd block_increments(const ChaosSystem& system, const NoiseBlock& block)
{
  const int m = system.partition().m();
  const auto& W = system.noise_map();
  Eigen::MatrixXd out(block.count, m);
  Eigen::Index lo = 0;
  for (int j = 1; j <= m; ++j) {
    const Eigen::Index hi = system.level_cells(j);
    const double trace = W.middleRows(lo, hi - lo).squaredNorm();
    out.col(j - 1) = block.Y.middleRows(lo, hi - lo).leftCols(block.count).colwise().squaredNorm().transpose().array() - trace;
    lo = hi;
  }
  return out;
}

SampleBatch run_batch(const ChaosSystem& system, const SamplingPlan& plan)
{
  SampleBatch batch;
  batch.partition = system.partition();
  batch.seed = plan.seed;
  batch.stream_layout = stream_layout(plan);
  batch.H = system.context().H;
  batch.grid_descriptor = "galerkin cells=" + std::to_string(system.cells()) +
                          " modes=" + std::to_string(system.dimension()) +
                          " cells_per_unit=" + std::to_string(system.options().cells_per_unit) +
                          " horizon=" + format_double(system.partition().horizon());
  for (const auto& M : system.level_matrices()) {
    batch.coverage = std::min(batch.coverage, 1.0 - M.frobenius_deficit);
    batch.warnings.insert(batch.warnings.end(), M.warnings.begin(), M.warnings.end());
  }
  batch.values.resize(plan.n_samples, system.partition().m());
  try {
    for_each_block(system, plan, [&](const NoiseBlock& b) {
      batch.values.middleRows(b.first, b.count) = block_increments(system, b);
    });
  } catch (const PartialBatchError& e) {
    batch.values.conservativeResize(e.completed, Eigen::NoChange);
    throw;
  }
  return batch;
}

Eigen::VectorXd run_series_batch(const Spectrum& spectrum, const SamplingPlan& plan, TailMode tail)
{
  Eigen::VectorXd out(plan.n_samples);
  const Eigen::Index dim = series_dimension(spectrum, tail);
  schedule_blocks(plan.n_samples, plan, [&](Eigen::Index first, Eigen::Index count) {
    GaussianState state;
    state.seed = plan.seed;
    state.xi.resize(dim);
    for (Eigen::Index i = first; i < first + count; ++i) {
      state.index = static_cast<std::uint64_t>(i);
      fill_normals(plan.seed, state.index, state.xi);
      out(i) = sample_series(spectrum, state, tail);
    }
  });
  return out;
}

void write_sample_batch(const SampleBatch& batch, const std::filesystem::path& csv_path)
{
  std::vector<std::string> header;
  for (int j = 1; j <= batch.partition.m(); ++j)
    header.push_back("dz" + std::to_string(j));
  write_csv(csv_path, header, batch.values);
  Json j;
  j["seed"] = batch.seed;
  j["H"] = batch.H;
  j["partition"] = batch.partition.positive_times();
  j["n_samples"] = batch.values.rows();
  j["grid"] = batch.grid_descriptor;
  j["coverage"] = batch.coverage;
  j["stream_layout"] = batch.stream_layout;
  j["warnings"] = batch.warnings;
  auto sidecar = csv_path;
  sidecar += ".json";
  write_json(sidecar, j);
}

} // namespace rosenblatt
