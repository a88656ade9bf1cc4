#include "ahtm/spatial_pooler.hpp"

#include <cmath>
#include <random>
#include <string>

namespace ahtm {

void SpConfig::validate() const {
  if (columns == 0) throw ValidationError("sp.columns must be positive");
  if (k < 1 || k > columns) throw ValidationError("sp.k must satisfy 1 <= k <= sp.columns");
  if (!(alpha > 0.0)) throw ValidationError("sp.alpha must be positive");
  if (connect_threshold < 0.0 || connect_threshold > 1.0) {
    throw ValidationError("sp.connect_threshold must lie in [0,1]");
  }
  if (!(pool_fraction > 0.0) || pool_fraction > 1.0) {
    throw ValidationError("sp.pool_fraction must lie in (0,1]");
  }
}

PermanenceMatrix::PermanenceMatrix(std::uint32_t columns, std::uint32_t input_width, double connect_threshold)
    : columns_(columns),
      input_width_(input_width),
      connect_threshold_(connect_threshold),
      perm_(static_cast<std::size_t>(columns) * input_width, 0.0f),
      pooled_(static_cast<std::size_t>(columns) * input_width, 0),
      pools_(columns) {}

PermanenceMatrix PermanenceMatrix::init(const SpConfig& cfg, std::uint32_t input_width, std::uint64_t seed) {
  cfg.validate();
  PermanenceMatrix m(cfg.columns, input_width, cfg.connect_threshold);
  const auto pool_size = static_cast<std::size_t>(std::lround(cfg.pool_fraction * input_width));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::vector<BitIndex> bits(input_width);
  std::iota(bits.begin(), bits.end(), BitIndex{0});
  for (std::uint32_t j = 0; j < cfg.columns; ++j) {
    // Partial Fisher-Yates: the first pool_size entries become the pool.
    for (std::size_t i = 0; i < pool_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, bits.size() - 1);
      std::swap(bits[i], bits[pick(rng)]);
    }
    std::vector<BitIndex> pool(bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>(pool_size));
    std::sort(pool.begin(), pool.end());
    for (BitIndex b : pool) {
      m.pooled_[m.index(j, b)] = 1;
      m.perm_[m.index(j, b)] = unit(rng);
    }
    m.pools_[j] = std::move(pool);
  }
  return m;
}

void PermanenceMatrix::set_pool(std::uint32_t column, std::vector<BitIndex> bits) {
  for (BitIndex b : pools_.at(column)) {
    pooled_[index(column, b)] = 0;
    perm_[index(column, b)] = 0.0f;
  }
  std::sort(bits.begin(), bits.end());
  bits.erase(std::unique(bits.begin(), bits.end()), bits.end());
  for (BitIndex b : bits) {
    if (b >= input_width_) throw ContractViolation("set_pool: bit out of range");
    pooled_[index(column, b)] = 1;
  }
  pools_[column] = std::move(bits);
}

void PermanenceMatrix::set_permanence(std::uint32_t column, BitIndex bit, float value) {
  if (column >= columns_ || bit >= input_width_ || !in_pool(column, bit)) {
    throw ContractViolation("set_permanence: (" + std::to_string(column) + "," + std::to_string(bit) +
                            ") is not a pooled synapse");
  }
  perm_[index(column, bit)] = std::clamp(value, 0.0f, 1.0f);
}

namespace {

void require_input_width(const PermanenceMatrix& m, const Sdr& e) {
  if (e.width() != m.input_width()) {
    throw ContractViolation("spatial pooler: input width " + std::to_string(e.width()) + " != " +
                            std::to_string(m.input_width()));
  }
}

}  // namespace

std::vector<std::uint32_t> overlap_scores(const PermanenceMatrix& m, const Sdr& e) {
  require_input_width(m, e);
  std::vector<std::uint32_t> scores(m.columns(), 0);
  const auto threshold = static_cast<float>(m.connect_threshold());
  for (BitIndex i : e.active()) {
    const auto perm = m.bit_permanences(i);
    const auto pooled = m.bit_pooled(i);
    for (std::uint32_t j = 0; j < m.columns(); ++j) {
      scores[j] += static_cast<std::uint32_t>(pooled[j] != 0) & static_cast<std::uint32_t>(perm[j] >= threshold);
    }
  }
  return scores;
}

std::vector<double> weighted_overlap_scores(const PermanenceMatrix& m, const Sdr& e) {
  require_input_width(m, e);
  std::vector<double> scores(m.columns(), 0.0);
  for (BitIndex i : e.active()) {
    const auto perm = m.bit_permanences(i);
    const auto pooled = m.bit_pooled(i);
    for (std::uint32_t j = 0; j < m.columns(); ++j) {
      scores[j] += static_cast<double>(perm[j]) * pooled[j];
    }
  }
  return scores;
}

void learn(PermanenceMatrix& m, const Sdr& e, const Sdr& s, double alpha) {
  require_input_width(m, e);
  if (s.width() != m.columns()) throw ContractViolation("sp learn: output width != columns");
  const auto step = static_cast<float>(alpha);
  std::vector<float> delta(m.columns(), -step);
  for (BitIndex j : s.active()) delta[j] = step;
  for (BitIndex i : e.active()) {
    auto perm = m.mutable_bit_permanences(i);
    const auto pooled = m.bit_pooled(i);
    for (std::uint32_t j = 0; j < m.columns(); ++j) {
      // Unpooled entries hold 0 and receive a zero step.
      perm[j] = std::clamp(perm[j] + delta[j] * static_cast<float>(pooled[j]), 0.0f, 1.0f);
    }
  }
}

SpatialPooler::SpatialPooler(SpConfig cfg, std::uint32_t input_width)
    : cfg_(cfg), matrix_(PermanenceMatrix::init(cfg, input_width, cfg.seed)) {}

SpatialPooler::SpatialPooler(SpConfig cfg, PermanenceMatrix matrix) : cfg_(cfg), matrix_(std::move(matrix)) {
  cfg_.validate();
  if (matrix_.columns() != cfg_.columns) throw ValidationError("sp snapshot column count differs from config");
}

Sdr SpatialPooler::pool(const Sdr& e, bool learning) {
  Sdr s = cfg_.overlap_mode == OverlapMode::ConnectedCount ? kwta_select(overlap_scores(matrix_, e), cfg_.k)
                                                            : kwta_select(weighted_overlap_scores(matrix_, e), cfg_.k);
  if (learning) learn(matrix_, e, s, cfg_.alpha);
  return s;
}

}  // namespace ahtm
