#include "core/kernels.hpp"

#include <algorithm>
#include <numeric>

#include <omp.h>

#include "core/error.hpp"

namespace core::kernels {

namespace {

void check_shapes(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                  std::span<double> out) {
  if (query.size() != dim) throw ValidationError("query dim mismatch");
  if (matrix.size() != out.size() * dim) throw ValidationError("matrix shape mismatch");
}

inline double dot_row(const float* row, const float* q, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t k = 0; k < dim; ++k) acc += static_cast<double>(row[k]) * static_cast<double>(q[k]);
  return acc;
}

}  // namespace

void inner_products(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                    std::span<double> out) {
  check_shapes(matrix, dim, query, out);
  const auto rows = static_cast<std::ptrdiff_t>(out.size());
  const float* base = matrix.data();
  const float* q = query.data();
#pragma omp parallel for schedule(static) if (rows > 2048)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    out[static_cast<std::size_t>(r)] = dot_row(base + static_cast<std::size_t>(r) * dim, q, dim);
  }
}

void inner_products_serial(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                           std::span<double> out) {
  check_shapes(matrix, dim, query, out);
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = dot_row(matrix.data() + r * dim, query.data(), dim);
}

std::vector<std::size_t> top_k(std::span<const double> scores, const std::vector<std::string>& ids, std::size_t k,
                               const std::vector<std::size_t>* candidates) {
  std::vector<std::size_t> idx;
  if (candidates) {
    idx = *candidates;
  } else {
    idx.resize(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  };
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

std::vector<std::size_t> full_ranking(std::span<const double> scores, const std::vector<std::string>& ids) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  return idx;
}

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
  if (n >= 1) omp_set_num_threads(n);
}

}  // namespace core::kernels
