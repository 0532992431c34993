#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

// Data-parallel inner loops. Each parallel kernel has a serial twin with the
// same per-element arithmetic, so outputs match bit for bit regardless of the
// thread count.
namespace core::kernels {

// out[r] = sum_k matrix[r*dim + k] * query[k], accumulated in double in k
// order. matrix.size() must equal out.size() * dim.
void inner_products(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                    std::span<double> out);
void inner_products_serial(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                           std::span<double> out);

// Indices of the k best rows by (score desc, id asc), restricted to
// `candidates` when it is non-null.
std::vector<std::size_t> top_k(std::span<const double> scores, const std::vector<std::string>& ids, std::size_t k,
                               const std::vector<std::size_t>* candidates = nullptr);

// Full ordering of all rows under the same comparator (test/benchmark oracle).
std::vector<std::size_t> full_ranking(std::span<const double> scores, const std::vector<std::string>& ids);

// Number of OpenMP threads parallel kernels will use.
int max_threads();
void set_threads(int n);

}  // namespace core::kernels
