#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <exception>
#include <span>
#include <thread>
#include <vector>

namespace dlab {

/// Runs body(begin, end) over contiguous chunks of [0, n) on up to `jobs` threads.
/// The chunking only affects scheduling; callers write results by index.
template <class Body>
void parallel_chunks(std::size_t n, int jobs, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    if (n > 0) body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([&, w, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Fixed-order pairwise summation; the result depends only on the input order.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// Pairwise sum of the columns of a matrix.
inline Eigen::VectorXd pairwise_sum_cols(const Eigen::MatrixXd& m, Eigen::Index lo, Eigen::Index hi) {
  if (hi - lo <= 8) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(m.rows());
    for (Eigen::Index j = lo; j < hi; ++j) s += m.col(j);
    return s;
  }
  const Eigen::Index mid = lo + (hi - lo) / 2;
  return pairwise_sum_cols(m, lo, mid) + pairwise_sum_cols(m, mid, hi);
}

}  // namespace dlab
