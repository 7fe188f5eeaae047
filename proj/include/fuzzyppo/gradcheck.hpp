#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fuzzyppo/param_store.hpp"

namespace fuzzyppo {

class Rng;

// Error of an analytic gradient block against central differences:
//
//   max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|, floor)
//
// i.e. the worst coordinate error relative to the block's gradient scale.
// For a one-coordinate block this is the usual relative error.
double block_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                            double floor = 1e-8);

// (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate i.
std::vector<double> central_differences(const std::function<double(std::span<const double>)>& f,
                                        std::span<const double> point, double h = 1e-6);

// Compares `analytic` with central differences of f at `point`; the
// whole point is one block.
double finite_diff_check(const std::function<double(std::span<const double>)>& f,
                         std::span<const double> point, std::span<const double> analytic,
                         double h = 1e-6, double floor = 1e-8);

struct StoreGradCheck {
  double max_error = 0.0;
  std::string worst_entry;
  std::size_t coordinates_checked = 0;
};

struct StoreGradCheckOptions {
  double h = 1e-6;
  double floor = 1e-8;
  // Entries larger than this are checked on a random subset of coordinates
  // that always includes the largest analytic component. 0 = check all.
  std::size_t max_coords_per_entry = 0;
};

// Checks every entry of `store` separately (one block per entry).
// `analytic` must leave d loss / d param in the store's grad arrays;
// `loss` is evaluated at perturbed parameter values.
StoreGradCheck check_store_gradients(ParamStore& store, const std::function<double()>& loss,
                                     const std::function<void()>& analytic,
                                     const StoreGradCheckOptions& options, Rng* rng = nullptr);

}  // namespace fuzzyppo
