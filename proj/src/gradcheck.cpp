#include "fuzzyppo/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fuzzyppo/error.hpp"
#include "fuzzyppo/rng.hpp"

namespace fuzzyppo {

double block_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                            double floor) {
  require(analytic.size() == numeric.size(), "block_relative_error: size mismatch");
  double worst_diff = 0.0;
  double scale = floor;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    worst_diff = std::max(worst_diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return worst_diff / scale;
}

std::vector<double> central_differences(const std::function<double(std::span<const double>)>& f,
                                        std::span<const double> point, double h) {
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double plus = f(x);
    x[i] = saved - h;
    const double minus = f(x);
    x[i] = saved;
    out[i] = (plus - minus) / (2.0 * h);
  }
  return out;
}

double finite_diff_check(const std::function<double(std::span<const double>)>& f,
                         std::span<const double> point, std::span<const double> analytic,
                         double h, double floor) {
  return block_relative_error(analytic, central_differences(f, point, h), floor);
}

StoreGradCheck check_store_gradients(ParamStore& store, const std::function<double()>& loss,
                                     const std::function<void()>& analytic,
                                     const StoreGradCheckOptions& options, Rng* rng) {
  store.zero_grads();
  analytic();

  StoreGradCheck result;
  for (auto& entry : store.entries()) {
    const std::size_t n = entry.size();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_entry > 0 && n > options.max_coords_per_entry) {
      require(rng != nullptr, "check_store_gradients: subsampling needs an rng");
      const auto largest = static_cast<std::size_t>(
          std::max_element(entry.grad.begin(), entry.grad.end(),
                           [](double a, double b) { return std::abs(a) < std::abs(b); }) -
          entry.grad.begin());
      std::swap(coords[0], coords[largest]);
      rng->shuffle(std::span<std::size_t>(coords).subspan(1));
      coords.resize(options.max_coords_per_entry);
    }

    std::vector<double> analytic_part, numeric_part;
    for (std::size_t i : coords) {
      const double saved = entry.value[i];
      entry.value[i] = saved + options.h;
      const double plus = loss();
      entry.value[i] = saved - options.h;
      const double minus = loss();
      entry.value[i] = saved;
      analytic_part.push_back(entry.grad[i]);
      numeric_part.push_back((plus - minus) / (2.0 * options.h));
    }
    const double err = block_relative_error(analytic_part, numeric_part, options.floor);
    if (result.worst_entry.empty() || err > result.max_error) {
      result.max_error = err;
      result.worst_entry = entry.name;
    }
    result.coordinates_checked += coords.size();
  }
  return result;
}

}  // namespace fuzzyppo
