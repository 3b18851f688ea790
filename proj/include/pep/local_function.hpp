#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pep/rate_spec.hpp"

namespace pep {

/// A function f(eta_0, ..., eta_{k-1}) of k consecutive occupation variables,
/// stored as a dense table over {0..kappa}^k (index = sum_i eta_i (kappa+1)^i).
class LocalFunction {
 public:
  static constexpr int kMaxWidth = 8;
  static constexpr std::size_t kMaxTable = std::size_t{1} << 22;

  using Evaluator = std::function<double(std::span<const int>)>;

  LocalFunction(int kappa, int width, const Evaluator& eval);
  LocalFunction(int kappa, int width, std::vector<double> table);

  static LocalFunction constant(int kappa, double value);
  /// eta_0.
  static LocalFunction occupation(int kappa);
  /// g(eta_0) for a table g on {0..kappa}.
  static LocalFunction site(int kappa, std::span<const double> g);
  /// r(eta_0, eta_1).
  static LocalFunction rate(const RateSpec& spec);
  /// r(eta_1, eta_0).
  static LocalFunction reverse_rate(const RateSpec& spec);

  int kappa() const noexcept { return kappa_; }
  int width() const noexcept { return width_; }
  std::span<const double> table() const noexcept { return table_; }

  double at(std::size_t index) const { return table_[index]; }
  double operator()(std::span<const int> window) const;
  /// tau_x f on a periodic configuration.
  double at_site(const Configuration& eta, std::size_t x) const;

  /// Same function seen on a wider support (extra sites ignored).
  LocalFunction widened(int width) const;

  LocalFunction operator+(const LocalFunction& other) const;
  LocalFunction operator-(const LocalFunction& other) const;
  LocalFunction operator*(double s) const;
  LocalFunction operator+(double s) const;

 private:
  int kappa_;
  int width_;
  std::vector<double> table_;
};

/// Decodes a table index into k occupancies.
void decode_window(std::size_t index, int kappa, std::span<int> out);

}  // namespace pep
