#include "pep/local_function.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "pep/errors.hpp"

namespace pep {
namespace {

std::size_t table_size(int kappa, int width) {
  if (width < 1 || width > LocalFunction::kMaxWidth) {
    throw BudgetError("LocalFunction: support width must lie in [1, 8]");
  }
  std::size_t size = 1;
  for (int i = 0; i < width; ++i) {
    size *= static_cast<std::size_t>(kappa) + 1;
    if (size > LocalFunction::kMaxTable) throw BudgetError("LocalFunction: (kappa+1)^k exceeds enumeration cap");
  }
  return size;
}

}  // namespace

void decode_window(std::size_t index, int kappa, std::span<int> out) {
  const auto base = static_cast<std::size_t>(kappa) + 1;
  for (auto& v : out) {
    v = static_cast<int>(index % base);
    index /= base;
  }
}

LocalFunction::LocalFunction(int kappa, int width, const Evaluator& eval) : kappa_(kappa), width_(width) {
  table_.resize(table_size(kappa, width));
  std::array<int, kMaxWidth> window{};
  std::span<int> w(window.data(), static_cast<std::size_t>(width));
  for (std::size_t i = 0; i < table_.size(); ++i) {
    decode_window(i, kappa, w);
    table_[i] = eval(w);
  }
}

LocalFunction::LocalFunction(int kappa, int width, std::vector<double> table)
    : kappa_(kappa), width_(width), table_(std::move(table)) {
  if (table_.size() != table_size(kappa, width)) {
    throw std::invalid_argument("LocalFunction: table size does not match (kappa+1)^width");
  }
}

LocalFunction LocalFunction::constant(int kappa, double value) {
  return LocalFunction(kappa, 1, std::vector<double>(static_cast<std::size_t>(kappa) + 1, value));
}

LocalFunction LocalFunction::occupation(int kappa) {
  return LocalFunction(kappa, 1, [](std::span<const int> w) { return static_cast<double>(w[0]); });
}

LocalFunction LocalFunction::site(int kappa, std::span<const double> g) {
  if (g.size() != static_cast<std::size_t>(kappa) + 1) {
    throw std::invalid_argument("LocalFunction::site: table must have length kappa+1");
  }
  return LocalFunction(kappa, 1, std::vector<double>(g.begin(), g.end()));
}

LocalFunction LocalFunction::rate(const RateSpec& spec) {
  return LocalFunction(spec.kappa(), 2, [&spec](std::span<const int> w) { return spec.rate(w[0], w[1]); });
}

LocalFunction LocalFunction::reverse_rate(const RateSpec& spec) {
  return LocalFunction(spec.kappa(), 2, [&spec](std::span<const int> w) { return spec.rate(w[1], w[0]); });
}

double LocalFunction::operator()(std::span<const int> window) const {
  std::size_t index = 0;
  const auto base = static_cast<std::size_t>(kappa_) + 1;
  for (int i = width_ - 1; i >= 0; --i) index = index * base + static_cast<std::size_t>(window[static_cast<std::size_t>(i)]);
  return table_[index];
}

double LocalFunction::at_site(const Configuration& eta, std::size_t x) const {
  std::size_t index = 0;
  const auto base = static_cast<std::size_t>(kappa_) + 1;
  const std::size_t n = eta.size();
  for (int i = width_ - 1; i >= 0; --i) {
    index = index * base + eta[(x + static_cast<std::size_t>(i)) % n];
  }
  return table_[index];
}

LocalFunction LocalFunction::widened(int width) const {
  if (width < width_) throw std::invalid_argument("LocalFunction::widened: cannot shrink support");
  if (width == width_) return *this;
  return LocalFunction(kappa_, width, [this](std::span<const int> w) {
    return (*this)(w.first(static_cast<std::size_t>(width_)));
  });
}

LocalFunction LocalFunction::operator+(const LocalFunction& other) const {
  if (other.kappa_ != kappa_) throw std::invalid_argument("LocalFunction: kappa mismatch");
  const int w = std::max(width_, other.width_);
  LocalFunction a = widened(w);
  const LocalFunction b = other.widened(w);
  for (std::size_t i = 0; i < a.table_.size(); ++i) a.table_[i] += b.table_[i];
  return a;
}

LocalFunction LocalFunction::operator-(const LocalFunction& other) const { return *this + other * -1.0; }

LocalFunction LocalFunction::operator*(double s) const {
  LocalFunction out = *this;
  for (auto& v : out.table_) v *= s;
  return out;
}

LocalFunction LocalFunction::operator+(double s) const {
  LocalFunction out = *this;
  for (auto& v : out.table_) v += s;
  return out;
}

}  // namespace pep
