#include "ompn/om.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ompn/errors.hpp"

namespace ompn {

namespace {

void check_no_nan(const std::vector<double>& values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) {
      throw ValidationError(std::string(what) + "[" + std::to_string(i) +
                            "] is NaN");
    }
  }
}

}  // namespace

LambdaVector LambdaVector::make(LambdaPreset preset, std::size_t n,
                                const LambdaParams& params) {
  if (n == 0) throw ValidationError("lambda: length must be positive");
  LambdaVector out;
  out.params_ = params;
  out.weights_.assign(n, 0.0);
  switch (preset) {
    case LambdaPreset::median:
      out.preset_name_ = "median";
      std::fill(out.weights_.begin(), out.weights_.end(), 1.0);
      break;
    case LambdaPreset::center:
      out.preset_name_ = "center";
      out.weights_[0] = 1.0;
      break;
    case LambdaPreset::kcentrum: {
      out.preset_name_ = "kcentrum";
      if (params.k < 1 || static_cast<std::size_t>(params.k) > n) {
        throw ValidationError("lambda: kcentrum K must be in [1, n], got " +
                              std::to_string(params.k));
      }
      std::fill(out.weights_.begin(), out.weights_.begin() + params.k, 1.0);
      break;
    }
    case LambdaPreset::centdian: {
      out.preset_name_ = "centdian";
      if (!(params.alpha >= 0.0 && params.alpha <= 1.0)) {
        throw ValidationError("lambda: centdian alpha must be in [0, 1], got " +
                              std::to_string(params.alpha));
      }
      std::fill(out.weights_.begin(), out.weights_.end(), 1.0 - params.alpha);
      out.weights_[0] = 1.0;
      break;
    }
  }
  return out;
}

LambdaVector LambdaVector::from_weights(std::vector<double> weights) {
  if (weights.empty()) throw ValidationError("lambda: length must be positive");
  check_no_nan(weights, "lambda");
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] < 0.0) {
      throw ValidationError("lambda[" + std::to_string(k) +
                            "] is negative; weights must be nonnegative");
    }
    if (k > 0 && weights[k] > weights[k - 1]) {
      throw ValidationError("lambda[" + std::to_string(k) +
                            "] exceeds lambda[" + std::to_string(k - 1) +
                            "]; weights must be nonincreasing");
    }
    total += weights[k];
  }
  if (total == 0.0) throw ValidationError("lambda: weights must not all be zero");
  LambdaVector out;
  out.weights_ = std::move(weights);
  return out;
}

SortedValues sort_descending(const std::vector<double>& values) {
  check_no_nan(values, "values");
  SortedValues out;
  out.perm.resize(values.size());
  std::iota(out.perm.begin(), out.perm.end(), std::size_t{0});
  std::sort(out.perm.begin(), out.perm.end(),
            [&](std::size_t a, std::size_t b) {
              if (values[a] != values[b]) return values[a] > values[b];
              return a < b;
            });
  out.values.resize(values.size());
  for (std::size_t k = 0; k < values.size(); ++k)
    out.values[k] = values[out.perm[k]];
  return out;
}

double evaluate_om(const LambdaVector& lambda, const std::vector<double>& values) {
  if (lambda.size() != values.size()) {
    throw ValidationError("evaluate_om: lambda has length " +
                          std::to_string(lambda.size()) + " but got " +
                          std::to_string(values.size()) + " values");
  }
  const SortedValues sorted = sort_descending(values);
  double total = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k)
    total += lambda[k] * sorted.values[k];
  return total;
}

double k_largest_sum(const std::vector<double>& values, std::size_t k) {
  if (k < 1 || k > values.size()) {
    throw ValidationError("k_largest_sum: K must be in [1, n], got " +
                          std::to_string(k));
  }
  const SortedValues sorted = sort_descending(values);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += sorted.values[i];
  return total;
}

std::vector<double> telescoping_weights(const LambdaVector& lambda) {
  const std::size_t n = lambda.size();
  std::vector<double> delta(n);
  for (std::size_t k = 0; k + 1 < n; ++k) delta[k] = lambda[k] - lambda[k + 1];
  delta[n - 1] = lambda[n - 1];
  return delta;
}

std::vector<double> om_subgradient(const LambdaVector& lambda,
                                   const std::vector<double>& values) {
  if (lambda.size() != values.size()) {
    throw ValidationError("om_subgradient: lambda has length " +
                          std::to_string(lambda.size()) + " but got " +
                          std::to_string(values.size()) + " values");
  }
  const SortedValues sorted = sort_descending(values);
  std::vector<double> grad(values.size());
  for (std::size_t k = 0; k < values.size(); ++k)
    grad[sorted.perm[k]] = lambda[k];
  return grad;
}

double om_by_permutation_search(const LambdaVector& lambda,
                                const std::vector<double>& values) {
  if (lambda.size() != values.size()) {
    throw ValidationError("om_by_permutation_search: dimension mismatch");
  }
  check_no_nan(values, "values");
  std::vector<std::size_t> sigma(values.size());
  std::iota(sigma.begin(), sigma.end(), std::size_t{0});
  double best = -std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k)
      total += lambda[k] * values[sigma[k]];
    best = std::max(best, total);
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return best;
}

}  // namespace ompn
