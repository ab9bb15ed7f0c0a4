#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ompn {

/// Families of monotone ordered-median weight vectors.
enum class LambdaPreset {
  median,    ///< all ones: plain sum of distances
  center,    ///< (1, 0, ..., 0): largest distance only
  kcentrum,  ///< K ones then zeros: sum of the K largest distances
  centdian,  ///< (1, 1-alpha, ..., 1-alpha): blend of center and median
};

/// Optional parameters for the presets that need one.
struct LambdaParams {
  int k = 0;           ///< kcentrum: number of leading ones, 1 <= k <= n
  double alpha = 0.5;  ///< centdian blend: trailing weights are 1 - alpha
  bool operator==(const LambdaParams&) const = default;
};

/// A validated ordered-median weight vector: nonnegative, nonincreasing, and
/// not identically zero.  Weights multiply distances sorted in nonincreasing
/// order, so this class represents exactly the convex members of the family.
class LambdaVector {
 public:
  static LambdaVector make(LambdaPreset preset, std::size_t n,
                           const LambdaParams& params = {});
  /// Validates and adopts explicit weights; throws ValidationError when the
  /// vector is empty, has a negative/NaN entry, increases anywhere, or is all
  /// zero.
  static LambdaVector from_weights(std::vector<double> weights);

  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t k) const { return weights_[k]; }
  bool operator==(const LambdaVector& other) const = default;

  /// Name of the preset this vector was built from, or "custom".
  const std::string& preset_name() const { return preset_name_; }
  const LambdaParams& preset_params() const { return params_; }

 private:
  LambdaVector() = default;
  std::vector<double> weights_;
  std::string preset_name_ = "custom";
  LambdaParams params_{};
};

/// Distances rearranged into nonincreasing order together with the applied
/// permutation: value(k) == input[perm[k]].  Ties are broken by ascending
/// input index so the permutation is always deterministic.
struct SortedValues {
  std::vector<double> values;      ///< nonincreasing
  std::vector<std::size_t> perm;   ///< perm[k] = original index at rank k
};

SortedValues sort_descending(const std::vector<double>& values);

/// Ordered-median value: sum_k lambda_k * (k-th largest input).  Throws
/// ValidationError on dimension mismatch or NaN input.
double evaluate_om(const LambdaVector& lambda, const std::vector<double>& values);

/// Sum of the K largest entries (1 <= K <= n).
double k_largest_sum(const std::vector<double>& values, std::size_t k);

/// Differences delta_k = lambda_k - lambda_{k+1} (with lambda_{n+1} = 0).
/// All entries are nonnegative exactly because the weights are nonincreasing,
/// and sum_k delta_k * (sum of k largest) telescopes back to the OM value.
std::vector<double> telescoping_weights(const LambdaVector& lambda);

/// A subgradient of the (convex) OM function at `values`: component i receives
/// the weight of the rank that input i occupies in the tie-broken sort.
std::vector<double> om_subgradient(const LambdaVector& lambda,
                                   const std::vector<double>& values);

/// Reference evaluation as max over all permutations of sum_k lambda_k *
/// values[sigma(k)].  O(n!) — intended for cross-checks with n <= 9.
double om_by_permutation_search(const LambdaVector& lambda,
                                const std::vector<double>& values);

}  // namespace ompn
