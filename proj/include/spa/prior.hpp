#pragma once

// Priors over sparsity patterns as log-mass functions.  The two built-in
// families put mass [C(L,k) e^k H_L]^{-1} on every pattern with k active
// bits, where H_L = sum_{j=0}^{L} e^{-j}; they are exactly normalized over
// {0,1}^L.  Custom priors are plain log-mass tables and may be unnormalized
// since downstream weighting only uses mass ratios.

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>

#include "spa/pattern.hpp"

namespace spa {

// log H_L for the geometric normalizer above.
double log_hl(std::size_t l);

// log C(l, k) via lgamma.
double log_binomial(std::size_t l, std::size_t k);

// Log mass of a coordinatewise-sparsity prior pattern over {0,1}^m.
double log_prior_coordinatewise(const SparsityPattern& p, std::size_t m);

// Log mass of a group index set over {0,1}^k (same arithmetic on K).
double log_prior_group(const SparsityPattern& j, std::size_t k);

class PriorSpec {
 public:
  enum class Kind { coordinatewise, group, custom };

  static PriorSpec coordinatewise(std::size_t m);
  static PriorSpec group(GroupStructure g);
  // Table keyed by pattern bitstrings; masses may be unnormalized.
  // Patterns missing from the table get log mass -infinity.
  static PriorSpec custom(std::size_t dim,
                          std::unordered_map<std::string, double> log_table);

  Kind kind() const { return kind_; }
  // Length of the chain patterns: M for coordinatewise/custom, K for group.
  std::size_t dim() const { return dim_; }
  double log_mass(const SparsityPattern& p) const;
  // Non-null only for group priors.
  const GroupStructure* group_structure() const {
    return groups_ ? &*groups_ : nullptr;
  }

 private:
  PriorSpec(Kind kind, std::size_t dim) : kind_(kind), dim_(dim) {}

  Kind kind_;
  std::size_t dim_;
  std::vector<double> log_by_count_;
  std::optional<GroupStructure> groups_;
  std::unordered_map<std::string, double> table_;
};

}  // namespace spa
