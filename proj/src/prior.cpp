#include "spa/prior.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace spa {

double log_hl(std::size_t l) {
  // H_L = (1 - e^{-(L+1)}) / (1 - e^{-1}), bounded by e/(e-1).
  const double num = -std::expm1(-static_cast<double>(l + 1));
  const double den = -std::expm1(-1.0);
  return std::log(num) - std::log(den);
}

double log_binomial(std::size_t l, std::size_t k) {
  if (k > l) throw std::invalid_argument("log_binomial: k > l");
  return std::lgamma(static_cast<double>(l) + 1.0) -
         std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(l - k) + 1.0);
}

namespace {

double log_mass_by_count(std::size_t count, std::size_t l) {
  return -(log_binomial(l, count) + static_cast<double>(count) + log_hl(l));
}

std::vector<double> build_count_table(std::size_t l) {
  std::vector<double> t(l + 1);
  for (std::size_t k = 0; k <= l; ++k) t[k] = log_mass_by_count(k, l);
  return t;
}

}  // namespace

double log_prior_coordinatewise(const SparsityPattern& p, std::size_t m) {
  if (p.size() != m) {
    throw std::invalid_argument("log_prior_coordinatewise: length mismatch");
  }
  return log_mass_by_count(p.count(), m);
}

double log_prior_group(const SparsityPattern& j, std::size_t k) {
  if (j.size() != k) {
    throw std::invalid_argument("log_prior_group: length mismatch");
  }
  return log_mass_by_count(j.count(), k);
}

PriorSpec PriorSpec::coordinatewise(std::size_t m) {
  if (m == 0) throw std::invalid_argument("prior needs m >= 1");
  PriorSpec spec(Kind::coordinatewise, m);
  spec.log_by_count_ = build_count_table(m);
  return spec;
}

PriorSpec PriorSpec::group(GroupStructure g) {
  g.validate();
  PriorSpec spec(Kind::group, g.group_count());
  spec.log_by_count_ = build_count_table(g.group_count());
  spec.groups_ = std::move(g);
  return spec;
}

PriorSpec PriorSpec::custom(
    std::size_t dim, std::unordered_map<std::string, double> log_table) {
  if (dim == 0) throw std::invalid_argument("prior needs dim >= 1");
  if (log_table.empty()) {
    throw std::invalid_argument("custom prior table is empty");
  }
  bool any_finite = false;
  for (const auto& [bits, lm] : log_table) {
    if (bits.size() != dim) {
      throw std::invalid_argument("custom prior key length mismatch");
    }
    if (std::isnan(lm) || lm == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("custom prior log mass must be finite or -inf");
    }
    if (lm > -std::numeric_limits<double>::infinity()) any_finite = true;
  }
  if (!any_finite) {
    throw std::invalid_argument("custom prior has no support");
  }
  PriorSpec spec(Kind::custom, dim);
  spec.table_ = std::move(log_table);
  return spec;
}

double PriorSpec::log_mass(const SparsityPattern& p) const {
  if (p.size() != dim_) {
    throw std::invalid_argument("prior log_mass: pattern length mismatch");
  }
  if (kind_ == Kind::custom) {
    auto it = table_.find(p.to_string());
    if (it == table_.end()) {
      return -std::numeric_limits<double>::infinity();
    }
    return it->second;
  }
  return log_by_count_[p.count()];
}

}  // namespace spa
