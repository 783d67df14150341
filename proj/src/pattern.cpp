#include "spa/pattern.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spa {

SparsityPattern SparsityPattern::from_string(const std::string& bits) {
  SparsityPattern p(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      p.set(i, true);
    } else if (bits[i] != '0') {
      throw std::invalid_argument("pattern string must contain only 0/1");
    }
  }
  return p;
}

SparsityPattern SparsityPattern::from_indices(
    std::size_t length, const std::vector<std::size_t>& ones) {
  SparsityPattern p(length);
  for (std::size_t i : ones) {
    if (i >= length) throw std::invalid_argument("pattern index out of range");
    p.set(i, true);
  }
  return p;
}

void SparsityPattern::set(std::size_t i, bool value) {
  if (i >= length_) throw std::out_of_range("pattern index out of range");
  const std::uint64_t mask = 1ULL << (i & 63);
  std::uint64_t& w = words_[i >> 6];
  const bool old = w & mask;
  if (old == value) return;
  w ^= mask;
  count_ += value ? 1 : -1;
}

void SparsityPattern::flip(std::size_t i) { set(i, !test(i)); }

std::vector<std::size_t> SparsityPattern::active() const {
  std::vector<std::size_t> idx;
  idx.reserve(count_);
  for (std::size_t i = 0; i < length_; ++i) {
    if (test(i)) idx.push_back(i);
  }
  return idx;
}

std::vector<SparsityPattern> SparsityPattern::neighbors() const {
  std::vector<SparsityPattern> out;
  out.reserve(length_);
  for (std::size_t i = 0; i < length_; ++i) {
    SparsityPattern q = *this;
    q.flip(i);
    out.push_back(std::move(q));
  }
  return out;
}

std::string SparsityPattern::to_string() const {
  std::string s(length_, '0');
  for (std::size_t i = 0; i < length_; ++i) {
    if (test(i)) s[i] = '1';
  }
  return s;
}

bool SparsityPattern::subset_of(const SparsityPattern& other) const {
  if (length_ != other.length_) return false;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    if (words_[w] & ~other.words_[w]) return false;
  }
  return true;
}

std::uint64_t SparsityPattern::hash() const {
  // FNV-1a over the words plus the length.
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(length_));
  for (std::uint64_t w : words_) mix(w);
  return h;
}

void GroupStructure::validate() const {
  if (groups.empty()) throw std::invalid_argument("group list is empty");
  if (m == 0) throw std::invalid_argument("group structure needs m >= 1");
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("empty group");
    for (std::size_t j : g) {
      if (j >= m) throw std::invalid_argument("group index out of range");
    }
  }
}

GroupStructure GroupStructure::from_lines(
    const std::vector<std::string>& lines, std::size_t m) {
  GroupStructure g;
  g.m = m;
  for (const auto& line : lines) {
    std::istringstream iss(line);
    std::vector<std::size_t> group;
    long long idx = 0;
    while (iss >> idx) {
      if (idx < 1 || static_cast<std::size_t>(idx) > m) {
        throw std::invalid_argument("group file: column index " +
                                    std::to_string(idx) +
                                    " outside 1.." + std::to_string(m));
      }
      group.push_back(static_cast<std::size_t>(idx - 1));
    }
    if (!iss.eof()) throw std::invalid_argument("group file: bad token");
    if (!group.empty()) {
      std::sort(group.begin(), group.end());
      group.erase(std::unique(group.begin(), group.end()), group.end());
      g.groups.push_back(std::move(group));
    }
  }
  g.validate();
  return g;
}

GroupStructure GroupStructure::load(const std::string& path, std::size_t m) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open group file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return from_lines(lines, m);
}

GroupStructure GroupStructure::contiguous_partition(std::size_t m,
                                                    std::size_t k) {
  if (k == 0 || m % k != 0) {
    throw std::invalid_argument("contiguous partition requires k dividing m");
  }
  GroupStructure g;
  g.m = m;
  const std::size_t t = m / k;
  for (std::size_t b = 0; b < k; ++b) {
    std::vector<std::size_t> group(t);
    for (std::size_t i = 0; i < t; ++i) group[i] = b * t + i;
    g.groups.push_back(std::move(group));
  }
  return g;
}

SparsityPattern expand_group_pattern(const SparsityPattern& index_set,
                                     const GroupStructure& g) {
  if (index_set.size() != g.group_count()) {
    throw std::invalid_argument("index set length must equal group count");
  }
  SparsityPattern p(g.m);
  for (std::size_t k = 0; k < g.group_count(); ++k) {
    if (!index_set.test(k)) continue;
    for (std::size_t j : g.groups[k]) p.set(j, true);
  }
  return p;
}

}  // namespace spa
