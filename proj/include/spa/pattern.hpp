#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace spa {

// A sparsity pattern: a binary vector over {0,1}^L marking active positions.
// Used both over dictionary columns (L = M) and over group index sets
// (L = K). Popcount is kept up to date on every mutation.
class SparsityPattern {
 public:
  SparsityPattern() = default;
  explicit SparsityPattern(std::size_t length)
      : length_(length), words_((length + 63) / 64, 0) {}

  static SparsityPattern zeros(std::size_t length) {
    return SparsityPattern(length);
  }
  // Parses a string of '0'/'1' characters, position 0 first.
  static SparsityPattern from_string(const std::string& bits);
  static SparsityPattern from_indices(std::size_t length,
                                      const std::vector<std::size_t>& ones);

  std::size_t size() const { return length_; }
  std::size_t count() const { return count_; }  // |p|, number of ones
  bool empty_pattern() const { return count_ == 0; }

  bool test(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1ULL;
  }
  void set(std::size_t i, bool value);
  void flip(std::size_t i);

  // Indices of the active positions, ascending.
  std::vector<std::size_t> active() const;

  // The L patterns at Hamming distance one, in flip-index order.
  std::vector<SparsityPattern> neighbors() const;

  std::string to_string() const;

  bool operator==(const SparsityPattern& other) const {
    return length_ == other.length_ && words_ == other.words_;
  }
  bool operator!=(const SparsityPattern& other) const {
    return !(*this == other);
  }

  // p <= q coordinatewise (p's support contained in q's).
  bool subset_of(const SparsityPattern& other) const;

  std::uint64_t hash() const;

 private:
  std::size_t length_ = 0;
  std::size_t count_ = 0;
  std::vector<std::uint64_t> words_;
};

struct PatternHash {
  std::size_t operator()(const SparsityPattern& p) const {
    return static_cast<std::size_t>(p.hash());
  }
};

// A collection of K index groups B_1..B_K over columns {1..M} (stored
// 0-based). Groups may overlap and need not cover all columns.
struct GroupStructure {
  std::size_t m = 0;  // number of columns the groups refer to
  std::vector<std::vector<std::size_t>> groups;

  std::size_t group_count() const { return groups.size(); }

  // Validates sizes and index ranges; throws std::invalid_argument.
  void validate() const;

  // Reads one group per line, whitespace-separated 1-based column indices.
  static GroupStructure load(const std::string& path, std::size_t m);
  static GroupStructure from_lines(const std::vector<std::string>& lines,
                                   std::size_t m);

  // Partition of {1..M} into K contiguous groups of equal size.
  static GroupStructure contiguous_partition(std::size_t m, std::size_t k);
};

// Expands an index set J over {0,1}^K to the column pattern of the union
// of the selected groups.
SparsityPattern expand_group_pattern(const SparsityPattern& index_set,
                                     const GroupStructure& g);

}  // namespace spa
