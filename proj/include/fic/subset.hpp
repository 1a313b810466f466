#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "fic/common.hpp"

namespace fic {

// Index set S of uncertain covariates, 1-based, kept sorted and duplicate-free
// so two equal sets always compare equal.
class SubsetId {
 public:
  SubsetId() = default;
  explicit SubsetId(std::vector<int> indices) : idx_(std::move(indices)) {
    std::sort(idx_.begin(), idx_.end());
    idx_.erase(std::unique(idx_.begin(), idx_.end()), idx_.end());
    for (int j : idx_)
      if (j < 1) throw validation_error("subset indices are 1-based; got " + std::to_string(j));
  }

  static SubsetId empty() { return SubsetId(); }
  static SubsetId full(int q) {
    std::vector<int> all(static_cast<std::size_t>(q));
    for (int j = 0; j < q; ++j) all[static_cast<std::size_t>(j)] = j + 1;
    return SubsetId(std::move(all));
  }

  int size() const { return static_cast<int>(idx_.size()); }
  bool is_empty() const { return idx_.empty(); }
  bool contains(int j) const { return std::binary_search(idx_.begin(), idx_.end(), j); }
  const std::vector<int>& indices() const { return idx_; }

  void validate_within(int q) const {
    if (!idx_.empty() && idx_.back() > q)
      throw validation_error("subset index " + std::to_string(idx_.back()) +
                             " exceeds q = " + std::to_string(q));
  }

  SubsetId complement(int q) const {
    std::vector<int> rest;
    rest.reserve(static_cast<std::size_t>(q) - idx_.size());
    for (int j = 1; j <= q; ++j)
      if (!contains(j)) rest.push_back(j);
    return SubsetId(std::move(rest));
  }

  // |S| x q row-selection matrix pi_S.
  Eigen::MatrixXd projection(int q) const {
    validate_within(q);
    Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(size(), q);
    for (int r = 0; r < size(); ++r) pi(r, idx_[static_cast<std::size_t>(r)] - 1) = 1.0;
    return pi;
  }

  // Selected entries of a length-q vector, in index order.
  Eigen::VectorXd pick(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(size());
    for (int r = 0; r < size(); ++r) out(r) = v(idx_[static_cast<std::size_t>(r)] - 1);
    return out;
  }

  // Selected rows and columns of a q x q matrix.
  Eigen::MatrixXd pick_square(const Eigen::MatrixXd& m) const {
    Eigen::MatrixXd out(size(), size());
    for (int r = 0; r < size(); ++r)
      for (int c = 0; c < size(); ++c)
        out(r, c) = m(idx_[static_cast<std::size_t>(r)] - 1, idx_[static_cast<std::size_t>(c)] - 1);
    return out;
  }

  std::string to_string() const {
    std::string s = "{";
    for (std::size_t i = 0; i < idx_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(idx_[i]);
    }
    return s + "}";
  }

  friend bool operator==(const SubsetId& a, const SubsetId& b) = default;

 private:
  std::vector<int> idx_;
};

// Lexicographic order on the index lists.
inline bool subset_lex_less(const SubsetId& a, const SubsetId& b) {
  return std::lexicographical_compare(a.indices().begin(), a.indices().end(),
                                      b.indices().begin(), b.indices().end());
}

// Parsimony order used for tie-breaking: smaller |S| first, then lexicographic.
inline bool subset_parsimony_less(const SubsetId& a, const SubsetId& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return subset_lex_less(a, b);
}

enum class SubsetFamily { all, nested, explicit_list };

inline constexpr int kMaxFullFamilyQ = 20;  // 2^q explosion guard

// Candidate subsets for a family. "all" enumerates the 2^q sets, "nested"
// the q+1 sets {}, {1}, {1,2}, ..., {1..q}.
inline std::vector<SubsetId> subset_family(SubsetFamily family, int q,
                                           const std::vector<SubsetId>& explicit_list = {}) {
  std::vector<SubsetId> out;
  switch (family) {
    case SubsetFamily::all: {
      if (q > kMaxFullFamilyQ)
        throw validation_error("family 'all' with q > 20 rejected; use 'nested' or an explicit list");
      out.reserve(std::size_t{1} << q);
      for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << q); ++mask) {
        std::vector<int> idx;
        for (int j = 0; j < q; ++j)
          if (mask & (std::uint32_t{1} << j)) idx.push_back(j + 1);
        out.emplace_back(std::move(idx));
      }
      break;
    }
    case SubsetFamily::nested: {
      out.reserve(static_cast<std::size_t>(q) + 1);
      std::vector<int> idx;
      out.emplace_back(idx);
      for (int j = 1; j <= q; ++j) {
        idx.push_back(j);
        out.emplace_back(idx);
      }
      break;
    }
    case SubsetFamily::explicit_list: {
      if (explicit_list.empty()) throw validation_error("explicit subset family is empty");
      out = explicit_list;
      for (auto& s : out) s.validate_within(q);
      // canonical order, duplicates dropped
      std::sort(out.begin(), out.end(), subset_parsimony_less);
      out.erase(std::unique(out.begin(), out.end()), out.end());
      break;
    }
  }
  return out;
}

}  // namespace fic
