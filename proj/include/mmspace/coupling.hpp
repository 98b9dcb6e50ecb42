#pragma once

// Couplings and sub-couplings between two finite probability vectors.

#include "mmspace/mm_space.hpp"

#include <string>
#include <vector>

namespace mmspace {

template <class Scalar>
struct basic_coupling {
  std::vector<std::vector<Scalar>> matrix;  // n1 x n2, nonnegative
  Scalar mass{0};

  std::size_t rows() const { return matrix.size(); }
  std::size_t cols() const { return matrix.empty() ? 0 : matrix.front().size(); }
};

using coupling = basic_coupling<Rational>;

template <class Scalar>
basic_coupling<Scalar> make_coupling(std::vector<std::vector<Scalar>> m) {
  basic_coupling<Scalar> c;
  c.matrix = std::move(m);
  for (const auto& row : c.matrix)
    for (const auto& v : row) c.mass += v;
  return c;
}

/// Problems with `c` as a sub-coupling of (mu, nu); with `full` the
/// marginals must match exactly.
template <class Scalar>
std::vector<std::string> coupling_violations(const basic_coupling<Scalar>& c, const std::vector<Scalar>& mu,
                                             const std::vector<Scalar>& nu, bool full, double tol = 1e-12) {
  using T = scalar_traits<Scalar>;
  std::vector<std::string> out;
  if (c.rows() != mu.size() || (c.rows() > 0 && c.cols() != nu.size())) {
    out.push_back("coupling shape does not match the marginals");
    return out;
  }
  Scalar total(0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (c.matrix[i].size() != nu.size()) {
      out.push_back("ragged coupling row " + std::to_string(i));
      return out;
    }
    Scalar row(0);
    for (std::size_t j = 0; j < nu.size(); ++j) {
      if (c.matrix[i][j] < 0 && !T::is_zero(c.matrix[i][j], tol))
        out.push_back("negative entry (" + std::to_string(i) + "," + std::to_string(j) + ")");
      row += c.matrix[i][j];
    }
    total += row;
    if (full ? !T::equal(row, mu[i], tol) : !T::leq(row, mu[i], tol))
      out.push_back("row " + std::to_string(i) + " sums to " + T::str(row) + ", marginal is " + T::str(mu[i]));
  }
  for (std::size_t j = 0; j < nu.size(); ++j) {
    Scalar col(0);
    for (std::size_t i = 0; i < mu.size(); ++i) col += c.matrix[i][j];
    if (full ? !T::equal(col, nu[j], tol) : !T::leq(col, nu[j], tol))
      out.push_back("column " + std::to_string(j) + " sums to " + T::str(col) + ", marginal is " + T::str(nu[j]));
  }
  if (!T::equal(total, c.mass, tol)) out.push_back("stored mass " + T::str(c.mass) + " differs from entry sum");
  return out;
}

/// Extends a sub-coupling to a full coupling by spreading the two marginal
/// defects as a normalized product. Entries already present only grow.
template <class Scalar>
basic_coupling<Scalar> complete_coupling(const basic_coupling<Scalar>& sub, const std::vector<Scalar>& mu,
                                         const std::vector<Scalar>& nu) {
  basic_coupling<Scalar> out = sub;
  if (out.matrix.empty()) out.matrix.assign(mu.size(), std::vector<Scalar>(nu.size(), Scalar(0)));
  std::vector<Scalar> row_def(mu), col_def(nu);
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t j = 0; j < nu.size(); ++j) {
      row_def[i] -= sub.matrix.empty() ? Scalar(0) : sub.matrix[i][j];
      col_def[j] -= sub.matrix.empty() ? Scalar(0) : sub.matrix[i][j];
    }
  Scalar defect(0);
  for (const auto& v : row_def) defect += v;
  if (scalar_traits<Scalar>::positive(defect))
    for (std::size_t i = 0; i < mu.size(); ++i)
      for (std::size_t j = 0; j < nu.size(); ++j) {
        Scalar add = row_def[i] * col_def[j];
        add /= defect;
        out.matrix[i][j] += add;
      }
  out.mass = Scalar(0);
  for (const auto& row : out.matrix)
    for (const auto& v : row) out.mass += v;
  return out;
}

}  // namespace mmspace
