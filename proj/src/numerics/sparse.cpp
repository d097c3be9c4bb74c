#include <algorithm>
#include <cmath>

#include "lelab/errors.hpp"
#include "lelab/numerics.hpp"

namespace lelab {

namespace {
constexpr double kDropTolerance = 1e-300;

void check_size(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got)
    throw DimensionMismatch(std::string(what) + ": expected length " + std::to_string(expected) +
                            ", got " + std::to_string(got));
}
}  // namespace

SparseOperator::SparseOperator(std::size_t n, std::vector<int> row_offsets,
                               std::vector<int> columns, std::vector<double> values,
                               bool symmetric)
    : n_(n),
      offsets_(std::move(row_offsets)),
      columns_(std::move(columns)),
      values_(std::move(values)),
      symmetric_(symmetric) {
  check_size(n_ + 1, offsets_.size(), "row offsets");
  check_size(columns_.size(), values_.size(), "values");
}

SparseOperator SparseOperator::from_triplets(std::size_t n, std::vector<Triplet> triplets,
                                             bool symmetric) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<int> offsets(n + 1, 0);
  std::vector<int> cols;
  std::vector<double> vals;
  cols.reserve(triplets.size());
  vals.reserve(triplets.size());
  std::size_t k = 0;
  for (std::size_t row = 0; row < n; ++row) {
    while (k < triplets.size() && static_cast<std::size_t>(triplets[k].row) == row) {
      const int col = triplets[k].col;
      if (col < 0 || static_cast<std::size_t>(col) >= n)
        throw DimensionMismatch("triplet column out of range");
      double sum = 0.0;
      while (k < triplets.size() && static_cast<std::size_t>(triplets[k].row) == row &&
             triplets[k].col == col)
        sum += triplets[k++].value;
      if (std::abs(sum) > kDropTolerance) {
        cols.push_back(col);
        vals.push_back(sum);
      }
    }
    offsets[row + 1] = static_cast<int>(cols.size());
  }
  if (k != triplets.size()) throw DimensionMismatch("triplet row out of range");
  return SparseOperator(n, std::move(offsets), std::move(cols), std::move(vals), symmetric);
}

SparseOperator SparseOperator::identity(std::size_t n) {
  std::vector<double> ones(n, 1.0);
  return diagonal(ones);
}

SparseOperator SparseOperator::diagonal(std::span<const double> d) {
  std::vector<Triplet> t;
  t.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    t.push_back({static_cast<int>(i), static_cast<int>(i), d[i]});
  return from_triplets(d.size(), std::move(t), true);
}

double SparseOperator::at(std::size_t row, std::size_t col) const {
  const auto first = columns_.begin() + offsets_[row];
  const auto last = columns_.begin() + offsets_[row + 1];
  const auto it = std::lower_bound(first, last, static_cast<int>(col));
  if (it == last || *it != static_cast<int>(col)) return 0.0;
  return values_[static_cast<std::size_t>(it - columns_.begin())];
}

std::vector<double> SparseOperator::multiply(std::span<const double> x) const {
  check_size(n_, x.size(), "multiply");
  std::vector<double> y(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) acc += values_[k] * x[columns_[k]];
    y[i] = acc;
  }
  return y;
}

std::vector<double> SparseOperator::row_sums() const {
  std::vector<double> s(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) s[i] += values_[k];
  return s;
}

double SparseOperator::symmetry_defect() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_; ++i)
    for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      const double aij = values_[k];
      const double aji = at(static_cast<std::size_t>(columns_[k]), i);
      const double scale = std::max(std::abs(aij), std::abs(aji));
      if (scale > 0.0) worst = std::max(worst, std::abs(aij - aji) / scale);
    }
  return worst;
}

SparseOperator axpy(const SparseOperator& a, double scale, const SparseOperator& b) {
  check_size(a.size(), b.size(), "axpy");
  std::vector<Triplet> t;
  t.reserve(a.nonzeros() + b.nonzeros());
  for (const auto* op : {&a, &b}) {
    const double s = (op == &a) ? 1.0 : -scale;
    for (std::size_t i = 0; i < op->size(); ++i)
      for (int k = op->row_offsets()[i]; k < op->row_offsets()[i + 1]; ++k)
        t.push_back({static_cast<int>(i), op->columns()[k], s * op->values()[k]});
  }
  return SparseOperator::from_triplets(a.size(), std::move(t), a.symmetric() && b.symmetric());
}

SparseOperator eliminate_dirichlet(const SparseOperator& a, std::span<const std::uint8_t> flags,
                                   double diagonal) {
  check_size(a.size(), flags.size(), "boundary flags");
  std::vector<int> offsets(a.size() + 1, 0);
  std::vector<int> cols;
  std::vector<double> vals;
  cols.reserve(a.nonzeros());
  vals.reserve(a.nonzeros());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (flags[i]) {
      if (std::abs(diagonal) > kDropTolerance) {
        cols.push_back(static_cast<int>(i));
        vals.push_back(diagonal);
      }
    } else {
      for (int k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k) {
        const int j = a.columns()[k];
        if (flags[j]) continue;
        cols.push_back(j);
        vals.push_back(a.values()[k]);
      }
    }
    offsets[i + 1] = static_cast<int>(cols.size());
  }
  return SparseOperator(a.size(), std::move(offsets), std::move(cols), std::move(vals),
                        a.symmetric());
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_size(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double dot_l2(const SparseOperator& mass, std::span<const double> f, std::span<const double> g) {
  check_size(mass.size(), f.size(), "dot_l2 f");
  check_size(mass.size(), g.size(), "dot_l2 g");
  return dot(f, mass.multiply(g));
}

}  // namespace lelab
