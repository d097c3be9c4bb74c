#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lelab {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Square sparse matrix in compressed-row layout. Column indices are sorted
/// and unique within each row; entries with |value| <= 1e-300 are not stored.
class SparseOperator {
 public:
  SparseOperator() = default;
  SparseOperator(std::size_t n, std::vector<int> row_offsets, std::vector<int> columns,
                 std::vector<double> values, bool symmetric);

  /// Sums duplicate entries.
  static SparseOperator from_triplets(std::size_t n, std::vector<Triplet> triplets,
                                      bool symmetric);
  static SparseOperator identity(std::size_t n);
  static SparseOperator diagonal(std::span<const double> d);

  std::size_t size() const { return n_; }
  std::size_t nonzeros() const { return values_.size(); }
  bool symmetric() const { return symmetric_; }
  const std::vector<int>& row_offsets() const { return offsets_; }
  const std::vector<int>& columns() const { return columns_; }
  const std::vector<double>& values() const { return values_; }

  double at(std::size_t row, std::size_t col) const;
  std::vector<double> multiply(std::span<const double> x) const;
  std::vector<double> row_sums() const;

  /// Largest |A_ij - A_ji| / max(|A_ij|, |A_ji|) over stored entries.
  double symmetry_defect() const;

 private:
  std::size_t n_ = 0;
  std::vector<int> offsets_{0};
  std::vector<int> columns_;
  std::vector<double> values_;
  bool symmetric_ = false;
};

/// this - scale * other, both on the same index set.
SparseOperator axpy(const SparseOperator& a, double scale, const SparseOperator& b);

/// Rows and columns of flagged indices replaced by `diagonal` times the
/// identity (the diagonal entry is dropped when `diagonal` is zero).
SparseOperator eliminate_dirichlet(const SparseOperator& a, std::span<const std::uint8_t> flags,
                                   double diagonal = 1.0);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// f^T M g.
double dot_l2(const SparseOperator& mass, std::span<const double> f, std::span<const double> g);

/// Below this size a sparse Cholesky factorization is used, above it Jacobi
/// preconditioned conjugate gradients.
inline constexpr std::size_t kDirectSolveLimit = 200000;

/// Factor once, solve many. Guarantees ||Ax - b|| <= 1e-10 ||b||.
class SpdSolver {
 public:
  explicit SpdSolver(const SparseOperator& a);
  ~SpdSolver();
  SpdSolver(SpdSolver&&) noexcept;
  SpdSolver& operator=(SpdSolver&&) noexcept;

  std::vector<double> solve(std::span<const double> b) const;
  bool direct() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<double> spd_solve(const SparseOperator& a, std::span<const double> b);

/// Symmetric, possibly indefinite systems (Newton Jacobians of the
/// Lane-Emden operator have one negative eigenvalue at least-energy solutions).
std::vector<double> symmetric_solve(const SparseOperator& a, std::span<const double> b);

struct EigenPair {
  double lambda = 0.0;
  std::vector<double> phi;
  std::string normalization = "L1";
  double residual = 0.0;  // ||K phi - lambda M phi|| / ||K phi||
  int iterations = 0;
};

/// Smallest eigenvalue of K phi = lambda M phi by inverse iteration. K is the
/// Dirichlet-eliminated stiffness, M the mass with Dirichlet rows removed.
/// phi is made positive and scaled so that sum_i l1_weights[i] |phi_i| = 1.
EigenPair principal_eigenpair(const SparseOperator& stiffness, const SparseOperator& mass,
                              std::span<const double> l1_weights);

}  // namespace lelab
