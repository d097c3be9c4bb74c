#include <cmath>
#include <variant>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "lelab/errors.hpp"
#include "lelab/numerics.hpp"

namespace lelab {

namespace {

using EigenSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using EigenVector = Eigen::VectorXd;
using Cholesky = Eigen::SimplicialLLT<EigenSparse, Eigen::Lower, Eigen::AMDOrdering<int>>;
using Cg = Eigen::ConjugateGradient<EigenSparse, Eigen::Lower | Eigen::Upper,
                                    Eigen::DiagonalPreconditioner<double>>;

constexpr double kResidualTolerance = 1e-10;
constexpr int kRefinementSteps = 4;

EigenSparse to_eigen(const SparseOperator& a) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::Map<const Eigen::SparseMatrix<double, Eigen::RowMajor, int>> view(
      n, n, static_cast<Eigen::Index>(a.nonzeros()), a.row_offsets().data(),
      a.columns().data(), a.values().data());
  EigenSparse m = view;
  m.makeCompressed();
  return m;
}

EigenVector to_eigen(std::span<const double> v) {
  return Eigen::Map<const EigenVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const EigenVector& v) { return {v.data(), v.data() + v.size()}; }

double relative_residual(const EigenSparse& a, const EigenVector& x, const EigenVector& b) {
  const double bn = b.norm();
  if (bn == 0.0) return (a * x).norm();
  return (b - a * x).norm() / bn;
}

// Solve with a factorization, polishing by iterative refinement.
template <class Factor>
EigenVector refined_solve(const Factor& f, const EigenSparse& a, const EigenVector& b) {
  EigenVector x = f.solve(b);
  for (int step = 0; step < kRefinementSteps; ++step) {
    if (relative_residual(a, x, b) <= 0.1 * kResidualTolerance) break;
    const EigenVector r = b - a * x;
    x += f.solve(r);
  }
  return x;
}

void check_square(const SparseOperator& a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DimensionMismatch("right-hand side length " + std::to_string(b.size()) +
                            " does not match operator size " + std::to_string(a.size()));
}

}  // namespace

struct SpdSolver::Impl {
  EigenSparse matrix;
  std::variant<std::unique_ptr<Cholesky>, std::unique_ptr<Cg>> solver;
};

SpdSolver::SpdSolver(const SparseOperator& a) : impl_(std::make_unique<Impl>()) {
  impl_->matrix = to_eigen(a);
  if (a.size() < kDirectSolveLimit) {
    auto chol = std::make_unique<Cholesky>();
    chol->compute(impl_->matrix);
    if (chol->info() != Eigen::Success)
      throw NotSPD("Cholesky factorization failed: matrix is not positive definite");
    impl_->solver = std::move(chol);
  } else {
    auto cg = std::make_unique<Cg>();
    cg->setTolerance(0.1 * kResidualTolerance);
    cg->setMaxIterations(std::max<Eigen::Index>(1000, 10 * impl_->matrix.rows()));
    cg->compute(impl_->matrix);
    if (cg->info() != Eigen::Success) throw NotSPD("preconditioner setup failed");
    impl_->solver = std::move(cg);
  }
}

SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

bool SpdSolver::direct() const {
  return std::holds_alternative<std::unique_ptr<Cholesky>>(impl_->solver);
}

std::vector<double> SpdSolver::solve(std::span<const double> b) const {
  if (static_cast<Eigen::Index>(b.size()) != impl_->matrix.rows())
    throw DimensionMismatch("right-hand side length does not match operator size");
  const EigenVector rhs = to_eigen(b);
  EigenVector x;
  if (direct()) {
    x = refined_solve(*std::get<std::unique_ptr<Cholesky>>(impl_->solver), impl_->matrix, rhs);
  } else {
    auto& cg = *std::get<std::unique_ptr<Cg>>(impl_->solver);
    x = cg.solve(rhs);
    if (cg.info() == Eigen::NumericalIssue) throw NotSPD("conjugate gradients broke down");
    if (cg.info() != Eigen::Success)
      throw NotConverged("conjugate gradients hit the iteration cap (" +
                         std::to_string(cg.iterations()) + ")");
  }
  const double res = relative_residual(impl_->matrix, x, rhs);
  if (!(res <= kResidualTolerance))
    throw NotConverged("SPD solve residual " + std::to_string(res) + " above tolerance");
  return to_std(x);
}

std::vector<double> spd_solve(const SparseOperator& a, std::span<const double> b) {
  check_square(a, b);
  return SpdSolver(a).solve(b);
}

std::vector<double> symmetric_solve(const SparseOperator& a, std::span<const double> b) {
  check_square(a, b);
  const EigenSparse m = to_eigen(a);
  const EigenVector rhs = to_eigen(b);
  {
    Eigen::SimplicialLDLT<EigenSparse, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(m);
    if (ldlt.info() == Eigen::Success) {
      const EigenVector x = refined_solve(ldlt, m, rhs);
      if (x.allFinite() && relative_residual(m, x, rhs) <= kResidualTolerance) return to_std(x);
    }
  }
  // Zero pivot without pivoting; fall back to partial-pivoting LU.
  Eigen::SparseLU<EigenSparse, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) throw NotConverged("singular linear system");
  const EigenVector x = refined_solve(lu, m, rhs);
  const double res = relative_residual(m, x, rhs);
  if (!(res <= kResidualTolerance))
    throw NotConverged("symmetric solve residual " + std::to_string(res) + " above tolerance");
  return to_std(x);
}

}  // namespace lelab
