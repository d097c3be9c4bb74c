#include <cmath>
#include <optional>
#include <string>

#include "lelab/errors.hpp"
#include "lelab/solver.hpp"

namespace lelab {

std::vector<double> continuation_seed(std::span<const double> u, double M, double p, double p_next) {
  const double c = std::pow(M, (p - p_next) / (p_next - 1.0));
  std::vector<double> seed(u.begin(), u.end());
  for (double& x : seed) x *= c;
  return seed;
}

namespace {

SolveRecord solve_from_scratch(const Problem& problem, double p, const SweepOptions& opts) {
  const InitResult init = least_energy_init(*problem.space, p, opts.init);
  return newton_refine(problem, init.u.values, p, opts.newton);
}

// Advance the solution at `from` to exponent `to`, halving the step when
// Newton fails or needs too many iterations.
SolveRecord advance(const Problem& problem, const SolveRecord& from, double to,
                    const SweepOptions& opts, int depth) {
  const auto seed = continuation_seed(from.u.values, from.M, from.p, to);
  const bool can_split = depth < opts.max_halvings;
  try {
    SolveRecord rec = newton_refine(problem, seed, to, opts.newton);
    if (rec.iterations <= opts.iteration_spike || !can_split) return rec;
  } catch (const Error&) {
    if (!can_split) throw;
  }
  const SolveRecord mid = advance(problem, from, 0.5 * (from.p + to), opts, depth + 1);
  return advance(problem, mid, to, opts, depth + 1);
}

}  // namespace

std::vector<SolveRecord> continuation_sweep(const Problem& problem, std::span<const double> p_values,
                                            const SweepOptions& opts) {
  for (std::size_t i = 0; i < p_values.size(); ++i) {
    if (!(p_values[i] > 1.0)) throw std::invalid_argument("exponents must exceed 1");
    if (i > 0 && !(p_values[i] > p_values[i - 1]))
      throw std::invalid_argument("exponents must be strictly ascending");
  }
  std::vector<SolveRecord> out;
  std::optional<std::size_t> last_good;
  for (double p : p_values) {
    try {
      if (opts.continuation && last_good)
        out.push_back(advance(problem, out[*last_good], p, opts, 0));
      else
        out.push_back(solve_from_scratch(problem, p, opts));
      last_good = out.size() - 1;
    } catch (const Error& e) {
      SolveRecord failed;
      failed.status = e.kind();
      failed.message = e.what();
      failed.p = p;
      failed.h = problem.mesh().h();
      out.push_back(std::move(failed));
    }
  }
  bool any = false;
  for (const auto& r : out) any = any || r.ok();
  if (!any) throw SweepEmpty("no exponent converged");
  return out;
}

}  // namespace lelab
