// Copyright 2026 The smoothmech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "smoothmech/lp.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace smoothmech::lp {

LinearProgram::LinearProgram(Sense s, std::vector<double> c)
    : sense(s),
      objective(std::move(c)),
      lower(objective.size(), 0.0),
      upper(objective.size(), kInf) {}

void LinearProgram::add(std::vector<double> coefficients, Relation relation,
                        double rhs) {
  constraints.push_back({std::move(coefficients), relation, rhs});
}

void LinearProgram::set_bounds(std::size_t var, double lo, double hi) {
  if (lower.size() < objective.size()) lower.resize(objective.size(), 0.0);
  if (upper.size() < objective.size()) upper.resize(objective.size(), kInf);
  lower.at(var) = lo;
  upper.at(var) = hi;
}

void LinearProgram::validate() const {
  const std::size_t n = objective.size();
  if (!lower.empty() && lower.size() != n) {
    throw DomainError("lp: lower bound vector has wrong length");
  }
  if (!upper.empty() && upper.size() != n) {
    throw DomainError("lp: upper bound vector has wrong length");
  }
  for (double c : objective) {
    if (!std::isfinite(c)) throw DomainError("lp: non-finite objective");
  }
  for (std::size_t k = 0; k < constraints.size(); ++k) {
    const Constraint& row = constraints[k];
    if (row.coefficients.size() != n) {
      throw DomainError("lp: constraint " + std::to_string(k) +
                        " has wrong length");
    }
    if (!std::isfinite(row.rhs)) throw DomainError("lp: non-finite rhs");
    for (double a : row.coefficients) {
      if (!std::isfinite(a)) throw DomainError("lp: non-finite coefficient");
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = lower.empty() ? 0.0 : lower[j];
    const double hi = upper.empty() ? kInf : upper[j];
    if (std::isnan(lo) || std::isnan(hi) || lo > hi || lo == kInf ||
        hi == -kInf) {
      throw DomainError("lp: inconsistent bounds on variable " +
                        std::to_string(j));
    }
  }
}

std::string to_string(Status status) {
  switch (status) {
    case Status::kOptimal:
      return "optimal";
    case Status::kInfeasible:
      return "infeasible";
    case Status::kUnbounded:
      return "unbounded";
  }
  return "unknown";
}

namespace {

// How an original variable is expressed through nonnegative columns.
struct VariableMap {
  enum class Kind { kShifted, kFlipped, kSplit } kind = Kind::kShifted;
  std::size_t column = 0;
  double offset = 0.0;
};

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t columns)
      : rows_(rows), width_(columns + 1), data_((rows + 1) * width_, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
  double at(std::size_t r, std::size_t c) const {
    return data_[r * width_ + c];
  }
  double& rhs(std::size_t r) { return at(r, width_ - 1); }
  double& cost(std::size_t c) { return at(rows_, c); }
  std::size_t rows() const { return rows_; }
  std::size_t columns() const { return width_ - 1; }

  void pivot(std::size_t r, std::size_t c) {
    double* prow = &data_[r * width_];
    const double inv = 1.0 / prow[c];
    nonzero_.clear();
    for (std::size_t j = 0; j < width_; ++j) {
      if (prow[j] != 0.0) {
        prow[j] *= inv;
        nonzero_.push_back(j);
      }
    }
    prow[c] = 1.0;
    for (std::size_t i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      double* row = &data_[i * width_];
      const double factor = row[c];
      if (factor == 0.0) continue;
      for (std::size_t j : nonzero_) row[j] -= factor * prow[j];
      row[c] = 0.0;
    }
  }

 private:
  std::size_t rows_;
  std::size_t width_;
  std::vector<double> data_;
  std::vector<std::size_t> nonzero_;
};

enum class Outcome { kOptimal, kUnbounded, kIterationLimit };

// Runs primal simplex iterations. Entering columns follow Dantzig's rule
// until a run of degenerate pivots, then Bland's rule until the objective
// moves again, which rules out cycling. Columns at or beyond `enterable`
// never enter the basis.
Outcome run_simplex(Tableau& t, std::vector<std::size_t>& basis,
                    std::size_t enterable, const Options& options,
                    std::size_t& iterations) {
  const double tol = options.pivot_tolerance;
  constexpr int kDegenerateRun = 50;
  int degenerate = 0;
  while (true) {
    if (iterations >= options.max_iterations) return Outcome::kIterationLimit;
    std::size_t entering = enterable;
    if (degenerate < kDegenerateRun) {
      double most = -tol;
      for (std::size_t j = 0; j < enterable; ++j) {
        if (t.cost(j) < most) {
          most = t.cost(j);
          entering = j;
        }
      }
    } else {
      for (std::size_t j = 0; j < enterable; ++j) {
        if (t.cost(j) < -tol) {
          entering = j;
          break;
        }
      }
    }
    if (entering == enterable) return Outcome::kOptimal;

    std::size_t leaving = t.rows();
    double best = kInf;
    for (std::size_t i = 0; i < t.rows(); ++i) {
      const double a = t.at(i, entering);
      if (a <= tol) continue;
      const double ratio = std::max(t.rhs(i), 0.0) / a;
      if (leaving == t.rows()) {
        best = ratio;
        leaving = i;
        continue;
      }
      const double slack = 1e-12 * (1.0 + best);
      if (ratio < best - slack ||
          (ratio <= best + slack && basis[i] < basis[leaving])) {
        best = ratio;
        leaving = i;
      }
    }
    if (leaving == t.rows()) return Outcome::kUnbounded;
    degenerate = best * std::abs(t.cost(entering)) <= tol ? degenerate + 1 : 0;
    t.pivot(leaving, entering);
    basis[leaving] = entering;
    ++iterations;
  }
}

}  // namespace

Result solve(const LinearProgram& program, const Options& options) {
  program.validate();
  const std::size_t n = program.num_variables();
  if (n > options.max_variables || program.constraints.size() > options.max_rows) {
    throw SizeError("lp: program exceeds dimension cap",
                    std::max(n, program.constraints.size()),
                    std::max(options.max_variables, options.max_rows));
  }

  // Express every variable through nonnegative columns.
  std::vector<VariableMap> vars(n);
  std::size_t num_struct = 0;
  std::vector<std::pair<std::size_t, double>> bound_rows;  // column, cap
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = program.lower.empty() ? 0.0 : program.lower[j];
    const double hi = program.upper.empty() ? kInf : program.upper[j];
    VariableMap& m = vars[j];
    if (std::isfinite(lo)) {
      m = {VariableMap::Kind::kShifted, num_struct++, lo};
      if (std::isfinite(hi)) bound_rows.emplace_back(m.column, hi - lo);
    } else if (std::isfinite(hi)) {
      m = {VariableMap::Kind::kFlipped, num_struct++, hi};
    } else {
      m = {VariableMap::Kind::kSplit, num_struct, 0.0};
      num_struct += 2;
    }
  }

  // Transformed rows: coefficients over structural columns.
  struct Row {
    std::vector<double> a;
    Relation rel;
    double b;
    double sign = 1.0;
  };
  std::vector<Row> rows;
  rows.reserve(program.constraints.size() + bound_rows.size());
  for (const Constraint& c : program.constraints) {
    Row row{std::vector<double>(num_struct, 0.0), c.relation, c.rhs};
    for (std::size_t j = 0; j < n; ++j) {
      const double a = c.coefficients[j];
      if (a == 0.0) continue;
      const VariableMap& m = vars[j];
      switch (m.kind) {
        case VariableMap::Kind::kShifted:
          row.a[m.column] += a;
          row.b -= a * m.offset;
          break;
        case VariableMap::Kind::kFlipped:
          row.a[m.column] -= a;
          row.b -= a * m.offset;
          break;
        case VariableMap::Kind::kSplit:
          row.a[m.column] += a;
          row.a[m.column + 1] -= a;
          break;
      }
    }
    rows.push_back(std::move(row));
  }
  for (const auto& [column, cap] : bound_rows) {
    Row row{std::vector<double>(num_struct, 0.0), Relation::kLessEqual, cap};
    row.a[column] = 1.0;
    rows.push_back(std::move(row));
  }

  // Maximization objective over structural columns.
  const double sense_sign = program.sense == Sense::kMaximize ? 1.0 : -1.0;
  std::vector<double> cost(num_struct, 0.0);
  double constant = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double c = sense_sign * program.objective[j];
    const VariableMap& m = vars[j];
    switch (m.kind) {
      case VariableMap::Kind::kShifted:
        cost[m.column] += c;
        constant += c * m.offset;
        break;
      case VariableMap::Kind::kFlipped:
        cost[m.column] -= c;
        constant += c * m.offset;
        break;
      case VariableMap::Kind::kSplit:
        cost[m.column] += c;
        cost[m.column + 1] -= c;
        break;
    }
  }

  // Normalize to nonnegative rhs and classify rows.
  std::size_t num_slack = 0;
  std::size_t num_art = 0;
  for (Row& row : rows) {
    if (row.b < 0.0 || (row.b == 0.0 && row.rel == Relation::kGreaterEqual)) {
      for (double& a : row.a) a = -a;
      row.b = -row.b;
      row.sign = -1.0;
      if (row.rel == Relation::kLessEqual) {
        row.rel = Relation::kGreaterEqual;
      } else if (row.rel == Relation::kGreaterEqual) {
        row.rel = Relation::kLessEqual;
      }
    }
    if (row.rel != Relation::kEqual) ++num_slack;
    if (row.rel != Relation::kLessEqual) ++num_art;
  }

  const std::size_t m = rows.size();
  const std::size_t slack_begin = num_struct;
  const std::size_t art_begin = slack_begin + num_slack;
  const std::size_t total = art_begin + num_art;
  Tableau t(m, total);
  std::vector<std::size_t> basis(m);
  std::vector<std::size_t> identity_column(m);
  {
    std::size_t s = slack_begin;
    std::size_t a = art_begin;
    for (std::size_t i = 0; i < m; ++i) {
      const Row& row = rows[i];
      for (std::size_t j = 0; j < num_struct; ++j) t.at(i, j) = row.a[j];
      t.rhs(i) = row.b;
      if (row.rel == Relation::kLessEqual) {
        t.at(i, s) = 1.0;
        basis[i] = s;
        identity_column[i] = s;
        ++s;
      } else {
        if (row.rel == Relation::kGreaterEqual) t.at(i, s++) = -1.0;
        t.at(i, a) = 1.0;
        basis[i] = a;
        identity_column[i] = a;
        ++a;
      }
    }
  }

  Result result;
  // Phase 1: maximize minus the sum of artificials.
  if (num_art > 0) {
    for (std::size_t j = art_begin; j < total; ++j) t.cost(j) = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] < art_begin) continue;
      for (std::size_t j = 0; j <= total; ++j) t.at(m, j) -= t.at(i, j);
    }
    const Outcome phase1 =
        run_simplex(t, basis, total, options, result.iterations);
    if (phase1 == Outcome::kIterationLimit) {
      throw NumericError("lp: iteration limit reached in phase 1");
    }
    const double infeasibility = -t.rhs(m);
    double scale = 1.0;
    for (const Row& row : rows) scale = std::max(scale, std::fabs(row.b));
    if (infeasibility > options.feasibility_tolerance * scale) {
      result.status = Status::kInfeasible;
      return result;
    }
    // Drive remaining zero-level artificials out of the basis.
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] < art_begin) continue;
      for (std::size_t j = 0; j < art_begin; ++j) {
        if (std::fabs(t.at(i, j)) > options.pivot_tolerance) {
          t.pivot(i, j);
          basis[i] = j;
          break;
        }
      }
    }
  }

  // Phase 2.
  for (std::size_t j = 0; j <= total; ++j) t.cost(j) = 0.0;
  for (std::size_t j = 0; j < num_struct; ++j) t.cost(j) = -cost[j];
  for (std::size_t i = 0; i < m; ++i) {
    const double cb = basis[i] < num_struct ? cost[basis[i]] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j <= total; ++j) t.at(m, j) += cb * t.at(i, j);
  }
  const Outcome phase2 =
      run_simplex(t, basis, art_begin, options, result.iterations);
  if (phase2 == Outcome::kIterationLimit) {
    throw NumericError("lp: iteration limit reached in phase 2");
  }
  if (phase2 == Outcome::kUnbounded) {
    result.status = Status::kUnbounded;
    return result;
  }

  std::vector<double> y(num_struct, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < num_struct) y[basis[i]] = std::max(t.rhs(i), 0.0);
  }
  result.point.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const VariableMap& vm = vars[j];
    switch (vm.kind) {
      case VariableMap::Kind::kShifted:
        result.point[j] = vm.offset + y[vm.column];
        break;
      case VariableMap::Kind::kFlipped:
        result.point[j] = vm.offset - y[vm.column];
        break;
      case VariableMap::Kind::kSplit:
        result.point[j] = y[vm.column] - y[vm.column + 1];
        break;
    }
  }
  double value = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    value += program.objective[j] * result.point[j];
  }
  result.value = value;
  result.duals.resize(program.constraints.size());
  for (std::size_t k = 0; k < program.constraints.size(); ++k) {
    result.duals[k] = sense_sign * rows[k].sign * t.cost(identity_column[k]);
  }
  (void)constant;
  result.status = Status::kOptimal;
  return result;
}

}  // namespace smoothmech::lp
