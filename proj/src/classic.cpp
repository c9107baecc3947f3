/*
 * Copyright 2026 The PSZ Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "psz/classic.hpp"

#include <cmath>
#include <limits>

#include "psz/error.hpp"
#include "psz/target.hpp"

namespace psz {
namespace {

constexpr double kPowerTol = 1e-8;
constexpr int kPowerMaxIters = 100000;
// Relative pivot floor below which an unregularized Gram matrix is treated
// as singular.
constexpr double kSingularPivot = 1e-12;

}  // namespace

CVector FilterSet::Bin(std::size_t n) const {
  CVector g(static_cast<Eigen::Index>(num_speakers()));
  for (std::size_t l = 0; l < num_speakers(); ++l) {
    g(static_cast<Eigen::Index>(l)) = at(l, n);
  }
  return g;
}

CMatrix DesignProblem::Stacked() const {
  CMatrix h(hb.rows() + hd.rows(), hb.cols());
  h.topRows(hb.rows()) = hb;
  h.bottomRows(hd.rows()) = hd;
  return h;
}

CVector DesignProblem::StackedTarget() const {
  CVector p = CVector::Zero(hb.rows() + hd.rows());
  p.head(hb.rows()) = target;
  return p;
}

void DesignProblem::Validate() const {
  if (hd.rows() > 0 && hd.cols() != hb.cols()) {
    throw StructuralError("H_B and H_D must have the same speaker count");
  }
  if (target.size() != hb.rows()) {
    throw StructuralError("target length must match the rows of H_B");
  }
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
}

CVector PmSolve(const CMatrix& h, const CVector& target, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  CMatrix gram = h.adjoint() * h;
  gram.diagonal().array() += lambda;
  const CVector rhs = h.adjoint() * target;
  Eigen::LLT<CMatrix> llt(gram);
  bool singular = llt.info() != Eigen::Success;
  if (!singular && gram.rows() > 0) {
    const Eigen::VectorXd pivots = llt.matrixLLT().diagonal().real();
    const double floor = kSingularPivot * pivots.cwiseAbs().maxCoeff();
    singular = pivots.minCoeff() <= floor;
  }
  if (singular) {
    throw NumericalError("pressure-matching system is singular; use a "
                         "positive lambda");
  }
  return llt.solve(rhs);
}

CVector PmSolve(const DesignProblem& problem) {
  problem.Validate();
  return PmSolve(problem.Stacked(), problem.StackedTarget(), problem.lambda);
}

double PmCost(const DesignProblem& problem, const CVector& g) {
  return (problem.StackedTarget() - problem.Stacked() * g).squaredNorm() +
         problem.lambda * g.squaredNorm();
}

double AmCost(const DesignProblem& problem, const CVector& g) {
  const CVector p = problem.Stacked() * g;
  const CVector t = problem.StackedTarget();
  double err = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double d = std::abs(t(i)) - std::abs(p(i));
    err += d * d;
  }
  return err + problem.lambda * g.squaredNorm();
}

AmResult AmSolve(const DesignProblem& problem, const AmOptions& options,
                 const CVector* initial) {
  problem.Validate();
  if (options.max_iters < 1) throw ConfigError("max_iters must be >= 1");
  const CMatrix h = problem.Stacked();
  const Eigen::VectorXd magnitude = problem.StackedTarget().cwiseAbs();

  AmResult result;
  CVector g;
  if (initial != nullptr) {
    g = *initial;
  } else {
    // Two starts: zero-phase PM, and PM on the target as given. MM only
    // descends, so the better start also bounds the result by PM's error.
    g = PmSolve(h, magnitude.cast<Complex>(), problem.lambda);
    const CVector target = problem.StackedTarget();
    if (!target.imag().isZero(0.0)) {
      CVector alt = PmSolve(h, target, problem.lambda);
      if (AmCost(problem, alt) < AmCost(problem, g)) g = std::move(alt);
    }
  }
  double cost = AmCost(problem, g);
  result.costs.push_back(cost);
  result.gains = g;
  double best = cost;

  CVector t(h.rows());
  for (int it = 1; it <= options.max_iters; ++it) {
    const CVector p = h * g;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double a = std::abs(p(i));
      t(i) = a > 0.0 ? magnitude(i) * (p(i) / a) : Complex(magnitude(i), 0.0);
    }
    g = PmSolve(h, t, problem.lambda);
    const double next = AmCost(problem, g);
    result.costs.push_back(next);
    result.iterations = it;
    if (next < best) {
      best = next;
      result.gains = g;
    }
    const double change = std::abs(cost - next);
    cost = next;
    if (change <= options.tol * std::max(std::abs(cost),
                                         std::numeric_limits<double>::min())) {
      result.converged = true;
      break;
    }
  }
  return result;
}

double LargestSingularValue(const CMatrix& h) {
  if (h.size() == 0) return 0.0;
  const CMatrix gram = h.adjoint() * h;
  const Eigen::Index n = gram.rows();
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Fixed, generic start vector so runs are reproducible.
    v(i) = Complex(1.0 + 0.37 * static_cast<double>(i),
                   0.11 * static_cast<double>(i % 3));
  }
  v.normalize();
  double mu = 0.0;
  for (int it = 0; it < kPowerMaxIters; ++it) {
    CVector w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    const double next = (w.adjoint() * gram * w)(0).real();
    const bool done = std::abs(next - mu) <= kPowerTol * std::abs(next);
    mu = next;
    v = w;
    if (done) break;
  }
  return std::sqrt(std::max(mu, 0.0));
}

RegLambda ComputeRegLambda(const CMatrix& h, double factor) {
  RegLambda r;
  r.sigma_max = LargestSingularValue(h);
  r.zero_matrix = r.sigma_max == 0.0;
  r.lambda = factor * r.sigma_max;
  return r;
}

const char* MethodName(ClassicMethod m) {
  return m == ClassicMethod::kPm ? "pm" : "am";
}

CMatrix BinMatrix(const AtfBlock& block, std::size_t n) {
  CMatrix h(static_cast<Eigen::Index>(block.rows),
            static_cast<Eigen::Index>(block.speakers));
  for (std::size_t m = 0; m < block.rows; ++m) {
    for (std::size_t l = 0; l < block.speakers; ++l) {
      h(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(l)) =
          block.at(m, l, n);
    }
  }
  return h;
}

ClassicDesign DesignClassic(ClassicMethod method, const AtfTensor& atf,
                            const ZonePair& pair,
                            const ClassicOptions& options) {
  const auto bz_ids = SelectControlPoints(atf.grid, pair.bz);
  const auto dz_ids = SelectControlPoints(atf.grid, pair.dz);
  const AtfBlock hb = atf.Rows(bz_ids);
  const AtfBlock hd = atf.Rows(dz_ids);

  // AM only uses the modulus; a phased target just adds the PM start.
  std::vector<Complex> target;
  if (options.pm_phase == PmTargetPhase::kReference) {
    target = TargetWithReferencePhase(pair.bz.center.x, hb);
  } else {
    const std::vector<double> mag = TargetMagnitude(pair.bz.center.x, hb);
    target.assign(mag.begin(), mag.end());
  }

  ClassicDesign design{FilterSet(atf.speakers, atf.freqs)};
  for (std::size_t n = 0; n < atf.freqs.size(); ++n) {
    DesignProblem problem;
    problem.hb = BinMatrix(hb, n);
    problem.hd = BinMatrix(hd, n);
    problem.target.resize(static_cast<Eigen::Index>(hb.rows));
    for (std::size_t m = 0; m < hb.rows; ++m) {
      problem.target(static_cast<Eigen::Index>(m)) = target[m * hb.bins + n];
    }
    const RegLambda reg =
        ComputeRegLambda(problem.Stacked(), options.lambda_factor);
    problem.lambda = reg.lambda;
    if (reg.zero_matrix) ++design.zero_lambda_bins;

    CVector g;
    if (method == ClassicMethod::kPm) {
      g = PmSolve(problem);
    } else {
      AmResult am = AmSolve(problem, options.am);
      if (!am.converged) ++design.unconverged_bins;
      g = std::move(am.gains);
    }
    for (std::size_t l = 0; l < atf.speakers.size(); ++l) {
      design.filters.at(l, n) = g(static_cast<Eigen::Index>(l));
    }
  }
  return design;
}

}  // namespace psz
