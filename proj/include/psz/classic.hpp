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

// Per-bin baseline designs: pressure matching (regularized least squares)
// and amplitude matching (majorization-minimization on the magnitude
// error).

#ifndef PSZ_CLASSIC_HPP_
#define PSZ_CLASSIC_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "psz/acoustics.hpp"
#include "psz/geometry.hpp"

namespace psz {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Complex loudspeaker gains, speaker-major: gains[l * bins + n].
struct FilterSet {
  SpeakerArray speakers;
  FrequencyGrid freqs;
  std::vector<Complex> gains;

  FilterSet() = default;
  FilterSet(SpeakerArray s, FrequencyGrid f)
      : speakers(std::move(s)),
        freqs(f),
        gains(speakers.size() * freqs.size()) {}

  std::size_t num_speakers() const { return speakers.size(); }
  std::size_t num_bins() const { return freqs.size(); }
  Complex& at(std::size_t l, std::size_t n) { return gains[l * num_bins() + n]; }
  const Complex& at(std::size_t l, std::size_t n) const {
    return gains[l * num_bins() + n];
  }
  CVector Bin(std::size_t n) const;
};

// One frequency bin: minimize ||p_T - H g||^2 + lambda ||g||^2 with the
// stacked H = [H_B; H_D] and p_T = [p_T,B; 0].
struct DesignProblem {
  CMatrix hb;
  CMatrix hd;
  CVector target;  // p_T,B; only its modulus is used by amplitude matching
  double lambda = 0.0;

  CMatrix Stacked() const;
  CVector StackedTarget() const;
  void Validate() const;
};

// Closed form (H^H H + lambda I)^{-1} H^H p_T via Cholesky. Throws
// NumericalError when the system is singular.
CVector PmSolve(const DesignProblem& problem);
CVector PmSolve(const CMatrix& h, const CVector& target, double lambda);

double PmCost(const DesignProblem& problem, const CVector& g);
// || |p_T| - |H g| ||^2 + lambda ||g||^2 over the stacked system.
double AmCost(const DesignProblem& problem, const CVector& g);

struct AmOptions {
  int max_iters = 200;
  double tol = 1e-8;  // relative cost change
};

struct AmResult {
  CVector gains;
  int iterations = 0;
  bool converged = false;
  std::vector<double> costs;  // cost of the initial point, then per iteration
};

// Repeats: t = |p_T| exp(j arg(H g)) (arg 0 := 0), g <- PmSolve(t). Unless
// `initial` is given, starts from whichever of the zero-phase and the
// as-given pressure-matching solutions has the lower amplitude error.
// Returns the best iterate; `converged` is false when max_iters ran out.
AmResult AmSolve(const DesignProblem& problem, const AmOptions& options = {},
                 const CVector* initial = nullptr);

struct RegLambda {
  double lambda = 0.0;
  double sigma_max = 0.0;
  bool zero_matrix = false;
};

// Largest singular value of h by power iteration on H^H H (relative
// tolerance 1e-8 on the eigenvalue).
double LargestSingularValue(const CMatrix& h);
RegLambda ComputeRegLambda(const CMatrix& h, double factor = 0.05);

enum class ClassicMethod { kPm, kAm };

const char* MethodName(ClassicMethod m);

enum class PmTargetPhase {
  kReference,  // phase of the mean reference-speaker ATF
  kZero,
};

struct ClassicOptions {
  double lambda_factor = 0.05;
  PmTargetPhase pm_phase = PmTargetPhase::kReference;
  AmOptions am;
};

struct ClassicDesign {
  FilterSet filters;
  std::size_t unconverged_bins = 0;  // AM bins that hit max_iters
  std::size_t zero_lambda_bins = 0;
};

// Designs every bin independently on the given ATFs. Throws DomainError
// when either zone selects no grid points.
ClassicDesign DesignClassic(ClassicMethod method, const AtfTensor& atf,
                            const ZonePair& pair,
                            const ClassicOptions& options = {});

// Bin n of a block as an Eigen matrix [rows x speakers].
CMatrix BinMatrix(const AtfBlock& block, std::size_t n);

}  // namespace psz

#endif  // PSZ_CLASSIC_HPP_
