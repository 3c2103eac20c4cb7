#ifndef OPFUNC_EXTREMAL_HPP
#define OPFUNC_EXTREMAL_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "opfunc/besov.hpp"
#include "opfunc/funcalc.hpp"

namespace opfunc {

enum class NormMode { Besov, Sup };
enum class OperatorMode { Hermitian, Unitary, Triple };

std::string to_string(NormMode mode);
std::string to_string(OperatorMode mode);
NormMode parse_norm_mode(const std::string& text);
OperatorMode parse_operator_mode(const std::string& text);

/// f(A1, B1) - f(A2, B2). B2 equals B1 unless the perturbation is two-sided.
struct HermitianPairOps {
  Hermitian a1, a2, b1, b2;
};

/// f(U1, V) - f(U2, V).
struct UnitaryPairOps {
  Unitary u1, u2, v;
};

/// f(A, B, C1) - f(A, B, C2).
struct TripleOps {
  Hermitian a, b, c1, c2;
};

using OperatorSet = std::variant<HermitianPairOps, UnitaryPairOps, TripleOps>;

/// One candidate for a large Lipschitz ratio.
///
/// Hermitian and triple instances evaluate f at dilation * (spectral value);
/// their function norm in Besov mode is dilation * besov_norm(f), the
/// homogeneous norm of x -> f(dilation x). Unitary instances use dilation 1.
struct RatioInstance {
  TrigPoly f{2};
  double dilation = 1.0;
  OperatorSet ops;
  SchattenExponent p{2.0};
  NormMode norm_mode = NormMode::Besov;
  /// Hermitian operators must be contractions (op-norm <= 1 + 1e-12).
  bool contractions = true;

  OperatorMode mode() const;
  Index dim() const;
  bool two_sided() const;
  /// Throws DomainError on mismatched dimensions, a polynomial of the wrong
  /// dimension, or flagged operators that are not contractions.
  void validate() const;
};

/// The increment matrix whose Schatten norm is at issue.
MatrixXcd increment(const RatioInstance& inst);
double increment_norm(const RatioInstance& inst);
/// ||A1 - A2|| (+ ||B1 - B2|| when two-sided), ||U1 - U2|| or ||C1 - C2||.
double perturbation_norm(const RatioInstance& inst);
/// Denominator normalization of f for the instance's norm mode.
double function_norm(const RatioInstance& inst);
double function_norm(const TrigPoly& f, double dilation, NormMode mode);
/// increment_norm / (function_norm * perturbation_norm).
double lipschitz_ratio(const RatioInstance& inst);

struct SubdivisionStep {
  int j = 0;
  RatioInstance step;
  double ratio = 0;
};

/// Splits the perturbation into N equal steps along the segment from the
/// first operator to the second (C in triple mode) and returns the step with
/// the largest ratio.
SubdivisionStep subdivide_select(const RatioInstance& inst, int n);

/// U1 e^{i (k/N) A} for k = 0..N with e^{iA} = U1^{-1} U2.
std::vector<Unitary> unitary_path(const Unitary& u1, const Unitary& u2, int n);

/// Least N >= 1 with an (m+1) x (m+1) block [n1, n1+m] x [n2, n2+m] inside
/// the mask and -N <= n1, n2 <= N - m; nullopt if none up to n_max.
std::optional<int> kappa_lambda(const SupportMask& mask, int m, int n_max);

/// Corner (n1, n2) of some block [n1, n1+side] x [n2, n2+side] inside the
/// mask with max(|n1|, |n2 + side|, ...) <= reach, preferring the smallest reach.
std::optional<std::pair<int, int>> find_square(const SupportMask& mask, int side, int reach);

enum class FamilyKind { Random, Triangular, Optimized };
std::string to_string(FamilyKind kind);

/// Unitary candidate of size m: V = diag(w^k), U2 the cyclic shift, U1 =
/// e^{i pi/m} U2, w = e^{2 pi i/m}, f analytic of degree at most 4m-2.
///   Random:     Gaussian coefficients from the seed.
///   Triangular: f(j, k) = 1 / (j - k + 1/2).
///   Optimized:  Triangular projected onto f(U2, V) = 0.
/// With a mask, f is shifted into a square of the mask when one exists and
/// truncated to the mask otherwise.
RatioInstance seeded_family(int m, FamilyKind kind, SchattenExponent p = SchattenExponent(2.0),
                            NormMode norm_mode = NormMode::Besov, std::uint64_t seed = 0,
                            const std::optional<SupportMask>& mask = std::nullopt);

/// Seeded Hermitian pair (or triple) candidate: random contractions with a
/// small perturbation and a random polynomial of the given degree.
RatioInstance seeded_hermitian(int m, int degree, std::uint64_t seed, SchattenExponent p = SchattenExponent(2.0),
                               NormMode norm_mode = NormMode::Besov, bool two_sided = false);
RatioInstance seeded_triple(int m, int degree, std::uint64_t seed, SchattenExponent p = SchattenExponent(2.0),
                            NormMode norm_mode = NormMode::Besov);

// Direct-sum witnesses ---------------------------------------------------------

struct WitnessReport {
  int blocks = 0;
  SchattenExponent p{2.0};
  std::vector<double> perturbations;  // ||dA_k||
  std::vector<double> increments;     // ||df_k||
  std::vector<double> function_norms;
  double perturbation_sum = 0;        // sum ||dA_k||^p
  double perturbation_bound = 0;      // sum 2^{-kp}
  double increment_sum = 0;           // sum ||df_k||^p
  double direct_sum_perturbation = 0; // ||dA||^p over the assembled direct sum
  double direct_sum_increment = 0;
  double consistency = 0;             // largest relative mismatch of the two routes
  bool perturbation_bounded = false;  // perturbation_sum < 1
  bool increment_diverges = false;    // increment_sum >= blocks
};

/// Validates block k (1-based): increment > 1 and perturbation < 2^{-k}, then
/// assembles the finite direct sum. p must be finite.
WitnessReport block_witness(const std::vector<RatioInstance>& blocks, const SchattenExponent& p);

/// From a Hermitian instance with ratio > 2: the best step of N subdivisions,
/// rescaled in amplitude so that increment = ratio / 2 > 1, then dilated per
/// block so that perturbation = 2^{-(k+1)}. The dilated blocks are not
/// contractions in general.
std::vector<RatioInstance> build_witness_blocks(const RatioInstance& inst, int k_blocks, int n_subdivisions = 4);

/// Blocks of size 1 with increment 1 + delta and perturbation 2^{-(k+1)},
/// independent of any search.
std::vector<RatioInstance> synthetic_witness_blocks(int k_blocks, const SchattenExponent& p, double delta = 0.01);

}  // namespace opfunc

#endif  // OPFUNC_EXTREMAL_HPP
