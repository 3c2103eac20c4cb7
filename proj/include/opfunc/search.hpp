#ifndef OPFUNC_SEARCH_HPP
#define OPFUNC_SEARCH_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opfunc/extremal.hpp"

namespace opfunc {

struct SearchConfig {
  OperatorMode mode = OperatorMode::Unitary;
  std::vector<int> dims;
  std::vector<SchattenExponent> p_values;
  /// Evaluations of the ascent phase per cell; 0 keeps the seeded candidates only.
  int budget = 200;
  std::vector<std::uint64_t> seeds{0};
  NormMode norm_mode = NormMode::Besov;
  std::optional<SupportMask> mask;

  /// Hermitian and triple modes: polynomial degree and dilation of the
  /// seeded candidates. Unitary candidates have degree 4m - 2.
  int degree = 4;
  double dilation = 1.0;
  bool two_sided = false;
  /// Coordinate moves on the polynomial; off keeps f fixed.
  bool optimize_f = true;
  /// Replaces the seeded polynomials (operators are still seeded).
  std::optional<TrigPoly> fixed_f;
  /// Unitary seeded families.
  std::vector<FamilyKind> families{FamilyKind::Triangular, FamilyKind::Optimized, FamilyKind::Random};
  /// Wall-clock limit per cell in seconds; 0 disables it.
  double time_limit = 0;

  /// Throws ParseError on an unusable configuration.
  void validate() const;
};

struct CellResult {
  int m = 0;
  std::size_t p_index = 0;
  SchattenExponent p{2.0};
  std::uint64_t seed = 0;
  double best_ratio = 0;
  double besov_norm = 0;  // dilation * besov_norm(f)
  double sup_norm = 0;
  double pert_norm = 0;
  int f_degree = 0;
  int iters = 0;
  bool timed_out = false;
  std::string source;  // seeded candidate name or "ascent"
  std::vector<double> seeded_ratios;
  std::vector<std::string> seeded_names;
  std::optional<RatioInstance> best;
};

struct SlopeFit {
  SchattenExponent p{2.0};
  std::vector<int> dims;
  std::vector<double> best_ratios;  // max over seeds, per dimension
  double slope = 0;
  double intercept = 0;
  double reference_besov = 0;  // 1/2 - 1/p
  double reference_sup = 0;    // 3/2 - 1/p
  double reference_triple = 0.5;
  bool monotone = false;       // best ratio nondecreasing in m
};

struct MonitorVerdict {
  bool applicable = false;  // Besov normalization and p = 2 present
  bool pass = true;
  double max_ratio = 0;
  double threshold = 10;
};

struct ExperimentRecord {
  SearchConfig config;
  std::vector<CellResult> cells;  // ordered by (m, p, seed)
  std::vector<SlopeFit> fits;     // present when at least two dimensions were run
  MonitorVerdict monitor;
};

/// Least-squares slope and intercept of log y against log x.
std::pair<double, double> fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

/// Runs every cell (m, p, seed); cells are independent and executed on up to
/// `jobs` threads. The record does not depend on `jobs`.
ExperimentRecord search_extremal(const SearchConfig& config, int jobs = 1);

/// search_extremal over at least three dimensions, with slope fits.
ExperimentRecord growth_sweep(const SearchConfig& config, int jobs = 1);

/// One cell, exposed for tests.
CellResult run_cell(const SearchConfig& config, int m, std::size_t p_index, std::uint64_t seed);

}  // namespace opfunc

#endif  // OPFUNC_SEARCH_HPP
