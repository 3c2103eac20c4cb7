#ifndef OPFUNC_EXPERIMENT_IO_HPP
#define OPFUNC_EXPERIMENT_IO_HPP

#include <iosfwd>
#include <string>

#include "opfunc/search.hpp"

namespace opfunc {

// Experiment configuration (JSON):
//
//   {"mode": "hermitian" | "unitary" | "triple",
//    "dims": [int], "p_values": [number | "inf"], "budget": int, "seeds": [int],
//    "norm_mode": "besov" | "sup",
//    "mask": [[n1, n2], ...] | {"rule": "full" | "quadrant" | "sector", "lo", "hi", "cutoff"},
//    "degree": int, "dilation": number, "two_sided": bool, "optimize_f": bool,
//    "families": ["triangular", "optimized", "random"], "time_limit": seconds,
//    "fixed_f": "<polynomial text>"}
//
// mode, dims, p_values, budget, seeds and norm_mode are required; unknown keys
// are rejected. All errors are ParseError.
SearchConfig parse_search_config(std::istream& is);
SearchConfig load_search_config(const std::string& path);
std::string search_config_json(const SearchConfig& config);

/// A mask in the config syntax: a point list or a rule object.
SupportMask parse_support_mask(const std::string& json_text);

/// mode,m,p,norm_mode,best_ratio,f_degree,besov_norm,sup_norm,pert_norm,seed,iters
void write_results_csv(std::ostream& os, const ExperimentRecord& record);

/// Config echo, per-cell details, slope fits with reference exponents and the
/// boundedness monitor.
void write_summary_json(std::ostream& os, const ExperimentRecord& record);

// Instance files (JSON) embed the polynomial and matrices in their text formats.
void write_instance(std::ostream& os, const RatioInstance& inst);
RatioInstance read_instance(std::istream& is);
RatioInstance load_instance(const std::string& path);
void save_instance(const std::string& path, const RatioInstance& inst);

}  // namespace opfunc

#endif  // OPFUNC_EXPERIMENT_IO_HPP
