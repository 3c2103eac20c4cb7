#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "opfunc/besov.hpp"
#include "opfunc/experiment_io.hpp"
#include "opfunc/funcalc.hpp"
#include "opfunc/matrix_io.hpp"

namespace opfunc::cli {

namespace {

int default_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

std::string first_token(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::string tok;
  in >> tok;
  return tok;
}

bool same_file(const std::string& a, const std::string& b) {
  std::error_code ec;
  return std::filesystem::exists(a, ec) && std::filesystem::equivalent(a, b, ec);
}

// Refuses to overwrite an input file.
void check_output(const std::string& out, const std::vector<std::string>& inputs) {
  for (const auto& in : inputs)
    if (same_file(out, in)) throw ParseError("output path '" + out + "' is also an input");
}

std::string short_num(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

std::string sci(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << x;
  return os.str();
}

// eval ---------------------------------------------------------------------------

struct EvalArgs {
  std::string mode = "spectral";
  std::vector<std::string> files;
  std::string out;
  bool check = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const bool triple = a.mode == "triple";
  if (a.mode != "spectral" && a.mode != "fourier" && a.mode != "unitary" && !triple)
    throw ParseError("eval: unknown mode '" + a.mode + "' (spectral, fourier, unitary, triple)");
  const std::size_t need = triple ? 4 : 3;
  if (a.files.size() != need)
    throw ParseError("eval: expected a polynomial file and " + std::to_string(need - 1) + " matrix files");
  if (!a.out.empty()) check_output(a.out, a.files);

  const TrigPoly f = load_trig_poly(a.files[0]);
  if (f.dim() != (triple ? 3 : 2)) throw ParseError("eval: polynomial dimension does not match the mode");
  std::vector<MatrixXcd> m;
  for (std::size_t i = 1; i < a.files.size(); ++i) m.push_back(load_matrix(a.files[i]));

  MatrixXcd result, other;
  if (a.mode == "unitary") {
    const Unitary u(m[0]), v(m[1]);
    result = eval_unitary_pair(f, u, v);
    if (a.check) other = eval_pair_trig(f, eig_unitary(u), eig_unitary(v), true);
  } else if (triple) {
    const Hermitian x(m[0]), y(m[1]), z(m[2]);
    result = eval_triple_trig(f, eig_hermitian(x), eig_hermitian(y), eig_hermitian(z));
    if (a.check) other = eval_triple_fourier(f, x, y, z);
  } else {
    const Hermitian x(m[0]), y(m[1]);
    const bool fourier = a.mode == "fourier";
    auto spectral = [&] { return eval_pair_trig(f, eig_hermitian(x), eig_hermitian(y), false); };
    result = fourier ? eval_pair_fourier(f, x, y) : spectral();
    if (a.check) other = fourier ? spectral() : eval_pair_fourier(f, x, y);
  }

  if (a.out.empty()) {
    write_matrix(out, result);
  } else {
    save_matrix(a.out, result);
  }
  if (!a.check) return kOk;
  const double residual = (result - other).cwiseAbs().maxCoeff();
  const double tol = check_tolerance() * (1 + fourier_l1(f));
  const bool ok = residual <= tol;
  out << "residual " << sci(residual) << " <= " << sci(tol) << ' ' << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kOk : kCheckFailed;
}

// norm ---------------------------------------------------------------------------

struct NormArgs {
  std::string file;
  std::string p = "2";
  int s = 1;
};

int cmd_norm(const NormArgs& a, std::ostream& out) {
  const SchattenExponent p = SchattenExponent::parse(a.p);
  const std::string tok = first_token(a.file);
  if (tok == "dim") {
    out << format_sig17(schatten_norm(load_matrix(a.file), p)) << '\n';
    return kOk;
  }
  if (tok != "d") throw ParseError("norm: '" + a.file + "' is neither a matrix nor a polynomial file");
  const TrigPoly f = load_trig_poly(a.file);
  const double besov = besov_norm(f, a.s);
  const double l1 = fourier_l1(f);
  out << "besov_s" << a.s << ' ' << format_sig17(besov) << '\n';
  out << "fourier_l1 " << format_sig17(l1) << '\n';
  out << "tensor_bound " << format_sig17(tensor_norm_bound(f)) << '\n';
  out << "sup " << format_sig17(sup_norm(f)) << '\n';
  if (a.s == 1) {
    const bool ok = l1 <= 5 * besov * (1 + 1e-12);
    out << "fourier_l1 <= 5 besov " << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? kOk : kCheckFailed;
  }
  return kOk;
}

// search / sweep -----------------------------------------------------------------

struct SearchArgs {
  std::string config;
  std::string out;
  int jobs = default_jobs();
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> p_values;
  std::string mode;
  std::string norm_mode;
  std::optional<int> budget;
};

SearchConfig default_sweep_config() {
  SearchConfig c;
  c.mode = OperatorMode::Unitary;
  c.dims = {4, 8, 16, 32};
  c.p_values = {SchattenExponent(2), SchattenExponent(4), SchattenExponent::infinity()};
  c.budget = 200;
  return c;
}

SearchConfig resolve_config(const SearchArgs& a, bool sweep) {
  if (a.config.empty() && !sweep) throw ParseError("search: a config file is required");
  SearchConfig c = a.config.empty() ? default_sweep_config() : load_search_config(a.config);
  if (!a.seeds.empty()) c.seeds = a.seeds;
  if (!a.p_values.empty()) {
    c.p_values.clear();
    for (const auto& p : a.p_values) {
      try {
        c.p_values.push_back(SchattenExponent::parse(p));
      } catch (const DomainError& e) {
        throw ParseError(std::string("config: ") + e.what());
      }
    }
  }
  if (!a.mode.empty()) c.mode = parse_operator_mode(a.mode);
  if (!a.norm_mode.empty()) c.norm_mode = parse_norm_mode(a.norm_mode);
  if (a.budget) c.budget = *a.budget;
  c.validate();
  if (sweep) {
    const std::set<int> distinct(c.dims.begin(), c.dims.end());
    if (distinct.size() < 3) throw ParseError("config: a sweep needs at least three distinct dimensions");
  }
  return c;
}

void print_summary(std::ostream& out, const ExperimentRecord& rec) {
  for (const auto& c : rec.cells)
    out << "cell m=" << c.m << " p=" << c.p.to_string() << " seed=" << c.seed << " ratio=" << short_num(c.best_ratio)
        << " source=" << c.source << " iters=" << c.iters << (c.timed_out ? " timed-out" : "") << '\n';
  for (const auto& f : rec.fits) {
    out << "fit p=" << f.p.to_string() << " slope=" << short_num(f.slope) << " reference besov=" << short_num(f.reference_besov)
        << " sup=" << short_num(f.reference_sup) << " triple=" << short_num(f.reference_triple)
        << " monotone=" << (f.monotone ? "yes" : "no") << '\n';
  }
  if (rec.monitor.applicable)
    out << "monitor p=2 max ratio " << short_num(rec.monitor.max_ratio) << " threshold "
        << short_num(rec.monitor.threshold) << ' ' << (rec.monitor.pass ? "PASS" : "FAIL") << '\n';
}

int cmd_search(const SearchArgs& a, bool sweep, std::ostream& out, std::ostream& err) {
  const SearchConfig cfg = resolve_config(a, sweep);
  const std::string csv_path = a.out + ".csv", json_path = a.out + ".json";
  if (!a.out.empty()) {
    check_output(csv_path, {a.config});
    check_output(json_path, {a.config});
  }
  const ExperimentRecord rec = sweep ? growth_sweep(cfg, a.jobs) : search_extremal(cfg, a.jobs);
  if (a.out.empty()) {
    write_results_csv(out, rec);
  } else {
    std::ofstream csv(csv_path), js(json_path);
    if (!csv || !js) throw ParseError("cannot write outputs with prefix '" + a.out + "'");
    write_results_csv(csv, rec);
    write_summary_json(js, rec);
    print_summary(out, rec);
  }
  if (rec.monitor.applicable && !rec.monitor.pass) {
    err << "boundedness monitor failed: ratio " << short_num(rec.monitor.max_ratio) << " > "
        << short_num(rec.monitor.threshold) << '\n';
    return kCheckFailed;
  }
  return kOk;
}

// witness --------------------------------------------------------------------------

struct WitnessArgs {
  std::vector<std::string> files;
  std::string p;
  int synthetic = 0;
  std::string from;
  int blocks = 8;
  int subdivisions = 4;
  double delta = 0.01;
  std::string out;
};

int cmd_witness(const WitnessArgs& a, std::ostream& out) {
  const int sources = (!a.files.empty()) + (a.synthetic > 0) + (!a.from.empty());
  if (sources != 1) throw ParseError("witness: give block files, --synthetic K or --from FILE");

  std::vector<RatioInstance> blocks;
  std::optional<SchattenExponent> p;
  if (!a.p.empty()) p = SchattenExponent::parse(a.p);
  if (a.synthetic > 0) {
    if (!p) p = SchattenExponent(4);
    blocks = synthetic_witness_blocks(a.synthetic, *p, a.delta);
  } else if (!a.from.empty()) {
    const RatioInstance inst = load_instance(a.from);
    if (!p) p = inst.p;
    blocks = build_witness_blocks(inst, a.blocks, a.subdivisions);
  } else {
    for (std::size_t k = 0; k < a.files.size(); ++k) {
      try {
        blocks.push_back(load_instance(a.files[k]));
      } catch (const ParseError& e) {
        throw ParseError("block " + std::to_string(k + 1) + " (" + a.files[k] + "): " + e.what());
      } catch (const DomainError& e) {
        throw DomainError("block " + std::to_string(k + 1) + " (" + a.files[k] + "): " + e.what());
      }
    }
    if (!p) p = blocks.front().p;
  }
  for (auto& b : blocks) b.p = *p;

  const WitnessReport r = block_witness(blocks, *p);
  if (!a.out.empty()) {
    std::vector<std::string> inputs = a.files;
    if (!a.from.empty()) inputs.push_back(a.from);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const std::string path = a.out + "_" + std::to_string(k + 1) + ".json";
      check_output(path, inputs);
      save_instance(path, blocks[k]);
    }
  }

  out << "p " << p->to_string() << " blocks " << r.blocks << '\n';
  double pert = 0, inc = 0;
  const double pv = p->value();
  for (int k = 0; k < r.blocks; ++k) {
    const auto i = static_cast<std::size_t>(k);
    pert += std::pow(r.perturbations[i], pv);
    inc += std::pow(r.increments[i], pv);
    out << "block " << k + 1 << " perturbation " << format_sig17(r.perturbations[i]) << " increment "
        << format_sig17(r.increments[i]) << " partial sums " << format_sig17(pert) << ' ' << format_sig17(inc) << '\n';
  }
  out << "direct sum perturbation^p " << format_sig17(r.direct_sum_perturbation) << " increment^p "
      << format_sig17(r.direct_sum_increment) << " consistency " << sci(r.consistency) << '\n';
  out << "perturbation sum bounded: " << format_sig17(r.perturbation_sum) << " < 1 "
      << (r.perturbation_bounded ? "PASS" : "FAIL") << '\n';
  out << "increment sum \xE2\x89\xA5 " << r.blocks << ": " << format_sig17(r.increment_sum) << ' '
      << (r.increment_diverges ? "PASS" : "FAIL") << '\n';
  const bool consistent = r.consistency <= std::max(check_tolerance(), 1e-10);
  if (!consistent) out << "direct sum mismatch " << sci(r.consistency) << " FAIL\n";
  return r.perturbation_bounded && r.increment_diverges && consistent ? kOk : kCheckFailed;
}

// kappa ----------------------------------------------------------------------------

struct KappaArgs {
  std::string mask;
  int m = 1;
  int n_max = 64;
};

int cmd_kappa(const KappaArgs& a, std::ostream& out) {
  std::string text = a.mask;
  std::error_code ec;
  if (std::filesystem::is_regular_file(a.mask, ec)) {
    std::ifstream in(a.mask);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  const SupportMask mask = parse_support_mask(text);
  const auto k = kappa_lambda(mask, a.m, a.n_max);
  if (!k) {
    out << "kappa none (no " << a.m << "x" << a.m << " square within N <= " << a.n_max << ")\n";
    return kOk;
  }
  out << "kappa " << *k << '\n';
  return kOk;
}

}  // namespace

double check_tolerance() {
  const char* env = std::getenv("OPFUNC_TOL");
  if (!env || !*env) return 1e-8;
  char* end = nullptr;
  const double tol = std::strtod(env, &end);
  if (end == env || *end != '\0' || !(tol > 0)) throw ParseError("OPFUNC_TOL must be a positive number");
  return tol;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Functions of noncommuting matrices: evaluation, norms and Lipschitz-ratio experiments", "opfunc"};
  app.require_subcommand(1);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate f(A, B), f(U, V) or f(A, B, C)");
  eval->add_option("--mode", ea.mode, "spectral | fourier | unitary | triple")->capture_default_str();
  eval->add_option("files", ea.files, "Polynomial file followed by the matrix files")->required();
  eval->add_option("--out", ea.out, "Result matrix file (stdout when omitted)");
  eval->add_flag("--check", ea.check, "Also run the other definition and print the residual");

  NormArgs na;
  auto* norm = app.add_subcommand("norm", "Schatten norm of a matrix or Besov-type norms of a polynomial");
  norm->add_option("file", na.file, "Matrix or polynomial file")->required();
  norm->add_option("--p", na.p, "Schatten exponent (number or inf)")->capture_default_str();
  norm->add_option("--s", na.s, "Besov smoothness")->capture_default_str();

  SearchArgs sa;
  auto add_search_options = [&](CLI::App* sub) {
    sub->add_option("--out", sa.out, "Output prefix for <prefix>.csv and <prefix>.json");
    sub->add_option("--jobs", sa.jobs, "Worker threads (default: logical cores)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", sa.seeds, "Seed list overriding the config");
    sub->add_option("--p", sa.p_values, "Exponent list overriding the config");
    sub->add_option("--mode", sa.mode, "Operator mode overriding the config (hermitian | unitary | triple)");
    sub->add_option("--norm-mode", sa.norm_mode, "besov | sup, overriding the config");
    sub->add_option("--budget", sa.budget, "Evaluation budget per cell overriding the config");
  };
  auto* search = app.add_subcommand("search", "Run an extremal search from a config file");
  search->add_option("config", sa.config, "Config JSON")->required();
  add_search_options(search);
  auto* sweep = app.add_subcommand("sweep", "Growth sweep with slope fits (default: unitary desk sweep)");
  sweep->add_option("config", sa.config, "Config JSON");
  add_search_options(sweep);

  WitnessArgs wa;
  auto* witness = app.add_subcommand("witness", "Check a direct-sum witness built from blocks");
  witness->add_option("files", wa.files, "Block instance files, in order k = 1, 2, ...");
  witness->add_option("--p", wa.p, "Schatten exponent (finite)");
  witness->add_option("--synthetic", wa.synthetic, "Use K synthetic scalar blocks");
  witness->add_option("--from", wa.from, "Build blocks from a Hermitian instance with ratio > 2");
  witness->add_option("--blocks", wa.blocks, "Number of blocks for --from")->capture_default_str();
  witness->add_option("--subdivisions", wa.subdivisions, "Subdivisions for --from")->capture_default_str();
  witness->add_option("--delta", wa.delta, "Increment excess of synthetic blocks")->capture_default_str();
  witness->add_option("--out", wa.out, "Save the blocks as <prefix>_<k>.json");

  KappaArgs ka;
  auto* kappa = app.add_subcommand("kappa", "Smallest box radius holding an m x m square of a support mask");
  kappa->add_option("--mask", ka.mask, "Mask as JSON text or a JSON file")->required();
  kappa->add_option("--m", ka.m, "Square side")->required()->check(CLI::PositiveNumber);
  kappa->add_option("--n-max", ka.n_max, "Largest radius tried")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*eval) return cmd_eval(ea, out);
    if (*norm) return cmd_norm(na, out);
    if (*search) return cmd_search(sa, false, out, err);
    if (*sweep) return cmd_search(sa, true, out, err);
    if (*witness) return cmd_witness(wa, out);
    if (*kappa) return cmd_kappa(ka, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const DomainError& e) {
    err << "precondition violated: " << e.what() << '\n';
    return kDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace opfunc::cli
