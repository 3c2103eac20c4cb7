#include "opfunc/experiment_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "opfunc/matrix_io.hpp"

namespace opfunc {

namespace {

using nlohmann::json;

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("config: missing key '") + key + "'");
  return *it;
}

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ParseError("config: bad value for '" + key + "'");
  }
}

std::string get_string(const json& j, const std::string& key) {
  if (!j.is_string()) throw ParseError("config: '" + key + "' must be a string");
  return j.get<std::string>();
}

int get_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ParseError("config: '" + key + "' must be an integer");
  return j.get<int>();
}

double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ParseError("config: '" + key + "' must be a number");
  return j.get<double>();
}

bool get_bool(const json& j, const std::string& key) {
  if (!j.is_boolean()) throw ParseError("config: '" + key + "' must be a boolean");
  return j.get<bool>();
}

const json& get_array(const json& j, const std::string& key) {
  if (!j.is_array()) throw ParseError("config: '" + key + "' must be an array");
  return j;
}

SchattenExponent parse_exponent(const json& v) {
  try {
    if (v.is_string()) return SchattenExponent::parse(v.get<std::string>());
    if (v.is_number()) return SchattenExponent(v.get<double>());
  } catch (const DomainError& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  throw ParseError("config: p values must be numbers or \"inf\"");
}

json exponent_json(const SchattenExponent& p) {
  if (p.is_infinite()) return "inf";
  return p.value();
}

FamilyKind parse_family(const std::string& text) {
  if (text == "random") return FamilyKind::Random;
  if (text == "triangular") return FamilyKind::Triangular;
  if (text == "optimized") return FamilyKind::Optimized;
  throw ParseError("config: unknown family '" + text + "'");
}

SupportMask parse_mask(const json& v) {
  if (v.is_array()) {
    std::set<std::pair<int, int>> points;
    for (const auto& pt : v) {
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number_integer() || !pt[1].is_number_integer())
        throw ParseError("config: mask points must be [n1, n2] integer pairs");
      points.emplace(pt[0].get<int>(), pt[1].get<int>());
    }
    if (points.empty()) throw ParseError("config: mask is empty");
    return SupportMask::finite(std::move(points));
  }
  if (!v.is_object()) throw ParseError("config: mask must be a list of points or a rule object");
  std::optional<int> cutoff;
  std::string rule;
  double lo = 0, hi = 0;
  bool have_lo = false, have_hi = false;
  for (const auto& [key, val] : v.items()) {
    if (key == "rule") rule = get_string(val, "mask.rule");
    else if (key == "cutoff") cutoff = get_int(val, "mask.cutoff");
    else if (key == "lo") lo = get_number(val, "mask.lo"), have_lo = true;
    else if (key == "hi") hi = get_number(val, "mask.hi"), have_hi = true;
    else throw ParseError("config: unknown mask key '" + key + "'");
  }
  if (cutoff && *cutoff < 0) throw ParseError("config: mask cutoff must be nonnegative");
  if (rule == "full") return SupportMask::full(cutoff);
  if (rule == "quadrant") return SupportMask::quadrant(cutoff);
  if (rule == "sector") {
    if (!have_lo || !have_hi) throw ParseError("config: sector mask needs 'lo' and 'hi'");
    return SupportMask::sector(lo, hi, cutoff);
  }
  throw ParseError("config: unknown mask rule '" + rule + "'");
}

json mask_json(const SupportMask& mask) {
  if (mask.rule() == SupportMask::Rule::Finite) {
    json pts = json::array();
    for (const auto& [a, b] : mask.points()) pts.push_back({a, b});
    return pts;
  }
  return mask.describe();
}

std::string poly_text(const TrigPoly& f) {
  std::ostringstream os;
  write_trig_poly(os, f);
  return os.str();
}

TrigPoly poly_from_text(const std::string& text) {
  std::istringstream is(text);
  return read_trig_poly(is);
}

std::string matrix_text(const MatrixXcd& m) {
  std::ostringstream os;
  write_matrix(os, m);
  return os.str();
}

MatrixXcd matrix_from_text(const std::string& text) {
  std::istringstream is(text);
  return read_matrix(is);
}

json parse_document(std::istream& is, const char* what) {
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": invalid JSON: " + e.what());
  }
}

json config_json(const SearchConfig& c) {
  json j;
  j["mode"] = to_string(c.mode);
  j["dims"] = c.dims;
  json ps = json::array();
  for (const auto& p : c.p_values) ps.push_back(exponent_json(p));
  j["p_values"] = ps;
  j["budget"] = c.budget;
  j["seeds"] = c.seeds;
  j["norm_mode"] = to_string(c.norm_mode);
  if (c.mask) j["mask"] = mask_json(*c.mask);
  j["degree"] = c.degree;
  j["dilation"] = c.dilation;
  j["two_sided"] = c.two_sided;
  j["optimize_f"] = c.optimize_f;
  json fam = json::array();
  for (auto k : c.families) fam.push_back(to_string(k));
  j["families"] = fam;
  j["time_limit"] = c.time_limit;
  if (c.fixed_f) j["fixed_f"] = poly_text(*c.fixed_f);
  return j;
}

// JSON has no infinity or NaN; such values are written as strings.
json number_json(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

}  // namespace

SearchConfig parse_search_config(std::istream& is) {
  json doc = parse_document(is, "config");
  if (!doc.is_object()) throw ParseError("config: top level must be an object");
  SearchConfig c;
  require(doc, "mode");
  require(doc, "dims");
  require(doc, "p_values");
  require(doc, "budget");
  require(doc, "seeds");
  require(doc, "norm_mode");
  for (const auto& [key, v] : doc.items()) {
    if (key == "mode") {
      c.mode = parse_operator_mode(get_string(v, key));
    } else if (key == "dims") {
      c.dims.clear();
      for (const auto& d : get_array(v, key)) c.dims.push_back(get_int(d, key));
    } else if (key == "p_values") {
      c.p_values.clear();
      for (const auto& p : get_array(v, key)) c.p_values.push_back(parse_exponent(p));
    } else if (key == "budget") {
      c.budget = get_int(v, key);
    } else if (key == "seeds") {
      c.seeds.clear();
      for (const auto& s : get_array(v, key)) {
        if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<long long>() < 0))
          throw ParseError("config: seeds must be nonnegative integers");
        c.seeds.push_back(get_as<std::uint64_t>(s, key));
      }
    } else if (key == "norm_mode") {
      c.norm_mode = parse_norm_mode(get_string(v, key));
    } else if (key == "mask") {
      c.mask = parse_mask(v);
    } else if (key == "degree") {
      c.degree = get_int(v, key);
    } else if (key == "dilation") {
      c.dilation = get_number(v, key);
    } else if (key == "two_sided") {
      c.two_sided = get_bool(v, key);
    } else if (key == "optimize_f") {
      c.optimize_f = get_bool(v, key);
    } else if (key == "families") {
      c.families.clear();
      for (const auto& f : get_array(v, key)) c.families.push_back(parse_family(get_string(f, key)));
    } else if (key == "time_limit") {
      c.time_limit = get_number(v, key);
    } else if (key == "fixed_f") {
      c.fixed_f = poly_from_text(get_string(v, key));
    } else {
      throw ParseError("config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

SearchConfig load_search_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  return parse_search_config(in);
}

std::string search_config_json(const SearchConfig& config) { return config_json(config).dump(2); }

SupportMask parse_support_mask(const std::string& json_text) {
  std::istringstream is(json_text);
  return parse_mask(parse_document(is, "mask"));
}

void write_results_csv(std::ostream& os, const ExperimentRecord& record) {
  os << "mode,m,p,norm_mode,best_ratio,f_degree,besov_norm,sup_norm,pert_norm,seed,iters\n";
  const std::string mode = to_string(record.config.mode);
  const std::string norm = to_string(record.config.norm_mode);
  for (const auto& c : record.cells) {
    os << mode << ',' << c.m << ',' << c.p.to_string() << ',' << norm << ',' << format_sig17(c.best_ratio) << ','
       << c.f_degree << ',' << format_sig17(c.besov_norm) << ',' << format_sig17(c.sup_norm) << ','
       << format_sig17(c.pert_norm) << ',' << c.seed << ',' << c.iters << '\n';
  }
}

void write_summary_json(std::ostream& os, const ExperimentRecord& record) {
  json j;
  j["config"] = config_json(record.config);
  json cells = json::array();
  for (const auto& c : record.cells) {
    json cell;
    cell["m"] = c.m;
    cell["p"] = exponent_json(c.p);
    cell["seed"] = c.seed;
    cell["best_ratio"] = number_json(c.best_ratio);
    cell["source"] = c.source;
    cell["f_degree"] = c.f_degree;
    cell["besov_norm"] = number_json(c.besov_norm);
    cell["sup_norm"] = number_json(c.sup_norm);
    cell["pert_norm"] = number_json(c.pert_norm);
    cell["iters"] = c.iters;
    cell["timed_out"] = c.timed_out;
    json seeded = json::object();
    for (std::size_t i = 0; i < c.seeded_names.size() && i < c.seeded_ratios.size(); ++i)
      seeded[c.seeded_names[i]] = number_json(c.seeded_ratios[i]);
    cell["seeded_ratios"] = seeded;
    cells.push_back(cell);
  }
  j["cells"] = cells;
  json fits = json::array();
  for (const auto& f : record.fits) {
    json fit;
    fit["p"] = exponent_json(f.p);
    fit["dims"] = f.dims;
    json ratios = json::array();
    for (double r : f.best_ratios) ratios.push_back(number_json(r));
    fit["best_ratios"] = ratios;
    fit["slope"] = number_json(f.slope);
    fit["intercept"] = number_json(f.intercept);
    fit["reference_exponent_besov"] = number_json(f.reference_besov);
    fit["reference_exponent_sup"] = number_json(f.reference_sup);
    fit["reference_exponent_triple"] = number_json(f.reference_triple);
    fit["monotone"] = f.monotone;
    fits.push_back(fit);
  }
  j["fits"] = fits;
  json mon;
  mon["applicable"] = record.monitor.applicable;
  mon["pass"] = record.monitor.pass;
  mon["max_ratio"] = number_json(record.monitor.max_ratio);
  mon["threshold"] = record.monitor.threshold;
  j["monitor"] = mon;
  os << j.dump(2) << '\n';
}

void write_instance(std::ostream& os, const RatioInstance& inst) {
  json j;
  j["mode"] = to_string(inst.mode());
  j["p"] = exponent_json(inst.p);
  j["norm_mode"] = to_string(inst.norm_mode);
  j["dilation"] = inst.dilation;
  j["contractions"] = inst.contractions;
  j["f"] = poly_text(inst.f);
  json ops;
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, HermitianPairOps>) {
          ops["a1"] = matrix_text(o.a1.matrix());
          ops["a2"] = matrix_text(o.a2.matrix());
          ops["b1"] = matrix_text(o.b1.matrix());
          ops["b2"] = matrix_text(o.b2.matrix());
        } else if constexpr (std::is_same_v<T, UnitaryPairOps>) {
          ops["u1"] = matrix_text(o.u1.matrix());
          ops["u2"] = matrix_text(o.u2.matrix());
          ops["v"] = matrix_text(o.v.matrix());
        } else {
          ops["a"] = matrix_text(o.a.matrix());
          ops["b"] = matrix_text(o.b.matrix());
          ops["c1"] = matrix_text(o.c1.matrix());
          ops["c2"] = matrix_text(o.c2.matrix());
        }
      },
      inst.ops);
  j["operators"] = ops;
  os << j.dump(2) << '\n';
}

RatioInstance read_instance(std::istream& is) {
  json doc = parse_document(is, "instance");
  if (!doc.is_object()) throw ParseError("instance: top level must be an object");
  static const std::set<std::string> known{"mode", "p", "norm_mode", "dilation", "contractions", "f", "operators"};
  for (const auto& [key, v] : doc.items())
    if (!known.count(key)) throw ParseError("instance: unknown key '" + key + "'");
  const OperatorMode mode = parse_operator_mode(get_string(require(doc, "mode"), "mode"));
  const json& ops = require(doc, "operators");
  if (!ops.is_object()) throw ParseError("instance: 'operators' must be an object");
  auto mat = [&](const char* key) { return matrix_from_text(get_string(require(ops, key), key)); };

  auto make = [&]() -> OperatorSet {
    switch (mode) {
      case OperatorMode::Hermitian:
        return HermitianPairOps{Hermitian(mat("a1")), Hermitian(mat("a2")), Hermitian(mat("b1")),
                                Hermitian(mat("b2"))};
      case OperatorMode::Unitary:
        return UnitaryPairOps{Unitary(mat("u1")), Unitary(mat("u2")), Unitary(mat("v"))};
      case OperatorMode::Triple:
        break;
    }
    return TripleOps{Hermitian(mat("a")), Hermitian(mat("b")), Hermitian(mat("c1")), Hermitian(mat("c2"))};
  };
  RatioInstance inst{poly_from_text(get_string(require(doc, "f"), "f")), 1.0, make()};
  inst.p = parse_exponent(require(doc, "p"));
  inst.norm_mode = parse_norm_mode(get_string(require(doc, "norm_mode"), "norm_mode"));
  if (doc.contains("dilation")) inst.dilation = get_number(doc["dilation"], "dilation");
  if (doc.contains("contractions")) inst.contractions = get_bool(doc["contractions"], "contractions");
  inst.validate();
  return inst;
}

RatioInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open instance file '" + path + "'");
  return read_instance(in);
}

void save_instance(const std::string& path, const RatioInstance& inst) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write instance file '" + path + "'");
  write_instance(out, inst);
}

}  // namespace opfunc
