#include "opfunc/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include <Eigen/SVD>

namespace opfunc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Smaller perturbations let cancellation error in the increment dominate the ratio.
constexpr double kMinPerturbation = 1e-6;

std::uint64_t cell_stream(std::uint64_t seed, int m, std::size_t p_index) {
  using detail::splitmix64;
  return splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(m)) ^ p_index);
}

// Operator slots: Hermitian (A1, A2, B1, B2), unitary (U1, U2, V), triple (A, B, C1, C2).
int slot_count(const RatioInstance& inst) { return inst.mode() == OperatorMode::Unitary ? 3 : 4; }

const MatrixXcd& slot(const RatioInstance& inst, int i) {
  if (const auto* o = std::get_if<HermitianPairOps>(&inst.ops)) {
    const Hermitian* s[] = {&o->a1, &o->a2, &o->b1, &o->b2};
    return s[i]->matrix();
  }
  if (const auto* o = std::get_if<UnitaryPairOps>(&inst.ops)) {
    const Unitary* s[] = {&o->u1, &o->u2, &o->v};
    return s[i]->matrix();
  }
  const auto& t = std::get<TripleOps>(inst.ops);
  const Hermitian* s[] = {&t.a, &t.b, &t.c1, &t.c2};
  return s[i]->matrix();
}

void set_slot(RatioInstance& inst, int i, const MatrixXcd& m) {
  if (auto* o = std::get_if<HermitianPairOps>(&inst.ops)) {
    Hermitian* s[] = {&o->a1, &o->a2, &o->b1, &o->b2};
    *s[i] = Hermitian(m);
  } else if (auto* o = std::get_if<UnitaryPairOps>(&inst.ops)) {
    Unitary* s[] = {&o->u1, &o->u2, &o->v};
    *s[i] = Unitary(m);
  } else {
    auto& t = std::get<TripleOps>(inst.ops);
    Hermitian* s[] = {&t.a, &t.b, &t.c1, &t.c2};
    *s[i] = Hermitian(m);
  }
}

Spectrum decompose(const RatioInstance& inst, int i) {
  if (const auto* o = std::get_if<UnitaryPairOps>(&inst.ops)) {
    const Unitary* s[] = {&o->u1, &o->u2, &o->v};
    return eig_unitary(*s[i]);
  }
  return eig_hermitian(Hermitian(slot(inst, i)));
}

MatrixXcd nearest_unitary(const MatrixXcd& m) {
  Eigen::JacobiSVD<MatrixXcd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

MatrixXcd project_contraction(const MatrixXcd& m) {
  const MatrixXcd h = (m + m.adjoint()) / 2.0;
  const double op = operator_norm<double>(h);
  return op > 1 ? MatrixXcd(h / op) : h;
}

MatrixXcd random_direction(Index n, std::mt19937_64& rng) {
  const MatrixXcd z = complex_gaussian<double>(n, n, rng);
  MatrixXcd h = (z + z.adjoint()) / 2.0;
  const double op = operator_norm<double>(h);
  return op > 0 ? MatrixXcd(h / op) : h;
}

TrigPoly restrict_to_mask(const TrigPoly& f, const SupportMask& mask) {
  TrigPoly out(2);
  for (const auto& [j, c] : f.coefficients())
    if (mask.contains(j[0], j[1])) out.set(j, c);
  if (out.is_zero()) throw DomainError("support mask leaves no coefficients in the degree box");
  out.set_support_mask(mask);
  return out;
}

// An instance with cached spectra and the pieces of its ratio.
struct State {
  RatioInstance inst;
  std::vector<Spectrum> spectra;
  double fnorm = 0;
  double ratio = kNegInf;
};

double perturbation_of(const State& s) { return perturbation_norm(s.inst); }

MatrixXcd increment_of(const State& s) {
  const auto& sp = s.spectra;
  const TrigPoly& f = s.inst.f;
  switch (s.inst.mode()) {
    case OperatorMode::Hermitian:
      return eval_pair_trig(f, sp[0], sp[2], false, s.inst.dilation) -
             eval_pair_trig(f, sp[1], sp[3], false, s.inst.dilation);
    case OperatorMode::Unitary:
      return eval_pair_trig(f, sp[0], sp[2], true) - eval_pair_trig(f, sp[1], sp[2], true);
    case OperatorMode::Triple:
      return eval_triple_trig(f, sp[0], sp[1], sp[2], s.inst.dilation) -
             eval_triple_trig(f, sp[0], sp[1], sp[3], s.inst.dilation);
  }
  return {};
}

void refresh_ratio(State& s) {
  const double pert = perturbation_of(s);
  if (!(pert >= kMinPerturbation) || !(s.fnorm > 0)) {
    s.ratio = kNegInf;
    return;
  }
  s.ratio = schatten_norm(increment_of(s), s.inst.p) / (s.fnorm * pert);
}

State make_state(const RatioInstance& inst, double fnorm) {
  State s{inst, {}, fnorm, kNegInf};
  for (int i = 0; i < slot_count(inst); ++i) s.spectra.push_back(decompose(inst, i));
  refresh_ratio(s);
  return s;
}

struct Seeded {
  std::string name;
  RatioInstance inst;
};

std::vector<Seeded> seeded_candidates(const SearchConfig& cfg, int m, const SchattenExponent& p, std::uint64_t seed) {
  std::vector<Seeded> out;
  auto finish = [&](RatioInstance inst) {
    if (cfg.fixed_f) inst.f = *cfg.fixed_f;
    if (cfg.mask && inst.mode() == OperatorMode::Hermitian && !cfg.fixed_f) inst.f = restrict_to_mask(inst.f, *cfg.mask);
    return inst;
  };
  switch (cfg.mode) {
    case OperatorMode::Unitary:
      for (FamilyKind kind : cfg.families)
        out.push_back({"seeded:" + to_string(kind), finish(seeded_family(m, kind, p, cfg.norm_mode, seed, cfg.mask))});
      break;
    case OperatorMode::Hermitian:
      for (std::uint64_t t = 0; t < 3; ++t) {
        RatioInstance inst = seeded_hermitian(m, cfg.degree, 3 * seed + t, p, cfg.norm_mode, cfg.two_sided);
        inst.dilation = cfg.dilation;
        out.push_back({"seeded:hermitian:" + std::to_string(t), finish(std::move(inst))});
      }
      break;
    case OperatorMode::Triple:
      for (std::uint64_t t = 0; t < 3; ++t) {
        RatioInstance inst = seeded_triple(m, cfg.degree, 3 * seed + t, p, cfg.norm_mode);
        inst.dilation = cfg.dilation;
        out.push_back({"seeded:triple:" + std::to_string(t), finish(std::move(inst))});
      }
      break;
  }
  return out;
}

// Local ascent from the best seeded candidate.
class Ascent {
 public:
  Ascent(const SearchConfig& cfg, const RatioInstance& start, std::uint64_t stream)
      : rng_(stream),
        track_f_(cfg.optimize_f && !cfg.fixed_f),
        tied_b_(start.mode() == OperatorMode::Hermitian && !cfg.two_sided && !start.two_sided()),
        tracker_(track_f_ ? std::optional<NormTracker>(std::in_place, start.f, start.f.lower(), start.f.upper())
                          : std::nullopt),
        lo_(start.f.lower()),
        hi_(start.f.upper()),
        state_(make_state(start, tracked_norm(start))) {
    for (const auto& [j, c] : start.f.coefficients()) mean_abs_ += std::abs(c);
    mean_abs_ /= static_cast<double>(std::max<std::size_t>(start.f.size(), 1));
    for (int i = 0; i < slot_count(start); ++i) movable_.push_back(i);
    if (tied_b_) movable_.pop_back();
    step_.assign(static_cast<std::size_t>(slot_count(start)), kInitialStep);
    halvings_.assign(step_.size(), 0);
  }

  // Runs until `budget` evaluations are spent or the clock runs out.
  void run(int budget, const std::chrono::steady_clock::time_point* deadline) {
    int iter = 0;
    while (evals_ < budget) {
      if (deadline && std::chrono::steady_clock::now() > *deadline) {
        timed_out_ = true;
        break;
      }
      if (iter % 20 == 19)
        restart();
      else if (track_f_ && iter % 3 == 2)
        coefficient_move(budget);
      else
        operator_move(budget, movable_[static_cast<std::size_t>(iter) % movable_.size()]);
      ++iter;
    }
  }

  const State& state() const { return state_; }
  int evaluations() const { return evals_; }
  bool timed_out() const { return timed_out_; }

 private:
  static constexpr double kInitialStep = 0.25;

  double tracked_norm(const RatioInstance& inst) const {
    if (!tracker_) return function_norm(inst);
    return inst.norm_mode == NormMode::Besov ? inst.dilation * tracker_->besov() : tracker_->sup();
  }

  bool consider(State cand) {
    ++evals_;
    if (cand.ratio > state_.ratio) {
      state_ = std::move(cand);
      return true;
    }
    return false;
  }

  State with_slot(int i, const MatrixXcd& m) const {
    State cand = state_;
    set_slot(cand.inst, i, m);
    cand.spectra[static_cast<std::size_t>(i)] = decompose(cand.inst, i);
    if (tied_b_ && i == 2) {
      set_slot(cand.inst, 3, m);
      cand.spectra[3] = cand.spectra[2];
    }
    refresh_ratio(cand);
    return cand;
  }

  MatrixXcd moved(int i, const MatrixXcd& dir, double eps) const {
    const MatrixXcd& x = slot(state_.inst, i);
    if (state_.inst.mode() == OperatorMode::Unitary) {
      MatrixXcd u = x * exp_i(eig_hermitian(Hermitian(dir)), eps);
      const double drift =
          (u * u.adjoint() - MatrixXcd::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
      return drift > 1e-12 ? nearest_unitary(u) : u;
    }
    const MatrixXcd y = x + eps * dir;
    return state_.inst.contractions ? project_contraction(y) : MatrixXcd((y + y.adjoint()) / 2.0);
  }

  void operator_move(int budget, int i) {
    const auto k = static_cast<std::size_t>(i);
    const MatrixXcd dir = random_direction(state_.inst.dim(), rng_);
    bool accepted = consider(with_slot(i, moved(i, dir, step_[k])));
    if (!accepted && state_.inst.mode() != OperatorMode::Unitary && evals_ < budget)
      accepted = consider(with_slot(i, moved(i, dir, -step_[k])));
    if (accepted) {
      step_[k] = std::min(1.0, step_[k] * 1.5);
      halvings_[k] = 0;
    } else if (++halvings_[k] > 10) {
      step_[k] = kInitialStep;
      halvings_[k] = 0;
    } else {
      step_[k] /= 2;
    }
  }

  void coefficient_move(int budget) {
    std::uniform_int_distribution<int> pick[3] = {std::uniform_int_distribution<int>(lo_[0], hi_[0]),
                                                   std::uniform_int_distribution<int>(lo_[1], hi_[1]),
                                                   std::uniform_int_distribution<int>(lo_[2], hi_[2])};
    MultiIndex j{};
    for (int attempt = 0; attempt < 64; ++attempt) {
      j = {pick[0](rng_), pick[1](rng_), pick[2](rng_)};
      const auto& mask = state_.inst.f.support_mask();
      if (!mask || mask->contains(j[0], j[1])) break;
    }
    const auto& mask = state_.inst.f.support_mask();
    if (mask && !mask->contains(j[0], j[1])) {
      ++evals_;
      return;
    }
    std::uniform_real_distribution<double> angle(0, 2 * kPi);
    const double scale = coeff_step_ * std::max(std::abs(state_.inst.f.coeff(j)), mean_abs_);
    const cd delta = std::polar(scale, angle(rng_));

    bool accepted = false;
    for (const cd d : {delta, -delta}) {
      if (accepted || evals_ >= budget) break;
      const auto [sup, besov] = tracker_->peek(j, d);
      State cand = state_;
      cand.inst.f.add(j, d);
      cand.fnorm = state_.inst.norm_mode == NormMode::Besov ? state_.inst.dilation * besov : sup;
      refresh_ratio(cand);
      if (consider(std::move(cand))) {
        tracker_->add(j, d);
        accepted = true;
      }
    }
    coeff_step_ = accepted ? std::min(1.0, coeff_step_ * 1.5) : std::max(coeff_step_ / 2, 1e-6);
  }

  void restart() {
    const Index n = state_.inst.dim();
    State cand = state_;
    if (cand.inst.mode() == OperatorMode::Unitary) {
      for (int i = 0; i < 3; ++i) set_slot(cand.inst, i, haar_unitary<double>(n, rng_).matrix());
    } else {
      for (int i = 0; i < 4; ++i)
        set_slot(cand.inst, i, random_hermitian_contraction<double>(n, rng_).matrix());
      // Keep the perturbed operator close to its partner.
      const int base = cand.inst.mode() == OperatorMode::Hermitian ? 0 : 2;
      set_slot(cand.inst, base + 1, project_contraction(slot(cand.inst, base) + 0.1 * random_direction(n, rng_)));
      if (tied_b_)
        set_slot(cand.inst, 3, slot(cand.inst, 2));
      else if (cand.inst.mode() == OperatorMode::Hermitian)
        set_slot(cand.inst, 3, project_contraction(slot(cand.inst, 2) + 0.1 * random_direction(n, rng_)));
    }
    for (int i = 0; i < slot_count(cand.inst); ++i) cand.spectra[static_cast<std::size_t>(i)] = decompose(cand.inst, i);
    refresh_ratio(cand);
    consider(std::move(cand));
  }

  std::mt19937_64 rng_;
  bool track_f_;
  bool tied_b_;
  std::optional<NormTracker> tracker_;
  MultiIndex lo_, hi_;
  State state_;
  double mean_abs_ = 0;
  double coeff_step_ = 0.25;
  std::vector<int> movable_;
  std::vector<double> step_;
  std::vector<int> halvings_;
  int evals_ = 0;
  bool timed_out_ = false;
};

}  // namespace

void SearchConfig::validate() const {
  if (dims.empty()) throw ParseError("config: dims must be a non-empty list");
  for (int m : dims) {
    if (m < 1) throw ParseError("config: dimensions must be positive");
    if (mode == OperatorMode::Unitary && m < 2) throw ParseError("config: unitary mode needs dimensions >= 2");
  }
  if (p_values.empty()) throw ParseError("config: p_values must be a non-empty list");
  if (budget < 0) throw ParseError("config: budget must be >= 0");
  if (seeds.empty()) throw ParseError("config: seeds must be a non-empty list");
  if (degree < 0) throw ParseError("config: degree must be >= 0");
  if (!(dilation > 0)) throw ParseError("config: dilation must be positive");
  if (mode == OperatorMode::Unitary && dilation != 1.0) throw ParseError("config: unitary mode uses dilation 1");
  if (mask && mode == OperatorMode::Triple) throw ParseError("config: support masks apply to pair modes only");
  if (two_sided && mode != OperatorMode::Hermitian) throw ParseError("config: two_sided applies to hermitian mode");
  if (fixed_f && fixed_f->dim() != (mode == OperatorMode::Triple ? 3 : 2))
    throw ParseError("config: fixed polynomial has the wrong dimension for this mode");
  if (mode == OperatorMode::Unitary && families.empty()) throw ParseError("config: families must be non-empty");
  if (time_limit < 0) throw ParseError("config: time_limit must be >= 0");
}

std::pair<double, double> fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_loglog needs at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) return {std::nan(""), std::nan("")};
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 0)) throw DomainError("fit_loglog needs at least two distinct x values");
  const double slope = (n * sxy - sx * sy) / den;
  return {slope, (sy - slope * sx) / n};
}

CellResult run_cell(const SearchConfig& cfg, int m, std::size_t p_index, std::uint64_t seed) {
  const SchattenExponent& p = cfg.p_values.at(p_index);
  const auto start_time = std::chrono::steady_clock::now();
  CellResult cell;
  cell.m = m;
  cell.p_index = p_index;
  cell.p = p;
  cell.seed = seed;

  std::optional<RatioInstance> best;
  double best_ratio = kNegInf;
  for (auto& s : seeded_candidates(cfg, m, p, seed)) {
    const double r = lipschitz_ratio(s.inst);
    cell.seeded_ratios.push_back(r);
    cell.seeded_names.push_back(s.name);
    if (r > best_ratio) best_ratio = r, best = s.inst, cell.source = s.name;
  }

  if (cfg.budget > 0) {
    Ascent ascent(cfg, *best, cell_stream(seed, m, p_index));
    const auto deadline = start_time + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                           std::chrono::duration<double>(cfg.time_limit));
    ascent.run(cfg.budget, cfg.time_limit > 0 ? &deadline : nullptr);
    cell.iters = ascent.evaluations();
    cell.timed_out = ascent.timed_out();
    const RatioInstance& found = ascent.state().inst;
    // Tracked norms can differ from the canonical ones in the last digits;
    // keep whichever candidate is better under the canonical ratio.
    const double r = lipschitz_ratio(found);
    if (r > best_ratio) best_ratio = r, best = found, cell.source = "ascent";
  }

  cell.best_ratio = best_ratio;
  cell.best = best;
  cell.besov_norm = best->dilation * besov_norm(best->f, 1);
  cell.sup_norm = sup_norm(best->f);
  cell.pert_norm = perturbation_norm(*best);
  cell.f_degree = best->f.degree();
  return cell;
}

ExperimentRecord search_extremal(const SearchConfig& cfg, int jobs) {
  cfg.validate();
  if (jobs < 1) throw DomainError("jobs must be >= 1");

  struct Task {
    int m;
    std::size_t p_index;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (int m : cfg.dims)
    for (std::size_t pi = 0; pi < cfg.p_values.size(); ++pi)
      for (std::uint64_t seed : cfg.seeds) tasks.push_back({m, pi, seed});

  ExperimentRecord rec;
  rec.config = cfg;
  rec.cells.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        rec.cells[i] = run_cell(cfg, tasks[i].m, tasks[i].p_index, tasks[i].seed);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(jobs, static_cast<int>(tasks.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  const std::set<int> distinct(cfg.dims.begin(), cfg.dims.end());
  if (distinct.size() >= 2) {
    for (std::size_t pi = 0; pi < cfg.p_values.size(); ++pi) {
      SlopeFit fit;
      fit.p = cfg.p_values[pi];
      const double inv_p = fit.p.is_infinite() ? 0.0 : 1.0 / fit.p.value();
      fit.reference_besov = 0.5 - inv_p;
      fit.reference_sup = 1.5 - inv_p;
      std::vector<double> xs;
      for (int m : distinct) {
        double best = kNegInf;
        for (const auto& c : rec.cells)
          if (c.m == m && c.p_index == pi) best = std::max(best, c.best_ratio);
        fit.dims.push_back(m);
        fit.best_ratios.push_back(best);
        xs.push_back(m);
      }
      std::tie(fit.slope, fit.intercept) = fit_loglog(xs, fit.best_ratios);
      fit.monotone = std::is_sorted(fit.best_ratios.begin(), fit.best_ratios.end());
      rec.fits.push_back(std::move(fit));
    }
  }

  for (const auto& c : rec.cells) {
    if (cfg.norm_mode != NormMode::Besov || c.p.is_infinite() || c.p.value() != 2.0) continue;
    rec.monitor.applicable = true;
    rec.monitor.max_ratio = std::max(rec.monitor.max_ratio, c.best_ratio);
  }
  rec.monitor.pass = !rec.monitor.applicable || rec.monitor.max_ratio <= rec.monitor.threshold;
  return rec;
}

ExperimentRecord growth_sweep(const SearchConfig& cfg, int jobs) {
  const std::set<int> distinct(cfg.dims.begin(), cfg.dims.end());
  if (distinct.size() < 3) throw DomainError("growth_sweep needs at least three distinct dimensions");
  return search_extremal(cfg, jobs);
}

}  // namespace opfunc
