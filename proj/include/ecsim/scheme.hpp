#pragma once

// End-to-end interferometer experiments: ECS preparation, the parity and
// reference-beam read-outs, the (alpha1, phi) optimization and loss sweeps.
//
// Mode layout of the reference read-out: 0 = 1b (reference |alpha1>),
// 1 = arm 1 / detector 1a, 2 = arm 2 / detector 2a, 3 = 2b (reference cat).
// The parity read-out uses only the two arms (0 = arm 1, 1 = arm 2).

#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "ecsim/coherent_algebra.hpp"
#include "ecsim/detection.hpp"
#include "ecsim/fisher.hpp"
#include "ecsim/optics.hpp"
#include "ecsim/optimize.hpp"

namespace ecsim {

/// Receives library warnings; defaults to std::cerr.
inline std::function<void(const std::string&)>& warning_sink() {
  static std::function<void(const std::string&)> sink = [](const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return sink;
}

enum class InputKind {
  standard,  // coherent |a0/sqrt2> + even cat
  even,      // even cat + even cat
};

enum class ReferenceKind {
  even_cat,  // 2b = N2 (|a1> + |-a1>)
  coherent,  // 2b = |a1>
};

enum class Probe { EM, EP, EF, EVEN_EF, NF, UF };

inline std::string_view to_string(Probe p) {
  switch (p) {
    case Probe::EM: return "EM";
    case Probe::EP: return "EP";
    case Probe::EF: return "EF";
    case Probe::EVEN_EF: return "EVEN_EF";
    case Probe::NF: return "NF";
    case Probe::UF: return "UF";
  }
  return "?";
}

inline std::optional<Probe> parse_probe(std::string_view s) {
  for (Probe p : {Probe::EM, Probe::EP, Probe::EF, Probe::EVEN_EF, Probe::NF, Probe::UF}) {
    if (s == to_string(p)) return p;
  }
  return std::nullopt;
}

inline std::string_view to_string(InputKind k) { return k == InputKind::standard ? "standard" : "even"; }

struct SchemeConfig {
  double alpha0 = 1.0;
  InputKind input_kind = InputKind::standard;
  /// Transmission of arm 1; arm 2 uses `eta_arm2` when set.
  double eta = 1.0;
  std::optional<double> eta_arm2;
  double alpha1 = 1.0;
  double phi = 0.3;
  CutoffPolicy cutoff_policy{};
  ReferenceKind reference_kind = ReferenceKind::even_cat;
  /// Transmission of the reference beams 1b and 2b.
  double reference_eta = 1.0;
  /// Fixed phase on arm 2, applied together with phi.
  double arm2_offset = 0.0;
  /// Common phase of both reference amplitudes.
  double reference_phase = 0.0;

  [[nodiscard]] double eta2() const { return eta_arm2.value_or(eta); }
};

inline double normalize_angle(double phi) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(phi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r >= kTwoPi ? 0.0 : r;
}

inline SchemeConfig validated(SchemeConfig c) {
  if (!(c.alpha0 >= 0.0)) throw DomainError("scheme: alpha0 must be non-negative");
  if (!(c.alpha1 >= 0.0)) throw DomainError("scheme: alpha1 must be non-negative");
  for (double e : {c.eta, c.eta2(), c.reference_eta}) {
    if (!(e >= 0.0 && e <= 1.0)) throw DomainError("scheme: transmission outside [0,1]");
  }
  if (!std::isfinite(c.phi)) throw DomainError("scheme: phi must be finite");
  c.phi = normalize_angle(c.phi);
  return c;
}

// ---------------------------------------------------------------------------
// State preparation

/// Normalized even cat N (|a> + |-a>).
inline PureState cat_state(cplx alpha) {
  return normalize(canonicalize(PureState(1, {CoherentTerm{cplx{1.0}, {alpha}}, CoherentTerm{cplx{1.0}, {-alpha}}})));
}

namespace detail {

inline PureState balanced_input(const PureState& upper, const PureState& lower, double alpha0) {
  if (alpha0 == 0.0) warning_sink()("alpha0 = 0: the entangled coherent state degenerates to the vacuum");
  const auto mixed = beam_splitter(tensor(upper, lower), BeamSplitterSpec{0, 1, 0.5});
  return normalize(canonicalize(mixed));
}

}  // namespace detail

/// N1 (|a0, 0> + |0, a0>) prepared from |a0/sqrt2> and an even cat on a 50:50 splitter.
inline PureState build_ecs(double alpha0) {
  if (!(alpha0 >= 0.0)) throw DomainError("build_ecs: alpha0 must be non-negative");
  const double half = alpha0 / std::numbers::sqrt2;
  return detail::balanced_input(PureState::coherent({cplx{half}}), cat_state(cplx{half}), alpha0);
}

/// ECS from two even cats: every component has even total photon number.
inline PureState build_even_ecs(double alpha0) {
  if (!(alpha0 >= 0.0)) throw DomainError("build_even_ecs: alpha0 must be non-negative");
  const double half = alpha0 / std::numbers::sqrt2;
  return detail::balanced_input(cat_state(cplx{half}), cat_state(cplx{half}), alpha0);
}

inline PureState build_input(InputKind kind, double alpha0) {
  return kind == InputKind::standard ? build_ecs(alpha0) : build_even_ecs(alpha0);
}

// ---------------------------------------------------------------------------
// Phase families

/// Lossy two-arm state before any read-out optics.
inline MixedFamily lossy_input_family(double alpha0, InputKind kind, double eta1, double eta2) {
  const PureState input = build_input(kind, alpha0);
  return [=](double phi) {
    auto rho = to_mixed(phase_shift(input, 0, phi));
    rho = loss_channel(rho, 0, eta1);
    return normalize_trace(loss_channel(rho, 1, eta2));
  };
}

/// Arms recombined on the second 50:50 splitter, ready for the two detectors.
inline MixedFamily parity_family(const SchemeConfig& config) {
  const auto c = validated(config);
  const PureState input = build_input(c.input_kind, c.alpha0);
  return [c, input](double phi) {
    auto psi = phase_shift(phase_shift(input, 0, phi), 1, c.arm2_offset);
    auto rho = loss_channel(to_mixed(psi), 0, c.eta);
    rho = loss_channel(rho, 1, c.eta2());
    return normalize_trace(beam_splitter(rho, BeamSplitterSpec{0, 1, 0.5}));
  };
}

/// Four-mode state at the detectors 1b, 1a, 2a, 2b of the reference read-out.
inline MixedFamily reference_family(const SchemeConfig& config) {
  const auto c = validated(config);
  const cplx a1 = std::polar(c.alpha1, c.reference_phase);
  const PureState ref_1b = PureState::coherent({a1});
  const PureState ref_2b = c.reference_kind == ReferenceKind::even_cat ? cat_state(a1) : PureState::coherent({a1});
  const PureState state = append_mode(tensor(ref_1b, build_input(c.input_kind, c.alpha0)), ref_2b);
  return [c, state](double phi) {
    auto psi = phase_shift(phase_shift(state, 1, phi), 2, c.arm2_offset);
    auto rho = loss_channel(to_mixed(psi), 1, c.eta);
    rho = loss_channel(rho, 2, c.eta2());
    if (c.reference_eta < 1.0) {
      rho = loss_channel(rho, 0, c.reference_eta);
      rho = loss_channel(rho, 3, c.reference_eta);
    }
    rho = beam_splitter(rho, BeamSplitterSpec{1, 2, 0.5});
    rho = beam_splitter(rho, BeamSplitterSpec{0, 1, 0.5});
    rho = beam_splitter(rho, BeamSplitterSpec{2, 3, 0.5});
    return normalize_trace(rho);
  };
}

// ---------------------------------------------------------------------------
// Read-outs

struct SchemeResult {
  double fisher = 0.0;
  /// 1/sqrt(F) for a single repetition; +inf when F vanishes.
  double delta_phi = std::numeric_limits<double>::infinity();
  double tail_mass = 0.0;
};

namespace detail {

inline SchemeResult to_result(const FisherResult& f) {
  SchemeResult r{f.fisher, std::numeric_limits<double>::infinity(), f.tail_mass};
  if (f.fisher > 0.0) r.delta_phi = cramer_rao(f.fisher, 1);
  return r;
}

}  // namespace detail

/// Parity read-out: photon counting on both outputs of the second splitter.
inline SchemeResult run_parity_scheme(const SchemeConfig& config) {
  const auto c = validated(config);
  return detail::to_result(classical_fisher(parity_family(c), c.phi, c.cutoff_policy));
}

/// Reference read-out: each output mixed with its reference, four counters.
inline SchemeResult run_reference_scheme(const SchemeConfig& config) {
  const auto c = validated(config);
  if (c.alpha0 == 0.0) return {};
  return detail::to_result(classical_fisher(reference_family(c), c.phi, c.cutoff_policy));
}

// ---------------------------------------------------------------------------
// Optimization

struct OptimizerOptions {
  /// alpha1 axis spans [alpha1_lo, alpha1_hi_factor * alpha0], log-spaced.
  double alpha1_lo = 0.05;
  double alpha1_hi_factor = 2.0;
  std::size_t alpha1_count = 25;
  double phi_lo = 0.02;
  double phi_hi = std::numbers::pi / 2.0;
  std::size_t phi_count = 30;
  double tolerance = 1e-4;
  std::size_t max_cycles = 4;
};

struct ReferenceOptimum {
  double alpha1 = 0.0;
  double phi = 0.0;
  double delta_phi = std::numeric_limits<double>::infinity();
  double tail_mass = 0.0;
  bool local_minimum = false;
  std::size_t evaluations = 0;
};

inline GridGoldenOptions reference_grid(double alpha0, const OptimizerOptions& o) {
  GridGoldenOptions g;
  g.x = GridAxis{o.alpha1_lo, std::max(o.alpha1_lo, o.alpha1_hi_factor * alpha0), o.alpha1_count, true};
  g.y = GridAxis{o.phi_lo, o.phi_hi, o.phi_count, false};
  g.tolerance = o.tolerance;
  g.max_cycles = o.max_cycles;
  return g;
}

/// Minimizes delta phi of the reference read-out over (alpha1, phi).
/// `base` supplies everything except alpha0, eta, input kind, alpha1 and phi.
inline ReferenceOptimum optimize_reference(double alpha0, double eta, InputKind kind,
                                           const OptimizerOptions& options = {}, SchemeConfig base = {}) {
  if (!(alpha0 > 0.0)) throw DomainError("optimize_reference: alpha0 must be positive");
  base.alpha0 = alpha0;
  base.eta = eta;
  base.input_kind = kind;
  auto objective = [&](double alpha1, double phi) {
    SchemeConfig c = base;
    c.alpha1 = alpha1;
    c.phi = phi;
    return run_reference_scheme(c).delta_phi;
  };
  const auto m = grid_golden_minimize(objective, reference_grid(alpha0, options));
  SchemeConfig best = base;
  best.alpha1 = m.x;
  best.phi = m.y;
  const auto r = run_reference_scheme(best);
  return ReferenceOptimum{m.x, m.y, r.delta_phi, r.tail_mass, m.local_minimum, m.evaluations + 1};
}

/// Parity read-out with phi chosen by a grid scan plus golden refinement.
inline ReferenceOptimum optimize_parity(double alpha0, double eta, InputKind kind,
                                        const OptimizerOptions& options = {}, SchemeConfig base = {}) {
  base.alpha0 = alpha0;
  base.eta = eta;
  base.input_kind = kind;
  auto objective = [&](double phi) {
    SchemeConfig c = base;
    c.phi = phi;
    return run_parity_scheme(c).delta_phi;
  };
  const auto m =
      grid_golden_minimize(objective, GridAxis{options.phi_lo, options.phi_hi, options.phi_count, false},
                           options.tolerance);
  base.phi = m.x;
  const auto r = run_parity_scheme(base);
  return ReferenceOptimum{0.0, m.x, r.delta_phi, r.tail_mass, true, m.evaluations + 1};
}

// ---------------------------------------------------------------------------
// Sweeps

struct CurveRow {
  double eta = 0.0;
  double delta_phi = 0.0;
  double alpha1_opt = 0.0;
  double phi_opt = 0.0;
  double tail_mass = 0.0;
};

struct PrecisionCurve {
  std::string probe_label;
  double alpha0 = 0.0;
  /// Mean photon number of the ECS (unrounded) and the integer NOON size used for NF.
  double photon_number = 0.0;
  int noon_size = 0;
  std::vector<CurveRow> rows;
};

struct SweepOptions {
  OptimizerOptions optimizer{};
  /// Supplies policy, reference kind and phase settings; alpha0/eta/alpha1/phi are overridden.
  SchemeConfig base{};
  /// Worker threads for independent rows; 0 picks hardware concurrency.
  unsigned threads = 0;
};

/// N = round(equivalent_size(alpha0)), at least 1.
inline int noon_size_for(double alpha0) {
  return std::max(1, static_cast<int>(std::lround(equivalent_size(alpha0))));
}

inline CurveRow evaluate_probe(Probe probe, double alpha0, double eta, const SweepOptions& options) {
  CurveRow row{eta, 0.0, 0.0, options.base.phi, 0.0};
  switch (probe) {
    case Probe::EM: {
      const auto o = optimize_reference(alpha0, eta, options.base.input_kind, options.optimizer, options.base);
      row.delta_phi = o.delta_phi;
      row.alpha1_opt = o.alpha1;
      row.phi_opt = o.phi;
      row.tail_mass = o.tail_mass;
      break;
    }
    case Probe::EP: {
      const auto o = optimize_parity(alpha0, eta, options.base.input_kind, options.optimizer, options.base);
      row.delta_phi = o.delta_phi;
      row.phi_opt = o.phi;
      row.tail_mass = o.tail_mass;
      break;
    }
    case Probe::EF:
    case Probe::EVEN_EF: {
      const auto kind = probe == Probe::EF ? InputKind::standard : InputKind::even;
      const double f = qfi_mixed(lossy_input_family(alpha0, kind, eta, eta), options.base.phi);
      row.delta_phi = f > 0.0 ? cramer_rao(f, 1) : std::numeric_limits<double>::infinity();
      break;
    }
    case Probe::NF: {
      const double f = noon_qfi_lossy(noon_size_for(alpha0), eta);
      row.delta_phi = f > 0.0 ? cramer_rao(f, 1) : std::numeric_limits<double>::infinity();
      break;
    }
    case Probe::UF:
      row.delta_phi = snl(equivalent_size(alpha0), eta);
      break;
  }
  return row;
}

/// One PrecisionCurve per probe, rows sorted by eta. Rows are independent and
/// evaluated on a pool of worker threads; results are placed by index, so the
/// output does not depend on scheduling.
inline std::vector<PrecisionCurve> sweep_loss(double alpha0, std::vector<double> etas, const std::vector<Probe>& probes,
                                              const SweepOptions& options = {}) {
  for (double e : etas) {
    if (!(e >= 0.0 && e <= 1.0)) throw DomainError("sweep_loss: eta outside [0,1]");
  }
  std::sort(etas.begin(), etas.end());
  std::vector<PrecisionCurve> curves;
  for (Probe p : probes) {
    curves.push_back(PrecisionCurve{std::string(to_string(p)), alpha0, equivalent_size(alpha0),
                                    noon_size_for(alpha0), std::vector<CurveRow>(etas.size())});
  }
  const std::size_t jobs = probes.size() * etas.size();
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs && !failed; j = next++) {
      try {
        const std::size_t p = j / etas.size();
        const std::size_t e = j % etas.size();
        curves[p].rows[e] = evaluate_probe(probes[p], alpha0, etas[e], options);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(jobs, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return curves;
}

// ---------------------------------------------------------------------------
// Diagnostics

/// Which-arm coherence |rho_AB| / sqrt(rho_AA rho_BB) read off the dyad weights,
/// where A holds dyad sides with photons only in `arm_a` and B only in `arm_b`.
inline double arm_coherence(const MixedState& rho, std::size_t arm_a, std::size_t arm_b) {
  auto side = [&](const CoherentTerm& t) {
    const bool in_a = std::abs(t.amplitudes[arm_a]) > kMergeTolerance;
    const bool in_b = std::abs(t.amplitudes[arm_b]) > kMergeTolerance;
    return in_a && !in_b ? 0 : (in_b && !in_a ? 1 : -1);
  };
  cplx aa{}, bb{}, ab{};
  for (const auto& d : rho.dyads()) {
    const int k = side(d.ket);
    const int b = side(d.bra);
    if (k == 0 && b == 0) aa += d.effective_weight();
    if (k == 1 && b == 1) bb += d.effective_weight();
    if (k == 0 && b == 1) ab += d.effective_weight();
  }
  return std::abs(ab) / std::sqrt(std::abs(aa) * std::abs(bb));
}

}  // namespace ecsim
