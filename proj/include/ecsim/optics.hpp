#pragma once

// Linear optical elements acting on coherent superpositions: beam splitters,
// phase shifters, and the pure-loss channel. All of them map coherent product
// states to coherent product states, so they act on amplitude vectors only
// (loss additionally rescales dyad weights by the traced environment overlap).

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ecsim/coherent_algebra.hpp"

namespace ecsim {

/// Two-mode beam splitter with intensity transmissivity T.
///
/// Sign convention, used everywhere in the library:
///   (a, b) -> (sqrt(T) a + sqrt(1-T) b,  sqrt(1-T) a - sqrt(T) b)
/// so the balanced element maps (a, b) to ((a+b)/sqrt2, (a-b)/sqrt2).
struct BeamSplitterSpec {
  std::size_t mode_a = 0;
  std::size_t mode_b = 1;
  double transmissivity = 0.5;
};

namespace detail {

inline void require_mode(std::size_t mode, std::size_t modes, const char* what) {
  if (mode >= modes) {
    throw DimensionError(std::string(what) + ": mode index " + std::to_string(mode) +
                         " out of range for " + std::to_string(modes) + " modes");
  }
}

inline void validate(const BeamSplitterSpec& spec, std::size_t modes) {
  require_mode(spec.mode_a, modes, "beam_splitter");
  require_mode(spec.mode_b, modes, "beam_splitter");
  if (spec.mode_a == spec.mode_b) throw DimensionError("beam_splitter: modes must differ");
  if (!(spec.transmissivity >= 0.0 && spec.transmissivity <= 1.0)) {
    throw DomainError("beam_splitter: transmissivity outside [0,1]");
  }
}

inline void mix(Amplitudes& amps, const BeamSplitterSpec& spec) {
  const double t = std::sqrt(spec.transmissivity);
  const double r = std::sqrt(1.0 - spec.transmissivity);
  const cplx a = amps[spec.mode_a];
  const cplx b = amps[spec.mode_b];
  amps[spec.mode_a] = t * a + r * b;
  amps[spec.mode_b] = r * a - t * b;
}

inline void validate_eta(double eta, const char* what) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw DomainError(std::string(what) + ": transmission eta outside [0,1]");
  }
}

}  // namespace detail

inline PureState beam_splitter(const PureState& state, const BeamSplitterSpec& spec) {
  detail::validate(spec, state.modes());
  auto terms = state.terms();
  for (auto& t : terms) detail::mix(t.amplitudes, spec);
  return PureState(state.modes(), std::move(terms));
}

inline MixedState beam_splitter(const MixedState& rho, const BeamSplitterSpec& spec) {
  detail::validate(spec, rho.modes());
  auto dyads = rho.dyads();
  for (auto& d : dyads) {
    detail::mix(d.ket.amplitudes, spec);
    detail::mix(d.bra.amplitudes, spec);
  }
  return MixedState(rho.modes(), std::move(dyads));
}

/// exp(i phi n_mode): the amplitude in `mode` picks up e^{i phi} on kets and bras alike.
inline PureState phase_shift(const PureState& state, std::size_t mode, double phi) {
  detail::require_mode(mode, state.modes(), "phase_shift");
  const cplx rot = std::polar(1.0, phi);
  auto terms = state.terms();
  for (auto& t : terms) t.amplitudes[mode] *= rot;
  return PureState(state.modes(), std::move(terms));
}

inline MixedState phase_shift(const MixedState& rho, std::size_t mode, double phi) {
  detail::require_mode(mode, rho.modes(), "phase_shift");
  const cplx rot = std::polar(1.0, phi);
  auto dyads = rho.dyads();
  for (auto& d : dyads) {
    d.ket.amplitudes[mode] *= rot;
    d.bra.amplitudes[mode] *= rot;
  }
  return MixedState(rho.modes(), std::move(dyads));
}

/// Weight factor left behind when the environment of a loss beam splitter is traced out:
/// <sqrt(mu) b | sqrt(mu) a> for a dyad with ket amplitude a and bra amplitude b.
inline cplx environment_overlap(cplx ket_amp, cplx bra_amp, double loss_fraction) {
  return std::exp(-0.5 * loss_fraction * (std::norm(ket_amp) + std::norm(bra_amp)) +
                  loss_fraction * std::conj(bra_amp) * ket_amp);
}

/// Pure-loss channel of transmission eta on one mode.
inline MixedState loss_channel(const MixedState& rho, std::size_t mode, double eta) {
  detail::require_mode(mode, rho.modes(), "loss_channel");
  detail::validate_eta(eta, "loss_channel");
  if (eta == 1.0) return rho;
  const double mu = 1.0 - eta;
  const double keep = std::sqrt(eta);
  auto dyads = rho.dyads();
  for (auto& d : dyads) {
    cplx& a = d.ket.amplitudes[mode];
    cplx& b = d.bra.amplitudes[mode];
    d.weight *= environment_overlap(a, b, mu);
    a *= keep;
    b *= keep;
  }
  return MixedState(rho.modes(), std::move(dyads));
}

inline MixedState loss_channel(const PureState& state, std::size_t mode, double eta) {
  return loss_channel(to_mixed(state), mode, eta);
}

/// Traces out one mode: each dyad weight picks up <bra_m|ket_m>.
inline MixedState partial_trace(const MixedState& rho, std::size_t mode) {
  detail::require_mode(mode, rho.modes(), "partial_trace");
  if (rho.modes() == 1) throw DimensionError("partial_trace: cannot trace out the only mode");
  std::vector<Dyad> dyads;
  dyads.reserve(rho.size());
  for (const auto& d : rho.dyads()) {
    Dyad out = d;
    const cplx k = d.ket.amplitudes[mode];
    const cplx b = d.bra.amplitudes[mode];
    out.weight *= overlap(std::span<const cplx>(&b, 1), std::span<const cplx>(&k, 1));
    out.ket.amplitudes.erase(out.ket.amplitudes.begin() + static_cast<std::ptrdiff_t>(mode));
    out.bra.amplitudes.erase(out.bra.amplitudes.begin() + static_cast<std::ptrdiff_t>(mode));
    dyads.push_back(std::move(out));
  }
  return MixedState(rho.modes() - 1, std::move(dyads));
}

/// |x> (x) |y>; term count multiplies.
inline PureState tensor(const PureState& x, const PureState& y) {
  std::vector<CoherentTerm> terms;
  terms.reserve(x.size() * y.size());
  for (const auto& s : x.terms()) {
    for (const auto& t : y.terms()) {
      CoherentTerm u{s.coefficient * t.coefficient, s.amplitudes};
      u.amplitudes.insert(u.amplitudes.end(), t.amplitudes.begin(), t.amplitudes.end());
      terms.push_back(std::move(u));
    }
  }
  return PureState(x.modes() + y.modes(), std::move(terms));
}

/// Appends a single-mode state as a new last mode.
inline PureState append_mode(const PureState& state, const PureState& amplitude_state) {
  if (amplitude_state.modes() != 1) {
    throw DimensionError("append_mode: appended state must have exactly one mode");
  }
  return tensor(state, amplitude_state);
}

}  // namespace ecsim
