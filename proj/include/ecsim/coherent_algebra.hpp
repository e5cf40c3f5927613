#pragma once

// Exact algebra over finite superpositions of multimode coherent states.
//
// A PureState is sum_t c_t |a_t> with |a_t> = |a_t[0]> x ... x |a_t[M-1]>, and
// a MixedState is sum_d w_d |ket_d><bra_d|. Every inner product reduces to the
// closed-form coherent overlap, so no Fock truncation is involved here.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ecsim/errors.hpp"

namespace ecsim {

using cplx = std::complex<double>;
using Amplitudes = std::vector<cplx>;

/// Terms whose coefficient magnitude falls below this fraction of the largest are dropped.
inline constexpr double kPruneRelative = 1e-14;
/// Componentwise absolute tolerance under which two amplitude vectors are merged.
inline constexpr double kMergeTolerance = 1e-14;

struct CoherentTerm {
  cplx coefficient{1.0, 0.0};
  Amplitudes amplitudes;

  [[nodiscard]] std::size_t modes() const noexcept { return amplitudes.size(); }
};

inline bool amplitudes_equal(std::span<const cplx> a, std::span<const cplx> b,
                             double tol = kMergeTolerance) noexcept {
  if (a.size() != b.size()) return false;
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (std::abs(a[m].real() - b[m].real()) > tol || std::abs(a[m].imag() - b[m].imag()) > tol) {
      return false;
    }
  }
  return true;
}

namespace detail {

inline void require_modes(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw DimensionError(std::string(what) + ": mode count mismatch (" + std::to_string(expected) +
                         " vs " + std::to_string(got) + ")");
  }
}

}  // namespace detail

class PureState {
 public:
  PureState() = default;

  PureState(std::size_t modes, std::vector<CoherentTerm> terms)
      : modes_(modes), terms_(std::move(terms)) {
    if (modes_ == 0) throw DimensionError("PureState: at least one mode required");
    for (const auto& t : terms_) detail::require_modes(modes_, t.modes(), "PureState");
  }

  /// Single product coherent state with unit coefficient.
  static PureState coherent(Amplitudes amplitudes) {
    const auto m = amplitudes.size();
    return PureState(m, {CoherentTerm{cplx{1.0}, std::move(amplitudes)}});
  }

  static PureState vacuum(std::size_t modes) { return coherent(Amplitudes(modes, cplx{})); }

  [[nodiscard]] std::size_t modes() const noexcept { return modes_; }
  [[nodiscard]] const std::vector<CoherentTerm>& terms() const noexcept { return terms_; }
  [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }

 private:
  std::size_t modes_ = 0;
  std::vector<CoherentTerm> terms_;
};

/// One coherent dyad weight * c_ket * conj(c_bra) |ket><bra|.
struct Dyad {
  CoherentTerm ket;
  CoherentTerm bra;
  cplx weight{1.0, 0.0};

  /// Scalar multiplying the normalized coherent dyad |ket.amplitudes><bra.amplitudes|.
  [[nodiscard]] cplx effective_weight() const noexcept {
    return weight * ket.coefficient * std::conj(bra.coefficient);
  }
};

class MixedState {
 public:
  MixedState() = default;

  MixedState(std::size_t modes, std::vector<Dyad> dyads) : modes_(modes), dyads_(std::move(dyads)) {
    if (modes_ == 0) throw DimensionError("MixedState: at least one mode required");
    for (const auto& d : dyads_) {
      detail::require_modes(modes_, d.ket.modes(), "MixedState ket");
      detail::require_modes(modes_, d.bra.modes(), "MixedState bra");
    }
  }

  [[nodiscard]] std::size_t modes() const noexcept { return modes_; }
  [[nodiscard]] const std::vector<Dyad>& dyads() const noexcept { return dyads_; }
  [[nodiscard]] std::size_t size() const noexcept { return dyads_.size(); }

 private:
  std::size_t modes_ = 0;
  std::vector<Dyad> dyads_;
};

/// <a|b> = prod_m exp(-|a_m|^2/2 - |b_m|^2/2 + conj(a_m) b_m).
inline cplx overlap(std::span<const cplx> a, std::span<const cplx> b) {
  detail::require_modes(a.size(), b.size(), "overlap");
  cplx exponent{};
  for (std::size_t m = 0; m < a.size(); ++m) {
    exponent += -0.5 * std::norm(a[m]) - 0.5 * std::norm(b[m]) + std::conj(a[m]) * b[m];
  }
  return std::exp(exponent);
}

inline cplx inner_product(const PureState& x, const PureState& y) {
  detail::require_modes(x.modes(), y.modes(), "inner_product");
  cplx acc{};
  for (const auto& s : x.terms()) {
    for (const auto& t : y.terms()) {
      acc += std::conj(s.coefficient) * t.coefficient * overlap(s.amplitudes, t.amplitudes);
    }
  }
  return acc;
}

inline double norm_squared(const PureState& x) { return inner_product(x, x).real(); }

inline PureState scale(const PureState& x, cplx factor) {
  auto terms = x.terms();
  for (auto& t : terms) t.coefficient *= factor;
  return PureState(x.modes(), std::move(terms));
}

/// Merges terms with equal amplitude vectors and prunes negligible coefficients.
inline PureState canonicalize(const PureState& x) {
  std::vector<CoherentTerm> merged;
  for (const auto& t : x.terms()) {
    auto it = std::find_if(merged.begin(), merged.end(), [&](const CoherentTerm& u) {
      return amplitudes_equal(u.amplitudes, t.amplitudes);
    });
    if (it == merged.end()) {
      merged.push_back(t);
    } else {
      it->coefficient += t.coefficient;
    }
  }
  double largest = 0.0;
  for (const auto& t : merged) largest = std::max(largest, std::abs(t.coefficient));
  std::erase_if(merged, [&](const CoherentTerm& t) {
    return !(std::abs(t.coefficient) >= kPruneRelative * largest) || t.coefficient == cplx{};
  });
  return PureState(x.modes(), std::move(merged));
}

inline PureState normalize(const PureState& x) {
  const double n = norm_squared(x);
  if (!(n > 1e-30)) throw DegenerateStateError("normalize: state has vanishing norm");
  return scale(x, cplx{1.0 / std::sqrt(n)});
}

/// |x><x| expanded into dyads over every pair of terms.
inline MixedState to_mixed(const PureState& x) {
  std::vector<Dyad> dyads;
  dyads.reserve(x.size() * x.size());
  for (const auto& k : x.terms()) {
    for (const auto& b : x.terms()) dyads.push_back(Dyad{k, b, cplx{1.0}});
  }
  return MixedState(x.modes(), std::move(dyads));
}

/// Tr rho = sum_d w_d <bra_d|ket_d>.
inline cplx dyad_trace(const MixedState& rho) {
  cplx acc{};
  for (const auto& d : rho.dyads()) {
    acc += d.effective_weight() * overlap(d.bra.amplitudes, d.ket.amplitudes);
  }
  return acc;
}

inline MixedState scale(const MixedState& rho, cplx factor) {
  auto dyads = rho.dyads();
  for (auto& d : dyads) d.weight *= factor;
  return MixedState(rho.modes(), std::move(dyads));
}

inline MixedState normalize_trace(const MixedState& rho) {
  const double tr = dyad_trace(rho).real();
  if (!(tr > 1e-30)) throw DegenerateStateError("normalize_trace: vanishing trace");
  return scale(rho, cplx{1.0 / tr});
}

/// rho^dagger: each dyad |k><b| w becomes |b><k| conj(w).
inline MixedState adjoint(const MixedState& rho) {
  std::vector<Dyad> dyads;
  dyads.reserve(rho.size());
  for (const auto& d : rho.dyads()) dyads.push_back(Dyad{d.bra, d.ket, std::conj(d.weight)});
  return MixedState(rho.modes(), std::move(dyads));
}

/// Folds coefficients into weights, merges dyads with equal ket and bra amplitudes,
/// and prunes negligible weights.
inline MixedState canonicalize(const MixedState& rho) {
  std::vector<Dyad> merged;
  for (const auto& d : rho.dyads()) {
    Dyad folded{CoherentTerm{cplx{1.0}, d.ket.amplitudes}, CoherentTerm{cplx{1.0}, d.bra.amplitudes},
                d.effective_weight()};
    auto it = std::find_if(merged.begin(), merged.end(), [&](const Dyad& u) {
      return amplitudes_equal(u.ket.amplitudes, folded.ket.amplitudes) &&
             amplitudes_equal(u.bra.amplitudes, folded.bra.amplitudes);
    });
    if (it == merged.end()) {
      merged.push_back(std::move(folded));
    } else {
      it->weight += folded.weight;
    }
  }
  double largest = 0.0;
  for (const auto& d : merged) largest = std::max(largest, std::abs(d.weight));
  std::erase_if(merged, [&](const Dyad& d) {
    return !(std::abs(d.weight) >= kPruneRelative * largest) || d.weight == cplx{};
  });
  return MixedState(rho.modes(), std::move(merged));
}

}  // namespace ecsim
