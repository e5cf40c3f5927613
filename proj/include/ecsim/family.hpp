#pragma once

// Phase families phi -> state and their first-order tangents.
//
// Fisher quantities need d/dphi of a state. Families built by the scheme
// pipelines keep a fixed term structure, so the tangent of every amplitude,
// coefficient and dyad weight is taken by a central difference on those few
// numbers; everything downstream (Fock amplitudes, Gram matrices) is then
// differentiated exactly by the chain rule.

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ecsim/coherent_algebra.hpp"

namespace ecsim {

using PureFamily = std::function<PureState(double)>;
using MixedFamily = std::function<MixedState(double)>;

/// Central-difference step (radians) for every phase derivative in the library.
inline constexpr double kDerivativeStep = 1e-5;

struct TangentTerm {
  cplx coefficient;
  cplx d_coefficient;
  Amplitudes amplitudes;
  Amplitudes d_amplitudes;
};

struct PureTangent {
  std::size_t modes = 0;
  std::vector<TangentTerm> terms;
};

/// Normalized dyad with its phase derivative: weight |ket><bra|.
struct TangentDyad {
  cplx weight;
  cplx d_weight;
  Amplitudes ket;
  Amplitudes d_ket;
  Amplitudes bra;
  Amplitudes d_bra;
};

struct MixedTangent {
  std::size_t modes = 0;
  std::vector<TangentDyad> dyads;
};

namespace detail {

inline Amplitudes central_difference(const Amplitudes& plus, const Amplitudes& minus, double step) {
  Amplitudes out(plus.size());
  for (std::size_t m = 0; m < plus.size(); ++m) out[m] = (plus[m] - minus[m]) / (2.0 * step);
  return out;
}

inline void require_same_structure(bool ok, const char* what) {
  if (!ok) throw BuilderError(std::string(what) + ": family changed term structure across the stencil");
}

// Amplitude jumps larger than this across a 2e-5 rad stencil mean the family
// reordered its terms.
inline constexpr double kStencilJump = 1e-2;

inline bool close_vectors(const Amplitudes& a, const Amplitudes& b) {
  return amplitudes_equal(a, b, kStencilJump);
}

}  // namespace detail

/// Tangent of a pure family; rejects families whose norm drifts by more than 1e-8.
inline PureTangent differentiate(const PureFamily& family, double phi, double step = kDerivativeStep) {
  const PureState centre = family(phi);
  const PureState plus = family(phi + step);
  const PureState minus = family(phi - step);
  for (const auto* s : {&centre, &plus, &minus}) {
    if (std::abs(norm_squared(*s) - 1.0) > 1e-8) {
      throw BuilderError("pure family: state norm drifts from 1 by more than 1e-8");
    }
  }
  detail::require_same_structure(
      plus.size() == centre.size() && minus.size() == centre.size() && plus.modes() == centre.modes(),
      "pure family");
  PureTangent out{centre.modes(), {}};
  out.terms.reserve(centre.size());
  for (std::size_t i = 0; i < centre.size(); ++i) {
    const auto& c = centre.terms()[i];
    const auto& p = plus.terms()[i];
    const auto& q = minus.terms()[i];
    detail::require_same_structure(
        detail::close_vectors(p.amplitudes, c.amplitudes) && detail::close_vectors(q.amplitudes, c.amplitudes),
        "pure family");
    out.terms.push_back(TangentTerm{c.coefficient, (p.coefficient - q.coefficient) / (2.0 * step), c.amplitudes,
                                    detail::central_difference(p.amplitudes, q.amplitudes, step)});
  }
  return out;
}

/// Tangent of a mixed family; each stencil point is trace-normalized first.
inline MixedTangent differentiate(const MixedFamily& family, double phi, double step = kDerivativeStep) {
  const MixedState centre = normalize_trace(family(phi));
  const MixedState plus = normalize_trace(family(phi + step));
  const MixedState minus = normalize_trace(family(phi - step));
  detail::require_same_structure(
      plus.size() == centre.size() && minus.size() == centre.size() && plus.modes() == centre.modes(),
      "mixed family");
  MixedTangent out{centre.modes(), {}};
  out.dyads.reserve(centre.size());
  for (std::size_t i = 0; i < centre.size(); ++i) {
    const auto& c = centre.dyads()[i];
    const auto& p = plus.dyads()[i];
    const auto& q = minus.dyads()[i];
    detail::require_same_structure(detail::close_vectors(p.ket.amplitudes, c.ket.amplitudes) &&
                                       detail::close_vectors(q.ket.amplitudes, c.ket.amplitudes) &&
                                       detail::close_vectors(p.bra.amplitudes, c.bra.amplitudes) &&
                                       detail::close_vectors(q.bra.amplitudes, c.bra.amplitudes),
                                   "mixed family");
    out.dyads.push_back(TangentDyad{c.effective_weight(),
                                    (p.effective_weight() - q.effective_weight()) / (2.0 * step),
                                    c.ket.amplitudes,
                                    detail::central_difference(p.ket.amplitudes, q.ket.amplitudes, step),
                                    c.bra.amplitudes,
                                    detail::central_difference(p.bra.amplitudes, q.bra.amplitudes, step)});
  }
  return out;
}

/// A phi-independent tangent (all derivatives zero) for plain evaluation.
inline MixedTangent frozen(const MixedState& rho) {
  MixedTangent out{rho.modes(), {}};
  out.dyads.reserve(rho.size());
  for (const auto& d : rho.dyads()) {
    out.dyads.push_back(TangentDyad{d.effective_weight(), cplx{}, d.ket.amplitudes,
                                    Amplitudes(rho.modes()), d.bra.amplitudes, Amplitudes(rho.modes())});
  }
  return out;
}

}  // namespace ecsim
