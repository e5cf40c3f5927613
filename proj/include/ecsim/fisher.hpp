#pragma once

// Quantum Fisher information, Cramer-Rao bounds and benchmark curves.
//
// Mixed-state QFI is evaluated on the span of the dyad kets and their phase
// derivatives: that span contains rho, d rho/dphi and the part of the SLD
// kernel that couples to them, so the eigen-sum below is exact on it.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ecsim/coherent_algebra.hpp"
#include "ecsim/family.hpp"
#include "ecsim/support.hpp"

namespace ecsim {

struct QfiOptions {
  SupportOptions support{};
  /// Pairs with lambda_i + lambda_j at or below this are in the SLD null space.
  double eigen_cutoff = 1e-12;
  /// Eigenvalues of rho below -negativity_tolerance raise PositivityError.
  double negativity_tolerance = 1e-9;
};

/// F_Q = sum_{l_i + l_j > eps} 2 |<i| d rho |j>|^2 / (l_i + l_j) for dense rho and d rho.
inline double qfi_from_matrices(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& d_rho,
                                const QfiOptions& options = {}) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(0.5 * (rho + rho.adjoint()));
  const Eigen::VectorXd& l = eig.eigenvalues();
  if (l.size() > 0 && l.minCoeff() < -options.negativity_tolerance) {
    throw PositivityError("qfi: density operator has eigenvalue " + std::to_string(l.minCoeff()));
  }
  const Eigen::MatrixXcd d = eig.eigenvectors().adjoint() * (0.5 * (d_rho + d_rho.adjoint())) * eig.eigenvectors();
  double f = 0.0;
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    for (Eigen::Index j = 0; j < l.size(); ++j) {
      const double s = std::max(l(i), 0.0) + std::max(l(j), 0.0);
      if (s > options.eigen_cutoff) f += 2.0 * std::norm(d(i, j)) / s;
    }
  }
  return f;
}

/// QFI of a pure coherent-superposition family: 4 (<d psi|d psi> - |<psi|d psi>|^2).
inline double qfi_pure(const PureFamily& family, double phi) {
  const auto t = differentiate(family, phi);
  // psi and d psi as weighted lists of support vectors.
  std::vector<std::pair<cplx, SupportVector>> psi;
  std::vector<std::pair<cplx, SupportVector>> d_psi;
  for (const auto& term : t.terms) {
    SupportVector plain{term.amplitudes, cplx{1.0}, {}};
    psi.emplace_back(term.coefficient, plain);
    d_psi.emplace_back(term.d_coefficient, plain);
    d_psi.emplace_back(term.coefficient, coherent_derivative(term.amplitudes, term.d_amplitudes));
  }
  auto braket = [](const auto& x, const auto& y) {
    cplx acc{};
    for (const auto& [cx, vx] : x) {
      for (const auto& [cy, vy] : y) acc += std::conj(cx) * cy * inner_product(vx, vy);
    }
    return acc;
  };
  const double f = 4.0 * (braket(d_psi, d_psi).real() - std::norm(braket(psi, d_psi)));
  return std::max(f, 0.0);
}

/// A dense Fock-basis state and its phase derivative.
struct FockPoint {
  Eigen::VectorXcd state;
  Eigen::VectorXcd derivative;
};
using FockFamily = std::function<FockPoint(double)>;

inline double qfi_pure(const FockFamily& family, double phi) {
  const auto p = family(phi);
  const cplx overlap_d = p.state.dot(p.derivative);
  return std::max(4.0 * (p.derivative.squaredNorm() - std::norm(overlap_d)), 0.0);
}

/// Dense density matrix and its derivative in some orthonormal basis.
struct DenseTangent {
  Eigen::MatrixXcd rho;
  Eigen::MatrixXcd d_rho;
};

/// rho and d rho/dphi of a dyad family on the span of its kets and their derivatives.
inline DenseTangent represent_tangent(const MixedTangent& t, const SupportOptions& options = {}) {
  std::vector<SupportVector> gens;
  struct Slots {
    std::size_t ket, bra, d_ket, d_bra;
  };
  std::vector<Slots> slots;
  slots.reserve(t.dyads.size());
  for (const auto& d : t.dyads) {
    Slots s{};
    s.ket = detail::plain_index(gens, d.ket);
    s.bra = detail::plain_index(gens, d.bra);
    slots.push_back(s);
  }
  for (std::size_t i = 0; i < t.dyads.size(); ++i) {
    slots[i].d_ket = detail::derivative_index(gens, t.dyads[i].ket, t.dyads[i].d_ket);
    slots[i].d_bra = detail::derivative_index(gens, t.dyads[i].bra, t.dyads[i].d_bra);
  }
  const SupportBasis basis(std::move(gens), options);
  const auto r = static_cast<Eigen::Index>(basis.dimension());
  DenseTangent out{Eigen::MatrixXcd::Zero(r, r), Eigen::MatrixXcd::Zero(r, r)};
  for (std::size_t i = 0; i < t.dyads.size(); ++i) {
    const auto& d = t.dyads[i];
    const Eigen::VectorXcd k = basis.coordinates(slots[i].ket);
    const Eigen::VectorXcd b = basis.coordinates(slots[i].bra);
    out.rho.noalias() += d.weight * k * b.adjoint();
    out.d_rho.noalias() += d.d_weight * k * b.adjoint();
    out.d_rho.noalias() += d.weight * basis.coordinates(slots[i].d_ket) * b.adjoint();
    out.d_rho.noalias() += d.weight * k * basis.coordinates(slots[i].d_bra).adjoint();
  }
  const double tr = out.rho.trace().real();
  out.rho /= tr;
  out.d_rho /= tr;
  return out;
}

/// QFI of a mixed dyad family through the symmetric logarithmic derivative.
inline double qfi_mixed(const MixedFamily& family, double phi, const QfiOptions& options = {}) {
  const auto dense = represent_tangent(differentiate(family, phi), options.support);
  return qfi_from_matrices(dense.rho, dense.d_rho, options);
}

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, restricted to the support of rho.
inline double fidelity(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma, double rank_threshold = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> er(0.5 * (rho + rho.adjoint()));
  const Eigen::VectorXd& l = er.eigenvalues();
  const double largest = l.size() ? l.maxCoeff() : 0.0;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    if (l(i) > rank_threshold * largest) kept.push_back(i);
  }
  Eigen::MatrixXcd v(rho.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    v.col(static_cast<Eigen::Index>(c)) = er.eigenvectors().col(kept[c]) * std::sqrt(l(kept[c]));
  }
  const Eigen::MatrixXcd m = v.adjoint() * (0.5 * (sigma + sigma.adjoint())) * v;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> em(m, Eigen::EigenvaluesOnly);
  double root = 0.0;
  for (Eigen::Index i = 0; i < em.eigenvalues().size(); ++i) root += std::sqrt(std::max(em.eigenvalues()(i), 0.0));
  return root * root;
}

namespace detail {

// 8 (1 - sqrt F(rho(phi-h), rho(phi+h))) / (2h)^2, Richardson-extrapolated in h.
template <class PairFidelity>
double bures_qfi(PairFidelity&& pair_fidelity, double phi, double h) {
  auto q = [&](double step) {
    const double f = pair_fidelity(phi - step, phi + step);
    return 2.0 * (1.0 - std::sqrt(std::min(f, 1.0))) / (step * step);
  };
  return std::max((4.0 * q(0.5 * h) - q(h)) / 3.0, 0.0);
}

inline double photon_scale(const MixedState& rho) {
  double s = 1.0;
  for (const auto& d : rho.dyads()) {
    double n = 0.0;
    for (cplx a : d.ket.amplitudes) n += std::norm(a);
    s = std::max(s, 1.0 + n);
  }
  return s;
}

}  // namespace detail

/// QFI from the Bures metric, independent of the SLD route: states at phi +- h
/// are compared by Uhlmann fidelity on their joint coherent support.
inline double qfi_bures(const MixedFamily& family, double phi, const SupportOptions& options = {}) {
  const double h = 1e-2 / detail::photon_scale(family(phi));
  return detail::bures_qfi(
      [&](double a, double b) {
        const MixedState ra = normalize_trace(family(a));
        const MixedState rb = normalize_trace(family(b));
        const auto mats = represent({&ra, &rb}, options);
        return fidelity(mats[0], mats[1]);
      },
      phi, h);
}

using DenseFamily = std::function<Eigen::MatrixXcd(double)>;

/// Bures-metric QFI of a dense density-matrix family; `photon_scale` sets the stencil width.
inline double qfi_bures(const DenseFamily& family, double phi, double photon_scale) {
  const double h = 1e-2 / std::max(1.0, photon_scale);
  return detail::bures_qfi([&](double a, double b) { return fidelity(family(a), family(b)); }, phi, h);
}

// ---------------------------------------------------------------------------
// NOON benchmark

namespace detail {

inline void validate_noon(int n, double eta) {
  if (n < 1 || n > 60) throw DomainError("noon: photon number must lie in [1, 60]");
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("noon: transmission eta outside [0,1]");
}

// Binomial loss weights C(n,k) eta^(n-k) mu^k for k lost photons.
inline std::vector<double> loss_weights(int n, double eta) {
  std::vector<double> w(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double log_c = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    const double pe = (n - k) == 0 ? 1.0 : std::pow(eta, n - k);
    const double pm = k == 0 ? 1.0 : std::pow(1.0 - eta, k);
    w[k] = std::exp(log_c) * pe * pm;
  }
  return w;
}

}  // namespace detail

/// Basis ordering for the lossy NOON support: |0,0>, |n,0> for n = 1..N, |0,n> for n = 1..N.
inline DenseTangent noon_lossy_tangent(int n, double eta, double phi) {
  detail::validate_noon(n, eta);
  const auto dim = static_cast<Eigen::Index>(2 * n + 1);
  auto arm1 = [](int k) { return static_cast<Eigen::Index>(k); };
  auto arm2 = [n](int k) { return k == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(n + k); };
  DenseTangent out{Eigen::MatrixXcd::Zero(dim, dim), Eigen::MatrixXcd::Zero(dim, dim)};
  const auto w = detail::loss_weights(n, eta);
  for (int k = 0; k <= n; ++k) {
    // k photons lost: |N-k, 0> and |0, N-k>.
    out.rho(arm1(n - k), arm1(n - k)) += 0.5 * w[k];
    out.rho(arm2(n - k), arm2(n - k)) += 0.5 * w[k];
  }
  // Only the no-loss branch keeps the arm coherence.
  const double coherence = 0.5 * std::pow(eta, n);
  const cplx rot = std::polar(1.0, n * phi);
  out.rho(arm1(n), arm2(n)) += coherence * rot;
  out.rho(arm2(n), arm1(n)) += coherence * std::conj(rot);
  out.d_rho(arm1(n), arm2(n)) = cplx{0.0, double(n)} * coherence * rot;
  out.d_rho(arm2(n), arm1(n)) = std::conj(out.d_rho(arm1(n), arm2(n)));
  return out;
}

/// QFI of (|N,0> + |0,N>)/sqrt2 with equal loss eta in both arms.
inline double noon_qfi_lossy(int n, double eta, const QfiOptions& options = {}) {
  const auto t = noon_lossy_tangent(n, eta, 0.0);
  return qfi_from_matrices(t.rho, t.d_rho, options);
}

/// Lossless NOON state as a Fock family; phase acts on arm 1.
inline FockFamily noon_family(int n) {
  detail::validate_noon(n, 1.0);
  return [n](double phi) {
    FockPoint p{Eigen::VectorXcd::Zero(2), Eigen::VectorXcd::Zero(2)};
    // Basis {|N,0>, |0,N>}.
    p.state(0) = std::polar(1.0 / std::sqrt(2.0), n * phi);
    p.state(1) = 1.0 / std::sqrt(2.0);
    p.derivative(0) = cplx{0.0, double(n)} * p.state(0);
    return p;
  };
}

// ---------------------------------------------------------------------------
// Scalar bounds

/// Loss-scaled shot-noise limit 1/sqrt(eta N).
inline double snl(double photons, double eta) {
  if (!(photons > 0.0)) throw DomainError("snl: photon number must be positive");
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("snl: transmission eta outside [0,1]");
  return 1.0 / std::sqrt(eta * photons);
}

/// Mean photon number 2 N1^2 |a0|^2 = 2|a0|^2 / (2 + 2 e^{-|a0|^2}) of the ECS.
inline double equivalent_size(double alpha0) {
  if (!(alpha0 >= 0.0)) throw DomainError("equivalent_size: alpha0 must be non-negative");
  const double a2 = alpha0 * alpha0;
  return 2.0 * a2 / (2.0 + 2.0 * std::exp(-a2));
}

/// delta phi >= 1 / sqrt(repetitions F).
inline double cramer_rao(double fisher, int repetitions = 1) {
  if (!(fisher > 0.0)) throw DomainError("cramer_rao: Fisher information must be positive");
  if (repetitions < 1) throw DomainError("cramer_rao: repetitions must be positive");
  return 1.0 / std::sqrt(repetitions * fisher);
}

}  // namespace ecsim
