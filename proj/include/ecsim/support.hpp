#pragma once

// Finite orthonormal representation of operators built from coherent dyads.
//
// A SupportBasis orthonormalizes a list of generator vectors through their
// Gram matrix G = U diag(l) U^dagger. With the retained eigenpairs the map
// C = diag(sqrt(l)) U^dagger sends generator g to coordinates C[:, g], and
// C^dagger C reproduces G on the retained subspace. Generators are coherent
// products with at most one creation operator applied, which is exactly what
// phase derivatives of coherent states produce.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ecsim/coherent_algebra.hpp"
#include "ecsim/family.hpp"

namespace ecsim {

/// (scalar + sum_m creation[m] a_m^dagger) |amplitudes>. Empty `creation` means none.
struct SupportVector {
  Amplitudes amplitudes;
  cplx scalar{1.0, 0.0};
  Amplitudes creation;
};

/// d/dphi |a(phi)> for a normalized coherent product with amplitude tangent da.
inline SupportVector coherent_derivative(const Amplitudes& a, const Amplitudes& da) {
  double shrink = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) shrink += (std::conj(a[m]) * da[m]).real();
  return SupportVector{a, cplx{-shrink}, da};
}

inline cplx inner_product(const SupportVector& x, const SupportVector& y) {
  const cplx ov = overlap(x.amplitudes, y.amplitudes);
  // <x|y> = [(conj(x0) + A)(y0 + B) + C] <a_x|a_y>
  cplx a{}, b{}, c{};
  for (std::size_t m = 0; m < x.creation.size(); ++m) a += std::conj(x.creation[m]) * y.amplitudes[m];
  for (std::size_t m = 0; m < y.creation.size(); ++m) b += y.creation[m] * std::conj(x.amplitudes[m]);
  if (!x.creation.empty() && !y.creation.empty()) {
    for (std::size_t m = 0; m < x.creation.size(); ++m) c += std::conj(x.creation[m]) * y.creation[m];
  }
  return ((std::conj(x.scalar) + a) * (y.scalar + b) + c) * ov;
}

struct SupportOptions {
  /// Gram eigenvalues below this fraction of the largest are discarded.
  double gram_threshold = 1e-12;
  std::size_t max_dimension = 64;
};

class SupportBasis {
 public:
  explicit SupportBasis(std::vector<SupportVector> generators, const SupportOptions& options = {})
      : generators_(std::move(generators)) {
    const auto n = static_cast<Eigen::Index>(generators_.size());
    gram_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        gram_(i, j) = inner_product(generators_[i], generators_[j]);
        gram_(j, i) = std::conj(gram_(i, j));
      }
      gram_(i, i) = gram_(i, i).real();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram_);
    const auto& values = eig.eigenvalues();
    const double largest = n > 0 ? values(n - 1) : 0.0;
    std::vector<Eigen::Index> kept;
    for (Eigen::Index i = n; i-- > 0;) {
      if (values(i) > options.gram_threshold * largest) kept.push_back(i);
    }
    if (kept.size() > options.max_dimension) {
      throw SupportError("support basis: dimension " + std::to_string(kept.size()) + " exceeds maximum " +
                         std::to_string(options.max_dimension));
    }
    map_.resize(static_cast<Eigen::Index>(kept.size()), n);
    for (std::size_t r = 0; r < kept.size(); ++r) {
      const auto col = kept[r];
      map_.row(static_cast<Eigen::Index>(r)) = std::sqrt(values(col)) * eig.eigenvectors().col(col).adjoint();
    }
  }

  [[nodiscard]] const std::vector<SupportVector>& generators() const noexcept { return generators_; }
  [[nodiscard]] const Eigen::MatrixXcd& gram() const noexcept { return gram_; }
  /// Coordinates of generator g in the orthonormal basis are column g.
  [[nodiscard]] const Eigen::MatrixXcd& orthonormal_map() const noexcept { return map_; }
  [[nodiscard]] std::size_t dimension() const noexcept { return static_cast<std::size_t>(map_.rows()); }

  [[nodiscard]] Eigen::VectorXcd coordinates(std::size_t g) const { return map_.col(static_cast<Eigen::Index>(g)); }

 private:
  std::vector<SupportVector> generators_;
  Eigen::MatrixXcd gram_;
  Eigen::MatrixXcd map_;
};

namespace detail {

// Index of a plain coherent generator, appending it if absent.
inline std::size_t plain_index(std::vector<SupportVector>& gens, const Amplitudes& a) {
  for (std::size_t i = 0; i < gens.size(); ++i) {
    if (gens[i].creation.empty() && amplitudes_equal(gens[i].amplitudes, a)) return i;
  }
  gens.push_back(SupportVector{a, cplx{1.0}, {}});
  return gens.size() - 1;
}

inline std::size_t derivative_index(std::vector<SupportVector>& gens, const Amplitudes& a, const Amplitudes& da) {
  for (std::size_t i = 0; i < gens.size(); ++i) {
    if (!gens[i].creation.empty() && amplitudes_equal(gens[i].amplitudes, a) &&
        amplitudes_equal(gens[i].creation, da, 1e-10)) {
      return i;
    }
  }
  gens.push_back(coherent_derivative(a, da));
  return gens.size() - 1;
}

}  // namespace detail

/// Matrices of several mixed states in one common orthonormal basis.
inline std::vector<Eigen::MatrixXcd> represent(const std::vector<const MixedState*>& states,
                                               const SupportOptions& options = {}) {
  std::vector<SupportVector> gens;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> index(states.size());
  for (std::size_t s = 0; s < states.size(); ++s) {
    for (const auto& d : states[s]->dyads()) {
      index[s].emplace_back(detail::plain_index(gens, d.ket.amplitudes), detail::plain_index(gens, d.bra.amplitudes));
    }
  }
  const SupportBasis basis(std::move(gens), options);
  const auto r = static_cast<Eigen::Index>(basis.dimension());
  std::vector<Eigen::MatrixXcd> out;
  for (std::size_t s = 0; s < states.size(); ++s) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(r, r);
    for (std::size_t d = 0; d < states[s]->size(); ++d) {
      const auto [k, b] = index[s][d];
      m.noalias() += states[s]->dyads()[d].effective_weight() * basis.coordinates(k) * basis.coordinates(b).adjoint();
    }
    out.push_back(std::move(m));
  }
  return out;
}

inline Eigen::MatrixXcd represent(const MixedState& rho, const SupportOptions& options = {}) {
  return represent(std::vector<const MixedState*>{&rho}, options).front();
}

/// (1/2) || rho - sigma ||_1 on their joint finite support.
inline double trace_distance(const MixedState& rho, const MixedState& sigma, const SupportOptions& options = {}) {
  detail::require_modes(rho.modes(), sigma.modes(), "trace_distance");
  const auto mats = represent({&rho, &sigma}, options);
  const Eigen::MatrixXcd diff = mats[0] - mats[1];
  const Eigen::MatrixXcd herm = 0.5 * (diff + diff.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm, Eigen::EigenvaluesOnly);
  return 0.5 * eig.eigenvalues().cwiseAbs().sum();
}

/// Largest deviation from Hermiticity, max |(M - M^dagger)_ij|, on the finite support.
inline double hermiticity_defect(const MixedState& rho, const SupportOptions& options = {}) {
  const auto m = represent(rho, options);
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Eigenvalues of the (Hermitian part of the) represented operator, ascending.
inline Eigen::VectorXd spectrum(const MixedState& rho, const SupportOptions& options = {}) {
  const auto m = represent(rho, options);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

}  // namespace ecsim
