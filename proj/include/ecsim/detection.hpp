#pragma once

// Photon-number-resolving detection of coherent dyad states.
//
// P(#) = sum_d w_d <#|ket_d> conj(<#|bra_d>) factorizes over modes for each
// dyad. The detected modes are split into a left and a right group; dyads that
// share the same left-group factor are folded together, which turns the whole
// outcome table into one small-rank complex matrix product evaluated in row
// blocks. Phase derivatives ride along through the same product.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ecsim/coherent_algebra.hpp"
#include "ecsim/family.hpp"

namespace ecsim {

struct CutoffPolicy {
  /// Largest probability that truncation may discard.
  double tail_budget = 1e-10;
  /// Outcomes below this probability are left out of Fisher sums.
  double probability_floor = 1e-15;
};

/// n_max = ceil(|a|^2 + 8|a| + 15) for the largest amplitude magnitude reaching a detector.
inline int cutoff_for_amplitude(double max_abs) {
  return static_cast<int>(std::ceil(max_abs * max_abs + 8.0 * max_abs + 15.0));
}

/// <n|a> = e^{-|a|^2/2} a^n / sqrt(n!), times the term coefficient for each mode.
inline cplx fock_amplitude(const CoherentTerm& term, std::span<const int> occupation) {
  detail::require_modes(term.modes(), occupation.size(), "fock_amplitude");
  cplx acc = term.coefficient;
  for (std::size_t m = 0; m < occupation.size(); ++m) {
    const cplx a = term.amplitudes[m];
    const int n = occupation[m];
    if (n < 0) throw DomainError("fock_amplitude: negative occupation");
    if (n == 0) {
      acc *= std::exp(-0.5 * std::norm(a));
      continue;
    }
    if (a == cplx{}) return cplx{};
    const double log_mag = -0.5 * std::norm(a) + n * std::log(std::abs(a)) - 0.5 * std::lgamma(n + 1.0);
    acc *= std::polar(std::exp(log_mag), n * std::arg(a));
  }
  return acc;
}

/// Outcome table over the detected modes, in lexicographic order of the left
/// group followed by the right group.
struct OutcomeDistribution {
  std::size_t modes = 0;
  std::vector<int> occupations;  // flat, stride `modes`
  std::vector<double> probabilities;
  double tail_mass = 0.0;
  double phi = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return probabilities.size(); }
  [[nodiscard]] std::span<const int> occupation(std::size_t i) const {
    return {occupations.data() + i * modes, modes};
  }
  [[nodiscard]] double total() const {
    return std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  }
  /// Probability of an occupation tuple, 0 if it lies outside the table.
  [[nodiscard]] double probability(std::span<const int> occ) const {
    for (std::size_t i = 0; i < size(); ++i) {
      auto o = occupation(i);
      if (std::equal(o.begin(), o.end(), occ.begin(), occ.end())) return probabilities[i];
    }
    return 0.0;
  }
};

/// Enumerated outcome set: per-mode cutoffs and the retained occupation tuples
/// of each mode group.
struct OutcomeSupport {
  std::vector<int> cutoffs;
  std::vector<std::size_t> left_modes;
  std::vector<std::size_t> right_modes;
  std::vector<int> left_tuples;   // flat, stride left_modes.size()
  std::vector<int> right_tuples;  // flat, stride right_modes.size()
  double tail_budget = 1e-10;
  double probability_floor = 1e-15;

  [[nodiscard]] std::size_t left_count() const {
    return left_modes.empty() ? 1 : left_tuples.size() / left_modes.size();
  }
  [[nodiscard]] std::size_t right_count() const {
    return right_modes.empty() ? 1 : right_tuples.size() / right_modes.size();
  }
  [[nodiscard]] std::size_t size() const { return left_count() * right_count(); }
};

struct FisherResult {
  double fisher = 0.0;
  double tail_mass = 0.0;
  /// Probability carried by outcomes below the floor (left out of the sum).
  double excluded_mass = 0.0;
};

namespace detail {

// Fock amplitudes <n|a> and their phase derivatives for n = 0..cutoff.
struct FockRow {
  std::vector<cplx> value;
  std::vector<cplx> derivative;
};

inline FockRow fock_row(cplx a, cplx da, int cutoff) {
  FockRow row{std::vector<cplx>(cutoff + 1), std::vector<cplx>(cutoff + 1)};
  const double mag2 = std::norm(a);
  if (mag2 < 500.0) {
    row.value[0] = std::exp(-0.5 * mag2);
    for (int n = 1; n <= cutoff; ++n) row.value[n] = row.value[n - 1] * a / std::sqrt(double(n));
  } else {
    CoherentTerm t{cplx{1.0}, {a}};
    for (int n = 0; n <= cutoff; ++n) row.value[n] = fock_amplitude(t, std::span<const int>(&n, 1));
  }
  const double shrink = (std::conj(a) * da).real();
  for (int n = 0; n <= cutoff; ++n) {
    row.derivative[n] = -shrink * row.value[n];
    if (n > 0) row.derivative[n] += da * std::sqrt(double(n)) * row.value[n - 1];
  }
  return row;
}

// Distinct (amplitude, tangent) pairs appearing in one mode, with their Fock rows.
struct ModeTable {
  std::vector<cplx> amps;
  std::vector<cplx> d_amps;
  std::vector<FockRow> rows;

  std::size_t index_of(cplx a, cplx da) {
    for (std::size_t i = 0; i < amps.size(); ++i) {
      if (std::abs(amps[i] - a) <= kMergeTolerance && std::abs(d_amps[i] - da) <= 1e-10) return i;
    }
    amps.push_back(a);
    d_amps.push_back(da);
    return amps.size() - 1;
  }
};

inline std::vector<int> cutoffs_from_rule(const MixedTangent& rho) {
  std::vector<int> cuts(rho.modes, 0);
  for (std::size_t m = 0; m < rho.modes; ++m) {
    double largest = 0.0;
    for (const auto& d : rho.dyads) largest = std::max({largest, std::abs(d.ket[m]), std::abs(d.bra[m])});
    cuts[m] = cutoff_for_amplitude(largest);
  }
  return cuts;
}

inline double total_abs_weight(const MixedTangent& rho) {
  double s = 0.0;
  for (const auto& d : rho.dyads) s += std::abs(d.weight);
  return s;
}

// Occupation tuples of one mode group, pruned by the largest single-term
// probability bound: smallest tuples are dropped while their summed bound
// stays below `drop_share`.
inline std::vector<int> group_tuples(const MixedTangent& rho, const std::vector<std::size_t>& group,
                                     const std::vector<int>& cutoffs, double drop_share) {
  const std::size_t g = group.size();
  if (g == 0) return {};
  std::vector<Amplitudes> distinct;
  auto remember = [&](const Amplitudes& full) {
    Amplitudes sub(g);
    for (std::size_t i = 0; i < g; ++i) sub[i] = full[group[i]];
    for (const auto& d : distinct) {
      if (amplitudes_equal(d, sub)) return;
    }
    distinct.push_back(std::move(sub));
  };
  for (const auto& d : rho.dyads) {
    remember(d.ket);
    remember(d.bra);
  }
  // |<n|a>|^2 per distinct vector, per mode of the group.
  std::vector<std::vector<std::vector<double>>> mass(distinct.size(), std::vector<std::vector<double>>(g));
  for (std::size_t t = 0; t < distinct.size(); ++t) {
    for (std::size_t i = 0; i < g; ++i) {
      const auto row = fock_row(distinct[t][i], cplx{}, cutoffs[group[i]]);
      mass[t][i].resize(row.value.size());
      for (std::size_t n = 0; n < row.value.size(); ++n) mass[t][i][n] = std::norm(row.value[n]);
    }
  }
  std::size_t box = 1;
  for (auto m : group) box *= static_cast<std::size_t>(cutoffs[m] + 1);
  std::vector<int> tuples(box * g);
  std::vector<double> bound(box);
  std::vector<int> occ(g, 0);
  for (std::size_t idx = 0; idx < box; ++idx) {
    double best = 0.0;
    for (std::size_t t = 0; t < distinct.size(); ++t) {
      double p = 1.0;
      for (std::size_t i = 0; i < g; ++i) p *= mass[t][i][occ[i]];
      best = std::max(best, p);
    }
    bound[idx] = best;
    std::copy(occ.begin(), occ.end(), tuples.begin() + static_cast<std::ptrdiff_t>(idx * g));
    for (std::size_t i = g; i-- > 0;) {
      if (++occ[i] <= cutoffs[group[i]]) break;
      occ[i] = 0;
    }
  }
  std::vector<std::size_t> order(box);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return bound[a] < bound[b]; });
  std::vector<char> keep(box, 1);
  double dropped = 0.0;
  for (auto idx : order) {
    if (dropped + bound[idx] > drop_share) break;
    dropped += bound[idx];
    keep[idx] = 0;
  }
  std::vector<int> kept;
  for (std::size_t idx = 0; idx < box; ++idx) {
    if (keep[idx]) kept.insert(kept.end(), tuples.begin() + idx * g, tuples.begin() + (idx + 1) * g);
  }
  return kept;
}

inline void split_groups(std::size_t modes, OutcomeSupport& s) {
  const std::size_t left = (modes + 1) / 2;
  for (std::size_t m = 0; m < modes; ++m) (m < left ? s.left_modes : s.right_modes).push_back(m);
}

inline OutcomeSupport make_support(const MixedTangent& rho, std::vector<int> cutoffs, const CutoffPolicy& policy) {
  if (cutoffs.size() != rho.modes) throw DimensionError("outcome support: one cutoff per mode required");
  for (int c : cutoffs) {
    if (c < 0) throw DomainError("outcome support: negative cutoff");
  }
  OutcomeSupport s;
  s.cutoffs = std::move(cutoffs);
  s.tail_budget = policy.tail_budget;
  s.probability_floor = policy.probability_floor;
  split_groups(rho.modes, s);
  const double share = 1e-2 * policy.tail_budget / std::max(1.0, total_abs_weight(rho));
  s.left_tuples = group_tuples(rho, s.left_modes, s.cutoffs, share);
  s.right_tuples = group_tuples(rho, s.right_modes, s.cutoffs, share);
  return s;
}

// Evaluates P(#) and dP/dphi(#) over a support and hands each outcome to a visitor
// visit(left_index, right_index, P, dP).
class DyadEvaluator {
 public:
  DyadEvaluator(const MixedTangent& rho, const OutcomeSupport& support) : support_(support) {
    if (rho.modes != support.cutoffs.size()) throw DimensionError("outcome evaluation: support/state mode mismatch");
    const std::size_t modes = rho.modes;
    tables_.resize(modes);
    ket_index_.assign(rho.dyads.size(), std::vector<std::size_t>(modes));
    bra_index_.assign(rho.dyads.size(), std::vector<std::size_t>(modes));
    for (std::size_t d = 0; d < rho.dyads.size(); ++d) {
      const auto& dy = rho.dyads[d];
      for (std::size_t m = 0; m < modes; ++m) {
        ket_index_[d][m] = tables_[m].index_of(dy.ket[m], dy.d_ket[m]);
        bra_index_[d][m] = tables_[m].index_of(dy.bra[m], dy.d_bra[m]);
      }
    }
    for (std::size_t m = 0; m < modes; ++m) {
      auto& tab = tables_[m];
      for (std::size_t i = 0; i < tab.amps.size(); ++i) {
        tab.rows.push_back(fock_row(tab.amps[i], tab.d_amps[i], support.cutoffs[m]));
      }
    }
    // Fold dyads sharing a left-group factor into one key.
    key_of_.resize(rho.dyads.size());
    for (std::size_t d = 0; d < rho.dyads.size(); ++d) {
      std::size_t k = 0;
      for (; k < keys_.size(); ++k) {
        bool same = true;
        for (auto m : support.left_modes) {
          same = same && ket_index_[keys_[k]][m] == ket_index_[d][m] && bra_index_[keys_[k]][m] == bra_index_[d][m];
        }
        if (same) break;
      }
      if (k == keys_.size()) keys_.push_back(d);
      key_of_[d] = k;
    }
    weights_.reserve(rho.dyads.size());
    d_weights_.reserve(rho.dyads.size());
    for (const auto& dy : rho.dyads) {
      weights_.push_back(dy.weight);
      d_weights_.push_back(dy.d_weight);
    }
    build_right();
  }

  template <class Visit>
  void for_each(Visit&& visit, bool with_derivative) const {
    // Re(L R) = [Re L, Im L] [Re R; -Im R], so both P and dP are real GEMMs.
    const auto keys = static_cast<Eigen::Index>(keys_.size());
    const std::size_t n_left = support_.left_count();
    const auto n_right = static_cast<Eigen::Index>(support_.right_count());
    constexpr std::size_t kRowBlock = 128;
    constexpr Eigen::Index kColBlock = 512;
    Eigen::MatrixXd left(kRowBlock, 4 * keys);  // [Re dL, Im dL, Re L, Im L]
    Eigen::MatrixXd p_block;
    Eigen::MatrixXd dp_block;
    for (std::size_t start = 0; start < n_left; start += kRowBlock) {
      const std::size_t rows = std::min(kRowBlock, n_left - start);
      const auto rows_i = static_cast<Eigen::Index>(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        for (Eigen::Index k = 0; k < keys; ++k) {
          cplx value;
          cplx deriv;
          factor(keys_[static_cast<std::size_t>(k)], support_.left_modes, support_.left_tuples, start + r, value, deriv);
          left(ri, k) = deriv.real();
          left(ri, keys + k) = deriv.imag();
          left(ri, 2 * keys + k) = value.real();
          left(ri, 3 * keys + k) = value.imag();
        }
      }
      for (Eigen::Index c0 = 0; c0 < n_right; c0 += kColBlock) {
        const Eigen::Index cols = std::min(kColBlock, n_right - c0);
        p_block.noalias() =
            left.block(0, 2 * keys, rows_i, 2 * keys) * right_real_.block(0, c0, 2 * keys, cols);
        if (with_derivative) dp_block.noalias() = left.topRows(rows_i) * right_real_.middleCols(c0, cols);
        for (Eigen::Index c = 0; c < cols; ++c) {
          for (Eigen::Index r = 0; r < rows_i; ++r) {
            visit(start + static_cast<std::size_t>(r), static_cast<std::size_t>(c0 + c), p_block(r, c),
                  with_derivative ? dp_block(r, c) : 0.0);
          }
        }
      }
    }
  }

 private:
  // Product over `group` of <n|ket> conj(<n|bra>) for dyad d at tuple `row`,
  // together with its phase derivative.
  void factor(std::size_t d, const std::vector<std::size_t>& group, const std::vector<int>& tuples,
              std::size_t row, cplx& value, cplx& deriv) const {
    value = cplx{1.0};
    deriv = cplx{};
    const std::size_t g = group.size();
    for (std::size_t i = 0; i < g; ++i) {
      const std::size_t m = group[i];
      const int n = tuples[row * g + i];
      const auto& k = tables_[m].rows[ket_index_[d][m]];
      const auto& b = tables_[m].rows[bra_index_[d][m]];
      const cplx f = k.value[n] * std::conj(b.value[n]);
      const cplx df = k.derivative[n] * std::conj(b.value[n]) + k.value[n] * std::conj(b.derivative[n]);
      deriv = deriv * f + value * df;
      value *= f;
    }
  }

  void build_right() {
    const std::size_t keys = keys_.size();
    const std::size_t n_right = support_.right_count();
    const auto keys_i = static_cast<Eigen::Index>(keys);
    right_ = Eigen::MatrixXcd::Zero(keys_i, static_cast<Eigen::Index>(n_right));
    Eigen::MatrixXcd d_right = Eigen::MatrixXcd::Zero(keys_i, static_cast<Eigen::Index>(n_right));
    for (std::size_t d = 0; d < weights_.size(); ++d) {
      const auto k = static_cast<Eigen::Index>(key_of_[d]);
      for (std::size_t c = 0; c < n_right; ++c) {
        cplx value{1.0};
        cplx deriv{};
        if (!support_.right_modes.empty()) factor(d, support_.right_modes, support_.right_tuples, c, value, deriv);
        const auto ci = static_cast<Eigen::Index>(c);
        right_(k, ci) += weights_[d] * value;
        d_right(k, ci) += d_weights_[d] * value + weights_[d] * deriv;
      }
    }
    right_real_.resize(4 * keys_i, static_cast<Eigen::Index>(n_right));
    right_real_ << right_.real(), -right_.imag(), d_right.real(), -d_right.imag();
  }

  const OutcomeSupport& support_;
  std::vector<ModeTable> tables_;
  std::vector<std::vector<std::size_t>> ket_index_;
  std::vector<std::vector<std::size_t>> bra_index_;
  std::vector<std::size_t> keys_;
  std::vector<std::size_t> key_of_;
  std::vector<cplx> weights_;
  std::vector<cplx> d_weights_;
  Eigen::MatrixXcd right_;
  // [Re R; -Im R; Re R'; -Im R']
  Eigen::MatrixXd right_real_;
};

// Names the mode whose cutoff leaves the most single-term Poisson mass behind.
inline std::string worst_mode(const MixedTangent& rho, const std::vector<int>& cutoffs) {
  std::size_t worst = 0;
  double worst_tail = -1.0;
  for (std::size_t m = 0; m < rho.modes; ++m) {
    for (const auto& d : rho.dyads) {
      for (cplx a : {d.ket[m], d.bra[m]}) {
        const auto row = fock_row(a, cplx{}, cutoffs[m]);
        double kept = 0.0;
        for (const auto& v : row.value) kept += std::norm(v);
        if (1.0 - kept > worst_tail) {
          worst_tail = 1.0 - kept;
          worst = m;
        }
      }
    }
  }
  return std::to_string(worst);
}

inline void check_tail(double tail, const MixedTangent& rho, const OutcomeSupport& support) {
  if (tail > support.tail_budget) {
    throw TruncationError("outcome distribution: truncation tail " + std::to_string(tail) +
                          " exceeds budget; increase the cutoff of mode " + worst_mode(rho, support.cutoffs));
  }
}

inline constexpr double kNegativeProbability = -1e-12;

}  // namespace detail

inline OutcomeSupport make_support(const MixedState& rho, const CutoffPolicy& policy = {}) {
  const auto t = frozen(rho);
  return detail::make_support(t, detail::cutoffs_from_rule(t), policy);
}

inline OutcomeSupport make_support(const MixedState& rho, std::vector<int> cutoffs, const CutoffPolicy& policy = {}) {
  return detail::make_support(frozen(rho), std::move(cutoffs), policy);
}

/// Full outcome table of a normalized state on a given support.
inline OutcomeDistribution outcome_distribution(const MixedState& rho, const OutcomeSupport& support,
                                                double phi = 0.0) {
  const auto t = frozen(rho);
  detail::DyadEvaluator eval(t, support);
  OutcomeDistribution out;
  out.modes = rho.modes();
  out.phi = phi;
  out.probabilities.reserve(support.size());
  out.occupations.reserve(support.size() * out.modes);
  const std::size_t nl = support.left_modes.size();
  const std::size_t nr = support.right_modes.size();
  // Visit order is column-major within each row block; store row-major so the
  // table is lexicographic.
  std::vector<double> table(support.size());
  const std::size_t n_right = support.right_count();
  bool negative = false;
  eval.for_each(
      [&](std::size_t i, std::size_t j, double p, double) {
        if (p < detail::kNegativeProbability) negative = true;
        table[i * n_right + j] = std::max(p, 0.0);
      },
      false);
  if (negative) throw PositivityError("outcome distribution: negative outcome probability");
  for (std::size_t i = 0; i < support.left_count(); ++i) {
    for (std::size_t j = 0; j < n_right; ++j) {
      for (std::size_t q = 0; q < nl; ++q) out.occupations.push_back(support.left_tuples[i * nl + q]);
      for (std::size_t q = 0; q < nr; ++q) out.occupations.push_back(support.right_tuples[j * nr + q]);
      out.probabilities.push_back(table[i * n_right + j]);
    }
  }
  out.tail_mass = 1.0 - out.total();
  detail::check_tail(out.tail_mass, t, support);
  return out;
}

/// Outcome table with per-mode cutoffs from the tail rule.
inline OutcomeDistribution outcome_distribution(const MixedState& rho, const CutoffPolicy& policy = {},
                                                double phi = 0.0) {
  return outcome_distribution(rho, make_support(rho, policy), phi);
}

/// Outcome table with explicit per-mode maximum occupations.
inline OutcomeDistribution outcome_distribution(const MixedState& rho, std::vector<int> cutoffs,
                                                const CutoffPolicy& policy = {}, double phi = 0.0) {
  return outcome_distribution(rho, make_support(rho, std::move(cutoffs), policy), phi);
}

/// Two-detector table (m, n) behind the final balanced beam splitter.
inline OutcomeDistribution parity_probabilities(const MixedState& rho, int cutoff, double phi = 0.0,
                                                const CutoffPolicy& policy = {}) {
  if (rho.modes() != 2) throw DimensionError("parity_probabilities: exactly two detected modes required");
  return outcome_distribution(rho, std::vector<int>{cutoff, cutoff}, policy, phi);
}

using DistributionBuilder = std::function<OutcomeDistribution(double)>;

/// F_cl = sum (dP/dphi)^2 / P with dP/dphi from a central difference of whole
/// distributions. All three distributions must share one outcome enumeration.
inline double classical_fisher(const DistributionBuilder& builder, double phi, double step = kDerivativeStep,
                               double probability_floor = 1e-15) {
  const auto centre = builder(phi);
  const auto plus = builder(phi + step);
  const auto minus = builder(phi - step);
  if (plus.occupations != centre.occupations || minus.occupations != centre.occupations) {
    throw DerivativeError("classical_fisher: distributions do not share an outcome enumeration");
  }
  double fisher = 0.0;
  for (std::size_t i = 0; i < centre.size(); ++i) {
    const double p = centre.probabilities[i];
    if (p < probability_floor) continue;
    const double dp = (plus.probabilities[i] - minus.probabilities[i]) / (2.0 * step);
    fisher += dp * dp / p;
  }
  if (fisher < -1e-9) throw DerivativeError("classical_fisher: negative Fisher information");
  return std::max(fisher, 0.0);
}

/// F_cl of a dyad family with dP/dphi propagated exactly through the Fock
/// amplitudes; only the dyad parameters themselves are differenced.
inline FisherResult classical_fisher(const MixedFamily& family, double phi, const CutoffPolicy& policy = {},
                                     double step = kDerivativeStep) {
  const auto tangent = differentiate(family, phi, step);
  const auto support = detail::make_support(tangent, detail::cutoffs_from_rule(tangent), policy);
  detail::DyadEvaluator eval(tangent, support);
  FisherResult out;
  double total = 0.0;
  bool negative = false;
  eval.for_each(
      [&](std::size_t, std::size_t, double p, double dp) {
        if (p < detail::kNegativeProbability) negative = true;
        if (p <= 0.0) return;
        total += p;
        if (p < policy.probability_floor) {
          out.excluded_mass += p;
          return;
        }
        out.fisher += dp * dp / p;
      },
      true);
  if (negative) throw PositivityError("classical_fisher: negative outcome probability");
  out.tail_mass = 1.0 - total;
  detail::check_tail(out.tail_mass, tangent, support);
  return out;
}

}  // namespace ecsim
