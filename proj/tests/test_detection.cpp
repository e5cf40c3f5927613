#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "ecsim/detection.hpp"
#include "ecsim/fisher.hpp"
#include "ecsim/scheme.hpp"
#include "fock_oracle.hpp"

using namespace ecsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double n1_squared(double alpha0) { return 1.0 / (2.0 + 2.0 * std::exp(-alpha0 * alpha0)); }

// Lossless parity fringe: P(m, n) = K cos^2((m+n) phi / 2) for even n, K sin^2 for odd n,
// with K = 4 N1^2 e^{-a^2} (a^2/2)^(m+n) / (m! n!).
double parity_fringe(double alpha0, double phi, int m, int n) {
  const double a2 = alpha0 * alpha0;
  const double log_k = std::log(4.0 * n1_squared(alpha0)) - a2 + (m + n) * std::log(a2 / 2.0) -
                       std::lgamma(m + 1.0) - std::lgamma(n + 1.0);
  const double arg = 0.5 * (m + n) * phi;
  const double fringe = n % 2 == 0 ? std::cos(arg) * std::cos(arg) : std::sin(arg) * std::sin(arg);
  return std::exp(log_k) * fringe;
}

MixedState lossless_parity(double alpha0, double phi) {
  SchemeConfig c;
  c.alpha0 = alpha0;
  c.phi = phi;
  return parity_family(c)(phi);
}

}  // namespace

TEST_CASE("fock amplitudes of simple coherent terms", "[detection]") {
  const CoherentTerm one{cplx{1.0}, {cplx{1.0}}};
  const int zero = 0;
  const int three = 3;
  CHECK_THAT(fock_amplitude(one, std::span<const int>(&zero, 1)).real(), WithinAbs(std::exp(-0.5), 1e-15));
  const CoherentTerm vac{cplx{1.0}, {cplx{0.0}}};
  CHECK(fock_amplitude(vac, std::span<const int>(&three, 1)) == cplx{});
  CHECK(fock_amplitude(vac, std::span<const int>(&zero, 1)) == cplx{1.0});
}

TEST_CASE("fock amplitudes of the recombined ECS carry the phase fringe", "[detection]") {
  const double a0 = 1.3;
  const double phi = 0.6;
  const auto psi = beam_splitter(phase_shift(build_ecs(a0), 0, phi), {0, 1, 0.5});
  for (int m = 0; m < 5; ++m) {
    for (int n = 0; n < 5; ++n) {
      const int occ[2] = {m, n};
      cplx amp{};
      for (const auto& t : psi.terms()) amp += fock_amplitude(t, occ);
      const cplx expected = std::sqrt(n1_squared(a0)) * std::exp(-0.5 * a0 * a0) * std::pow(a0, m + n) *
                            (std::polar(1.0, (m + n) * phi) + (n % 2 ? -1.0 : 1.0)) /
                            std::sqrt(std::pow(2.0, m + n) * std::tgamma(m + 1.0) * std::tgamma(n + 1.0));
      CHECK_THAT(std::abs(amp - expected), WithinAbs(0.0, 1e-14));
    }
  }
}

TEST_CASE("single coherent state gives Poisson counts", "[detection]") {
  const auto d = outcome_distribution(to_mixed(PureState::coherent({cplx{1.0}})));
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int n = d.occupation(i)[0];
    CHECK_THAT(d.probabilities[i], WithinAbs(std::exp(-1.0) / std::tgamma(n + 1.0), 1e-15));
  }
  CHECK_THAT(d.total() + d.tail_mass, WithinAbs(1.0, 1e-12));
  CHECK(d.tail_mass < 1e-10);
}

TEST_CASE("lossless parity outcomes follow the cos^2 / sin^2 fringe", "[detection]") {
  for (double a0 : {0.5, 1.0, 2.0}) {
    for (double phi : {0.2, std::numbers::pi / 4.0, 0.7, 1.1}) {
      const auto d = parity_probabilities(lossless_parity(a0, phi), 30, phi);
      double worst = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        const auto occ = d.occupation(i);
        worst = std::max(worst, std::abs(d.probabilities[i] - parity_fringe(a0, phi, occ[0], occ[1])));
      }
      CHECK(worst < 1e-12);
      CHECK_THAT(d.total() + d.tail_mass, WithinAbs(1.0, 1e-9));
    }
  }
}

TEST_CASE("parity outcomes vanish where the fringe has a node", "[detection]") {
  const auto at_zero = parity_probabilities(lossless_parity(1.0, 0.0), 20, 0.0);
  for (std::size_t i = 0; i < at_zero.size(); ++i) {
    if (at_zero.occupation(i)[1] % 2 == 1) CHECK(at_zero.probabilities[i] < 1e-30);
  }
  // phi = pi / (m + n): even n outcomes of that total vanish.
  const int total = 4;
  const double phi = std::numbers::pi / total;
  const auto d = parity_probabilities(lossless_parity(1.5, phi), 20, phi);
  for (int n = 0; n <= total; n += 2) {
    const int occ[2] = {total - n, n};
    CHECK(d.probability(occ) < 1e-15);
  }
}

TEST_CASE("zero amplitude puts all probability on the vacuum", "[detection]") {
  SchemeConfig c;
  c.alpha0 = 0.0;
  auto& sink = warning_sink();
  const auto saved = sink;
  int warnings = 0;
  sink = [&](const std::string&) { ++warnings; };
  const auto d = parity_probabilities(parity_family(c)(0.3), 5);
  sink = saved;
  CHECK(warnings >= 1);
  const int vac[2] = {0, 0};
  CHECK_THAT(d.probability(vac), WithinAbs(1.0, 1e-15));
}

TEST_CASE("reference read-out agrees with the number-basis oracle", "[detection][oracle]") {
  SchemeConfig c;
  c.alpha0 = 1.0;
  c.alpha1 = 1.0;
  c.eta = 0.9;
  c.phi = 0.3;
  const auto d = outcome_distribution(reference_family(c)(c.phi), c.cutoff_policy, c.phi);
  const auto ref = oracle::reference_scheme(1.0, 1.0, 0.9, 0.3);
  double worst = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto o = d.occupation(i);
    worst = std::max(worst, std::abs(d.probabilities[i] - ref.probability(o[0], o[1], o[2], o[3])));
  }
  CHECK(worst < 1e-9);
  CHECK_THAT(d.total() + d.tail_mass, WithinAbs(1.0, 1e-9));
  CHECK_THAT(ref.table.sum(), WithinAbs(1.0, 1e-9));
}

TEST_CASE("tight cutoffs raise a truncation error naming the mode", "[detection]") {
  const auto rho = to_mixed(PureState::coherent({cplx{0.1}, cplx{3.0}}));
  try {
    outcome_distribution(rho, std::vector<int>{20, 5});
    FAIL("expected a truncation error");
  } catch (const TruncationError& e) {
    CHECK(std::string(e.what()).find("mode 1") != std::string::npos);
  }
}

TEST_CASE("classical Fisher information of simple models", "[detection]") {
  auto two_outcome = [](double phi) {
    OutcomeDistribution d;
    d.modes = 1;
    d.occupations = {0, 1};
    d.probabilities = {std::pow(std::cos(phi / 2), 2), std::pow(std::sin(phi / 2), 2)};
    d.phi = phi;
    return d;
  };
  for (double phi : {0.3, 1.0, 2.0}) CHECK_THAT(classical_fisher(two_outcome, phi), WithinRel(1.0, 1e-8));
  auto constant = [](double phi) {
    OutcomeDistribution d;
    d.modes = 1;
    d.occupations = {0, 1};
    d.probabilities = {0.25, 0.75};
    d.phi = phi;
    return d;
  };
  CHECK(classical_fisher(constant, 0.4) == 0.0);
  const MixedFamily frozen_family = [](double) { return to_mixed(PureState::coherent({cplx{1.0}, cplx{0.5}})); };
  CHECK_THAT(classical_fisher(frozen_family, 0.4).fisher, WithinAbs(0.0, 1e-12));
}

TEST_CASE("mismatched enumerations are a derivative error", "[detection]") {
  auto shifting = [](double phi) {
    OutcomeDistribution d;
    d.modes = 1;
    d.occupations = phi > 0.5 ? std::vector<int>{0, 1} : std::vector<int>{0, 2};
    d.probabilities = {0.5, 0.5};
    return d;
  };
  CHECK_THROWS_AS(classical_fisher(shifting, 0.5), DerivativeError);
}

TEST_CASE("tangent route and distribution-difference route agree", "[detection]") {
  SchemeConfig c;
  c.alpha0 = 1.2;
  c.alpha1 = 0.9;
  c.eta = 0.7;
  c.phi = 0.5;
  const auto family = reference_family(c);
  const auto fast = classical_fisher(family, c.phi).fisher;
  const auto support = make_support(family(c.phi), c.cutoff_policy);
  const DistributionBuilder builder = [&](double phi) { return outcome_distribution(family(phi), support, phi); };
  const double slow = classical_fisher(builder, c.phi);
  CHECK_THAT(fast, WithinRel(slow, 1e-6));
}

TEST_CASE("classical Fisher information is stable under step halving", "[detection]") {
  SchemeConfig c;
  c.alpha0 = 1.5;
  c.eta = 0.8;
  c.phi = 0.4;
  const auto family = parity_family(c);
  const double f = classical_fisher(family, c.phi, c.cutoff_policy, kDerivativeStep).fisher;
  const double half = classical_fisher(family, c.phi, c.cutoff_policy, kDerivativeStep / 2).fisher;
  CHECK_THAT(half, WithinRel(f, 1e-3));
}

TEST_CASE("measurements never beat the quantum Fisher information", "[detection][fisher]") {
  for (double a0 : {0.8, 1.5}) {
    for (double eta : {1.0, 0.6}) {
      SchemeConfig c;
      c.alpha0 = a0;
      c.alpha1 = 0.7;
      c.eta = eta;
      c.phi = 0.45;
      const double fq = qfi_mixed(lossy_input_family(a0, InputKind::standard, eta, eta), c.phi);
      CHECK(run_parity_scheme(c).fisher <= fq + 1e-6);
      CHECK(run_reference_scheme(c).fisher <= fq + 1e-6);
    }
  }
}

TEST_CASE("coherent probe with loss reaches the loss-scaled shot-noise limit", "[detection][fisher]") {
  for (double eta : {1.0, 0.5}) {
    const MixedFamily family = [eta](double phi) {
      auto psi = phase_shift(beam_splitter(PureState::coherent({cplx{1.0}, cplx{}}), {0, 1, 0.5}), 0, phi);
      auto rho = loss_channel(loss_channel(to_mixed(psi), 0, eta), 1, eta);
      return beam_splitter(rho, {0, 1, 0.5});
    };
    const double f = classical_fisher(family, 0.7).fisher;
    CHECK_THAT(cramer_rao(f, 1), WithinRel(snl(1.0, eta), 1e-6));
  }
  CHECK_THAT(snl(1.0, 0.5), WithinRel(std::sqrt(2.0), 1e-15));
}

TEST_CASE("without loss the even-cat reference beats a coherent one", "[detection][scheme]") {
  // With loss a bright coherent reference can overtake the cat; see the acceptance run.
  OptimizerOptions coarse;
  coarse.alpha1_count = 8;
  coarse.phi_count = 8;
  coarse.tolerance = 1e-3;
  SchemeConfig coherent_ref;
  coherent_ref.reference_kind = ReferenceKind::coherent;
  const auto cat = optimize_reference(1.1307, 1.0, InputKind::standard, coarse);
  const auto plain = optimize_reference(1.1307, 1.0, InputKind::standard, coarse, coherent_ref);
  CHECK(cat.delta_phi < plain.delta_phi);
}
