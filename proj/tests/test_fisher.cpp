#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ecsim/fisher.hpp"
#include "ecsim/scheme.hpp"
#include "fock_oracle.hpp"
#include "random_states.hpp"

using namespace ecsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

PureFamily pure_ecs_family(double alpha0) {
  const auto ecs = build_ecs(alpha0);
  return [ecs](double phi) { return phase_shift(ecs, 0, phi); };
}

}  // namespace

TEST_CASE("NOON states reach the Heisenberg limit", "[fisher]") {
  for (int n = 1; n <= 10; ++n) {
    CHECK_THAT(qfi_pure(noon_family(n), 0.37), WithinAbs(double(n * n), 1e-10));
    CHECK_THAT(noon_qfi_lossy(n, 1.0), WithinAbs(double(n * n), 1e-10));
    CHECK_THAT(cramer_rao(n * n, 1), WithinAbs(1.0 / n, 1e-15));
  }
}

TEST_CASE("single coherent state has QFI four times its mean photon number", "[fisher]") {
  const PureFamily f = [](double phi) { return PureState::coherent({std::polar(1.0, phi)}); };
  CHECK_THAT(qfi_pure(f, 0.2), WithinRel(4.0, 1e-9));
  const PureFamily g = [](double phi) { return PureState::coherent({std::polar(1.7, phi), cplx{0.3}}); };
  CHECK_THAT(qfi_pure(g, 1.1), WithinRel(4.0 * 1.7 * 1.7, 1e-9));
}

TEST_CASE("phase-independent families carry no information", "[fisher]") {
  const PureFamily f = [](double) { return build_ecs(1.0); };
  CHECK_THAT(qfi_pure(f, 0.4), WithinAbs(0.0, 1e-12));
  // Equal mixture of two orthogonal fixed states.
  const double a = 1.0;
  const auto plus = normalize(PureState(2, {{cplx{1.0}, {cplx{a}, cplx{}}}, {cplx{1.0}, {cplx{}, cplx{a}}}}));
  const auto minus = normalize(PureState(2, {{cplx{1.0}, {cplx{a}, cplx{}}}, {cplx{-1.0}, {cplx{}, cplx{a}}}}));
  auto dyads = scale(to_mixed(plus), cplx{0.5}).dyads();
  const auto second = scale(to_mixed(minus), cplx{0.5}).dyads();
  dyads.insert(dyads.end(), second.begin(), second.end());
  const MixedState mix(2, dyads);
  const MixedFamily g = [mix](double) { return mix; };
  CHECK_THAT(qfi_mixed(g, 0.4), WithinAbs(0.0, 1e-12));
}

TEST_CASE("pure-state QFI is invariant under a global phase", "[fisher]") {
  const auto base = pure_ecs_family(1.3);
  const PureFamily rotated = [base](double phi) { return scale(base(phi), std::polar(1.0, 2.0 * phi + 0.4)); };
  CHECK_THAT(qfi_pure(rotated, 0.5), WithinRel(qfi_pure(base, 0.5), 1e-9));
}

TEST_CASE("pure-state QFI matches the number-basis variance", "[fisher][oracle]") {
  for (double a0 : {0.5, 1.1307, 2.0, 4.0}) {
    const double expected = oracle::pure_first_mode_qfi(oracle::ecs(a0, 60));
    CHECK_THAT(qfi_pure(pure_ecs_family(a0), 0.3), WithinRel(expected, 1e-9));
  }
}

TEST_CASE("mixed QFI reduces to the pure value without loss", "[fisher]") {
  for (double a0 : {0.7, 1.1307, 2.5, 4.0}) {
    const double pure = qfi_pure(pure_ecs_family(a0), 0.3);
    const double mixed = qfi_mixed(lossy_input_family(a0, InputKind::standard, 1.0, 1.0), 0.3);
    CHECK_THAT(mixed, WithinAbs(pure, 1e-8));
  }
}

TEST_CASE("lossy ECS QFI matches a dense number-basis computation", "[fisher][oracle]") {
  for (double a0 : {0.8, 1.5}) {
    for (double eta : {0.9, 0.5, 0.2}) {
      const double engine = qfi_mixed(lossy_input_family(a0, InputKind::standard, eta, eta), 0.3);
      CHECK_THAT(engine, WithinRel(oracle::lossy_ecs_qfi(a0, eta, 22), 1e-7));
    }
  }
}

TEST_CASE("QFI is unchanged by a small trace error", "[fisher]") {
  const auto base = lossy_input_family(1.5, InputKind::standard, 0.7, 0.7);
  const MixedFamily off = [base](double phi) { return scale(base(phi), cplx{1.0 + 1e-10}); };
  CHECK_THAT(qfi_mixed(off, 0.3), WithinRel(qfi_mixed(base, 0.3), 1e-9));
}

TEST_CASE("QFI does not increase with loss", "[fisher][property]") {
  for (double a0 : {1.0, 2.0, 4.0}) {
    double previous = std::numeric_limits<double>::infinity();
    for (double eta = 1.0; eta >= 0.1; eta -= 0.1) {
      const double f = qfi_mixed(lossy_input_family(a0, InputKind::standard, eta, eta), 0.2);
      CHECK(f <= previous + 1e-8);
      previous = f;
    }
  }
}

TEST_CASE("QFI of the two-branch mixture is bounded by the branch average", "[fisher][property]") {
  for (double a0 : {1.0, 2.0}) {
    for (double eta : {0.4, 0.8}) {
      const double a_eta = a0 * std::sqrt(eta);
      const double x = std::exp(-a0 * a0 * (1.0 - eta));
      auto branch = [a_eta](double sign) {
        return PureFamily([a_eta, sign](double phi) {
          return normalize(
              PureState(2, {{cplx{1.0}, {std::polar(a_eta, phi), cplx{}}}, {cplx{sign}, {cplx{}, cplx{a_eta}}}}));
        });
      };
      // Branch weights once each branch is normalized.
      const double n1sq = 1.0 / (2.0 + 2.0 * std::exp(-a0 * a0));
      const double w_plus = 0.5 * (1.0 + x) * n1sq * (2.0 + 2.0 * std::exp(-a_eta * a_eta));
      const double w_minus = 0.5 * (1.0 - x) * n1sq * (2.0 - 2.0 * std::exp(-a_eta * a_eta));
      CHECK_THAT(w_plus + w_minus, WithinAbs(1.0, 1e-12));
      const double bound = w_plus * qfi_pure(branch(1.0), 0.3) + w_minus * qfi_pure(branch(-1.0), 0.3);
      const double f = qfi_mixed(lossy_input_family(a0, InputKind::standard, eta, eta), 0.3);
      CHECK(f <= bound + 1e-8);
    }
  }
}

TEST_CASE("Gram threshold halving leaves the QFI unchanged", "[fisher][property]") {
  for (double a0 : {1.1307, 4.0}) {
    for (double eta : {0.95, 0.5}) {
      const auto fam = lossy_input_family(a0, InputKind::standard, eta, eta);
      QfiOptions half;
      half.support.gram_threshold = 0.5e-12;
      CHECK_THAT(qfi_mixed(fam, 0.3, half), WithinRel(qfi_mixed(fam, 0.3), 1e-6));
    }
  }
}

TEST_CASE("SLD and Bures routes agree on random lossy ECS configurations", "[fisher][property]") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> amp(0.3, 3.0);
  std::uniform_real_distribution<double> trans(0.1, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double a0 = amp(rng);
    const double e1 = trans(rng);
    const double e2 = trial % 2 ? e1 : trans(rng);
    const auto kind = trial % 3 == 0 ? InputKind::even : InputKind::standard;
    const auto fam = lossy_input_family(a0, kind, e1, e2);
    const double phi = phase(rng);
    CHECK_THAT(qfi_bures(fam, phi), WithinRel(qfi_mixed(fam, phi), 1e-5));
  }
}

TEST_CASE("lossy NOON benchmark", "[fisher]") {
  for (int n : {1, 2, 5, 16}) {
    CHECK_THAT(noon_qfi_lossy(n, 0.0), WithinAbs(0.0, 1e-14));
    for (double eta : {0.9, 0.5, 0.2}) {
      CHECK_THAT(noon_qfi_lossy(n, eta), WithinRel(n * n * std::pow(eta, n), 1e-10) || WithinAbs(n * n * std::pow(eta, n), 1e-15));
    }
  }
  for (double eta : {0.9, 0.5, 0.2}) {
    const DenseFamily fam = [eta](double phi) { return noon_lossy_tangent(1, eta, phi).rho; };
    CHECK_THAT(qfi_bures(fam, 0.3, 1.0), WithinRel(noon_qfi_lossy(1, eta), 1e-6));
  }
  CHECK_THROWS_AS(noon_qfi_lossy(0, 0.5), DomainError);
  CHECK_THROWS_AS(noon_qfi_lossy(61, 0.5), DomainError);
}

TEST_CASE("scalar benchmarks", "[fisher]") {
  CHECK_THAT(snl(1.0, 1.0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(snl(4.0, 1.0), WithinAbs(0.5, 1e-15));
  CHECK_THAT(snl(1.0, 0.5), WithinAbs(std::sqrt(2.0), 1e-15));
  CHECK_THAT(equivalent_size(1.1307), WithinAbs(1.0, 1e-3));
  CHECK(equivalent_size(0.0) == 0.0);
  CHECK_THAT(equivalent_size(4.0), WithinAbs(16.0 / (1.0 + std::exp(-16.0)), 1e-12));
  CHECK_THAT(cramer_rao(1.0, 1), WithinAbs(1.0, 1e-15));
  CHECK_THAT(cramer_rao(4.0, 4), WithinAbs(0.25, 1e-15));
  CHECK_THROWS_AS(cramer_rao(0.0, 1), DomainError);
  CHECK_THROWS_AS(snl(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(equivalent_size(-1.0), DomainError);
}

TEST_CASE("support basis reproduces the Gram matrix", "[fisher][support]") {
  std::mt19937 rng(6);
  const auto s = testing_support::random_state(rng, 2, 6, 1.0);
  std::vector<SupportVector> gens;
  for (const auto& t : s.terms()) gens.push_back({t.amplitudes, cplx{1.0}, {}});
  gens.push_back(coherent_derivative(s.terms()[0].amplitudes, {cplx{0.0, 0.5}, cplx{}}));
  const SupportBasis basis(gens);
  const auto& map = basis.orthonormal_map();
  CHECK((map.adjoint() * map - basis.gram()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((basis.gram() - basis.gram().adjoint()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("support dimension overflow is reported", "[fisher][support]") {
  std::mt19937 rng(12);
  const auto s = normalize(testing_support::random_state(rng, 2, 40, 3.0));
  const MixedFamily fam = [s](double phi) { return to_mixed(phase_shift(s, 0, phi)); };
  CHECK_THROWS_AS(qfi_mixed(fam, 0.1), SupportError);
}

TEST_CASE("non-positive operators are rejected", "[fisher]") {
  const auto a = PureState::coherent({cplx{1.0}});
  const auto b = PureState::coherent({cplx{-1.0}});
  auto dyads = to_mixed(a).dyads();
  const auto neg = scale(to_mixed(b), cplx{-0.5}).dyads();
  dyads.insert(dyads.end(), neg.begin(), neg.end());
  const MixedState bad(1, dyads);
  const MixedFamily fam = [bad](double phi) { return phase_shift(bad, 0, phi); };
  CHECK_THROWS_AS(qfi_mixed(fam, 0.2), PositivityError);
}

TEST_CASE("even ECS beats the standard ECS at small loss for large amplitude", "[fisher][scheme]") {
  const double even = qfi_mixed(lossy_input_family(4.0, InputKind::even, 0.95, 0.95), 0.3);
  const double standard = qfi_mixed(lossy_input_family(4.0, InputKind::standard, 0.95, 0.95), 0.3);
  CHECK(even > standard);
}
