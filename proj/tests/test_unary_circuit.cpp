#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "unary_pricing/error.hpp"
#include "unary_pricing/unary_circuit.hpp"

using namespace unary_pricing;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> random_probs(std::mt19937_64& rng, std::size_t n) {
  std::gamma_distribution<double> gamma(0.7, 1.0);
  std::vector<double> p(n);
  for (double& x : p) x = gamma(rng);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= total;
  return p;
}

std::vector<double> increasing_prices(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> step(0.1, 1.0);
  std::vector<double> s(n);
  double x = 0.5;
  for (double& v : s) v = (x += step(rng));
  return s;
}

std::vector<double> anc0_probs(const UnaryState& st) {
  std::vector<double> p(st.bins());
  for (std::size_t i = 0; i < st.bins(); ++i) p[i] = std::norm(st.amp(i, 0));
  return p;
}

}  // namespace

TEST_CASE("initial state") {
  const auto s3 = initial_state(3);
  const std::vector<double> expected{0, 0, 1, 0, 0, 0};
  for (Eigen::Index k = 0; k < 6; ++k) CHECK(s3.amps()(k) == Complex(expected[k], 0));
  CHECK(initial_state(2).amps()(0) == Complex(1, 0));
  CHECK(initial_state(8).amps()(6) == Complex(1, 0));
  CHECK(initial_state(8).norm_squared() == 1.0);
  CHECK_THROWS_AS(initial_state(1), Error);
}

TEST_CASE("loader schedule has the stated depth and gate count") {
  for (std::size_t n = 2; n <= 64; ++n) {
    const auto gates = loader_schedule(n);
    CHECK(gates.size() == n - 1);
    CHECK(loader_depth(n) == (n + 1) / 2);
    for (const auto& g : gates) {
      CHECK((g.source + 1 == g.target || g.target + 1 == g.source));
    }
  }
  const std::vector<SplitterGate> eight{{3, 4, 0}, {3, 2, 1}, {4, 5, 1}, {2, 1, 2},
                                        {5, 6, 2}, {1, 0, 3}, {6, 7, 3}};
  CHECK(loader_schedule(8) == eight);
}

TEST_CASE("splitter blocks") {
  SUBCASE("p = 1 leaves the photon and reads diag(1, -1)") {
    const auto d = build_loader({{1.0}}, 2);
    OperatorMatrix expected = OperatorMatrix::Identity(4, 4);
    expected(2, 2) = -1.0;
    expected(3, 3) = -1.0;
    CHECK((d.matrix() - expected).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("p = 0.5 balances the pair") {
    const auto out = build_loader({{0.5}}, 2).apply(initial_state(2));
    CHECK(out.amp(0, 0).real() == doctest::Approx(std::sqrt(0.5)));
    CHECK(out.amp(1, 0).real() == doctest::Approx(std::sqrt(0.5)));
  }
  SUBCASE("three bins are unitary for arbitrary splits") {
    const auto d = build_loader({{0.3, 0.8}}, 3);
    CHECK(unitarity_error(d.matrix()) < 1e-12);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(build_loader({{0.5}}, 3), Error);
    CHECK_THROWS_AS(build_loader({{1.5, 0.5}}, 3), Error);
    try {
      build_loader({{0.5, 0.5, 0.5}}, 3);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::invalid_length);
    }
  }
}

TEST_CASE("fit_loader reproduces the target distribution") {
  SUBCASE("equal split on two bins") {
    const auto params = fit_loader(std::vector<double>{0.5, 0.5});
    REQUIRE(params.splits.size() == 1);
    CHECK(params.splits[0] == doctest::Approx(0.5));
    const auto out = build_loader(params, 2).apply(initial_state(2));
    CHECK(out.amp(0, 0).real() == doctest::Approx(std::sqrt(0.5)));
    CHECK(out.amp(1, 0).real() == doctest::Approx(std::sqrt(0.5)));
  }
  SUBCASE("delta on the middle bin keeps the photon in place") {
    const auto out = build_loader(fit_loader(std::vector<double>{0, 1, 0}), 3).apply(initial_state(3));
    CHECK(std::norm(out.amp(1, 0)) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("amplitudes are the non-negative square roots") {
    const DiscreteDistribution d({1, 2, 3, 4, 5}, {0.1, 0.2, 0.3, 0.25, 0.15});
    const auto out = build_loader(fit_loader(d), 5).apply(initial_state(5));
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(out.amp(i, 0).real() == doctest::Approx(std::sqrt(d.probs()[i])).epsilon(1e-13));
      CHECK(std::abs(out.amp(i, 1)) < 1e-15);
    }
  }
  SUBCASE("fuzz: 100 random distributions, n in 2..16") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + static_cast<std::size_t>(trial) % 15;
      auto p = random_probs(rng, n);
      if (trial % 7 == 0) p[rng() % n] = 0.0;  // exercise empty bins
      const double total = std::accumulate(p.begin(), p.end(), 0.0);
      for (double& x : p) x /= total;
      const auto out = build_loader(fit_loader(p), n).apply(initial_state(n));
      const auto got = anc0_probs(out);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(got[i] - p[i]) < 1e-12);
    }
  }
}

TEST_CASE("payoff angles") {
  const DiscreteDistribution d({1, 2, 3}, {0.25, 0.5, 0.25});
  const auto angles = payoff_angles(d, 1.5);
  CHECK_FALSE(angles.degenerate_strike);
  CHECK(angles.thetas[0] == 0.0);
  CHECK(angles.thetas[1] == doctest::Approx(0.6154797086703873).epsilon(1e-14));
  CHECK(angles.thetas[2] == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK(payoff_angles(d, 2.0).thetas[1] == 0.0);

  const auto degenerate = payoff_angles(d, 3.0);
  CHECK(degenerate.degenerate_strike);
  for (double t : degenerate.thetas) CHECK(t == 0.0);
}

TEST_CASE("payoff operator") {
  CHECK((build_payoff({{0, 0, 0}}).matrix() - OperatorMatrix::Identity(6, 6)).cwiseAbs().maxCoeff() ==
        0.0);

  const auto quarter = build_payoff({{0, kPi / 2}});
  StateVector v = StateVector::Zero(4);
  v(2) = 1.0;
  const auto out = quarter.apply(UnaryState(v));
  CHECK(std::abs(out.amp(1, 0)) < 1e-15);
  CHECK(out.amp(1, 1).real() == doctest::Approx(1.0));

  const auto p = build_payoff({{0, std::asin(std::sqrt(1.0 / 3.0)), kPi / 2}});
  CHECK(unitarity_error(p.matrix()) < 1e-12);
  CHECK_THROWS_AS(build_payoff({{0, 2.0}}), Error);
}

TEST_CASE("sign operators") {
  const auto s_psi = build_s_psi(3);
  const auto s_0 = build_s_0(3);
  const std::vector<double> psi{1, -1, 1, -1, 1, -1};
  const std::vector<double> zero{1, 1, -1, 1, 1, 1};
  for (Eigen::Index k = 0; k < 6; ++k) {
    CHECK(s_psi.matrix()(k, k).real() == psi[k]);
    CHECK(s_0.matrix()(k, k).real() == zero[k]);
  }
  CHECK(s_psi.matrix().isDiagonal());
  CHECK(s_0.matrix().isDiagonal());
  for (std::size_t n : {2u, 5u, 8u}) {
    const auto a = build_s_psi(n).matrix();
    const auto b = build_s_0(n).matrix();
    CHECK((a * a).isIdentity(0.0));
    CHECK((b * b).isIdentity(0.0));
  }
}

TEST_CASE("S_psi flipping every ancilla-1 slot matches the projector form") {
  // I - 2 sum |psi_i><psi_i| (x) |0><0| equals -S_psi; the global sign cannot
  // change any detection probability.
  std::mt19937_64 rng(5);
  const std::size_t n = 5;
  const DiscreteDistribution d(increasing_prices(rng, n), random_probs(rng, n));
  const double strike = d.prices()[1];
  const auto loader = build_loader(fit_loader(d), n);
  const auto payoff = build_payoff(payoff_angles(d, strike));
  const auto q = build_q(loader, payoff, n);

  OperatorMatrix projector_form = OperatorMatrix::Identity(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) projector_form(2 * i, 2 * i) = -1.0;
  const OperatorMatrix a = payoff.matrix() * loader.matrix();
  const OperatorMatrix q_alt = a * build_s_0(n).matrix() * a.adjoint() * projector_form;

  StateVector x = a * initial_state(n).amps();
  StateVector y = x;
  for (int m = 0; m < 12; ++m) {
    x = q.matrix() * x;
    y = q_alt * y;
    for (Eigen::Index k = 0; k < x.size(); ++k) CHECK(std::norm(x(k)) == doctest::Approx(std::norm(y(k))).epsilon(1e-12));
  }
  // Bins at or below the strike never populate ancilla 1, so masking the
  // readout and flipping all ancilla-1 slots coincide.
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const std::size_t bin = static_cast<std::size_t>(k) / 2;
    if (k % 2 == 1 && !(d.prices()[bin] > strike)) CHECK(std::abs(x(k)) < 1e-14);
  }
}

TEST_CASE("amplification operator") {
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(build_q(build_loader({{0.5}}, 2), build_payoff({{0, 0, 0}}), 2), Error);
  }
  SUBCASE("trivial loader and zero angles: Q^2 fixes the initial state up to sign") {
    const std::size_t n = 4;
    const auto q = build_q(build_loader(fit_loader(std::vector<double>{0, 1, 0, 0}), n),
                           build_payoff({{0, 0, 0, 0}}), n);
    const StateVector init = initial_state(n).amps();
    const StateVector out = q.matrix() * (q.matrix() * init);
    CHECK(std::abs(std::abs(out.dot(init)) - 1.0) < 1e-12);
  }
  SUBCASE("generic three-bin instance") {
    const DiscreteDistribution d({1, 2, 3}, {0.25, 0.5, 0.25});
    const auto loader = build_loader(fit_loader(d), 3);
    const auto payoff = build_payoff(payoff_angles(d, 1.5));
    const auto q = build_q(loader, payoff, 3);
    CHECK(unitarity_error(q.matrix()) < 1e-12);

    const auto mask = strike_mask(d, 1.5);
    UnaryState st = payoff.apply(loader.apply(initial_state(3)));
    const double a = ancilla_one_prob(st, mask);
    CHECK(a == doctest::Approx(0.625 / 1.5).epsilon(1e-14));
    const double alpha = std::asin(std::sqrt(a));
    for (int m = 1; m <= 10; ++m) {
      st = q.apply(st);
      CHECK(std::abs(ancilla_one_prob(st, mask) - std::pow(std::sin((2 * m + 1) * alpha), 2)) < 1e-12);
    }
  }
}

TEST_CASE("ancilla-one readout") {
  const DiscreteDistribution d({1, 2, 3}, {0.25, 0.5, 0.25});
  const auto loaded = build_loader(fit_loader(d), 3).apply(initial_state(3));
  const auto mask = strike_mask(d, 1.5);
  CHECK(ancilla_one_prob(build_payoff(payoff_angles(d, 1.5)).apply(loaded), mask) ==
        doctest::Approx(0.4166666666666667).epsilon(1e-14));
  CHECK(ancilla_one_prob(build_payoff({{0, 0, 0}}).apply(loaded), mask) == 0.0);
  CHECK(ancilla_one_prob(build_payoff({{kPi / 2, kPi / 2, kPi / 2}}).apply(loaded),
                         {true, true, true}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(ancilla_one_prob(loaded, {true, true}), Error);
}

TEST_CASE("payoff identity on fuzzed instances") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial) % 15;
    const DiscreteDistribution d(increasing_prices(rng, n), random_probs(rng, n));
    std::uniform_real_distribution<double> pick(d.prices().front() - 0.5, d.prices().back());
    const double strike = std::max(0.0, pick(rng));
    const auto st = build_payoff(payoff_angles(d, strike))
                        .apply(build_loader(fit_loader(d), n).apply(initial_state(n)));
    const double readout = ancilla_one_prob(st, strike_mask(d, strike)) * (d.max_price() - strike);
    CHECK(std::abs(readout - oracle::discrete_payoff(d.prices(), d.probs(), strike)) < 1e-10);
  }
}

TEST_CASE("operators preserve the norm") {
  std::mt19937_64 rng(8);
  for (std::size_t n : {2u, 3u, 8u, 16u, 64u}) {
    const DiscreteDistribution d(increasing_prices(rng, n), random_probs(rng, n));
    const double strike = d.prices()[n / 2];
    const auto loader = build_loader(fit_loader(d), n);
    const auto payoff = build_payoff(payoff_angles(d, strike));
    const std::vector<CircuitUnitary> ops{loader, payoff, build_s_psi(n), build_s_0(n),
                                          build_q(loader, payoff, n)};
    StateVector v(static_cast<Eigen::Index>(2 * n));
    std::normal_distribution<double> g;
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = Complex(g(rng), g(rng));
    v.normalize();
    const UnaryState st(v);
    for (const auto& op : ops) {
      CHECK(unitarity_error(op.matrix()) < 1e-12);
      CHECK(std::abs(op.apply(st).norm_squared() - 1.0) < 1e-12);
      CHECK(std::abs(op.adjoint().apply(op.apply(st)).amps().dot(v) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("state and operator validation") {
  CHECK_THROWS_AS(UnaryState(StateVector::Zero(6)), Error);
  CHECK_THROWS_AS(UnaryState(StateVector::Ones(3)), Error);
  OperatorMatrix not_unitary = OperatorMatrix::Identity(4, 4);
  not_unitary(0, 1) = 0.1;
  CHECK_THROWS_AS(CircuitUnitary(not_unitary, OperatorKind::custom), Error);
  CHECK(build_q(build_loader({{0.5}}, 2), build_payoff({{0.1, 0.2}}), 2).label() == "Q");
}

TEST_CASE("shot sampling") {
  SUBCASE("a basis state sends every shot to one slot") {
    const auto counts = sample_shots(initial_state(4), 1000, 1);
    CHECK(counts[2] == 1000);
    CHECK(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}) == 1000);
  }
  SUBCASE("uniform over four slots stays within 5 sigma") {
    StateVector v = StateVector::Zero(8);
    for (int k : {0, 3, 4, 7}) v(k) = 0.5;
    const auto counts = sample_shots(UnaryState(v), 1'000'000, 99);
    const double sigma = std::sqrt(1e6 * 0.25 * 0.75);
    for (int k : {0, 3, 4, 7}) CHECK(std::abs(static_cast<double>(counts[k]) - 250000.0) < 5 * sigma);
    for (int k : {1, 2, 5, 6}) CHECK(counts[k] == 0);
  }
  SUBCASE("fixed seed, identical counts") {
    const auto st = build_loader({{0.3, 0.6}}, 3).apply(initial_state(3));
    CHECK(sample_shots(st, 5000, 12) == sample_shots(st, 5000, 12));
  }
  CHECK_THROWS_AS(sample_shots(initial_state(2), 0, 1), Error);
}

TEST_CASE("angle noise model") {
  const LoaderParams params{{0.2, 0.5, 0.9}};
  CHECK(perturb_splits(params, 0.0, 3).splits == params.splits);
  const auto noisy = perturb_splits(params, 0.05, 3);
  CHECK(noisy.splits != params.splits);
  CHECK(perturb_splits(params, 0.05, 3).splits == noisy.splits);
  for (double p : noisy.splits) CHECK((p >= 0.0 && p <= 1.0));

  const PayoffAngles angles{{0.0, 0.7, kPi / 2}, false};
  for (double t : perturb_angles(angles, 0.3, 4).thetas) CHECK((t >= 0.0 && t <= kPi / 2));
}

TEST_CASE("long operator chains stay normalized") {
  const auto dist = discretize(BsmParams{}, 8);
  const auto loader = build_loader(fit_loader(dist), 8);
  const auto payoff = build_payoff(payoff_angles(dist, 1.0));
  const auto q = build_q(loader, payoff, 8);
  UnaryState s = payoff.apply(loader.apply(initial_state(8)));
  for (int k = 0; k < 200'000; ++k) s = q.apply(s);
  CHECK(s.norm_squared() == doctest::Approx(1.0).epsilon(1e-14));
}
