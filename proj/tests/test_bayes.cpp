#include <doctest.h>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <random>

#include "stabsel/bayes.hpp"
#include "stabsel/csv.hpp"

using namespace stabsel;

TEST_CASE("elicitation arithmetic") {
  const PriorSpec p = elicit(0.5, 0.7, 100);
  CHECK(p.alpha == 70.0);
  CHECK(p.beta == 30.0);
  CHECK(p.source == PriorSource::Elicited);
  CHECK(p.note.empty());

  const PriorSpec flat = elicit(0.0, 0.9, 100);
  CHECK(flat.alpha == 1.0);
  CHECK(flat.beta == 1.0);
  CHECK(flat.source == PriorSource::NonInformative);

  const PriorSpec third = elicit(1.0 / 3.0, 0.5, 100);
  CHECK(third.gamma() == 50.0);
  CHECK(third.alpha == 25.0);
  CHECK(third.beta == 25.0);

  // Shares whose products sit just below an integer in binary.
  CHECK(elicit(0.5, 0.3, 100).alpha == 30.0);
  CHECK(elicit(0.5, 0.1, 100).alpha == 10.0);
  CHECK(elicit(0.2, 0.6, 100).gamma() == 25.0);
  CHECK(elicit(0.2, 0.6, 100).alpha == 15.0);
  CHECK(floor_tolerant(0.7 * 100) == 70.0);
  CHECK(floor_tolerant(69.999) == 69.0);
  CHECK(floor_tolerant(2.5) == 2.0);
}

TEST_CASE("elicitation clamps and falls back") {
  const PriorSpec lo = elicit(0.5, 0.0, 100);
  CHECK(lo.alpha == 1.0);
  CHECK(lo.beta == 99.0);
  CHECK_FALSE(lo.note.empty());
  const PriorSpec hi = elicit(0.5, 1.0, 100);
  CHECK(hi.alpha == 99.0);
  CHECK(hi.beta == 1.0);
  CHECK_FALSE(hi.note.empty());

  // gamma = floor(0.01 * 100 / 0.99) = 1 < 2.
  const PriorSpec tiny = elicit(0.01, 0.5, 100);
  CHECK(tiny.source == PriorSource::NonInformative);
  CHECK(tiny.alpha == 1.0);
  CHECK_FALSE(tiny.note.empty());

  CHECK_THROWS_WITH_AS(elicit(0.6, 0.5, 100), doctest::Contains("prior may not outweigh data"),
                       std::invalid_argument);
  CHECK_THROWS_AS(elicit(-0.1, 0.5, 100), std::invalid_argument);
  CHECK_THROWS_AS(elicit(0.2, 1.1, 100), std::invalid_argument);
  CHECK_THROWS_AS(elicit(0.2, 0.5, 3), std::invalid_argument);
  CHECK_THROWS_AS(PriorSpec::from_shapes(0.5, 2.0), std::invalid_argument);
  CHECK(PriorSpec::from_shapes(2.0, 3.0).source == PriorSource::Explicit);
}

TEST_CASE("elicited gamma never exceeds B and shapes stay >= 1") {
  for (std::size_t b : {4u, 10u, 100u, 1000u}) {
    for (int zi = 0; zi <= 50; ++zi) {
      for (int xi = 0; xi <= 20; ++xi) {
        const PriorSpec p = elicit(zi / 100.0, xi / 20.0, b);
        CHECK(p.alpha >= 1.0);
        CHECK(p.beta >= 1.0);
        if (p.source == PriorSource::Elicited) CHECK(p.gamma() <= static_cast<double>(b));
      }
    }
  }
}

TEST_CASE("posterior examples") {
  const PosteriorSummary s = posterior(elicit(0.5, 0.7, 100), 53, 100);
  CHECK(s.alpha_post == 123.0);
  CHECK(s.beta_post == 77.0);
  CHECK(s.mean == 0.615);
  CHECK(posterior(elicit(0.5, 0.7, 100), 43, 100).mean == 0.565);
  const PosteriorSummary none = posterior(PriorSpec::non_informative(), 0, 0);
  CHECK(none.mean == 0.5);
  CHECK(none.ci_low == doctest::Approx(0.025).epsilon(1e-9));
  CHECK(none.ci_high == doctest::Approx(0.975).epsilon(1e-9));
  CHECK_THROWS_AS(posterior(PriorSpec{}, 11, 10), std::invalid_argument);

  CHECK(posterior(PriorSpec{}, 60, 100, 0.95, 0.6).selected == false);  // 61/102
  CHECK(posterior(PriorSpec{}, 61, 100, 0.95, 0.6).selected == true);   // 62/102
  CHECK(posterior(PriorSpec{}, 61, 100).selected == false);
  CHECK(beta_variance(123, 77) == doctest::Approx(123.0 * 77.0 / (200.0 * 200.0 * 201.0)).epsilon(1e-15));
}

TEST_CASE("posterior summary invariants") {
  for (std::size_t b : {1u, 10u, 100u, 1000u}) {
    for (std::size_t n = 0; n <= b; n += std::max<std::size_t>(1, b / 7)) {
      for (const PriorSpec& pr : {PriorSpec{}, elicit(0.5, 0.7, std::max<std::size_t>(b, 4)), PriorSpec::from_shapes(3, 9)}) {
        if (pr.source == PriorSource::Elicited && pr.gamma() > static_cast<double>(b)) continue;
        const PosteriorSummary s = posterior(pr, n, b);
        CHECK(s.alpha_post == pr.alpha + n);
        CHECK(s.beta_post == pr.beta + (b - n));
        CHECK(0.0 <= s.ci_low);
        CHECK(s.ci_low < s.ci_high);
        CHECK(s.ci_high <= 1.0);
        CHECK(s.mean >= 0.0);
        CHECK(s.mean <= 1.0);
      }
    }
  }
}

TEST_CASE("conjugate updates compose exactly") {
  std::mt19937_64 gen(4);
  for (int t = 0; t < 200; ++t) {
    const std::size_t b1 = gen() % 200, b2 = gen() % 200;
    const std::size_t n1 = b1 ? gen() % (b1 + 1) : 0, n2 = b2 ? gen() % (b2 + 1) : 0;
    const BetaParams prior{1.0 + static_cast<double>(gen() % 50), 1.0 + static_cast<double>(gen() % 50)};
    const BetaParams seq = update(update(prior, n1, b1), n2, b2);
    const BetaParams batch = update(prior, n1 + n2, b1 + b2);
    CHECK(seq.alpha == batch.alpha);
    CHECK(seq.beta == batch.beta);
  }
}

TEST_CASE("posterior mean is monotone in n and alpha") {
  for (std::size_t n = 0; n < 100; ++n) {
    CHECK(posterior(PriorSpec{}, n + 1, 100).mean > posterior(PriorSpec{}, n, 100).mean);
  }
  for (double a = 1; a < 60; a += 1) {
    CHECK(posterior(PriorSpec::from_shapes(a + 1, 30), 50, 100).mean >
          posterior(PriorSpec::from_shapes(a, 30), 50, 100).mean);
  }
}

TEST_CASE("regularized incomplete beta: closed forms") {
  CHECK(reg_inc_beta(0.0, 2, 3) == 0.0);
  CHECK(reg_inc_beta(1.0, 2, 3) == 1.0);
  CHECK(reg_inc_beta(0.5, 1, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(reg_inc_beta(0.5, 2, 2) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(reg_inc_beta(0.25, 2, 2) == doctest::Approx(0.15625).epsilon(1e-14));
  for (double x = 0.05; x < 1.0; x += 0.05) {
    CHECK(std::abs(reg_inc_beta(x, 2, 2) - (3 * x * x - 2 * x * x * x)) < 1e-14);
    CHECK(std::abs(reg_inc_beta(x, 1, 3) - (1 - std::pow(1 - x, 3))) < 1e-14);
  }
}

TEST_CASE("regularized incomplete beta agrees with an independent implementation") {
  const double shapes[] = {0.5, 1, 1.5, 2, 5, 10, 30, 77, 123, 382, 620, 1001, 5000};
  double worst = 0.0;
  for (double a : shapes) {
    for (double b : shapes) {
      for (int k = 1; k < 200; ++k) {
        const double x = k / 200.0;
        worst = std::max(worst, std::abs(reg_inc_beta(x, a, b) - boost::math::ibeta(a, b, x)));
      }
      // Near the bulk of large-shape distributions.
      const double m = a / (a + b);
      for (double dx : {-0.01, -0.001, 0.0, 0.001, 0.01}) {
        const double x = std::clamp(m + dx, 1e-6, 1 - 1e-6);
        worst = std::max(worst, std::abs(reg_inc_beta(x, a, b) - boost::math::ibeta(a, b, x)));
      }
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("quantile inverts the CDF") {
  // Points whose CDF rounds to 0 or 1 in double precision cannot be inverted,
  // so the grid keeps both tails above 1e-6.
  double worst = 0.0;
  std::size_t used = 0;
  for (double a : {1.0, 2.0, 7.5, 51.0, 123.0, 620.0}) {
    for (double b : {1.0, 3.0, 30.0, 77.0, 382.0}) {
      for (int k = 1; k < 50; ++k) {
        const double x = k / 50.0;
        const double p = reg_inc_beta(x, a, b);
        if (std::min(p, 1.0 - p) < 1e-6) continue;
        ++used;
        worst = std::max(worst, std::abs(beta_quantile(p, a, b) - x));
      }
    }
  }
  CHECK(used > 300);
  CHECK(worst < 1e-8);
  CHECK(beta_quantile(0.0, 3, 4) == 0.0);
  CHECK(beta_quantile(1.0, 3, 4) == 1.0);
  CHECK(std::abs(beta_quantile(0.3, 123, 77) - boost::math::ibeta_inv(123.0, 77.0, 0.3)) < 1e-9);
}

TEST_CASE("equal-tailed credible intervals") {
  const auto [lo, hi] = credible_interval(1, 1, 0.95);
  CHECK(lo == doctest::Approx(0.025).epsilon(1e-9));
  CHECK(hi == doctest::Approx(0.975).epsilon(1e-9));

  const auto [l2, h2] = credible_interval(123, 77, 0.95);
  CHECK(std::abs(l2 - boost::math::ibeta_inv(123.0, 77.0, 0.025)) < 1e-9);
  CHECK(std::abs(h2 - boost::math::ibeta_inv(123.0, 77.0, 0.975)) < 1e-9);
  CHECK(l2 < 0.615);
  CHECK(0.615 < h2);

  const auto [l3, h3] = credible_interval(620, 382, 0.95);
  CHECK(std::abs(l3 - 0.588) <= 0.002);
  CHECK(std::abs(h3 - 0.649) <= 0.002);

  CHECK_THROWS_AS(credible_interval(0, 1, 0.95), std::invalid_argument);
  CHECK_THROWS_AS(credible_interval(1, 1, 1.0), std::invalid_argument);
}

TEST_CASE("credible interval coverage by simulation") {
  // Beta draws as X / (X + Y) with gamma variates: independent of the CDF code.
  const double a = 123, b = 77;
  const auto [lo, hi] = credible_interval(a, b, 0.95);
  std::mt19937_64 gen(2024);
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const int draws = 1000000;
  int inside = 0;
  for (int i = 0; i < draws; ++i) {
    const double x = ga(gen), y = gb(gen);
    const double v = x / (x + y);
    inside += (v >= lo && v <= hi) ? 1 : 0;
  }
  CHECK(std::abs(static_cast<double>(inside) / draws - 0.95) <= 0.002);
}

TEST_CASE("variance surface examples") {
  const std::size_t n50[] = {50};
  const auto alphas = alpha_range(100);
  CHECK(alphas.size() == 99);
  CHECK(alphas.front() == 1.0);
  CHECK(alphas.back() == 99.0);
  const VarianceSurface vs = variance_surface(100, n50, alphas, 100);
  CHECK(vs.baseline[0] == doctest::Approx(2601.0 / 1071612.0).epsilon(1e-14));
  CHECK(vs.at(0, 49) == doctest::Approx(10000.0 / (40000.0 * 201.0)).epsilon(1e-14));
  for (std::size_t k = 0; k < alphas.size(); ++k) CHECK(vs.at(0, k) < vs.baseline[0]);

  const std::size_t n10[] = {10};
  const double a90[] = {90};
  CHECK(variance_surface(100, n10, a90, 100).at(0, 0) > variance_surface(100, n10, a90, 100).baseline[0]);

  const std::size_t bad[] = {101};
  CHECK_THROWS_AS(variance_surface(100, bad, alphas, 100), std::invalid_argument);
  const double a0[] = {0.0};
  CHECK_THROWS_AS(variance_surface(100, n50, a0, 100), std::invalid_argument);
}

TEST_CASE("variance argmax over alpha") {
  for (std::size_t n : {10u, 30u, 50u, 70u, 90u}) {
    CHECK(max_variance_alpha(100, n, 100) == static_cast<double>(100 - n));
  }
  // Against brute force, including clamped cases and gamma != B.
  for (std::size_t gamma : {10u, 50u, 100u}) {
    for (std::size_t n = 0; n <= 100; n += 5) {
      const auto alphas = alpha_range(gamma);
      const std::size_t ns[] = {n};
      const VarianceSurface vs = variance_surface(100, ns, alphas, gamma);
      std::size_t best = 0;
      for (std::size_t k = 1; k < alphas.size(); ++k)
        if (vs.at(0, k) > vs.at(0, best)) best = k;
      const double analytic = max_variance_alpha(100, n, gamma);
      // Half-integer peaks tie between two neighbours.
      CHECK(std::abs(alphas[best] - analytic) <= 0.5);
      CHECK(analytic >= 1.0);
      CHECK(analytic <= static_cast<double>(gamma - 1));
    }
  }
}

TEST_CASE("decision report") {
  const std::vector<std::size_t> counts{54, 56, 53, 43};
  const std::vector<std::string> names{"x1", "x2", "x3", "x4"};
  const std::vector<PriorSpec> priors(4, elicit(0.5, 0.7, 100));
  const auto r = decision_report(counts, 100, names, priors, 0.6);
  REQUIRE(r.size() == 4);
  CHECK(r[0].name == "x2");
  CHECK(r[0].post.mean == 0.63);
  CHECK(r[1].name == "x1");
  CHECK(r[1].post.mean == 0.62);
  CHECK(r[2].post.mean == 0.615);
  CHECK(r[3].post.mean == 0.565);
  CHECK(r[2].post.selected);
  CHECK_FALSE(r[3].post.selected);
  for (const auto& v : r) CHECK_FALSE(v.frequentist_selected);
  CHECK(r[3].frequency == 0.43);

  const std::vector<PriorSpec> short_priors(3);
  CHECK_THROWS_AS(decision_report(counts, 100, names, short_priors, 0.6), std::invalid_argument);
  const std::vector<PriorSpec> big(4, elicit(0.5, 0.7, 1000));
  CHECK_THROWS_AS(decision_report(counts, 100, names, big, 0.6), std::invalid_argument);
}

TEST_CASE("flat-prior decisions against the frequentist stable set") {
  // mean = (1 + n) / 102 >= 0.6 needs n >= 61, while f = n / 100 >= 0.6 needs n >= 60.
  const std::vector<std::size_t> counts{59, 60, 61, 62};
  const std::vector<std::string> names{"a", "b", "c", "d"};
  const std::vector<PriorSpec> flat(4);
  auto r = decision_report(counts, 100, names, flat, 0.6);
  std::sort(r.begin(), r.end(), [](const auto& x, const auto& y) { return x.index < y.index; });
  CHECK_FALSE(r[0].post.selected);
  CHECK_FALSE(r[0].frequentist_selected);
  CHECK_FALSE(r[1].post.selected);
  CHECK(r[1].frequentist_selected);
  CHECK(r[2].post.selected);
  CHECK(r[2].frequentist_selected);
  CHECK(r[3].post.selected);
}

TEST_CASE("empty matrix gives prior means") {
  SelectionMatrix m(0, {"a", "b"});
  const std::vector<PriorSpec> pr{PriorSpec{}, PriorSpec::from_shapes(3, 1)};
  const auto r = decision_report(m, pr, 0.6);
  CHECK(r[0].post.mean == 0.75);
  CHECK(r[1].post.mean == 0.5);
}

TEST_CASE("report CSV") {
  const std::vector<std::size_t> counts{53};
  const std::vector<std::string> names{"g1"};
  const std::vector<PriorSpec> pr{elicit(0.5, 0.7, 100)};
  const std::string text = report_to_csv(decision_report(counts, 100, names, pr, 0.6));
  CHECK(text.rfind("name,n_j,alpha,beta,mean,variance,ci_low,ci_high,selected\n", 0) == 0);
  CHECK(text.find("g1,53,70,30,0.615,") != std::string::npos);
  CHECK(text.substr(text.size() - 3) == ",1\n");
}

TEST_CASE("prior files") {
  const std::vector<std::string> names{"a", "b", "c", "d"};
  const auto entries = parse_prior_csv("name,zeta,xi,alpha,beta\na,0.5,0.7,,\nb,,,2,5\n");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].elicited->first == 0.5);
  CHECK(entries[1].shapes->second == 5.0);
  const auto specs = resolve_priors(entries, names, 100);
  CHECK(specs[0].alpha == 70.0);
  CHECK(specs[1].alpha == 2.0);
  CHECK(specs[1].source == PriorSource::Explicit);
  CHECK(specs[2].source == PriorSource::NonInformative);

  CHECK(parse_prior_csv("name,zeta,xi\nc,0.2,0.5\n").size() == 1);
  CHECK(parse_prior_csv("name,alpha,beta\nc,2,2\n").size() == 1);
  CHECK_THROWS_AS(parse_prior_csv("name,zeta,xi,alpha,beta\na,0.5,0.7,2,2\n"), ParseError);
  CHECK_THROWS_AS(parse_prior_csv("name,zeta,xi,alpha,beta\na,,,,\n"), ParseError);
  CHECK_THROWS_AS(parse_prior_csv("name,foo\na,1\n"), ParseError);
  CHECK_THROWS_AS(parse_prior_csv("zeta,xi\n0.1,0.2\n"), ParseError);
  CHECK_THROWS_WITH_AS(resolve_priors(parse_prior_csv("name,zeta,xi\nzz,0.2,0.5\n"), names, 100),
                       doctest::Contains("zz"), std::invalid_argument);
  CHECK_THROWS_AS(resolve_priors(parse_prior_csv("name,zeta,xi\na,0.2,0.5\na,0.1,0.5\n"), names, 100),
                  std::invalid_argument);
  CHECK_THROWS_AS(resolve_priors(parse_prior_csv("name,zeta,xi\na,0.7,0.5\n"), names, 100),
                  std::invalid_argument);

  const auto again = parse_prior_csv(priors_to_csv(entries));
  REQUIRE(again.size() == 2);
  CHECK(again[0].elicited == entries[0].elicited);
  CHECK(again[1].shapes == entries[1].shapes);
  CHECK_FALSE(again[0].shapes);
}
