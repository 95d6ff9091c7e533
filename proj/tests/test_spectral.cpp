#include <doctest.h>

#include <cmath>

#include "graphnls/spectral.hpp"
#include "support/fixtures.hpp"

using namespace graphnls;

namespace {

SpectralResult star_spectrum(std::size_t arms, double alpha, double h, double truncation = 40.0) {
  return linear_ground_state(assemble(make_mesh(make_star(arms, alpha, truncation), h)));
}

}  // namespace

TEST_CASE("delta star ground energy") {
  for (std::size_t n : {2u, 3u, 4u, 5u}) {
    const double alpha = -static_cast<double>(n);
    const SpectralResult s = star_spectrum(n, alpha, 0.01);
    CAPTURE(n);
    CHECK(s.converged);
    CHECK(s.bound_state());
    CHECK(s.E0 == doctest::Approx(alpha * alpha / double(n * n)).epsilon(1e-4));
    CHECK(s.residual <= 1e-10);
    CHECK(s.admits_bifurcation(1e-10));
  }
}

TEST_CASE("delta star converges at second order in h") {
  std::vector<double> err;
  for (double h : {0.04, 0.02, 0.01}) err.push_back(std::abs(star_spectrum(2, -2.0, h).E0 - 1.0));
  CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.05));
  CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("delta star eigenfunction") {
  // phi0 = c exp(-k x) on each arm with k = |alpha| / N
  const std::size_t n = 3;
  const double alpha = -1.5, k = 0.5;
  const SpectralResult s = star_spectrum(n, alpha, 0.005);
  const double c = std::sqrt(2.0 * k / n);
  const auto& mesh = *s.phi0.mesh;
  double worst = 0.0;
  for (std::size_t e = 0; e < n; ++e)
    for (std::size_t j = 0; j <= mesh.edge(e).intervals; j += 37) {
      const double x = mesh.node_x(e, j);
      if (x > 30.0) continue;
      worst = std::max(worst, std::abs(s.phi0.at(e, j).real() - c * std::exp(-k * x)));
    }
  CHECK(worst < 1e-4);
  CHECK(std::abs(s.phi0.values.imag().norm()) == 0.0);
  CHECK(inner(mesh.weights(), s.phi0.values, s.phi0.values).real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(phi0_nonlinear_norm(s, 1.0) == doctest::Approx(std::abs(alpha) / double(n * n)).epsilon(1e-4));
  // ||phi0||_3^3 for mu = 1/2: N c^3 / (3k)
  CHECK(phi0_nonlinear_norm(s, 0.5) == doctest::Approx(n * c * c * c / (3.0 * k)).epsilon(1e-4));
}

TEST_CASE("Poschl-Teller well on the line") {
  // -f'' - 2 sech^2(x) f has the single eigenvalue -1 with eigenfunction sech(x)/sqrt(2)
  GraphDescription d;
  d.vertices = {{"v", 0.0}};
  d.edges = {{"v", std::nullopt, kInfinity, "-2*sech(x)^2"}, {"v", std::nullopt, kInfinity, "-2*sech(x)^2"}};
  d.truncation = 30.0;
  const SpectralResult s = linear_ground_state(assemble(make_mesh(MetricGraph::build(d), 0.01)));
  CHECK(s.E0 == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(s.phi0.at(0, 0).real() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-4));
  CHECK(s.lambda2 > -1e-3);
}

TEST_CASE("Kirchhoff star has no bound state") {
  const SpectralResult s = star_spectrum(3, 0.0, 0.05, 20.0);
  CHECK_FALSE(s.bound_state());
  CHECK_FALSE(s.admits_bifurcation(1e-10));
  // lowest Dirichlet-Kirchhoff mode on three arms of length L: (pi / 2L)^2
  CHECK(-s.E0 == doctest::Approx(std::pow(M_PI / 40.0, 2.0)).epsilon(1e-3));
}

TEST_CASE("inertia counts and Gershgorin bounds bracket the spectrum") {
  const LinearForm form = assemble(make_mesh(testing_support::mixed_graph(), 0.02));
  const SpectralResult s = linear_ground_state(form);
  const double l1 = -s.E0;
  CHECK(count_eigenvalues_below(form, l1 - 1e-7) == 0);
  CHECK(count_eigenvalues_below(form, l1 + 1e-7) == 1);
  CHECK(count_eigenvalues_below(form, s.lambda2 - 1e-7) == 1);
  CHECK(count_eigenvalues_below(form, s.lambda2 + 1e-7) == 2);
  const auto [lo, hi] = gershgorin_bounds(form);
  CHECK(lo <= l1);
  CHECK(hi >= s.lambda2);
  CHECK(count_eigenvalues_below(form, hi + 1.0) == form.size());
  CHECK(s.gap == doctest::Approx(s.lambda2 - l1));
}

TEST_CASE("far-apart twin wells are flagged degenerate") {
  GraphDescription d;
  d.vertices = {{"a", -2.0}, {"b", -2.0}};
  d.edges = {{"a", "b", 40.0, ""}, {"a", std::nullopt, kInfinity, ""}, {"b", std::nullopt, kInfinity, ""}};
  d.truncation = 30.0;
  const LinearForm form = assemble(make_mesh(MetricGraph::build(d), 0.05));
  const SpectralResult s = linear_ground_state(form);
  CHECK(s.E0 == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(s.gap >= 0.0);
  CHECK(s.degenerate(1e-10));
  CHECK_FALSE(s.admits_bifurcation(1e-10));
}
