#include "eqflux/problem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "eqflux/quadrature.hpp"

namespace eqflux {

namespace {

constexpr Real pi = std::numbers::pi_v<Real>;

// cosh(a)/cosh(b) and sinh(a)/cosh(b) for |a| <= b without overflow
Real cosh_ratio(Real a, Real b) {
  Real aa = std::abs(a);
  return std::exp(aa - b) * (1 + std::exp(-2 * aa)) / (1 + std::exp(-2 * b));
}

Real sinh_ratio(Real a, Real b) {
  Real aa = std::abs(a);
  Real r = std::exp(aa - b) * (1 - std::exp(-2 * aa)) / (1 + std::exp(-2 * b));
  return a < 0 ? -r : r;
}

} // namespace

ProblemSpec make_layer_case(Real eps, Real kappa) {
  if (!(eps > 0) || kappa < 0)
    throw std::invalid_argument("make_layer_case: need eps > 0 and kappa >= 0");
  ProblemSpec spec;
  spec.name = "layer1d";
  spec.dim = 1;
  spec.epsilon = eps;
  spec.kappa = kappa;
  spec.ax = -0.5;
  spec.bx = 0.5;
  Real b = kappa / (2 * eps);
  spec.f = SourceTerm(ScalarFunction([kappa](const Eigen::VectorXd&) { return kappa * kappa; }));
  spec.exact_u = [eps, kappa, b](const Eigen::VectorXd& x) {
    if (kappa == 0)
      return Real(0);
    return 1 - cosh_ratio(kappa * x(0) / eps, b);
  };
  spec.exact_grad = [eps, kappa, b](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(1);
    g(0) = kappa == 0 ? Real(0) : -(kappa / eps) * sinh_ratio(kappa * x(0) / eps, b);
    return g;
  };
  // a(u,u) = (f,u) = kappa^2 (1 - tanh(b)/b)
  spec.exact_energy_sq = kappa == 0 ? Real(0) : kappa * kappa * (1 - std::tanh(b) / b);
  return spec;
}

ProblemSpec make_smooth_case(Real eps, Real kappa) {
  if (!(eps > 0) || kappa < 0)
    throw std::invalid_argument("make_smooth_case: need eps > 0 and kappa >= 0");
  ProblemSpec spec;
  spec.name = "smooth1d";
  spec.dim = 1;
  spec.epsilon = eps;
  spec.kappa = kappa;
  auto g = [](Real x) { return x * (2 * x - 1); };
  auto u = [g](Real x) { return std::sin(pi * g(x)); };
  auto du = [g](Real x) { return pi * (4 * x - 1) * std::cos(pi * g(x)); };
  auto lap = [g](Real x) {
    Real s = 4 * x - 1;
    return 4 * pi * std::cos(pi * g(x)) - pi * pi * s * s * std::sin(pi * g(x));
  };
  spec.f = SourceTerm(ScalarFunction([=](const Eigen::VectorXd& x) {
    return -eps * eps * lap(x(0)) + kappa * kappa * u(x(0));
  }));
  spec.exact_u = [u](const Eigen::VectorXd& x) { return u(x(0)); };
  spec.exact_grad = [du](const Eigen::VectorXd& x) {
    Eigen::VectorXd gr(1);
    gr(0) = du(x(0));
    return gr;
  };
  // int u'^2 and int u^2 over (0,1), resolved by composite Gauss
  QuadratureRule rule = gauss_legendre(20);
  int cells = 256;
  Real i0 = 0, i1 = 0;
  for (int c = 0; c < cells; ++c)
    for (int q = 0; q < rule.points.rows(); ++q) {
      Real x = (c + rule.points(q, 0)) / cells;
      Real w = rule.weights(q) / cells;
      i0 += w * u(x) * u(x);
      i1 += w * du(x) * du(x);
    }
  spec.exact_energy_sq = eps * eps * i1 + kappa * kappa * i0;
  return spec;
}

ProblemSpec make_sine_case(Real eps, Real kappa) {
  if (!(eps > 0) || kappa < 0)
    throw std::invalid_argument("make_sine_case: need eps > 0 and kappa >= 0");
  ProblemSpec spec;
  spec.name = "sine2d";
  spec.dim = 2;
  spec.epsilon = eps;
  spec.kappa = kappa;
  Real c = 2 * eps * eps * pi * pi + kappa * kappa;
  spec.f = SourceTerm(ScalarFunction([c](const Eigen::VectorXd& x) {
    return c * std::sin(pi * x(0)) * std::sin(pi * x(1));
  }));
  spec.exact_u = [](const Eigen::VectorXd& x) {
    return std::sin(pi * x(0)) * std::sin(pi * x(1));
  };
  spec.exact_grad = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(2);
    g(0) = pi * std::cos(pi * x(0)) * std::sin(pi * x(1));
    g(1) = pi * std::sin(pi * x(0)) * std::cos(pi * x(1));
    return g;
  };
  spec.exact_energy_sq = eps * eps * pi * pi / 2 + kappa * kappa / 4;
  return spec;
}

ProblemSpec make_case(const std::string& name, Real eps, Real kappa) {
  if (name == "layer1d")
    return make_layer_case(eps, kappa);
  if (name == "smooth1d")
    return make_smooth_case(eps, kappa);
  if (name == "sine2d")
    return make_sine_case(eps, kappa);
  throw std::invalid_argument("make_case: unknown case " + name);
}

Mesh make_case_mesh(const ProblemSpec& spec, int n) {
  if (spec.dim == 1)
    return make_interval_mesh(n, spec.ax, spec.bx);
  return make_triangle_mesh(n, n, spec.ax, spec.bx, spec.ay, spec.by);
}

} // namespace eqflux
