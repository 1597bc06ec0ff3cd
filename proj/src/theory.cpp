#include "densim/theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace densim::theory {

namespace {

void check_same_dim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("vector dimensions differ");
  if (a.empty()) throw std::invalid_argument("vectors must have dimension >= 1");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Rounding can push the computed shape of a uniform vector a hair below 1.
double clamp_shape(double c) {
  if (c < 1.0 && c > 1.0 - 1e-9) return 1.0;
  return c;
}

}  // namespace

std::vector<double> project(std::span<const double> psi, std::span<const double> phi) {
  check_same_dim(psi, phi);
  const double n2 = dot(psi, psi);
  std::vector<double> out(psi.size(), 0.0);
  if (n2 == 0.0) return out;
  const double a = dot(psi, phi) / n2;
  for (std::size_t i = 0; i < psi.size(); ++i) out[i] = a * psi[i];
  return out;
}

double normalized_error(std::span<const double> psi, std::span<const double> phi) {
  check_same_dim(psi, phi);
  const auto proj = project(psi, phi);
  double diff2 = 0;
  for (std::size_t i = 0; i < proj.size(); ++i) {
    const double d = proj[i] - phi[i];
    diff2 += d * d;
  }
  const double denom = norm(proj) + norm(phi);
  if (denom == 0.0) return 0.0;
  return std::sqrt(diff2) / denom;
}

double closed_form_error(double p, double s, double c) {
  c = clamp_shape(c);
  if (s < 0) throw std::invalid_argument("s must be >= 0");
  if (c < 1) throw std::invalid_argument("c must be >= 1");
  if (p <= 0) {
    if (s > 0) throw std::domain_error("closed form undefined for p <= 0 with false positives");
    return 0.0;
  }
  if (s == 0.0) return 0.0;
  const double a = p + s;
  const double b = p * c * c + s;
  // Radicand equals (c*a - b)^2 + 2ab(c-1), non-negative for c >= 1; the
  // expanded form can dip below zero in floating point near c = 1.
  const double radicand = std::max(0.0, c * c * a * a + b * b - 2.0 * a * b);
  const double numerator = s * std::sqrt(radicand);
  const double denominator = b * std::sqrt(p * p * c * c + s * s + 2.0 * p * s) +
                             (p * p * c * c + 2.0 * p * s + s * s) * c;
  return numerator / denominator;
}

double bound_tight(double p, double lambda, double h, double c) {
  c = clamp_shape(c);
  if (p <= 0) throw std::invalid_argument("p must be > 0");
  if (h <= 0) throw std::invalid_argument("h must be > 0");
  if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");
  if (c < 1) throw std::invalid_argument("c must be >= 1");
  return std::sqrt(c * c - 1.0) * lambda / (2.0 * c * c * h * p);
}

double bound_loose(double p, double lambda, double h) {
  if (p <= 0) throw std::invalid_argument("p must be > 0");
  if (h <= 0) throw std::invalid_argument("h must be > 0");
  if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");
  return lambda / (4.0 * h * p);
}

double bound_from_sampled_density(double lambda, double h_hat) {
  if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");
  if (h_hat <= lambda)
    throw std::domain_error("bound uninformative: sampled density does not exceed lambda");
  return lambda / (4.0 * (h_hat - lambda));
}

double shape_c(std::span<const double> phi) {
  if (phi.empty()) throw std::invalid_argument("phi must have dimension >= 1");
  double l1 = 0;
  for (double v : phi) l1 += v;
  if (l1 <= 0) throw std::invalid_argument("phi must have positive mass");
  const double c = norm(phi) * std::sqrt(static_cast<double>(phi.size())) / l1;
  return clamp_shape(c);
}

double mean_density(std::span<const double> phi) {
  if (phi.empty()) throw std::invalid_argument("phi must have dimension >= 1");
  double sum = 0;
  for (double v : phi) sum += v;
  return sum / static_cast<double>(phi.size());
}

double unbiased_h(double h_hat, double p, double lambda) {
  if (p <= 0) throw std::invalid_argument("p must be > 0");
  return (h_hat - lambda) / p;
}

}  // namespace densim::theory
