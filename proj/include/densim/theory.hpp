#pragma once

#include <span>
#include <vector>

namespace densim::theory {

// Closest point to phi on the ray {a*psi : a >= 0}: psi * <psi,phi>/|psi|^2,
// or the zero vector when |psi| = 0.
std::vector<double> project(std::span<const double> psi, std::span<const double> phi);

// |psi' - phi| / (|psi'| + |phi|) in [0,1]; 0 when both psi' and phi vanish.
double normalized_error(std::span<const double> psi, std::span<const double> phi);

// Asymptotic value of the metric for expected sensing psi = p*phi + lambda,
// as a function of p, s = lambda/h and the shape parameter c.
double closed_form_error(double p, double s, double c);

// sqrt(c^2-1) * lambda / (2 c^2 h p)
double bound_tight(double p, double lambda, double h, double c);

// lambda / (4 h p), the c-free worst case
double bound_loose(double p, double lambda, double h);

// lambda / (4 (h_hat - lambda)), usable when the sampled mean density h_hat
// exceeds lambda; throws std::domain_error otherwise.
double bound_from_sampled_density(double lambda, double h_hat);

// c = |phi|_2 * sqrt(r) / |phi|_1, in [1, sqrt(r)]
double shape_c(std::span<const double> phi);

// h = m/r, the arithmetic mean entry
double mean_density(std::span<const double> phi);

// (h_hat - lambda) / p; may be negative, callers interpret
double unbiased_h(double h_hat, double p, double lambda);

}  // namespace densim::theory
