#pragma once

// Scalar special functions used by the Beta/sBeta/Dirichlet likelihoods.
// All functions are pure and thread-safe.

namespace ksb {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

// Newton settings for inv_digamma.
inline constexpr double kInvDigammaTol = 1e-10;
inline constexpr int kInvDigammaMaxIter = 50;

// ln Γ(x) for x > 0. Throws DomainError otherwise.
double log_gamma(double x);

// ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a + b).
double log_beta(double a, double b);

// ψ(x) = d/dx ln Γ(x), x > 0.
double digamma(double x);

// ψ'(x), x > 0.
double trigamma(double x);

// Returns x > 0 with |ψ(x) − y| ≤ kInvDigammaTol. Newton's method on ψ,
// seeded with Minka's piecewise initial guess. Throws ConvergenceError when
// the cap is hit or y lies beyond what a finite double can reach.
double inv_digamma(double y);

}  // namespace ksb
