#pragma once

namespace trendlens {

/// Regularized incomplete beta I_x(a, b) by Lentz continued fraction.
double incomplete_beta(double a, double b, double x);

/// P(T <= t) for Student's t with `dof` degrees of freedom (dof > 0, real).
double student_t_cdf(double t, double dof);

double student_t_pdf(double t, double dof);

/// Inverse of student_t_cdf; p in (0, 1), dof > 0. Safeguarded Newton on
/// the nearer tail, absolute accuracy better than 1e-8.
double student_t_quantile(double p, double dof);

}  // namespace trendlens
