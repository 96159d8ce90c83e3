// SPDX-License-Identifier: Apache-2.0
//
// Analytic rate functions of an environment model, all exact finite sums
// over the stationary distribution:
//
//   Lambda(t)  = sum_i pi_i log m_i(t)        (convex, differentiable)
//   Lambda'(t) = sum_i pi_i m_i'(t)/m_i(t)
//
// critical points t_-, t_+ : the roots of g(t) = t Lambda'(t) - Lambda(t),
// which is decreasing-then-increasing with g(0) = -Lambda(0) < 0;
// LambdaBar linearizes Lambda beyond them with slopes Lambda'(t_+-);
// LambdaTilde = max(LambdaBar, 0); LegendreTilde is its convex conjugate.
// Infinite values are encoded as +-HUGE_VAL and serialized as "inf"/"-inf".

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "brwire/env.hpp"

namespace brwire {

struct UnclassifiedCase : std::runtime_error {
  explicit UnclassifiedCase(const std::string& what)
      : std::runtime_error(what) {}
};

double lambda(const EnvModel& model, double t);
double lambda_prime(const EnvModel& model, double t);
double sigma2_mean(const EnvModel& model);  // E sigma_0^2

struct CriticalPoints {
  double t_minus = 0.0;  // -inf when g stays negative leftward
  double t_plus = 0.0;   // +inf when g stays negative rightward
  // Slopes of the linear branches: Lambda'(t_+-) at finite critical
  // points, the limiting slope of Lambda otherwise.
  double slope_minus = 0.0;
  double slope_plus = 0.0;
};

// Bisection to 1e-10 after doubling the bracket until the sign change or
// |t| > 1e6 (then the infinite sentinel is reported).
CriticalPoints critical_points(const EnvModel& model);

double lambda_bar(const EnvModel& model, const CriticalPoints& cp, double t);
double lambda_tilde(const EnvModel& model, const CriticalPoints& cp, double t);

// sup_t { x t - LambdaTilde(t) } by golden-section search after bracketing;
// +inf when x lies beyond the limiting slopes of LambdaTilde.
double legendre(const EnvModel& model, const CriticalPoints& cp, double x);

// inf of LegendreTilde over [lo, hi] using convexity (minimizer of the
// conjugate is at Lambda'(0)).
double legendre_inf_on(const EnvModel& model, const CriticalPoints& cp,
                       double lo, double hi);

enum class LdpCase { I, II, III };

struct CaseResult {
  double t1 = 0.0;  // inf { Lambda < 0 }; -inf for case I
  double t2 = 0.0;  // sup { Lambda < 0 }; +inf for case I
  LdpCase label = LdpCase::I;
  bool has_exposed = false;  // cases II/III expose an open slope interval
  double exposed_lo = 0.0;
  double exposed_hi = 0.0;
};

// Throws UnclassifiedCase when the negativity set matches none of the three
// patterns (degenerate tangencies).
CaseResult classify_case(const EnvModel& model, const CriticalPoints& cp);

const char* ldp_case_name(LdpCase c);

struct RateTable {
  std::vector<double> t_grid;
  std::vector<double> lambda_v, lambda_prime_v, lambda_bar_v, lambda_tilde_v;
  std::vector<double> x_grid;
  std::vector<double> legendre_v;
  CriticalPoints critical;
  CaseResult cases;
  double sigma2 = 0.0;
};

RateTable build_rate_table(const EnvModel& model,
                           const std::vector<double>& t_grid,
                           const std::vector<double>& x_grid);

namespace detail {
// Classification on plain callables, used directly by the tests to drive
// synthetic rate functions through the degenerate branches.
CaseResult classify_impl(const std::function<double(double)>& lam,
                         const std::function<double(double)>& lam_prime,
                         const CriticalPoints& cp, double probe_limit = 1e6);
}  // namespace detail

}  // namespace brwire
