// SPDX-License-Identifier: Apache-2.0

#include "brwire/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace brwire {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRootTol = 1e-10;
constexpr double kBracketLimit = 1e6;

// Limiting slope of Lambda as t -> +-inf: any Gaussian component makes it
// infinite, two-point laws saturate at pi-weighted mean + offset.
double limiting_slope(const EnvModel& model, bool right) {
  double slope = 0.0;
  for (std::size_t i = 0; i < model.states().size(); ++i) {
    const DisplacementLaw& d = model.states()[i].displacement;
    const double pi = model.stationary()[i];
    if (const GaussianLaw* g = d.gaussian_params()) {
      if (g->sd > 0.0) return right ? kInf : -kInf;
      slope += pi * g->mean;
    } else {
      const double off = d.two_point_params()->offset;
      slope += pi * (right ? off : -off);
    }
  }
  return slope;
}

// Root of a monotone function on [lo, hi] with f(lo) <= 0 <= f(hi) or the
// reverse; plain bisection.
template <typename F>
double bisect(F&& f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 200 && hi - lo > kRootTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((flo <= 0.0) == (fm <= 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double lambda(const EnvModel& model, double t) {
  double v = 0.0;
  for (std::size_t i = 0; i < model.states().size(); ++i)
    v += model.stationary()[i] * model.states()[i].log_m(t);
  return v;
}

double lambda_prime(const EnvModel& model, double t) {
  double v = 0.0;
  for (std::size_t i = 0; i < model.states().size(); ++i)
    v += model.stationary()[i] * model.states()[i].log_m_prime_over_m(t);
  return v;
}

double sigma2_mean(const EnvModel& model) {
  double v = 0.0;
  for (std::size_t i = 0; i < model.states().size(); ++i)
    v += model.stationary()[i] * model.states()[i].sigma2();
  return v;
}

CriticalPoints critical_points(const EnvModel& model) {
  const auto g = [&](double t) {
    return t * lambda_prime(model, t) - lambda(model, t);
  };
  // g(0) = -Lambda(0) < 0 for supercritical models; g is nonincreasing on
  // t<0 and nondecreasing on t>0, so each side has at most one root.
  CriticalPoints cp;

  double hi = 1.0;
  while (hi <= kBracketLimit && g(hi) <= 0.0) hi *= 2.0;
  if (hi > kBracketLimit) {
    cp.t_plus = kInf;
    cp.slope_plus = limiting_slope(model, true);
  } else {
    cp.t_plus = bisect(g, hi == 1.0 ? 0.0 : hi * 0.5, hi);
    cp.slope_plus = lambda_prime(model, cp.t_plus);
  }

  double lo = -1.0;
  while (lo >= -kBracketLimit && g(lo) <= 0.0) lo *= 2.0;
  if (lo < -kBracketLimit) {
    cp.t_minus = -kInf;
    cp.slope_minus = limiting_slope(model, false);
  } else {
    cp.t_minus =
        -bisect([&](double t) { return g(-t); }, lo == -1.0 ? 0.0 : -lo * 0.5,
                -lo);
    cp.slope_minus = lambda_prime(model, cp.t_minus);
  }
  return cp;
}

double lambda_bar(const EnvModel& model, const CriticalPoints& cp, double t) {
  if (std::isfinite(cp.t_plus) && t >= cp.t_plus) return t * cp.slope_plus;
  if (std::isfinite(cp.t_minus) && t <= cp.t_minus) return t * cp.slope_minus;
  return lambda(model, t);
}

double lambda_tilde(const EnvModel& model, const CriticalPoints& cp,
                    double t) {
  return std::max(lambda_bar(model, cp, t), 0.0);
}

namespace {

// Golden-section maximization of a concave function after bracketing the
// maximum by doubling expansion. `flat_cap` bounds the expansion; the
// callers exclude the genuinely unbounded directions beforehand.
template <typename F>
double golden_max(F&& h, double flat_cap = 1e7) {
  double a = -1.0, m = 0.0, c = 1.0;
  double ha = h(a), hm = h(m), hc = h(c);
  while (hc > hm && c < flat_cap) {
    a = m;
    ha = hm;
    m = c;
    hm = hc;
    c = m + 2.0 * (m - a);
    hc = h(c);
  }
  while (ha > hm && a > -flat_cap) {
    c = m;
    hc = hm;
    m = a;
    hm = ha;
    a = m - 2.0 * (c - m);
    ha = h(a);
  }

  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = c - gr * (c - a);
  double x2 = a + gr * (c - a);
  double f1 = h(x1), f2 = h(x2);
  for (int it = 0; it < 300 && c - a > 1e-12 * (1.0 + std::abs(a) + std::abs(c));
       ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (c - a);
      f2 = h(x2);
    } else {
      c = x2;
      x2 = x1;
      f2 = f1;
      x1 = c - gr * (c - a);
      f1 = h(x1);
    }
  }
  return std::max(std::max(f1, f2), std::max(h(a), h(c)));
}

}  // namespace

double legendre(const EnvModel& model, const CriticalPoints& cp, double x) {
  // Limiting slopes of LambdaTilde = max(LambdaBar, 0): the flat zero
  // branch wins whenever the linear branch heads down.
  const double slope_hi = std::max(cp.slope_plus, 0.0);
  const double slope_lo = std::min(cp.slope_minus, 0.0);
  // Slopes carry the root-finding tolerance; snap boundary arguments onto
  // them so the sup over the then-flat tail stays put instead of drifting
  // across the expansion cap.
  const double tol_hi = 1e-9 * (1.0 + std::abs(slope_hi));
  const double tol_lo = 1e-9 * (1.0 + std::abs(slope_lo));
  if (x > slope_hi + tol_hi || x < slope_lo - tol_lo) return kInf;
  x = std::clamp(x, slope_lo, slope_hi);

  const auto h = [&](double t) { return x * t - lambda_tilde(model, cp, t); };
  return golden_max(h);
}

double legendre_inf_on(const EnvModel& model, const CriticalPoints& cp,
                       double lo, double hi) {
  // LegendreTilde is convex with minimizer at Lambda'(0) (the slope of
  // LambdaTilde at its positive minimum Lambda(0) > 0).
  const double xmin = lambda_prime(model, 0.0);
  const double x = std::clamp(xmin, lo, hi);
  return legendre(model, cp, x);
}

const char* ldp_case_name(LdpCase c) {
  switch (c) {
    case LdpCase::I:
      return "I";
    case LdpCase::II:
      return "II";
    case LdpCase::III:
      return "III";
  }
  return "?";
}

namespace detail {

CaseResult classify_impl(const std::function<double(double)>& lam,
                         const std::function<double(double)>& lam_prime,
                         const CriticalPoints& cp, double probe_limit) {
  CaseResult res;

  // Minimum of the convex Lambda: root of the nondecreasing Lambda'.
  double tmin = 0.0;
  if (lam_prime(0.0) > 0.0) {
    double lo = -1.0;
    while (lo >= -probe_limit && lam_prime(lo) > 0.0) lo *= 2.0;
    // Lambda' changes sign in [lo, last probe]; the first probe pairs with 0.
    tmin = lo < -probe_limit ? -probe_limit
                             : bisect(lam_prime, lo, lo == -1.0 ? 0.0 : lo * 0.5);
  } else {
    double hi = 1.0;
    while (hi <= probe_limit && lam_prime(hi) < 0.0) hi *= 2.0;
    tmin = hi > probe_limit ? probe_limit
                            : bisect(lam_prime, hi == 1.0 ? 0.0 : hi * 0.5, hi);
  }

  if (lam(tmin) >= 0.0) {
    res.t1 = -kInf;
    res.t2 = kInf;
    res.label = LdpCase::I;
    return res;
  }

  // Negativity interval (t1, t2) around tmin.
  double left = std::min(tmin, -1.0);
  while (left >= -probe_limit && lam(left) < 0.0) left *= 2.0;
  res.t1 = left < -probe_limit
               ? -kInf
               : bisect([&](double t) { return -lam(t); }, left, tmin);

  double right = std::max(tmin, 1.0);
  while (right <= probe_limit && lam(right) < 0.0) right *= 2.0;
  res.t2 = right > probe_limit
               ? kInf
               : bisect(lam, tmin, right);

  if (res.t1 < cp.t_minus && cp.t_minus < res.t2 && res.t2 < 0.0) {
    res.label = LdpCase::II;
    res.has_exposed = true;
    res.exposed_lo = lam_prime(res.t2);
    res.exposed_hi = cp.slope_plus;
    return res;
  }
  if (0.0 < res.t1 && res.t1 < cp.t_plus && cp.t_plus < res.t2) {
    res.label = LdpCase::III;
    res.has_exposed = true;
    res.exposed_lo = cp.slope_minus;
    res.exposed_hi = lam_prime(res.t1);
    return res;
  }

  std::ostringstream os;
  os << "negativity interval matches no case: t1=" << res.t1
     << " t2=" << res.t2 << " t-=" << cp.t_minus << " t+=" << cp.t_plus;
  throw UnclassifiedCase(os.str());
}

}  // namespace detail

CaseResult classify_case(const EnvModel& model, const CriticalPoints& cp) {
  return detail::classify_impl(
      [&](double t) { return lambda(model, t); },
      [&](double t) { return lambda_prime(model, t); }, cp);
}

RateTable build_rate_table(const EnvModel& model,
                           const std::vector<double>& t_grid,
                           const std::vector<double>& x_grid) {
  RateTable table;
  table.t_grid = t_grid;
  table.x_grid = x_grid;
  table.critical = critical_points(model);
  table.cases = classify_case(model, table.critical);
  table.sigma2 = sigma2_mean(model);

  table.lambda_v.reserve(t_grid.size());
  table.lambda_prime_v.reserve(t_grid.size());
  table.lambda_bar_v.reserve(t_grid.size());
  table.lambda_tilde_v.reserve(t_grid.size());
  for (double t : t_grid) {
    table.lambda_v.push_back(lambda(model, t));
    table.lambda_prime_v.push_back(lambda_prime(model, t));
    table.lambda_bar_v.push_back(lambda_bar(model, table.critical, t));
    table.lambda_tilde_v.push_back(lambda_tilde(model, table.critical, t));
  }
  table.legendre_v.reserve(x_grid.size());
  for (double x : x_grid)
    table.legendre_v.push_back(legendre(model, table.critical, x));
  return table;
}

}  // namespace brwire
