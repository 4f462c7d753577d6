#pragma once

// Thin adaptive-quadrature wrappers over GSL. Each call owns its workspace,
// so the routines are safe to use concurrently.

#include <functional>
#include <memory>
#include <stdexcept>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

namespace torusgff {

inline void gsl_quiet() {
  static const bool once = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)once;
}

namespace detail {
inline double callback_trampoline(double x, void* p) {
  return (*static_cast<const std::function<double(double)>*>(p))(x);
}
}  // namespace detail

struct QuadResult {
  double value;
  double abserr;
};

inline QuadResult integrate_qag(const std::function<double(double)>& f, double a, double b,
                                double epsabs = 1e-12, double epsrel = 1e-11, int limit = 2000) {
  gsl_quiet();
  gsl_function g{&detail::callback_trampoline, const_cast<std::function<double(double)>*>(&f)};
  std::unique_ptr<gsl_integration_workspace, void (*)(gsl_integration_workspace*)> ws(
      gsl_integration_workspace_alloc(limit), gsl_integration_workspace_free);
  double value = 0.0, err = 0.0;
  const int status =
      gsl_integration_qag(&g, a, b, epsabs, epsrel, limit, GSL_INTEG_GAUSS61, ws.get(), &value, &err);
  if (status != GSL_SUCCESS && status != GSL_EROUND) throw std::runtime_error("qag failed");
  return {value, err};
}

// qags handles integrable endpoint singularities by extrapolation
inline QuadResult integrate_qags(const std::function<double(double)>& f, double a, double b,
                                 double epsabs = 1e-12, double epsrel = 1e-11, int limit = 2000) {
  gsl_quiet();
  gsl_function g{&detail::callback_trampoline, const_cast<std::function<double(double)>*>(&f)};
  std::unique_ptr<gsl_integration_workspace, void (*)(gsl_integration_workspace*)> ws(
      gsl_integration_workspace_alloc(limit), gsl_integration_workspace_free);
  double value = 0.0, err = 0.0;
  const int status = gsl_integration_qags(&g, a, b, epsabs, epsrel, limit, ws.get(), &value, &err);
  if (status != GSL_SUCCESS && status != GSL_EROUND) throw std::runtime_error("qags failed");
  return {value, err};
}

}  // namespace torusgff
