#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cavspdc {

enum class FitModel {
  linear,        // [slope, intercept]
  lorentzian,    // A / (1 + ((x - x0) / (w/2))^2) + b       [A, x0, w, b]
  sin2,          // A cos^2(pi (x - x0) / (2 p)) + b          [A, x0, p, b]
  sinc2,         // A sinc^2(pi (x - x0) / p) + b             [A, x0, p, b]
  exp_envelope,  // A exp(-2 pi gamma |x - x0|) + b           [A, x0, gamma, b]
};

std::string_view to_string(FitModel model) noexcept;
/// Throws Error{lookup} for an unknown name.
FitModel parse_fit_model(std::string_view name);
const std::vector<std::string>& parameter_names(FitModel model);

double evaluate(FitModel model, std::span<const double> params, double x);

struct FitOptions {
  int max_iterations = 10000;
  double step_tolerance = 1e-8;  // relative parameter step
};

struct FitResult {
  FitModel model;
  std::vector<std::string> names;
  std::vector<double> params;
  double ssr = 0.0;
  bool converged = false;
  int iterations = 0;
  std::map<std::string, double> derived;  // fwhm, x_opt
  std::vector<double> ssr_history;        // after each accepted step
};

std::vector<double> initial_guess(FitModel model, std::span<const double> x,
                                  std::span<const double> y);

/// Damped least squares (Levenberg-Marquardt with Marquardt scaling).
/// Non-convergence is reported through FitResult::converged.
FitResult fit(FitModel model, std::span<const double> x, std::span<const double> y,
              std::optional<std::vector<double>> initial = std::nullopt,
              const FitOptions& options = {});

}  // namespace cavspdc
