#include "cavspdc/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "cavspdc/error.hpp"

namespace cavspdc {

namespace {

constexpr double kPi = std::numbers::pi;
// sinc^2(u) = 1/2 at u = kSincHalf
constexpr double kSincHalf = 1.3915573782515103;

double sinc(double u) { return u == 0.0 ? 1.0 : std::sin(u) / u; }

// d sinc / du
double dsinc(double u) {
  if (std::abs(u) < 1e-4) return -u / 3.0;
  return (u * std::cos(u) - std::sin(u)) / (u * u);
}

// model value and gradient w.r.t. params
double value_and_gradient(FitModel m, std::span<const double> p, double x, double* g) {
  switch (m) {
    case FitModel::linear:
      if (g) {
        g[0] = x;
        g[1] = 1.0;
      }
      return p[0] * x + p[1];
    case FitModel::lorentzian: {
      const double h = p[2] / 2.0;
      const double u = (x - p[1]) / h;
      const double den = 1.0 + u * u;
      const double L = 1.0 / den;
      if (g) {
        const double dL_du = -2.0 * u / (den * den);
        g[0] = L;
        g[1] = p[0] * dL_du * (-1.0 / h);
        g[2] = p[0] * dL_du * (-u / p[2]);
        g[3] = 1.0;
      }
      return p[0] * L + p[3];
    }
    case FitModel::sin2: {
      const double u = kPi * (x - p[1]) / (2.0 * p[2]);
      const double c = std::cos(u);
      if (g) {
        const double d = -2.0 * c * std::sin(u);  // d cos^2 / du
        g[0] = c * c;
        g[1] = p[0] * d * (-kPi / (2.0 * p[2]));
        g[2] = p[0] * d * (-u / p[2]);
        g[3] = 1.0;
      }
      return p[0] * c * c + p[3];
    }
    case FitModel::sinc2: {
      const double u = kPi * (x - p[1]) / p[2];
      const double s = sinc(u);
      if (g) {
        const double d = 2.0 * s * dsinc(u);
        g[0] = s * s;
        g[1] = p[0] * d * (-kPi / p[2]);
        g[2] = p[0] * d * (-u / p[2]);
        g[3] = 1.0;
      }
      return p[0] * s * s + p[3];
    }
    case FitModel::exp_envelope: {
      const double dx = x - p[1];
      const double e = std::exp(-2.0 * kPi * p[2] * std::abs(dx));
      if (g) {
        const double sgn = dx > 0.0 ? 1.0 : (dx < 0.0 ? -1.0 : 0.0);
        g[0] = e;
        g[1] = p[0] * e * 2.0 * kPi * p[2] * sgn;
        g[2] = p[0] * e * (-2.0 * kPi * std::abs(dx));
        g[3] = 1.0;
      }
      return p[0] * e + p[3];
    }
  }
  return 0.0;
}

double sum_squares(FitModel m, std::span<const double> p, std::span<const double> x,
                   std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - value_and_gradient(m, p, x[i], nullptr);
    s += r * r;
  }
  return s;
}

// Half-width of the distance from the peak to the first sample at or below
// `level`, averaged over the sides where it exists.
double distance_to_level(std::span<const double> x, std::span<const double> y, std::size_t peak,
                         double level) {
  double total = 0.0;
  int sides = 0;
  for (std::size_t j = peak + 1; j < y.size(); ++j) {
    if (y[j] <= level) {
      total += std::abs(x[j] - x[peak]);
      ++sides;
      break;
    }
  }
  for (std::size_t j = peak; j-- > 0;) {
    if (y[j] <= level) {
      total += std::abs(x[peak] - x[j]);
      ++sides;
      break;
    }
  }
  return sides ? total / sides : 0.0;
}

// distance from the peak to the first local minimum on each side, averaged
double first_minimum_spacing(std::span<const double> x, std::span<const double> y,
                             std::size_t peak) {
  double total = 0.0;
  int sides = 0;
  for (std::size_t j = peak + 1; j < y.size(); ++j) {
    if (j + 1 == y.size() || y[j + 1] > y[j]) {
      if (j + 1 < y.size()) {
        total += std::abs(x[j] - x[peak]);
        ++sides;
      }
      break;
    }
  }
  for (std::size_t j = peak; j-- > 0;) {
    if (j == 0 || y[j - 1] > y[j]) {
      if (j > 0) {
        total += std::abs(x[peak] - x[j]);
        ++sides;
      }
      break;
    }
  }
  return sides ? total / sides : 0.0;
}

void check_data(FitModel m, std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorKind::argument, "fit: x and y differ in length");
  const std::size_t np = parameter_names(m).size();
  require(x.size() >= np + 2, ErrorKind::argument,
          "fit: need at least " + std::to_string(np + 2) + " points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(std::isfinite(x[i]) && std::isfinite(y[i]), ErrorKind::argument,
            "fit: non-finite data");
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  require(*lo != *hi, ErrorKind::argument, "fit: all x values are equal");
}

std::vector<double> linear_solve(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

void fill_derived(FitResult& r) {
  const auto& p = r.params;
  switch (r.model) {
    case FitModel::linear:
      break;
    case FitModel::lorentzian:
      r.derived["fwhm"] = std::abs(p[2]);
      r.derived["x_opt"] = p[1];
      break;
    case FitModel::sin2:
      r.derived["fwhm"] = std::abs(p[2]);  // cos^2 halves at |x - x0| = p/2
      r.derived["x_opt"] = p[1];
      break;
    case FitModel::sinc2:
      r.derived["fwhm"] = 2.0 * kSincHalf * std::abs(p[2]) / kPi;
      r.derived["x_opt"] = p[1];
      break;
    case FitModel::exp_envelope:
      r.derived["fwhm"] = std::log(2.0) / (kPi * std::abs(p[2]));
      r.derived["x_opt"] = p[1];
      break;
  }
}

}  // namespace

std::string_view to_string(FitModel m) noexcept {
  switch (m) {
    case FitModel::linear: return "linear";
    case FitModel::lorentzian: return "lorentzian";
    case FitModel::sin2: return "sin2";
    case FitModel::sinc2: return "sinc2";
    case FitModel::exp_envelope: return "exp_envelope";
  }
  return "linear";
}

FitModel parse_fit_model(std::string_view name) {
  for (FitModel m : {FitModel::linear, FitModel::lorentzian, FitModel::sin2, FitModel::sinc2,
                     FitModel::exp_envelope}) {
    if (name == to_string(m)) return m;
  }
  fail(ErrorKind::lookup, "unknown fit model '" + std::string(name) + "'");
}

const std::vector<std::string>& parameter_names(FitModel m) {
  static const std::vector<std::string> linear{"slope", "intercept"};
  static const std::vector<std::string> lorentz{"A", "x0", "w", "b"};
  static const std::vector<std::string> periodic{"A", "x0", "p", "b"};
  static const std::vector<std::string> envelope{"A", "x0", "gamma", "b"};
  switch (m) {
    case FitModel::linear: return linear;
    case FitModel::lorentzian: return lorentz;
    case FitModel::sin2:
    case FitModel::sinc2: return periodic;
    case FitModel::exp_envelope: return envelope;
  }
  return linear;
}

double evaluate(FitModel m, std::span<const double> p, double x) {
  require(p.size() == parameter_names(m).size(), ErrorKind::argument,
          "wrong parameter count for model " + std::string(to_string(m)));
  return value_and_gradient(m, p, x, nullptr);
}

std::vector<double> initial_guess(FitModel m, std::span<const double> x,
                                  std::span<const double> y) {
  check_data(m, x, y);
  if (m == FitModel::linear) return linear_solve(x, y);

  const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double ymax = y[peak];
  const double ymin = *std::min_element(y.begin(), y.end());
  const auto [xlo, xhi] = std::minmax_element(x.begin(), x.end());
  const double xspan = *xhi - *xlo;
  const double amp = ymax - ymin;

  switch (m) {
    case FitModel::lorentzian: {
      double w = 2.0 * distance_to_level(x, y, peak, ymin + amp / 2.0);
      if (!(w > 0.0)) w = xspan / 10.0;
      return {amp, x[peak], w, ymin};
    }
    case FitModel::sin2:
    case FitModel::sinc2: {
      double p = first_minimum_spacing(x, y, peak);
      if (!(p > 0.0)) p = xspan / 2.0;
      return {amp, x[peak], p, ymin};
    }
    case FitModel::exp_envelope: {
      // log-linear regression of the baseline-free signal above 10% of the peak
      std::vector<double> dx;
      std::vector<double> ly;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = std::abs(y[i] - ymin);
        if (v > 0.1 * amp && v > 0.0) {
          dx.push_back(std::abs(x[i] - x[peak]));
          ly.push_back(std::log(v));
        }
      }
      double gamma = 0.0;
      double a = amp;
      const auto [dlo, dhi] = std::minmax_element(dx.begin(), dx.end());
      if (dx.size() >= 2 && *dlo != *dhi) {
        const auto line = linear_solve(dx, ly);
        gamma = -line[0] / (2.0 * kPi);
        a = std::exp(line[1]);
      }
      if (!(gamma > 0.0)) gamma = std::log(2.0) / (kPi * std::max(xspan / 4.0, 1e-300));
      return {a, x[peak], gamma, ymin};
    }
    case FitModel::linear:
      break;
  }
  return {};
}

FitResult fit(FitModel m, std::span<const double> x, std::span<const double> y,
              std::optional<std::vector<double>> initial, const FitOptions& opt) {
  check_data(m, x, y);
  FitResult r;
  r.model = m;
  r.names = parameter_names(m);

  if (m == FitModel::linear) {
    r.params = linear_solve(x, y);
    r.ssr = sum_squares(m, r.params, x, y);
    r.converged = true;
    r.ssr_history = {r.ssr};
    return r;
  }

  const std::size_t np = r.names.size();
  std::vector<double> p = initial ? *initial : initial_guess(m, x, y);
  require(p.size() == np, ErrorKind::argument, "fit: initial guess has the wrong size");
  double ssr = sum_squares(m, p, x, y);
  require(std::isfinite(ssr), ErrorKind::argument, "fit: initial guess gives non-finite residual");

  const auto n = static_cast<Eigen::Index>(x.size());
  const auto k = static_cast<Eigen::Index>(np);
  Eigen::MatrixXd J(n, k);
  Eigen::VectorXd res(n);
  std::vector<double> grad(np);
  std::vector<double> trial(np);
  double lambda = 1e-3;

  r.ssr_history.push_back(ssr);
  while (r.iterations < opt.max_iterations) {
    ++r.iterations;
    for (Eigen::Index i = 0; i < n; ++i) {
      res(i) = y[i] - value_and_gradient(m, p, x[i], grad.data());
      for (Eigen::Index j = 0; j < k; ++j) J(i, j) = grad[j];
    }
    const Eigen::MatrixXd H = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * res;
    if (ssr == 0.0 || g.cwiseAbs().maxCoeff() == 0.0) {
      r.converged = true;
      break;
    }

    bool accepted = false;
    double step_rel = 0.0;
    while (lambda <= 1e20) {
      Eigen::MatrixXd A = H;
      for (Eigen::Index j = 0; j < k; ++j) A(j, j) += lambda * std::max(H(j, j), 1e-300);
      const Eigen::VectorXd delta = A.ldlt().solve(g);
      for (std::size_t j = 0; j < np; ++j) trial[j] = p[j] + delta(static_cast<Eigen::Index>(j));
      const double ssr_trial = sum_squares(m, trial, x, y);
      double pnorm = 0.0;
      for (double v : p) pnorm += v * v;
      step_rel = delta.norm() / (std::sqrt(pnorm) + 1e-300);
      if (std::isfinite(ssr_trial) && delta.allFinite() && ssr_trial <= ssr) {
        p = trial;
        ssr = ssr_trial;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // no descent direction left: converged only if the last step was negligible
      r.converged = step_rel < opt.step_tolerance;
      break;
    }
    r.ssr_history.push_back(ssr);
    if (step_rel < opt.step_tolerance) {
      r.converged = true;
      break;
    }
  }

  r.params = p;
  r.ssr = ssr;
  fill_derived(r);
  return r;
}

}  // namespace cavspdc
