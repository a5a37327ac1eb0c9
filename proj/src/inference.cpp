#include "tgrg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tgrg/errors.hpp"
#include "tgrg/parallel.hpp"

namespace tgrg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSigmaFloor = 1e-4;
constexpr double kPhi1Bound = 1.0 - 1e-6;

// Row-major so that row(t).data() is a contiguous per-time view.
using RowMajorMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double clamp_value(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

// ===========================================================================
// Link factor enumeration
// ===========================================================================

// Walks the copy-mixture factors incident to one fitness series at a fixed
// time step. The callback receives (partner_series, a_cur, repeat, alpha).
// Undirected: series i touches every pair (i,j). Directed: the out series of
// i touches links i->j (partners are in-series), the in series of i touches
// links j->i (partners are out-series).
struct FactorContext {
  int n_nodes = 0;
  bool directed = false;
  const AdjacencyMatrix* a_t = nullptr;
  const AdjacencyMatrix* a_prev = nullptr;
  const Eigen::MatrixXd* alpha = nullptr;  // null means no copy mechanism

  template <class F>
  void scan(int series, F&& f) const {
    const int n = n_nodes;
    const AdjacencyMatrix& cur = *a_t;
    const AdjacencyMatrix& prev = *a_prev;
    if (!directed) {
      for (int j = 0; j < n; ++j) {
        if (j == series) continue;
        f(j, cur(series, j), cur(series, j) == prev(series, j),
          alpha ? (*alpha)(series, j) : 0.0);
      }
    } else if (series < n) {
      for (int j = 0; j < n; ++j) {
        if (j == series) continue;
        f(n + j, cur(series, j), cur(series, j) == prev(series, j),
          alpha ? (*alpha)(series, j) : 0.0);
      }
    } else {
      const int i = series - n;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        f(j, cur(j, i), cur(j, i) == prev(j, i), alpha ? (*alpha)(j, i) : 0.0);
      }
    }
  }
};

// Scaled stationarity equation of one series at one time step:
//   r(x) = -(x - prior_mean) + prior_var * sum_j w_j(x) (A_j - sigmoid(x + theta_j))
// where w_j is the posterior weight of the redraw branch of link j. The root
// of r is the conditional mode of the series given everything else. negexp
// caches exp(-theta) for all series at the sweep's current state.
struct EquationTerms {
  double r = 0.0;
  double dr = 0.0;
};

EquationTerms eval_equation(const FactorContext& ctx, int series, double prior_mean,
                            double prior_var, const double* negexp, double x) {
  const double ux = std::exp(-x);
  double sum = 0.0;
  double dsum = 0.0;
  ctx.scan(series, [&](int partner, std::uint8_t a, bool repeat, double al) {
    const double t = ux * negexp[partner];
    const double denom = 1.0 + t;
    const double sig = 1.0 / denom;
    const double pa = a ? sig : t / denom;
    const double mix = std::max(al * (repeat ? 1.0 : 0.0) + (1.0 - al) * pa, 1e-300);
    const double w = (1.0 - al) * pa / mix;
    const double diff = a ? (1.0 - sig) : -sig;
    sum += w * diff;
    dsum += w * diff * diff * (repeat ? al : 0.0) / mix - w * sig * (1.0 - sig);
  });
  EquationTerms out;
  out.r = -(x - prior_mean) + prior_var * sum;
  out.dr = -1.0 + prior_var * dsum;
  return out;
}

// Safeguarded Newton search for r(x) = 0 on [lo, hi], assuming r(lo) >= 0 and
// r(hi) <= 0 once interior (boundary cases return the bound itself). tol is
// on |r|; bisection takes over whenever Newton leaves the bracket.
template <class Eval>
double solve_stationarity(const Eval& eval, double lo, double hi, double init, double tol,
                          int max_iters, const char* what) {
  EquationTerms at_lo = eval(lo);
  if (at_lo.r <= 0.0) return lo;
  EquationTerms at_hi = eval(hi);
  if (at_hi.r >= 0.0) return hi;

  double a = lo, b = hi;
  double x = clamp_value(init, lo, hi);
  for (int it = 0; it < max_iters; ++it) {
    const EquationTerms e = eval(x);
    if (std::abs(e.r) < tol) return x;
    if (e.r > 0.0)
      a = x;
    else
      b = x;
    double next = (e.dr < -1e-300) ? x - e.r / e.dr : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (b - a < 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(x)))
      return x;  // bracket exhausted at floating-point resolution
    x = next;
  }
  const double res = std::abs(eval(x).r);
  std::ostringstream msg;
  msg << what << ": 1-D solve stalled, residual " << res << " > " << tol;
  throw ConvergenceError(msg.str());
}

// ===========================================================================
// Gauss-Hermite preparation for the smoothing moments
// ===========================================================================

struct GhPrepared {
  Eigen::ArrayXd u;        // nodes
  Eigen::ArrayXd w_tilde;  // weights * exp(u^2): quadrature of plain integrals
};

GhPrepared prepare_gh(const QuadratureRule& rule) {
  GhPrepared out;
  out.u = rule.nodes.array();
  out.w_tilde = rule.weights.array() * (rule.nodes.array().square()).exp();
  return out;
}

struct MomentWorkspace {
  Eigen::ArrayXd x, ux, acc;
};

// First and raw second moment of the unnormalized density
//   f(x) = N(x | prior_mean, prior_var) * prod_j mix_j(x)
// via Gauss-Hermite recentred on the mode with the local curvature as scale.
// The last workspace lane carries the mode itself so the log-density offset
// cancels without a separate pass. mode_io supplies the search start and
// receives the located mode.
PosteriorMoments smoothing_moments(const FactorContext& ctx, int series, double prior_mean,
                                   double prior_var, double clamp, const double* negexp,
                                   const GhPrepared& gh, double filter_tol, int max_iters,
                                   double* mode_io, MomentWorkspace& ws, const char* what) {
  const auto eval = [&](double x) {
    return eval_equation(ctx, series, prior_mean, prior_var, negexp, x);
  };
  const double mode =
      solve_stationarity(eval, -clamp, clamp, *mode_io, filter_tol, max_iters, what);
  *mode_io = mode;

  // Local curvature of log f in units of the prior: r'(x)/prior_var. Keep the
  // scale within a sane band around the prior scale so boundary modes and
  // locally convex mixtures cannot degenerate the rule.
  const double rprime = eval(mode).dr;
  const double curvature = clamp_value(-rprime, 0.04, 1e12);
  const double scale = std::sqrt(2.0 * prior_var / curvature);  // sqrt(2) * sigma_local

  const int g = static_cast<int>(gh.u.size());
  if (ws.x.size() != g + 1) {
    ws.x.resize(g + 1);
    ws.ux.resize(g + 1);
    ws.acc.resize(g + 1);
  }
  ws.x.head(g) = mode + scale * gh.u;
  ws.x(g) = mode;
  ws.ux = (-ws.x).exp();
  ws.acc.setZero();

  ctx.scan(series, [&](int partner, std::uint8_t a, bool repeat, double al) {
    const double e = negexp[partner];
    // mix(x) = c0 + c1 * sigmoid(x + theta_partner), linear in the sigmoid.
    const double c0 = a ? al * (repeat ? 1.0 : 0.0) : al * (repeat ? 1.0 : 0.0) + (1.0 - al);
    const double c1 = a ? (1.0 - al) : -(1.0 - al);
    ws.acc += (c0 + c1 / (1.0 + e * ws.ux)).max(1e-300).log();
  });

  const double inv2v = 0.5 / prior_var;
  // Relative log density against the mode lane; the prior part is explicit.
  const double ref = ws.acc(g);
  Eigen::ArrayXd rel =
      (ws.acc.head(g) - ref - (ws.x.head(g) - prior_mean).square() * inv2v +
       (mode - prior_mean) * (mode - prior_mean) * inv2v)
          .min(700.0)
          .exp() *
      gh.w_tilde;

  const double z = rel.sum();
  const double m1 = (rel * gh.u).sum() / z;
  const double m2 = (rel * gh.u.square()).sum() / z;
  PosteriorMoments out;
  out.mean = mode + scale * m1;
  out.second_moment = mode * mode + 2.0 * mode * scale * m1 + scale * scale * m2;
  return out;
}

// ===========================================================================
// Transition counts for the copy-mixture MLE
// ===========================================================================

struct TransitionCounts {
  long n11 = 0, n00 = 0, n10 = 0, n01 = 0;
  long transitions() const { return n11 + n00 + n10 + n01; }
};

TransitionCounts count_transitions(const LinkSeries& series) {
  if (series.values.size() < 2)
    throw ValidationError("dar1: link series needs at least two snapshots");
  TransitionCounts c;
  for (std::size_t t = 1; t < series.values.size(); ++t) {
    const bool cur = series.values[t] != 0;
    const bool prev = series.values[t - 1] != 0;
    if (cur && prev) ++c.n11;
    else if (!cur && !prev) ++c.n00;
    else if (cur) ++c.n01;
    else ++c.n10;
  }
  return c;
}

double dar1_loglik(const TransitionCounts& c, double alpha, double chi) {
  const double ab = 1.0 - alpha;
  auto lg = [](long n, double p) {
    if (n == 0) return 0.0;
    return p > 0.0 ? n * std::log(p) : -kInf;
  };
  return lg(c.n11, alpha + ab * chi) + lg(c.n00, alpha + ab * (1.0 - chi)) +
         lg(c.n10, ab * (1.0 - chi)) + lg(c.n01, ab * chi);
}

// Both conditional problems are concave with decreasing derivatives, so each
// 1-D maximizer is a root (or boundary) found by bisection with a Newton bias.
double solve_chi_given_alpha(const TransitionCounts& c, double alpha) {
  const double ab = 1.0 - alpha;
  auto deriv = [&](double chi) {
    double d = 0.0;
    if (c.n11) d += c.n11 * ab / (alpha + ab * chi);
    if (c.n00) d -= c.n00 * ab / (alpha + ab * (1.0 - chi));
    if (c.n10) d -= c.n10 / (1.0 - chi);
    if (c.n01) d += c.n01 / chi;
    return d;
  };
  double lo = 0.0, hi = 1.0;
  if (c.n01 == 0 && deriv(1e-12) <= 0.0) return 0.0;
  if (c.n10 == 0 && deriv(1.0 - 1e-12) >= 0.0) return 1.0;
  lo = 1e-12;
  hi = 1.0 - 1e-12;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (deriv(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double solve_alpha_given_chi(const TransitionCounts& c, double chi) {
  auto deriv = [&](double alpha) {
    double d = 0.0;
    if (c.n11) d += c.n11 * (1.0 - chi) / (alpha + (1.0 - alpha) * chi);
    if (c.n00) d += c.n00 * chi / (alpha + (1.0 - alpha) * (1.0 - chi));
    if (c.n10 + c.n01) d -= (c.n10 + c.n01) / (1.0 - alpha);
    return d;
  };
  if (deriv(0.0) <= 0.0) return 0.0;
  if (c.n10 + c.n01 == 0) return 1.0;
  double lo = 0.0, hi = 1.0 - 1e-12;
  if (deriv(hi) >= 0.0) return hi;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (deriv(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

// ===========================================================================
// Config and copy-mixture MLE
// ===========================================================================

void validate(const EmConfig& config) {
  if (!(config.filter_tol > 0.0) || !(config.alpha_tol > 0.0) || !(config.phi_tol > 0.0) ||
      !(config.em_tol > 0.0))
    throw ValidationError("em config: tolerances must be positive");
  if (config.filter_max_sweeps < 1 || config.phi_max_iters < 1 || config.em_max_iters < 1)
    throw ValidationError("em config: iteration caps must be >= 1");
  if (!(config.theta_clamp > 0.0))
    throw ValidationError("em config: theta_clamp must be positive");
  if (config.gh_points < 4) throw ValidationError("em config: gh_points must be >= 4");
  if (config.pg_points_per_panel < 2)
    throw ValidationError("em config: pg_points_per_panel must be >= 2");
  if (!(config.pg_omega_max > 0.0))
    throw ValidationError("em config: pg_omega_max must be positive");
  if (config.n_workers < 1) throw ValidationError("em config: n_workers must be >= 1");
}

double dar1_log_likelihood(const LinkSeries& series, double alpha, double chi) {
  if (!(alpha >= 0.0 && alpha <= 1.0 && chi >= 0.0 && chi <= 1.0))
    throw ValidationError("dar1_log_likelihood: parameters outside [0,1]");
  return dar1_loglik(count_transitions(series), alpha, chi);
}

Dar1Estimate dar1_mle(const LinkSeries& series) {
  const TransitionCounts c = count_transitions(series);
  Dar1Estimate est;

  if (c.n10 + c.n01 == 0) {
    // Constant series: the copy weight is unidentified up against 1 and the
    // likelihood is maximized there; report the sample mean as the marginal.
    est.degenerate = true;
    est.alpha = 1.0;
    double mean = 0.0;
    for (const auto v : series.values) mean += v ? 1.0 : 0.0;
    est.chi = mean / static_cast<double>(series.values.size());
    return est;
  }

  // Coarse grid start, then alternate the two concave conditional solves.
  double best_ll = -kInf;
  double alpha = 0.0, chi = 0.5;
  for (int ia = 0; ia <= 19; ++ia)
    for (int ic = 0; ic <= 19; ++ic) {
      const double a = ia / 20.0;
      const double x = (2 * ic + 1) / 40.0;
      const double ll = dar1_loglik(c, a, x);
      if (ll > best_ll) {
        best_ll = ll;
        alpha = a;
        chi = x;
      }
    }
  for (int it = 0; it < 300; ++it) {
    const double chi_next = solve_chi_given_alpha(c, alpha);
    const double alpha_next = solve_alpha_given_chi(c, chi_next);
    const double delta = std::max(std::abs(chi_next - chi), std::abs(alpha_next - alpha));
    chi = chi_next;
    alpha = alpha_next;
    if (delta < 1e-11) break;
  }
  est.alpha = alpha;
  est.chi = chi;
  return est;
}

// ===========================================================================
// Static snapshot fitness
// ===========================================================================

SsiSnapshot ssi_snapshot(const AdjacencyMatrix& a, bool directed, const EmConfig& config) {
  validate(config);
  const int n = static_cast<int>(a.rows());
  if (n < 2 || a.cols() != n) throw ValidationError("ssi_snapshot: snapshot must be square");
  const int n_series = directed ? 2 * n : n;
  const double clamp = config.theta_clamp;

  // Observed degree of every series under the shared series layout: the row
  // sum for out series (or plain degree), the column sum for in series.
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n_series);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && a(i, j)) {
        degree(i) += 1.0;
        if (directed) degree(n + j) += 1.0;
      }

  SsiSnapshot out;
  out.gamma = Eigen::VectorXd::Zero(n_series);
  Eigen::VectorXd negexp = Eigen::VectorXd::Ones(n_series);

  auto expected_degree = [&](int s, double x) {
    // sum over partners of sigmoid(x + gamma_partner), with derivative
    double ux = std::exp(-x);
    double sum = 0.0, dsum = 0.0;
    const int lo = directed ? (s < n ? n : 0) : 0;
    const int hi = directed ? (s < n ? 2 * n : n) : n;
    const int self = directed ? (s < n ? n + s : s - n) : s;
    for (int p = lo; p < hi; ++p) {
      if (p == self) continue;
      const double sig = 1.0 / (1.0 + ux * negexp(p));
      sum += sig;
      dsum += sig * (1.0 - sig);
    }
    return std::pair<double, double>(sum, dsum);
  };
  auto eval = [&](int s) {
    return [&, s](double x) {
      const auto [sum, dsum] = expected_degree(s, x);
      EquationTerms e;
      e.r = degree(s) - sum;
      e.dr = -dsum;
      return e;
    };
  };

  for (int sweep = 0; sweep < config.filter_max_sweeps; ++sweep) {
    for (int s = 0; s < n_series; ++s) {
      const double x = solve_stationarity(eval(s), -clamp, clamp, out.gamma(s),
                                          config.filter_tol, 200, "ssi_snapshot");
      out.gamma(s) = x;
      negexp(s) = std::exp(-x);
    }
    // Residual pass at the final sweep state; boundary series are excluded
    // because their equations have no interior root.
    double max_res = 0.0;
    for (int s = 0; s < n_series; ++s) {
      if (std::abs(out.gamma(s)) >= clamp - 1e-12) continue;
      max_res = std::max(max_res, std::abs(eval(s)(out.gamma(s)).r));
    }
    if (max_res < config.filter_tol) {
      for (int s = 0; s < n_series; ++s)
        if (std::abs(out.gamma(s)) >= clamp - 1e-12) out.clamped_series.push_back(s);
      return out;
    }
  }
  std::ostringstream msg;
  msg << "ssi_snapshot: degree residuals above " << config.filter_tol << " after "
      << config.filter_max_sweeps << " sweeps";
  throw ConvergenceError(msg.str());
}

Ar1Fit ar1_fit(const Eigen::VectorXd& series) {
  const int len = static_cast<int>(series.size());
  if (len < 3) throw ValidationError("ar1_fit: need at least three points");
  const int n = len - 1;
  const auto x = series.head(n);
  const auto y = series.tail(n);
  const double mx = x.mean();
  const double my = y.mean();
  const double sxx = (x.array() - mx).square().sum();
  const double sxy = ((x.array() - mx) * (y.array() - my)).sum();

  Ar1Fit fit;
  if (sxx < 1e-12) {
    fit.degenerate = true;
    fit.value.phi1 = 0.0;
  } else {
    fit.value.phi1 = sxy / sxx;
    if (std::abs(fit.value.phi1) > kPhi1Bound) {
      fit.value.phi1 = clamp_value(fit.value.phi1, -kPhi1Bound, kPhi1Bound);
      fit.clipped = true;
    }
  }
  fit.value.phi0 = my - fit.value.phi1 * mx;
  const double rss = (y.array() - fit.value.phi0 - fit.value.phi1 * x.array()).square().sum();
  fit.value.sigma = std::max(std::sqrt(rss / n), kSigmaFloor);
  return fit;
}

// ===========================================================================
// Filtering
// ===========================================================================

Eigen::VectorXd filter_step(const AdjacencyMatrix& a_t, const AdjacencyMatrix& a_prev,
                            const Eigen::VectorXd& theta_prev, const DarTgrgParams& params,
                            const EmConfig& config, int pinned_series, double pinned_value) {
  validate(config);
  const FitnessParams& fp = params.fitness;
  const int n_series = fp.n_series();
  if (theta_prev.size() != n_series)
    throw ValidationError("filter_step: theta_prev length does not match the series count");
  const double clamp = config.theta_clamp;

  FactorContext ctx{fp.n_nodes, fp.directed, &a_t, &a_prev, &params.alpha};

  Eigen::VectorXd theta(n_series);
  for (int s = 0; s < n_series; ++s)
    theta(s) = clamp_value(fp.phi0(s) + fp.phi1(s) * theta_prev(s), -clamp, clamp);
  if (pinned_series >= 0) theta(pinned_series) = pinned_value;

  Eigen::VectorXd negexp = (-theta.array()).exp();
  Eigen::VectorXd prior_mean(n_series), prior_var(n_series);
  for (int s = 0; s < n_series; ++s) {
    prior_mean(s) = fp.phi0(s) + fp.phi1(s) * theta_prev(s);
    prior_var(s) = fp.sigma(s) * fp.sigma(s);
  }

  auto eval_for = [&](int s) {
    return [&, s](double x) {
      return eval_equation(ctx, s, prior_mean(s), prior_var(s), negexp.data(), x);
    };
  };

  for (int sweep = 0; sweep < config.filter_max_sweeps; ++sweep) {
    for (int s = 0; s < n_series; ++s) {
      if (s == pinned_series) continue;
      const double x = solve_stationarity(eval_for(s), -clamp, clamp, theta(s),
                                          config.filter_tol, 200, "filter_step");
      theta(s) = x;
      negexp(s) = std::exp(-x);
    }
    double max_res = 0.0;
    for (int s = 0; s < n_series; ++s) {
      if (s == pinned_series || std::abs(theta(s)) >= clamp - 1e-12) continue;
      max_res = std::max(max_res, std::abs(eval_for(s)(theta(s)).r));
    }
    if (max_res < config.filter_tol) return theta;
  }
  std::ostringstream msg;
  msg << "filter_step: stationarity residual above " << config.filter_tol << " after "
      << config.filter_max_sweeps << " sweeps";
  throw ConvergenceError(msg.str());
}

double filter_residual(const AdjacencyMatrix& a_t, const AdjacencyMatrix& a_prev,
                       const Eigen::VectorXd& theta_t, const Eigen::VectorXd& theta_prev,
                       const DarTgrgParams& params, const EmConfig& config,
                       int pinned_series) {
  const FitnessParams& fp = params.fitness;
  const int n_series = fp.n_series();
  if (theta_t.size() != n_series || theta_prev.size() != n_series)
    throw ValidationError("filter_residual: trajectory length mismatch");
  FactorContext ctx{fp.n_nodes, fp.directed, &a_t, &a_prev, &params.alpha};
  Eigen::VectorXd negexp = (-theta_t.array()).exp();
  double max_res = 0.0;
  for (int s = 0; s < n_series; ++s) {
    if (s == pinned_series || std::abs(theta_t(s)) >= config.theta_clamp - 1e-12) continue;
    const double m = fp.phi0(s) + fp.phi1(s) * theta_prev(s);
    const double v = fp.sigma(s) * fp.sigma(s);
    max_res =
        std::max(max_res, std::abs(eval_equation(ctx, s, m, v, negexp.data(), theta_t(s)).r));
  }
  return max_res;
}

// ===========================================================================
// Copy-weight learning
// ===========================================================================

double learn_alpha_from_inputs(const std::vector<std::uint8_t>& repeat_indicator,
                               const std::vector<double>& link_integrals, double tol) {
  const std::size_t n = repeat_indicator.size();
  if (n == 0 || link_integrals.size() != n)
    throw ValidationError("learn_alpha: empty or mismatched inputs");
  if (!(tol > 0.0)) throw ValidationError("learn_alpha: tol must be positive");
  for (double v : link_integrals)
    if (!(v > 0.0 && v < 1.0))
      throw ValidationError("learn_alpha: link integrals must lie strictly inside (0,1)");

  long n_break = 0;  // steps where the link state changed
  for (auto r : repeat_indicator)
    if (!r) ++n_break;
  if (n_break == 0) return 1.0;  // pure persistence: boundary solution

  // Score of the mixture weight; strictly decreasing in alpha, so the sign
  // structure pins the root.
  const auto score = [&](double alpha, double* dscore) {
    double s = -static_cast<double>(n_break) / (1.0 - alpha);
    double d = -static_cast<double>(n_break) / ((1.0 - alpha) * (1.0 - alpha));
    for (std::size_t t = 0; t < n; ++t) {
      if (!repeat_indicator[t]) continue;
      const double i_t = link_integrals[t];
      const double denom = alpha + (1.0 - alpha) * i_t;
      const double num = 1.0 - i_t;
      s += num / denom;
      d -= num * num / (denom * denom);
    }
    if (dscore) *dscore = d;
    return s;
  };

  double s0 = 0.0;
  for (std::size_t t = 0; t < n; ++t)
    if (repeat_indicator[t]) s0 += (1.0 - link_integrals[t]) / link_integrals[t];
  s0 -= static_cast<double>(n_break);
  if (s0 <= 0.0) return 0.0;

  double lo = 0.0, hi = 1.0 - 1e-15;
  double x = 0.5;
  for (int it = 0; it < 200; ++it) {
    double d;
    const double s = score(x, &d);
    if (s > 0.0)
      lo = x;
    else
      hi = x;
    if (hi - lo < tol) break;
    double next = (d < -1e-300) ? x - s / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return 0.5 * (lo + hi);
}

double learn_alpha(const LinkSeries& series, const Eigen::VectorXd& theta_src,
                   const Eigen::VectorXd& theta_dst, const ArParams& fp_src,
                   const ArParams& fp_dst, const PgQuadrature& quad, double tol) {
  const std::size_t len = series.values.size();
  if (len < 2) throw ValidationError("learn_alpha: series shorter than two snapshots");
  if (theta_src.size() != static_cast<Eigen::Index>(len) ||
      theta_dst.size() != static_cast<Eigen::Index>(len))
    throw ValidationError("learn_alpha: trajectory length does not match the series");

  const KernelProfile profile =
      make_kernel_profile(fp_src.sigma * fp_src.sigma + fp_dst.sigma * fp_dst.sigma, quad);
  std::vector<std::uint8_t> repeat(len - 1);
  std::vector<double> integrals(len - 1);
  for (std::size_t t = 1; t < len; ++t) {
    repeat[t - 1] = series.values[t] == series.values[t - 1] ? 1 : 0;
    const double mean_sum = fp_src.phi0 + fp_src.phi1 * theta_src(t - 1) + fp_dst.phi0 +
                            fp_dst.phi1 * theta_dst(t - 1);
    integrals[t - 1] = marginal_link_integral(series.values[t] ? 1 : 0, mean_sum, profile);
  }
  return learn_alpha_from_inputs(repeat, integrals, tol);
}

// ===========================================================================
// AR-parameter learning
// ===========================================================================

namespace {

// One fixed-point pass and its surrounding iteration for a single series.
// negexp_rows caches exp(-theta) for every (time, series) of the latent state.
PhiFit learn_phi_impl(int series, const TemporalNetwork& net, const LatentState& latent,
                      const DarTgrgParams& current, const EmConfig& config,
                      const GhPrepared& gh, const RowMajorMatrixXd& negexp_rows) {
  const int t_max = net.n_steps();
  const double clamp = config.theta_clamp;
  ArParams cur = series_params(current.fitness, series);

  // Lagged filtered values are fixed throughout.
  Eigen::ArrayXd lag(t_max);
  for (int t = 1; t <= t_max; ++t) lag(t - 1) = latent.theta(t - 1, series);
  const double mean_lag = lag.mean();
  const double mean_lag2 = lag.square().mean();
  const double lag_var = mean_lag2 - mean_lag * mean_lag;

  MomentWorkspace ws;
  Eigen::ArrayXd modes(t_max);
  for (int t = 1; t <= t_max; ++t) modes(t - 1) = latent.theta(t, series);

  PhiFit fit;
  for (int it = 1; it <= config.phi_max_iters; ++it) {
    const double var = cur.sigma * cur.sigma;
    double sum_mu = 0.0, sum_lag_mu = 0.0, sum_s2 = 0.0;
    for (int t = 1; t <= t_max; ++t) {
      FactorContext ctx{current.fitness.n_nodes, current.fitness.directed,
                        &net.snapshots[static_cast<std::size_t>(t)],
                        &net.snapshots[static_cast<std::size_t>(t - 1)], &current.alpha};
      double mode = modes(t - 1);
      const double prior_mean = cur.phi0 + cur.phi1 * lag(t - 1);
      const PosteriorMoments pm = smoothing_moments(
          ctx, series, prior_mean, var, clamp, negexp_rows.row(t).data(), gh,
          config.filter_tol, 200, &mode, ws, "learn_phi");
      modes(t - 1) = mode;
      sum_mu += pm.mean;
      sum_lag_mu += lag(t - 1) * pm.mean;
      sum_s2 += pm.second_moment;
    }
    const double mean_mu = sum_mu / t_max;
    const double mean_lag_mu = sum_lag_mu / t_max;
    const double mean_s2 = sum_s2 / t_max;

    ArParams next;
    bool degenerate = false, clipped = false;
    if (lag_var < 1e-12) {
      degenerate = true;
      next.phi1 = 0.0;
    } else {
      next.phi1 = (mean_lag_mu - mean_lag * mean_mu) / lag_var;
      if (std::abs(next.phi1) > kPhi1Bound) {
        next.phi1 = clamp_value(next.phi1, -kPhi1Bound, kPhi1Bound);
        clipped = true;
      }
    }
    next.phi0 = mean_mu - next.phi1 * mean_lag;
    const double s2 = mean_s2 - 2.0 * next.phi0 * mean_mu - 2.0 * next.phi1 * mean_lag_mu +
                      next.phi0 * next.phi0 + 2.0 * next.phi0 * next.phi1 * mean_lag +
                      next.phi1 * next.phi1 * mean_lag2;
    next.sigma = std::max(std::sqrt(std::max(s2, 0.0)), kSigmaFloor);

    const double delta = std::max({std::abs(next.phi0 - cur.phi0),
                                   std::abs(next.phi1 - cur.phi1),
                                   std::abs(next.sigma - cur.sigma)});
    if (delta < config.phi_tol) {
      // cur maps to next within phi_tol, so cur satisfies the fixed-point
      // equations at that resolution.
      fit.value = cur;
      fit.iterations = it;
      fit.converged = true;
      fit.degenerate = degenerate;
      fit.clipped = clipped;
      return fit;
    }
    cur = next;
    fit.degenerate = degenerate;
    fit.clipped = clipped;
  }
  std::ostringstream msg;
  msg << "learn_phi: series " << series << " hit the iteration cap ("
      << config.phi_max_iters << ") without reaching phi_tol " << config.phi_tol;
  throw ConvergenceError(msg.str());
}

}  // namespace

PosteriorMoments posterior_moments(int series, const AdjacencyMatrix& a_t,
                                   const AdjacencyMatrix& a_prev,
                                   const Eigen::VectorXd& theta_t, double theta_prev_value,
                                   const DarTgrgParams& params,
                                   const QuadratureRule& gauss_hermite_rule) {
  validate(params);
  const FitnessParams& fp = params.fitness;
  if (series < 0 || series >= fp.n_series())
    throw ValidationError("posterior_moments: series index out of range");
  if (theta_t.size() != fp.n_series())
    throw ValidationError("posterior_moments: theta_t length mismatch");
  FactorContext ctx{fp.n_nodes, fp.directed, &a_t, &a_prev, &params.alpha};
  Eigen::VectorXd negexp = (-theta_t.array()).exp();
  const GhPrepared gh = prepare_gh(gauss_hermite_rule);
  MomentWorkspace ws;
  const ArParams ap = series_params(fp, series);
  double mode = theta_t(series);
  EmConfig config;  // defaults are fine for a one-off evaluation
  return smoothing_moments(ctx, series, ap.phi0 + ap.phi1 * theta_prev_value,
                           ap.sigma * ap.sigma, config.theta_clamp, negexp.data(), gh,
                           config.filter_tol, 200, &mode, ws, "posterior_moments");
}

PhiFit learn_phi(int series, const TemporalNetwork& net, const LatentState& latent,
                 const DarTgrgParams& current, const EmConfig& config,
                 const QuadratureRule& gauss_hermite_rule) {
  validate(config);
  validate(current);
  if (series < 0 || series >= current.fitness.n_series())
    throw ValidationError("learn_phi: series index out of range");
  if (latent.theta.rows() != net.n_steps() + 1 ||
      latent.theta.cols() != current.fitness.n_series())
    throw ValidationError("learn_phi: latent state shape mismatch");
  const GhPrepared gh = prepare_gh(gauss_hermite_rule);
  const RowMajorMatrixXd negexp_rows = (-latent.theta.array()).exp();
  return learn_phi_impl(series, net, latent, current, config, gh, negexp_rows);
}

// ===========================================================================
// Naive initialization
// ===========================================================================

namespace {

// Directed fitness is identified only up to a constant moved between the out
// and in blocks, so one out series is frozen at its naive trajectory: the
// lowest-index node that is out-active in every snapshot, falling back to
// any-active, then to node 0.
int pick_reference_series(const TemporalNetwork& net) {
  const int n = net.n_nodes();
  std::vector<bool> out_active(n, true), any_active(n, true);
  for (const AdjacencyMatrix& a : net.snapshots)
    for (int i = 0; i < n; ++i) {
      long out_deg = 0, in_deg = 0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        out_deg += a(i, j);
        in_deg += a(j, i);
      }
      if (out_deg == 0) out_active[i] = false;
      if (out_deg + in_deg == 0) any_active[i] = false;
    }
  for (int i = 0; i < n; ++i)
    if (out_active[i]) return i;
  for (int i = 0; i < n; ++i)
    if (any_active[i]) return i;
  return 0;
}

std::vector<std::pair<int, int>> ordered_pairs(int n, bool directed) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = directed ? 0 : i + 1; j < n; ++j)
      if (i != j) pairs.emplace_back(i, j);
  return pairs;
}

}  // namespace

SsiResult ssi_initialize(const TemporalNetwork& net, ModelKind kind, const EmConfig& config,
                         const PgQuadrature& quad) {
  validate(config);
  validate(net);
  if (kind == ModelKind::Dar1)
    throw ValidationError("ssi_initialize: the copy-only model has no fitness to initialize");
  const int n = net.n_nodes();
  const int t_max = net.n_steps();
  if (t_max < 3) throw ValidationError("ssi_initialize: need at least three steps");
  const int n_series = net.directed ? 2 * n : n;

  SsiResult out;
  out.latent.n_nodes = n;
  out.latent.directed = net.directed;
  out.latent.theta.resize(t_max + 1, n_series);

  long clamped_total = 0;
  for (int t = 0; t <= t_max; ++t) {
    const SsiSnapshot snap =
        ssi_snapshot(net.snapshots[static_cast<std::size_t>(t)], net.directed, config);
    out.latent.theta.row(t) = snap.gamma.transpose();
    clamped_total += static_cast<long>(snap.clamped_series.size());
  }
  if (clamped_total > 0)
    out.warnings.push_back("ssi_initialize: " + std::to_string(clamped_total) +
                           " snapshot fitness values sit on the clamp boundary");

  out.fitness.n_nodes = n;
  out.fitness.directed = net.directed;
  out.fitness.phi0.resize(n_series);
  out.fitness.phi1.resize(n_series);
  out.fitness.sigma.resize(n_series);
  long degenerate_series = 0;
  for (int s = 0; s < n_series; ++s) {
    const Ar1Fit fit = ar1_fit(out.latent.theta.col(s));
    out.fitness.phi0(s) = fit.value.phi0;
    out.fitness.phi1(s) = fit.value.phi1;
    out.fitness.sigma(s) = fit.value.sigma;
    if (fit.degenerate || fit.clipped) ++degenerate_series;
  }
  if (degenerate_series > 0)
    out.warnings.push_back("ssi_initialize: " + std::to_string(degenerate_series) +
                           " AR fits were degenerate or clipped");

  out.alpha = Eigen::MatrixXd::Zero(n, n);
  if (kind == ModelKind::DarTgrg) {
    const auto pairs = ordered_pairs(n, net.directed);
    std::vector<double> alphas(pairs.size());
    parallel_for(static_cast<int>(pairs.size()), config.n_workers, [&](int k) {
      const auto [i, j] = pairs[static_cast<std::size_t>(k)];
      const LinkSeries series = link_series(net, i, j);
      alphas[static_cast<std::size_t>(k)] = learn_alpha(
          series, out.latent.theta.col(out.fitness.out_index(i)),
          out.latent.theta.col(out.fitness.in_index(j)),
          series_params(out.fitness, out.fitness.out_index(i)),
          series_params(out.fitness, out.fitness.in_index(j)), quad, config.alpha_tol);
    });
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      out.alpha(pairs[k].first, pairs[k].second) = alphas[k];
      if (!net.directed) out.alpha(pairs[k].second, pairs[k].first) = alphas[k];
    }
  }

  if (net.directed) out.reference_series = pick_reference_series(net);
  return out;
}

// ===========================================================================
// Full estimation
// ===========================================================================

namespace {

EstimationResult em_estimate_dar1(const TemporalNetwork& net, const EmConfig& config) {
  const int n = net.n_nodes();
  EstimationResult result;
  result.model = ModelKind::Dar1;
  result.directed = net.directed;
  result.n_nodes = n;
  result.n_steps = net.n_steps();
  result.alpha = Eigen::MatrixXd::Zero(n, n);
  result.chi = Eigen::MatrixXd::Zero(n, n);

  const auto pairs = ordered_pairs(n, net.directed);
  std::vector<Dar1Estimate> estimates(pairs.size());
  parallel_for(static_cast<int>(pairs.size()), config.n_workers, [&](int k) {
    estimates[static_cast<std::size_t>(k)] =
        dar1_mle(link_series(net, pairs[static_cast<std::size_t>(k)].first,
                             pairs[static_cast<std::size_t>(k)].second));
  });
  long degenerate = 0;
  double loglik = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    result.alpha(i, j) = estimates[k].alpha;
    result.chi(i, j) = estimates[k].chi;
    if (!net.directed) {
      result.alpha(j, i) = estimates[k].alpha;
      result.chi(j, i) = estimates[k].chi;
    }
    if (estimates[k].degenerate) ++degenerate;
    loglik += dar1_log_likelihood(link_series(net, i, j), estimates[k].alpha, estimates[k].chi);
  }
  if (degenerate > 0)
    result.warnings.push_back("dar1: " + std::to_string(degenerate) +
                              " constant link series (copy weight pinned to 1)");
  result.log_likelihood_trace.push_back(loglik);
  result.iterations = 1;
  result.converged = true;
  return result;
}

EstimationResult em_estimate_latent(const TemporalNetwork& net, ModelKind kind,
                                    const EmConfig& config, bool pin_alpha_zero) {
  const int n = net.n_nodes();
  const int t_max = net.n_steps();
  const PgQuadrature quad = PgQuadrature::make(config.pg_points_per_panel, config.pg_omega_max);
  const QuadratureRule gh_rule = gauss_hermite(config.gh_points);
  const GhPrepared gh = prepare_gh(gh_rule);

  EstimationResult result;
  result.model = kind;
  result.directed = net.directed;
  result.n_nodes = n;
  result.n_steps = t_max;

  SsiResult ssi;
  try {
    ssi = ssi_initialize(net, kind, config, quad);
  } catch (const ConvergenceError& e) {
    result.alpha = Eigen::MatrixXd::Zero(n, n);
    result.warnings.push_back(std::string("initialization: ") + e.what());
    return result;  // converged=false, nothing estimated
  }
  result.warnings = ssi.warnings;
  result.reference_series = ssi.reference_series;

  DarTgrgParams params;
  params.alpha = pin_alpha_zero ? Eigen::MatrixXd::Zero(n, n) : ssi.alpha;
  params.fitness = ssi.fitness;
  LatentState latent = ssi.latent;

  // The directed gauge anchor: the reference out-series keeps its naive
  // trajectory through every iteration.
  Eigen::VectorXd pinned_traj;
  if (result.reference_series >= 0)
    pinned_traj = ssi.latent.theta.col(result.reference_series);

  const auto pairs = ordered_pairs(n, net.directed);
  const int n_series = params.fitness.n_series();

  DarTgrgParams last_good = params;
  LatentState last_good_latent = latent;
  int completed = 0;
  bool converged = false;
  std::string failure;
  std::vector<std::string> phi_flags;

  for (int iter = 1; iter <= config.em_max_iters; ++iter) {
    try {
      // --- filtering pass -------------------------------------------------
      for (int t = 1; t <= t_max; ++t) {
        const Eigen::VectorXd prev = latent.theta.row(t - 1).transpose();
        const Eigen::VectorXd cur = filter_step(
            net.snapshots[static_cast<std::size_t>(t)],
            net.snapshots[static_cast<std::size_t>(t - 1)], prev, params, config,
            result.reference_series,
            result.reference_series >= 0 ? pinned_traj(t) : 0.0);
        latent.theta.row(t) = cur.transpose();
      }

      // --- copy-weight pass (and likelihood trace) ------------------------
      // One-step predictions from the AR parameters of this iteration's
      // entry state; the integrals do not depend on alpha, so each link's
      // score root is found over fixed inputs.
      Eigen::MatrixXd projections(t_max + 1, n_series);
      for (int t = 1; t <= t_max; ++t)
        for (int s = 0; s < n_series; ++s)
          projections(t, s) =
              params.fitness.phi0(s) + params.fitness.phi1(s) * latent.theta(t - 1, s);

      Eigen::MatrixXd alpha_next = Eigen::MatrixXd::Zero(n, n);
      std::vector<double> pair_loglik(pairs.size(), 0.0);
      std::vector<double> pair_alpha(pairs.size(), 0.0);
      parallel_for(static_cast<int>(pairs.size()), config.n_workers, [&](int k) {
        const auto [i, j] = pairs[static_cast<std::size_t>(k)];
        const int si = params.fitness.out_index(i);
        const int sj = params.fitness.in_index(j);
        const double var_sum = params.fitness.sigma(si) * params.fitness.sigma(si) +
                               params.fitness.sigma(sj) * params.fitness.sigma(sj);
        const KernelProfile profile = make_kernel_profile(var_sum, quad);
        std::vector<std::uint8_t> repeat(static_cast<std::size_t>(t_max));
        std::vector<double> integrals(static_cast<std::size_t>(t_max));
        for (int t = 1; t <= t_max; ++t) {
          const std::uint8_t cur = net.snapshots[static_cast<std::size_t>(t)](i, j);
          const std::uint8_t prev = net.snapshots[static_cast<std::size_t>(t - 1)](i, j);
          repeat[static_cast<std::size_t>(t - 1)] = cur == prev ? 1 : 0;
          integrals[static_cast<std::size_t>(t - 1)] = marginal_link_integral(
              cur ? 1 : 0, projections(t, si) + projections(t, sj), profile);
        }
        const double a = pin_alpha_zero
                             ? 0.0
                             : learn_alpha_from_inputs(repeat, integrals, config.alpha_tol);
        pair_alpha[static_cast<std::size_t>(k)] = a;
        double ll = 0.0;
        for (int t = 0; t < t_max; ++t) {
          const double rep = repeat[static_cast<std::size_t>(t)] ? 1.0 : 0.0;
          ll += std::log(a * rep + (1.0 - a) * integrals[static_cast<std::size_t>(t)]);
        }
        pair_loglik[static_cast<std::size_t>(k)] = ll;
      });
      double loglik = 0.0;
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        loglik += pair_loglik[k];
        alpha_next(pairs[k].first, pairs[k].second) = pair_alpha[k];
        if (!net.directed) alpha_next(pairs[k].second, pairs[k].first) = pair_alpha[k];
      }

      // --- AR-parameter pass ----------------------------------------------
      DarTgrgParams stage = params;
      stage.alpha = alpha_next;
      const RowMajorMatrixXd negexp_rows = (-latent.theta.array()).exp();
      std::vector<PhiFit> fits(static_cast<std::size_t>(n_series));
      parallel_for(n_series, config.n_workers, [&](int s) {
        fits[static_cast<std::size_t>(s)] =
            learn_phi_impl(s, net, latent, stage, config, gh, negexp_rows);
      });
      FitnessParams fitness_next = params.fitness;
      long n_clipped = 0, n_degenerate = 0;
      for (int s = 0; s < n_series; ++s) {
        fitness_next.phi0(s) = fits[static_cast<std::size_t>(s)].value.phi0;
        fitness_next.phi1(s) = fits[static_cast<std::size_t>(s)].value.phi1;
        fitness_next.sigma(s) = fits[static_cast<std::size_t>(s)].value.sigma;
        if (fits[static_cast<std::size_t>(s)].clipped) ++n_clipped;
        if (fits[static_cast<std::size_t>(s)].degenerate) ++n_degenerate;
      }
      phi_flags.clear();
      if (n_clipped > 0)
        phi_flags.push_back("learn_phi: " + std::to_string(n_clipped) +
                            " series clipped at the stationarity bound");
      if (n_degenerate > 0)
        phi_flags.push_back("learn_phi: " + std::to_string(n_degenerate) +
                            " series with a constant lagged trajectory");

      // --- convergence ----------------------------------------------------
      double delta = (alpha_next - params.alpha).cwiseAbs().maxCoeff();
      delta = std::max(delta, (fitness_next.phi0 - params.fitness.phi0).cwiseAbs().maxCoeff());
      delta = std::max(delta, (fitness_next.phi1 - params.fitness.phi1).cwiseAbs().maxCoeff());
      delta = std::max(delta, (fitness_next.sigma - params.fitness.sigma).cwiseAbs().maxCoeff());

      params.alpha = alpha_next;
      params.fitness = fitness_next;
      result.log_likelihood_trace.push_back(loglik);
      completed = iter;
      last_good = params;
      last_good_latent = latent;
      if (delta < config.em_tol) {
        converged = true;
        break;
      }
    } catch (const ConvergenceError& e) {
      failure = "iteration " + std::to_string(iter) + ": " + e.what();
      break;
    }
  }

  result.alpha = last_good.alpha;
  result.fitness = last_good.fitness;
  result.latent = last_good_latent;
  result.iterations = completed;
  result.converged = converged;
  for (const auto& flag : phi_flags) result.warnings.push_back(flag);
  if (!failure.empty()) result.warnings.push_back(failure);
  if (!converged && failure.empty())
    result.warnings.push_back("em_estimate: parameter change still above em_tol after " +
                              std::to_string(config.em_max_iters) + " iterations");
  return result;
}

}  // namespace

EstimationResult em_estimate(const TemporalNetwork& net, ModelKind kind,
                             const EmConfig& config) {
  validate(config);
  validate(net);
  if (net.n_steps() < 3)
    throw ValidationError("em_estimate: need at least three transitions");
  switch (kind) {
    case ModelKind::Dar1:
      return em_estimate_dar1(net, config);
    case ModelKind::Tgrg:
      return em_estimate_latent(net, kind, config, /*pin_alpha_zero=*/true);
    case ModelKind::DarTgrg:
      return em_estimate_latent(net, kind, config, /*pin_alpha_zero=*/false);
  }
  throw ValidationError("em_estimate: unknown model kind");
}

namespace detail {

// Test hook: the mixture-model loop with the copy weights pinned at zero must
// coincide with the pure fitness mode.
EstimationResult em_estimate_pinned_alpha(const TemporalNetwork& net, const EmConfig& config) {
  validate(config);
  validate(net);
  EstimationResult r = em_estimate_latent(net, ModelKind::Tgrg, config, true);
  return r;
}

}  // namespace detail

}  // namespace tgrg
