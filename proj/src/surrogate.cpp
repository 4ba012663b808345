#include "swarmopt/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

#include "swarmopt/errors.hpp"
#include "swarmopt/stats.hpp"

namespace swarmopt {

namespace {

constexpr double kLogLengthMin = -4.6;   // 0.01
constexpr double kLogLengthMax = 4.6;    // 100
constexpr double kLogSignalMin = -4.6;
constexpr double kLogSignalMax = 1.1;    // ~3, see fit()

// Per-point probit likelihood terms for label t in {-1, +1} at latent f.
struct Lik {
  double logp, d1, w, d3;
};

Lik probit(int label, double f) {
  const double t = label ? 1.0 : -1.0;
  const double z = t * f;
  const double r = mills_inverse(z);
  Lik l;
  l.logp = log_norm_cdf(z);
  l.d1 = t * r;
  l.w = r * r + z * r;  // minus the second derivative
  l.d3 = t * (r * (z * z - 1.0) + 3.0 * z * r * r + 2.0 * r * r * r);
  return l;
}

double median_distance(const Eigen::MatrixXd& X) {
  std::vector<double> d;
  const int n = static_cast<int>(X.rows());
  const int stride = std::max(1, n / 64);
  for (int i = 0; i < n; i += stride)
    for (int j = i + stride; j < n; j += stride) d.push_back((X.row(i) - X.row(j)).norm());
  if (d.empty()) return 1.0;
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  return std::clamp(d[d.size() / 2], 0.02, 50.0);
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
}

template <typename M>
void hash_matrix(std::uint64_t& h, const M& m) {
  const Eigen::Index dims[2] = {m.rows(), m.cols()};
  hash_bytes(h, dims, sizeof dims);
  if (m.size() > 0) hash_bytes(h, m.data(), sizeof(typename M::Scalar) * static_cast<std::size_t>(m.size()));
}

Eigen::VectorXd params_of(const GpcModule& m) {
  Eigen::VectorXd p(m.dim + 1);
  p.head(m.dim) = m.log_lengthscale;
  p(m.dim) = m.log_signal;
  return p;
}

void set_params(GpcModule& m, const Eigen::VectorXd& p) {
  for (int d = 0; d < m.dim; ++d) m.log_lengthscale(d) = std::clamp(p(d), kLogLengthMin, kLogLengthMax);
  m.log_signal = std::clamp(p(m.dim), kLogSignalMin, kLogSignalMax);
}

Eigen::VectorXd clamp_params(const Eigen::VectorXd& p, int dim) {
  Eigen::VectorXd q = p;
  for (int d = 0; d < dim; ++d) q(d) = std::clamp(q(d), kLogLengthMin, kLogLengthMax);
  q(dim) = std::clamp(q(dim), kLogSignalMin, kLogSignalMax);
  return q;
}

// Laplace fit returning false instead of throwing (used inside the search).
bool try_laplace(GpcModule& m, const FitOptions& o) {
  try {
    laplace(m, o);
    return std::isfinite(m.log_marginal);
  } catch (const ConditioningError&) {
    return false;
  }
}

// Projected BFGS ascent on the log marginal likelihood. Returns the best value.
double ascend(GpcModule& m, const FitOptions& o, int iters) {
  if (!try_laplace(m, o)) return -std::numeric_limits<double>::infinity();
  const int np = m.dim + 1;
  Eigen::VectorXd p = params_of(m);
  double value = m.log_marginal;
  Eigen::VectorXd g = log_marginal_gradient(m);
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(np, np);
  GpcModule best = m;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd dir = Hinv * g;
    if (dir.dot(g) <= 0) {
      Hinv.setIdentity();
      dir = g;
    }
    const double len = dir.norm();
    if (len > 2.0) dir *= 2.0 / len;
    double step = 1.0;
    bool moved = false;
    Eigen::VectorXd p_new;
    for (int ls = 0; ls < 12; ++ls, step *= 0.5) {
      p_new = clamp_params(p + step * dir, m.dim);
      GpcModule trial = m;
      set_params(trial, p_new);
      if (!try_laplace(trial, o)) continue;
      if (trial.log_marginal >= value + 1e-4 * g.dot(p_new - p)) {
        m = std::move(trial);
        moved = true;
        break;
      }
    }
    if (!moved) break;
    const Eigen::VectorXd g_new = log_marginal_gradient(m);
    const Eigen::VectorXd s = p_new - p;
    const Eigen::VectorXd yv = g - g_new;  // gradient of the minimized objective
    const double sy = s.dot(yv);
    const double gain = m.log_marginal - value;
    p = p_new;
    value = m.log_marginal;
    g = g_new;
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(np, np);
      Hinv = (I - rho * s * yv.transpose()) * Hinv * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
    }
    best = m;
    if (gain < 1e-6 * (1.0 + std::abs(value)) && g.norm() < 1e-3) break;
  }
  m = std::move(best);
  return value;
}

}  // namespace

GpcModule::GpcModule(int dimension)
    : dim(dimension), X(0, dimension), y(0), prior_mean(0), f(0),
      log_lengthscale(Eigen::VectorXd::Zero(dimension)) {}

double GpcModule::kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  const Eigen::ArrayXd r = (a - b).array() * (-log_lengthscale).array().exp();
  return std::exp(2.0 * log_signal - 0.5 * r.square().sum());
}

Eigen::MatrixXd GpcModule::kernel_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const {
  const Eigen::RowVectorXd inv = (-log_lengthscale).array().exp().matrix().transpose();
  const Eigen::MatrixXd As = A.array().rowwise() * inv.array();
  const Eigen::MatrixXd Bs = B.array().rowwise() * inv.array();
  const Eigen::VectorXd na = As.rowwise().squaredNorm();
  const Eigen::VectorXd nb = Bs.rowwise().squaredNorm();
  Eigen::MatrixXd D = -2.0 * As * Bs.transpose();
  D.colwise() += na;
  D.rowwise() += nb.transpose();
  const double s2 = std::exp(2.0 * log_signal);
  return (s2 * (-0.5 * D.array().max(0.0)).exp()).matrix();
}

Prediction GpcModule::predict(const Eigen::VectorXd& x, double mean_at_x) const {
  if (x.size() != dim)
    throw DimensionError("predict: input has dimension " + std::to_string(x.size()) + ", module expects " +
                         std::to_string(dim));
  Eigen::MatrixXd row = x.transpose();
  Eigen::VectorXd m(1);
  m(0) = mean_at_x;
  return predict_batch(row, m).front();
}

std::vector<Prediction> GpcModule::predict_batch(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& means,
                                                 const Eigen::MatrixXd& base_cross,
                                                 const Eigen::VectorXd& base_var) const {
  if (Xs.cols() != dim)
    throw DimensionError("predict: input has dimension " + std::to_string(Xs.cols()) + ", module expects " +
                         std::to_string(dim));
  const Eigen::Index ns = Xs.rows();
  std::vector<Prediction> out(static_cast<std::size_t>(ns));
  const double prior_var = std::exp(2.0 * log_signal);
  Eigen::VectorXd mu = means.size() == ns ? means : Eigen::VectorXd::Zero(ns);
  Eigen::VectorXd var = Eigen::VectorXd::Constant(ns, prior_var);
  if (base_var.size() == ns) var += base_var;
  if (status != Status::Prior && size() > 0) {
    Eigen::MatrixXd Ks = kernel_matrix(X, Xs);  // n x ns
    if (base_cross.rows() == Ks.rows() && base_cross.cols() == ns) Ks += base_cross;
    mu += Ks.transpose() * grad_loglik;
    Eigen::MatrixXd V = sqrt_w.asDiagonal() * Ks;
    chol.triangularView<Eigen::Lower>().solveInPlace(V);
    var -= V.colwise().squaredNorm().transpose();
  }
  for (Eigen::Index k = 0; k < ns; ++k) {
    Prediction& p = out[static_cast<std::size_t>(k)];
    p.mean = mu(k);
    p.stddev = std::sqrt(std::max(var(k), 0.0));
    p.prob = norm_cdf(p.mean / std::sqrt(1.0 + p.stddev * p.stddev));
  }
  return out;
}

std::vector<char> GpcModule::accepts(const Eigen::MatrixXd& Xs, double threshold) const {
  if (status == Status::Prior || size() == 0) {
    std::vector<char> out;
    for (const Prediction& p : predict_batch(Xs)) out.push_back(p.prob >= threshold);
    return out;
  }
  if (Xs.cols() != dim)
    throw DimensionError("predict: input has dimension " + std::to_string(Xs.cols()) + ", module expects " +
                         std::to_string(dim));
  const Eigen::Index ns = Xs.rows();
  const double prior_var = std::exp(2.0 * log_signal);
  const double widest = std::sqrt(1.0 + prior_var);
  const Eigen::MatrixXd Ks = kernel_matrix(X, Xs);
  const Eigen::VectorXd mu = Ks.transpose() * grad_loglik;
  std::vector<char> out(static_cast<std::size_t>(ns), 0);
  // prob = Phi(mu / sqrt(1 + var)) with 0 <= var <= prior_var, monotone in var
  std::vector<Eigen::Index> open;
  for (Eigen::Index k = 0; k < ns; ++k) {
    const double a = norm_cdf(mu(k)), b = norm_cdf(mu(k) / widest);
    if (std::max(a, b) < threshold) continue;
    if (std::min(a, b) >= threshold) {
      out[static_cast<std::size_t>(k)] = 1;
      continue;
    }
    open.push_back(k);
  }
  if (open.empty()) return out;
  Eigen::MatrixXd V(Ks.rows(), static_cast<Eigen::Index>(open.size()));
  for (std::size_t c = 0; c < open.size(); ++c) V.col(static_cast<Eigen::Index>(c)) = Ks.col(open[c]);
  V = sqrt_w.asDiagonal() * V;
  chol.triangularView<Eigen::Lower>().solveInPlace(V);
  for (std::size_t c = 0; c < open.size(); ++c) {
    const double var = prior_var - V.col(static_cast<Eigen::Index>(c)).squaredNorm();
    const double sd = std::sqrt(std::max(var, 0.0));
    out[static_cast<std::size_t>(open[c])] = norm_cdf(mu(open[c]) / std::sqrt(1.0 + sd * sd)) >= threshold;
  }
  return out;
}

Eigen::MatrixXd GpcModule::posterior_cov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const {
  Eigen::MatrixXd S = kernel_matrix(A, B);
  if (status == Status::Prior || size() == 0) return S;
  Eigen::MatrixXd Va = sqrt_w.asDiagonal() * kernel_matrix(X, A);
  Eigen::MatrixXd Vb = sqrt_w.asDiagonal() * kernel_matrix(X, B);
  chol.triangularView<Eigen::Lower>().solveInPlace(Va);
  chol.triangularView<Eigen::Lower>().solveInPlace(Vb);
  return S - Va.transpose() * Vb;
}

Eigen::VectorXd GpcModule::posterior_var(const Eigen::MatrixXd& A) const {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(A.rows(), std::exp(2.0 * log_signal));
  if (status == Status::Prior || size() == 0) return v;
  Eigen::MatrixXd Va = sqrt_w.asDiagonal() * kernel_matrix(X, A);
  chol.triangularView<Eigen::Lower>().solveInPlace(Va);
  return (v - Va.colwise().squaredNorm().transpose()).cwiseMax(0.0);
}

std::uint64_t GpcModule::state_hash() const {
  std::uint64_t h = 1469598103934665603ull;
  hash_bytes(h, &dim, sizeof dim);
  const int st = static_cast<int>(status);
  hash_bytes(h, &st, sizeof st);
  hash_matrix(h, X);
  hash_matrix(h, y);
  hash_matrix(h, prior_mean);
  hash_matrix(h, base_cov);
  hash_matrix(h, f);
  hash_matrix(h, log_lengthscale);
  hash_bytes(h, &log_signal, sizeof log_signal);
  hash_bytes(h, &jitter, sizeof jitter);
  hash_bytes(h, &log_marginal, sizeof log_marginal);
  hash_matrix(h, chol);
  hash_matrix(h, sqrt_w);
  hash_matrix(h, grad_loglik);
  return h;
}

void laplace(GpcModule& m, const FitOptions& o) {
  const int n = m.size();
  if (m.prior_mean.size() != n) m.prior_mean = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd K0 = m.kernel_matrix(m.X, m.X);
  if (m.base_cov.rows() == n) K0 += m.base_cov;

  for (double jitter = std::max(m.jitter, 1e-6);; jitter *= 10.0) {
    if (jitter > o.max_jitter * (1.0 + 1e-9))
      throw ConditioningError("GP classifier: kernel matrix not positive definite with jitter up to " +
                              std::to_string(o.max_jitter));
    Eigen::MatrixXd K = K0;
    K.diagonal().array() += jitter;
    if (Eigen::LLT<Eigen::MatrixXd>(K).info() != Eigen::Success) continue;

    // Newton iterations on a, with latent f = m + K a.
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    auto objective = [&](const Eigen::VectorXd& av, const Eigen::VectorXd& gv) {
      double s = -0.5 * av.dot(gv);
      for (int i = 0; i < n; ++i) s += probit(m.y(i), m.prior_mean(i) + gv(i)).logp;
      return s;
    };
    double psi = objective(a, g);
    // The previous mode's likelihood gradient (same data, nearby hyperparameters) is a
    // good Newton start; the problem is concave so the mode does not depend on it.
    if (m.grad_loglik.size() == n && m.grad_loglik.allFinite()) {
      const Eigen::VectorXd gw = K * m.grad_loglik;
      const double psi_w = objective(m.grad_loglik, gw);
      if (psi_w > psi) {
        a = m.grad_loglik;
        g = gw;
        psi = psi_w;
      }
    }
    Eigen::VectorXd w(n), d1(n), sw(n);
    Eigen::LLT<Eigen::MatrixXd> llt;
    bool ok = true;
    for (int it = 0; it < o.newton_iters; ++it) {
      for (int i = 0; i < n; ++i) {
        const Lik l = probit(m.y(i), m.prior_mean(i) + g(i));
        w(i) = l.w;
        d1(i) = l.d1;
      }
      sw = w.array().sqrt();
      Eigen::MatrixXd B = sw.asDiagonal() * K * sw.asDiagonal();
      B.diagonal().array() += 1.0;
      llt.compute(B);
      if (llt.info() != Eigen::Success) {
        ok = false;
        break;
      }
      const Eigen::VectorXd b = w.cwiseProduct(g) + d1;
      const Eigen::VectorXd a_newton = b - sw.cwiseProduct(llt.solve(sw.cwiseProduct(K * b)));
      // Damped step if the objective does not increase.
      Eigen::VectorXd a_new = a_newton, g_new = K * a_new;
      double psi_new = objective(a_new, g_new);
      for (int k = 0; k < 20 && psi_new < psi - 1e-12; ++k) {
        a_new = 0.5 * (a + a_new);
        g_new = K * a_new;
        psi_new = objective(a_new, g_new);
      }
      const double change = (g_new - g).cwiseAbs().maxCoeff();
      a = a_new;
      g = g_new;
      psi = psi_new;
      if (change < o.newton_tol) break;
    }
    if (!ok) continue;

    for (int i = 0; i < n; ++i) {
      const Lik l = probit(m.y(i), m.prior_mean(i) + g(i));
      w(i) = l.w;
      d1(i) = l.d1;
    }
    sw = w.array().sqrt();
    Eigen::MatrixXd B = sw.asDiagonal() * K * sw.asDiagonal();
    B.diagonal().array() += 1.0;
    llt.compute(B);
    if (llt.info() != Eigen::Success) continue;
    m.jitter = jitter;
    m.f = m.prior_mean + g;
    m.chol = llt.matrixL();
    m.sqrt_w = sw;
    m.grad_loglik = d1;
    m.log_marginal = objective(a, g) - m.chol.diagonal().array().log().sum();
    if (!m.f.allFinite()) throw ConditioningError("GP classifier: latent values diverged");
    return;
  }
}

Eigen::VectorXd log_marginal_gradient(const GpcModule& m) {
  const int n = m.size();
  const int np = m.dim + 1;
  Eigen::MatrixXd K = m.kernel_matrix(m.X, m.X);
  Eigen::MatrixXd Kj = K;
  if (m.base_cov.rows() == n) Kj += m.base_cov;
  Kj.diagonal().array() += m.jitter;
  const Eigen::VectorXd& sw = m.sqrt_w;
  const auto L = m.chol.triangularView<Eigen::Lower>();

  // R = sW B^-1 sW
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(n, n);
  L.solveInPlace(R);
  L.transpose().solveInPlace(R);
  R = sw.asDiagonal() * R * sw.asDiagonal();
  Eigen::MatrixXd C = sw.asDiagonal() * Kj;
  L.solveInPlace(C);
  const Eigen::VectorXd post_var = Kj.diagonal() - C.colwise().squaredNorm().transpose();
  Eigen::VectorXd d3(n);
  for (int i = 0; i < n; ++i) d3(i) = probit(m.y(i), m.f(i)).d3;
  // Derivative of the log-determinant term through the mode: W = -d2 log p,
  // so dW/df = -d3 and the sign is positive.
  const Eigen::VectorXd s2 = 0.5 * post_var.cwiseProduct(d3);

  // a = K^-1 (f - m) = grad log p at the mode.
  const Eigen::VectorXd& a = m.grad_loglik;
  Eigen::VectorXd grad(np);
  const Eigen::RowVectorXd inv2 = (-2.0 * m.log_lengthscale).array().exp().matrix().transpose();
  for (int p = 0; p < np; ++p) {
    Eigen::MatrixXd dK(n, n);
    if (p < m.dim) {
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const double d = m.X(i, p) - m.X(j, p);
          dK(i, j) = K(i, j) * d * d * inv2(p);
        }
    } else {
      dK = 2.0 * K;
    }
    const double s1 = 0.5 * a.dot(dK * a) - 0.5 * (R.cwiseProduct(dK)).sum();
    const Eigen::VectorXd b = dK * m.grad_loglik;
    const Eigen::VectorXd s3 = b - Kj * (R * b);
    grad(p) = s1 + s2.dot(s3);
  }
  return grad;
}

GpcModule fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const FitOptions& o, const GpcModule* warm,
              const Eigen::VectorXd& prior_mean, const Eigen::MatrixXd& base_cov) {
  const int dim = static_cast<int>(X.cols());
  if (y.size() != X.rows()) throw DimensionError("fit: label count does not match input rows");
  if (prior_mean.size() != 0 && prior_mean.size() != X.rows())
    throw DimensionError("fit: prior mean size does not match input rows");
  if (base_cov.size() != 0 && (base_cov.rows() != X.rows() || base_cov.cols() != X.rows()))
    throw DimensionError("fit: base covariance size does not match input rows");
  if (warm && warm->dim != dim) throw DimensionError("fit: warm-start module has a different dimension");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y(i) != 0 && y(i) != 1) throw ValidationError("fit: labels must be 0 or 1");

  GpcModule m(dim);
  m.X = X;
  m.y = y;
  m.prior_mean = prior_mean.size() ? prior_mean : Eigen::VectorXd::Zero(X.rows());
  m.base_cov = base_cov;
  if (warm) {
    m.log_lengthscale = warm->log_lengthscale;
    m.log_signal = warm->log_signal;
  } else {
    m.log_lengthscale.setConstant(std::log(X.rows() >= 2 ? median_distance(X) : 1.0));
    m.log_signal = 0.0;
  }
  if (X.rows() < 2) {
    m.status = GpcModule::Status::Prior;
    return m;
  }
  const Eigen::Index positives = y.sum();
  const bool single = positives == 0 || positives == y.size();
  if (single || !o.optimize_hyper) {
    laplace(m, o);
    m.status = single ? GpcModule::Status::SingleClass : GpcModule::Status::Fitted;
    return m;
  }

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(params_of(m));
  if (!warm || o.restarts > 1) {
    const double base = std::log(median_distance(X));
    const double offsets[][2] = {{0.0, 0.0}, {-1.2, 0.7}, {1.2, 0.0}, {-2.3, 1.1}, {0.6, 1.6}, {-0.6, -0.7}};
    for (int r = 0; r < o.restarts; ++r) {
      Eigen::VectorXd p(dim + 1);
      p.head(dim).setConstant(base + offsets[r % 6][0]);
      p(dim) = offsets[r % 6][1];
      starts.push_back(clamp_params(p, dim));
    }
  }

  GpcModule best;
  double best_value = -std::numeric_limits<double>::infinity();
  const int per_start = starts.size() > 1 ? o.restart_iters : o.max_iters;
  for (const Eigen::VectorXd& p : starts) {
    GpcModule trial = m;
    set_params(trial, p);
    const double v = ascend(trial, o, per_start);
    if (v > best_value) {
      best_value = v;
      best = std::move(trial);
    }
  }
  if (!std::isfinite(best_value))
    throw ConditioningError("GP classifier: no hyperparameter start gave a positive definite system");
  if (starts.size() > 1 && o.max_iters > per_start) ascend(best, o, o.max_iters - per_start);
  best.status = GpcModule::Status::Fitted;
  return best;
}

double variance_penalized_prob(const Prediction& p, double beta) {
  return norm_cdf((p.mean - beta * p.stddev) / std::sqrt(1.0 + p.stddev * p.stddev));
}

MfModule fit_mf(const GpcModule& low, const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const FitOptions& o,
                const MfModule* warm) {
  MfModule out;
  out.delta = GpcModule(low.dim);
  if (X.rows() < kMinHighRecords) {
    out.fallback = true;
    out.delta.X = X;
    out.delta.y = y;
    return out;
  }
  out.fallback = false;
  Eigen::VectorXd base(X.rows());
  const auto lp = low.predict_batch(X);
  for (Eigen::Index i = 0; i < X.rows(); ++i) base(i) = lp[static_cast<std::size_t>(i)].mean;
  const Eigen::MatrixXd sigma = low.posterior_cov(X, X);

  // Grid search on rho at fixed delta hyperparameters.
  FitOptions fixed = o;
  fixed.optimize_hyper = false;
  const GpcModule* seed = warm && !warm->fallback ? &warm->delta : nullptr;
  GpcModule start(low.dim);
  if (!seed) {
    start.log_lengthscale = low.log_lengthscale;
    start.log_signal = low.log_signal - std::log(4.0);
    seed = &start;
  }
  double best_value = -std::numeric_limits<double>::infinity();
  double best_rho = 1.0;
  for (int k = -20; k <= 20; ++k) {
    const double rho = 0.1 * k;
    GpcModule d;
    try {
      d = fit(X, y, fixed, seed, rho * base, rho * rho * sigma);
    } catch (const ConditioningError&) {
      continue;
    }
    if (d.log_marginal > best_value + 1e-12) {
      best_value = d.log_marginal;
      best_rho = rho;
    }
  }
  out.rho = best_rho;
  out.delta = fit(X, y, o, seed, best_rho * base, best_rho * best_rho * sigma);
  return out;
}

Prediction predict_mf(const GpcModule& low, const MfModule& high, const Eigen::VectorXd& x) {
  if (x.size() != low.dim)
    throw DimensionError("predict: input has dimension " + std::to_string(x.size()) + ", module expects " +
                         std::to_string(low.dim));
  Eigen::MatrixXd row = x.transpose();
  return predict_mf_batch(low, high, row).front();
}

std::vector<Prediction> predict_mf_batch(const GpcModule& low, const MfModule& high, const Eigen::MatrixXd& Xs) {
  std::vector<Prediction> lp = low.predict_batch(Xs);
  if (high.fallback) return lp;
  const double rho = high.rho;
  Eigen::VectorXd means(Xs.rows()), var(Xs.rows());
  for (Eigen::Index k = 0; k < Xs.rows(); ++k) {
    const Prediction& p = lp[static_cast<std::size_t>(k)];
    means(k) = rho * p.mean;
    var(k) = rho * rho * p.stddev * p.stddev;
  }
  const Eigen::MatrixXd cross = rho * rho * low.posterior_cov(high.delta.X, Xs);
  return high.delta.predict_batch(Xs, means, cross, var);
}

}  // namespace swarmopt
