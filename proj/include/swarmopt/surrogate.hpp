#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace swarmopt {

/// Latent mean/stddev and class probability P(y = 1).
struct Prediction {
  double mean = 0.0;
  double stddev = 1.0;
  double prob = 0.5;
};

/// Probit Gaussian process classifier with a squared-exponential ARD kernel
/// and a Laplace approximation of the latent posterior.
///
/// The latent function may carry a fixed prior mean (used by the
/// high-fidelity correction of the autoregressive model); `prior_mean` holds
/// its values at the training inputs.
struct GpcModule {
  enum class Status { Prior, SingleClass, Fitted };

  int dim = 0;
  Status status = Status::Prior;
  Eigen::MatrixXd X;          // n x dim
  Eigen::VectorXi y;          // 0/1
  Eigen::VectorXd prior_mean; // n
  Eigen::MatrixXd base_cov;   // n x n, added to the kernel; empty when unused
  Eigen::VectorXd f;          // posterior mode of the latent values
  Eigen::VectorXd log_lengthscale;
  double log_signal = 0.0;    // log of the signal standard deviation
  double jitter = 1e-6;
  double log_marginal = 0.0;

  // Factorization at the mode, used for prediction.
  Eigen::MatrixXd chol;       // lower Cholesky factor of I + sW K sW
  Eigen::VectorXd sqrt_w;
  Eigen::VectorXd grad_loglik;

  GpcModule() = default;
  explicit GpcModule(int dimension);

  int size() const { return static_cast<int>(y.size()); }
  bool informative() const { return status != Status::Prior; }

  double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const;

  /// Latent prediction at x with latent prior mean `mean_at_x` there.
  Prediction predict(const Eigen::VectorXd& x, double mean_at_x = 0.0) const;

  /// Row-wise predictions; `means` may be empty (zero prior mean).
  /// `base_cross` (n x rows) and `base_var` extend the kernel the same way
  /// `base_cov` does at the training inputs.
  std::vector<Prediction> predict_batch(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& means = {},
                                        const Eigen::MatrixXd& base_cross = {},
                                        const Eigen::VectorXd& base_var = {}) const;

  /// Whether prob >= threshold for each row, as predict_batch would decide.
  /// The variance is only computed for rows the mean alone cannot settle.
  std::vector<char> accepts(const Eigen::MatrixXd& Xs, double threshold) const;

  /// Posterior covariance of the latent function between rows of A and B.
  Eigen::MatrixXd posterior_cov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const;
  Eigen::VectorXd posterior_var(const Eigen::MatrixXd& A) const;

  /// Hash of every stored field; equal modules hash equally.
  std::uint64_t state_hash() const;
};

struct FitOptions {
  bool optimize_hyper = true;
  int restarts = 5;          // starting points of the hyperparameter search
  int max_iters = 30;        // quasi-Newton iterations from the best start
  int restart_iters = 5;     // iterations spent on each starting point
  int newton_iters = 100;
  double newton_tol = 1e-6;
  double max_jitter = 1e-2;
};

/// Fits the module to (X, y). With fewer than 2 records the module is
/// prior-only; with a single class present the default hyperparameters are
/// kept and the status is SingleClass. `warm`, if given, supplies the
/// hyperparameters to start from (and restarts are skipped when
/// options.restarts <= 1).
GpcModule fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const FitOptions& options = {},
              const GpcModule* warm = nullptr, const Eigen::VectorXd& prior_mean = {},
              const Eigen::MatrixXd& base_cov = {});

/// Laplace approximation at fixed hyperparameters; fills f, the factorization
/// and log_marginal. Throws ConditioningError when jitter escalation fails.
void laplace(GpcModule& module, const FitOptions& options = {});

/// Gradient of log_marginal with respect to (log_lengthscale, log_signal),
/// evaluated at the module's current mode.
Eigen::VectorXd log_marginal_gradient(const GpcModule& module);

/// Phi((mu - beta sigma) / sqrt(1 + sigma^2)).
double variance_penalized_prob(const Prediction& p, double beta);

/// Two-level autoregressive model f_high(x) = rho f_low(x) + delta(x).
struct MfModule {
  double rho = 1.0;
  GpcModule delta;
  bool fallback = true;  // fewer than min_records high-fidelity records
};

inline constexpr int kMinHighRecords = 4;

/// Fits rho on the grid [-2, 2] (step 0.1) by the Laplace marginal likelihood
/// of the high-fidelity latent, whose prior is the low-fidelity posterior
/// scaled by rho (mean rho mu_L, covariance rho^2 Sigma_L) plus the
/// independent GP delta.
MfModule fit_mf(const GpcModule& low, const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                const FitOptions& options = {}, const MfModule* warm = nullptr);

/// High-fidelity prediction; exactly the low-fidelity prediction in fallback.
Prediction predict_mf(const GpcModule& low, const MfModule& high, const Eigen::VectorXd& x);

std::vector<Prediction> predict_mf_batch(const GpcModule& low, const MfModule& high, const Eigen::MatrixXd& Xs);

}  // namespace swarmopt
