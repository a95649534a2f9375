#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace medfx {

class LearnerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Convergence {
  int iterations = 0;
  double gradient_norm = 0.0;  // max_j |sum_i w_i x_ij (y_i - mu_i)| / sum_i w_i
  bool converged = false;
};

/// Weighted logistic quasi-likelihood fit. coefficients[0] is the intercept when has_intercept.
struct LogisticFit {
  Eigen::VectorXd coefficients;
  bool has_intercept = true;
  bool offset_used = false;
  bool ridge_used = false;
  Convergence convergence;
  std::vector<std::string> feature_names;
  // Feature columns that entered the fit. Dropped columns (constant, or all zero
  // without an intercept) get coefficient 0 in the returned vector.
  std::vector<bool> active;
  // Weighted quasi-log-likelihood after each accepted iteration.
  std::vector<double> loglik_trace;

  std::size_t num_features() const { return active.size(); }
};

/// A fitted regression for a [0,1] outcome.
class FittedLearner {
 public:
  virtual ~FittedLearner() = default;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& features) const = 0;
  virtual std::string describe() const = 0;
  /// Flags worth reporting (nonconvergence, ridge); empty when clean.
  virtual std::vector<std::string> diagnostics() const { return {}; }
};

/// User supplied learner behind the same fit/predict contract as the built-in ones.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::unique_ptr<FittedLearner> fit(const Eigen::MatrixXd& features,
                                             const Eigen::VectorXd& outcomes,
                                             const Eigen::VectorXd& weights) const = 0;
};

struct LearnerSpec {
  enum class Kind { intercept_only, main_terms_logistic, user_plugin };

  Kind kind = Kind::main_terms_logistic;
  int max_iterations = 100;
  double tolerance = 1e-10;
  double prediction_floor = 1e-3;
  std::shared_ptr<const Learner> plugin;

  void validate() const;
};

std::string to_string(LearnerSpec::Kind kind);
LearnerSpec::Kind parse_learner_kind(const std::string& name);

struct FitOptions {
  bool intercept = true;
  bool drop_constant_columns = true;
  std::vector<std::string> feature_names;
};

/// IRLS with step-halving on sum_i w_i [y_i log mu_i + (1 - y_i) log(1 - mu_i)],
/// mu = expit(offset + X beta). Outcomes may be fractional. A singular weighted
/// design (or a non-converging, separated one) is refit with a 1e-8 ||beta||^2 ridge.
LogisticFit fit_weighted_logistic(const Eigen::MatrixXd& features, const Eigen::VectorXd& outcomes,
                                  const Eigen::VectorXd& weights, const Eigen::VectorXd* offset,
                                  const LearnerSpec& spec, const FitOptions& options = {});

/// Linear predictor offset + X beta.
Eigen::VectorXd linear_predictor(const LogisticFit& fit, const Eigen::MatrixXd& features,
                                 const Eigen::VectorXd* offset = nullptr);

/// expit(offset + X beta), clamped into [floor, 1 - floor] when a floor is given.
Eigen::VectorXd predict(const LogisticFit& fit, const Eigen::MatrixXd& features,
                        const Eigen::VectorXd* offset = nullptr,
                        std::optional<double> floor = std::nullopt);

/// Weighted quasi-log-likelihood of beta (no ridge term).
double quasi_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcomes,
                    const Eigen::VectorXd& weights, const Eigen::VectorXd& offset,
                    const Eigen::VectorXd& beta);

/// Fits spec's learner (no offset) and wraps it for prediction on [0,1].
std::shared_ptr<const FittedLearner> fit_learner(const LearnerSpec& spec, const Eigen::MatrixXd& features,
                                                 const Eigen::VectorXd& outcomes,
                                                 const Eigen::VectorXd& weights,
                                                 std::vector<std::string> feature_names = {});

}  // namespace medfx
