#include "medfx/logistic.hpp"

#include "medfx/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace medfx {

namespace {

constexpr double kRidge = 1e-8;

struct IrlsResult {
  Eigen::VectorXd beta;
  Convergence convergence;
  std::vector<double> trace;
  bool singular = false;
};

double penalized(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                 const Eigen::VectorXd& offset, const Eigen::VectorXd& beta, double ridge) {
  return quasi_loglik(design, y, w, offset, beta) - ridge * beta.squaredNorm();
}

IrlsResult irls(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                const Eigen::VectorXd& offset, int max_iterations, double tolerance, double ridge) {
  const Eigen::Index k = design.cols();
  const double total_weight = w.sum();
  IrlsResult out;
  out.beta = Eigen::VectorXd::Zero(k);
  if (k == 0) {
    out.convergence = {0, 0.0, true};
    return out;
  }
  double ll = penalized(design, y, w, offset, out.beta, ridge);
  out.trace.push_back(ll);

  for (int it = 0;; ++it) {
    Eigen::VectorXd eta = offset + design * out.beta;
    Eigen::VectorXd mu = eta.unaryExpr([](double e) { return expit(e); });
    Eigen::VectorXd grad = design.transpose() * (w.array() * (y - mu).array()).matrix() - 2.0 * ridge * out.beta;
    const double gnorm = grad.cwiseAbs().maxCoeff() / total_weight;
    out.convergence.iterations = it;
    out.convergence.gradient_norm = gnorm;
    if (gnorm <= tolerance) {
      out.convergence.converged = true;
      return out;
    }
    if (it >= max_iterations) return out;

    Eigen::VectorXd irls_w = (w.array() * mu.array() * (1.0 - mu.array())).matrix();
    Eigen::MatrixXd hessian = design.transpose() * irls_w.asDiagonal() * design;
    hessian.diagonal().array() += 2.0 * ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14)) {
      out.singular = true;
      return out;
    }
    Eigen::VectorXd step = ldlt.solve(grad);
    if (!step.allFinite()) {
      out.singular = true;
      return out;
    }

    double t = 1.0;
    Eigen::VectorXd candidate = out.beta + step;
    double ll_new = penalized(design, y, w, offset, candidate, ridge);
    int halvings = 0;
    while (!(ll_new >= ll - 1e-14 * (1.0 + std::abs(ll))) && halvings < 40) {
      t *= 0.5;
      candidate = out.beta + t * step;
      ll_new = penalized(design, y, w, offset, candidate, ridge);
      ++halvings;
    }
    if (!(ll_new >= ll - 1e-14 * (1.0 + std::abs(ll)))) return out;  // no ascent possible
    const double moved = (candidate - out.beta).cwiseAbs().maxCoeff();
    out.beta = candidate;
    ll = ll_new;
    out.trace.push_back(ll);
    if (moved == 0.0) return out;
  }
}

void check_inputs(const Eigen::MatrixXd& features, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                  const Eigen::VectorXd* offset) {
  const Eigen::Index n = y.size();
  if (n < 1) throw LearnerError("logistic fit needs at least one row");
  if (features.rows() != n || w.size() != n || (offset && offset->size() != n)) {
    throw LearnerError("logistic fit inputs have inconsistent lengths");
  }
  if (!features.allFinite() || !y.allFinite() || !w.allFinite() || (offset && !offset->allFinite())) {
    throw LearnerError("NaN or infinite value in logistic fit inputs");
  }
  if ((y.array() < 0.0).any() || (y.array() > 1.0).any()) {
    throw LearnerError("logistic fit outcomes must lie in [0, 1]");
  }
  if ((w.array() < 0.0).any()) throw LearnerError("logistic fit weights must be nonnegative");
  if (!(w.sum() > 0.0)) throw LearnerError("logistic fit weights are all zero");
}

class LogisticLearnerFit final : public FittedLearner {
 public:
  explicit LogisticLearnerFit(LogisticFit fit) : fit_(std::move(fit)) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const override {
    return medfx::predict(fit_, features);
  }

  std::string describe() const override {
    std::ostringstream out;
    out << (fit_.active.empty() ? "intercept-only" : "logistic")
        << " iterations=" << fit_.convergence.iterations << " gradient=" << fit_.convergence.gradient_norm;
    return out.str();
  }

  std::vector<std::string> diagnostics() const override {
    std::vector<std::string> flags;
    if (!fit_.convergence.converged) flags.emplace_back("nonconvergence");
    if (fit_.ridge_used) flags.emplace_back("ridge");
    return flags;
  }

 private:
  LogisticFit fit_;
};

}  // namespace

void LearnerSpec::validate() const {
  if (!(prediction_floor > 0.0 && prediction_floor < 0.5)) {
    throw LearnerError("prediction_floor must lie in (0, 0.5)");
  }
  if (!(tolerance > 0.0)) throw LearnerError("tolerance must be positive");
  if (max_iterations < 1) throw LearnerError("max_iterations must be at least 1");
  if (kind == Kind::user_plugin && !plugin) throw LearnerError("user_plugin learner has no plugin attached");
}

std::string to_string(LearnerSpec::Kind kind) {
  switch (kind) {
    case LearnerSpec::Kind::intercept_only: return "intercept_only";
    case LearnerSpec::Kind::main_terms_logistic: return "main_terms_logistic";
    case LearnerSpec::Kind::user_plugin: return "user_plugin";
  }
  return "unknown";
}

LearnerSpec::Kind parse_learner_kind(const std::string& name) {
  if (name == "intercept_only") return LearnerSpec::Kind::intercept_only;
  if (name == "main_terms_logistic" || name == "main_terms") return LearnerSpec::Kind::main_terms_logistic;
  if (name == "user_plugin") return LearnerSpec::Kind::user_plugin;
  throw LearnerError("unknown learner kind '" + name + "'");
}

double quasi_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                    const Eigen::VectorXd& offset, const Eigen::VectorXd& beta) {
  Eigen::VectorXd eta = offset;
  if (beta.size() > 0) eta += design * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (w[i] == 0.0) continue;
    ll += w[i] * (y[i] * eta[i] - softplus(eta[i]));
  }
  return ll;
}

LogisticFit fit_weighted_logistic(const Eigen::MatrixXd& features, const Eigen::VectorXd& outcomes,
                                  const Eigen::VectorXd& weights, const Eigen::VectorXd* offset,
                                  const LearnerSpec& spec, const FitOptions& options) {
  spec.validate();
  check_inputs(features, outcomes, weights, offset);
  const Eigen::Index n = outcomes.size();
  const bool intercept_only = spec.kind == LearnerSpec::Kind::intercept_only;
  const Eigen::Index p = intercept_only ? 0 : features.cols();

  LogisticFit fit;
  fit.has_intercept = options.intercept || intercept_only;
  fit.offset_used = offset != nullptr;
  fit.feature_names = options.feature_names;
  fit.active.assign(static_cast<std::size_t>(p), true);

  if (options.drop_constant_columns) {
    for (Eigen::Index j = 0; j < p; ++j) {
      double first = 0.0;
      bool seen = false, constant = true, all_zero = true;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (weights[i] == 0.0) continue;
        const double v = features(i, j);
        if (v != 0.0) all_zero = false;
        if (!seen) {
          first = v;
          seen = true;
        } else if (v != first) {
          constant = false;
        }
      }
      if (fit.has_intercept ? constant : all_zero) fit.active[static_cast<std::size_t>(j)] = false;
    }
  }

  std::vector<Eigen::Index> columns;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (fit.active[static_cast<std::size_t>(j)]) columns.push_back(j);
  }
  const Eigen::Index lead = fit.has_intercept ? 1 : 0;
  Eigen::MatrixXd design(n, lead + static_cast<Eigen::Index>(columns.size()));
  if (lead) design.col(0).setOnes();
  for (std::size_t k = 0; k < columns.size(); ++k) design.col(lead + static_cast<Eigen::Index>(k)) = features.col(columns[k]);

  const Eigen::VectorXd off = offset ? *offset : Eigen::VectorXd::Zero(n);
  IrlsResult result = irls(design, outcomes, weights, off, spec.max_iterations, spec.tolerance, 0.0);
  if (result.singular || !result.convergence.converged) {
    IrlsResult ridged = irls(design, outcomes, weights, off, spec.max_iterations, spec.tolerance, kRidge);
    if (!ridged.singular && (ridged.convergence.converged || result.singular)) {
      result = std::move(ridged);
      fit.ridge_used = true;
    }
  }
  if (!result.beta.allFinite()) throw LearnerError("logistic fit produced non-finite coefficients");

  fit.convergence = result.convergence;
  fit.loglik_trace = std::move(result.trace);
  fit.coefficients = Eigen::VectorXd::Zero(lead + p);
  if (lead) fit.coefficients[0] = result.beta[0];
  for (std::size_t k = 0; k < columns.size(); ++k) {
    fit.coefficients[lead + columns[k]] = result.beta[lead + static_cast<Eigen::Index>(k)];
  }
  return fit;
}

Eigen::VectorXd linear_predictor(const LogisticFit& fit, const Eigen::MatrixXd& features,
                                 const Eigen::VectorXd* offset) {
  const Eigen::Index lead = fit.has_intercept ? 1 : 0;
  const auto p = static_cast<Eigen::Index>(fit.num_features());
  if (p > 0 && features.cols() != p) {
    throw LearnerError("feature width " + std::to_string(features.cols()) + " does not match fit width " +
                       std::to_string(p));
  }
  const Eigen::Index n = features.rows();
  if (offset && offset->size() != n) throw LearnerError("offset length does not match features");
  Eigen::VectorXd eta = offset ? *offset : Eigen::VectorXd::Zero(n);
  if (lead) eta.array() += fit.coefficients[0];
  if (p > 0) eta += features * fit.coefficients.tail(p);
  return eta;
}

Eigen::VectorXd predict(const LogisticFit& fit, const Eigen::MatrixXd& features, const Eigen::VectorXd* offset,
                        std::optional<double> floor) {
  Eigen::VectorXd mu = linear_predictor(fit, features, offset).unaryExpr([](double e) { return expit(e); });
  if (floor) {
    const double f = *floor;
    mu = mu.cwiseMax(f).cwiseMin(1.0 - f);
  }
  return mu;
}

std::shared_ptr<const FittedLearner> fit_learner(const LearnerSpec& spec, const Eigen::MatrixXd& features,
                                                 const Eigen::VectorXd& outcomes, const Eigen::VectorXd& weights,
                                                 std::vector<std::string> feature_names) {
  spec.validate();
  if (spec.kind == LearnerSpec::Kind::user_plugin) {
    check_inputs(features, outcomes, weights, nullptr);
    return spec.plugin->fit(features, outcomes, weights);
  }
  FitOptions options;
  options.feature_names = std::move(feature_names);
  auto fit = fit_weighted_logistic(features, outcomes, weights, nullptr, spec, options);
  return std::make_shared<LogisticLearnerFit>(std::move(fit));
}

}  // namespace medfx
