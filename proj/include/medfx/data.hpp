#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace medfx {

/// Raised for malformed or contract-violating input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Affine map applied to the outcome: y_scaled = (y - y_min) / (y_max - y_min).
struct OutcomeScale {
  double y_min = 0.0;
  double y_max = 1.0;

  double range() const { return y_max - y_min; }
  /// Additive effects (and their standard errors) are linear in Y.
  double unscale_effect(double scaled) const { return scaled * range(); }
  double unscale_mean(double scaled) const { return y_min + scaled * range(); }

  bool operator==(const OutcomeScale&) const = default;
};

struct ScaledOutcome {
  Eigen::VectorXd values;
  OutcomeScale scale;
};

ScaledOutcome scale_outcome(std::span<const double> raw, double y_min, double y_max);

/// Finite support of every mediator. Level values are strictly increasing integers;
/// bin_edges is present for mediators that were discretized from continuous values.
struct MediatorSupport {
  std::vector<std::vector<int>> levels;
  std::vector<std::optional<std::vector<double>>> bin_edges;

  std::size_t num_mediators() const { return levels.size(); }
  std::size_t num_levels(std::size_t mediator) const { return levels[mediator].size(); }
  /// Number of cells of the joint support.
  std::size_t num_cells() const;

  bool operator==(const MediatorSupport&) const = default;
};

/// A mediator level that never occurs in one treatment arm.
struct PositivityWarning {
  int arm;            // 0 or 1
  std::size_t mediator;  // 1-based, as reported
  int level;          // support level value

  bool operator==(const PositivityWarning&) const = default;
};

std::string describe(const PositivityWarning& warning);

/// Validated observations O = (C, A, M_1..M_t, Y).
///
/// Mediators are stored as 0-based indices into the support levels; the
/// outcome is already mapped onto [0, 1].
struct ObservationTable {
  Eigen::MatrixXd covariates;  // n x p
  std::vector<int> treatment;  // 0 = a*, 1 = a
  Eigen::MatrixXi mediators;   // n x t level indices
  Eigen::VectorXd outcome;     // scaled into [0, 1]
  OutcomeScale outcome_scale;
  MediatorSupport support;
  std::vector<std::string> covariate_names;
  std::vector<std::string> mediator_names;
  std::vector<PositivityWarning> warnings;

  std::size_t size() const { return treatment.size(); }
  std::size_t num_covariates() const { return static_cast<std::size_t>(covariates.cols()); }
  std::size_t num_mediators() const { return support.num_mediators(); }

  int mediator_level(std::size_t row, std::size_t mediator) const {
    return mediators(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(mediator));
  }
  double mediator_value(std::size_t row, std::size_t mediator) const {
    return support.levels[mediator][static_cast<std::size_t>(mediator_level(row, mediator))];
  }
  std::span<const double> covariate_row(std::size_t row, std::vector<double>& buffer) const;

  bool operator==(const ObservationTable& other) const;
};

/// Parsed but unvalidated columns. NaN marks a missing cell.
struct RawData {
  Eigen::MatrixXd covariates;  // n x p
  Eigen::VectorXd treatment;   // codes, must be 0/1
  Eigen::MatrixXd mediators;   // n x t raw values
  Eigen::VectorXd outcome;
  std::vector<std::string> covariate_names;
  std::vector<std::string> mediator_names;
};

/// Declared support per mediator. Any entry left empty is inferred from the data.
struct SupportSpec {
  std::vector<std::optional<std::vector<int>>> levels;
  std::vector<std::optional<std::vector<double>>> bin_edges;
  std::optional<double> y_min;
  std::optional<double> y_max;
};

/// Maps raw values into bins [e_k, e_{k+1}); the last bin is closed on the right.
/// Returns bin indices; throws if a value lies outside the edges.
std::vector<int> bin_values(std::span<const double> raw, std::span<const double> edges);

ObservationTable validate_dataset(const RawData& raw, const SupportSpec& spec);

/// Re-checks every invariant of an existing table; the result compares equal to the input.
ObservationTable validate_dataset(const ObservationTable& table);

std::vector<PositivityWarning> positivity_screen(const ObservationTable& table);

}  // namespace medfx
