#include "medfx/data.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace medfx {

namespace {

std::string row_label(Eigen::Index row) { return "row " + std::to_string(row + 1); }

void check_increasing(const std::vector<int>& levels, std::size_t mediator) {
  if (levels.size() < 2) {
    throw DataError("mediator " + std::to_string(mediator + 1) + " needs at least two support levels");
  }
  for (std::size_t k = 1; k < levels.size(); ++k) {
    if (levels[k] <= levels[k - 1]) {
      throw DataError("support levels of mediator " + std::to_string(mediator + 1) +
                      " must be strictly increasing");
    }
  }
}

}  // namespace

ScaledOutcome scale_outcome(std::span<const double> raw, double y_min, double y_max) {
  if (!(y_min < y_max)) {
    throw DataError("outcome bounds require y_min < y_max");
  }
  ScaledOutcome out;
  out.scale = {y_min, y_max};
  out.values.resize(static_cast<Eigen::Index>(raw.size()));
  const double range = y_max - y_min;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double y = raw[i];
    if (!(y >= y_min && y <= y_max)) {
      std::ostringstream msg;
      msg << "outcome " << y << " at row " << i + 1 << " outside declared range [" << y_min << ", "
          << y_max << "]";
      throw DataError(msg.str());
    }
    out.values[static_cast<Eigen::Index>(i)] = (y - y_min) / range;
  }
  return out;
}

std::size_t MediatorSupport::num_cells() const {
  std::size_t cells = 1;
  for (const auto& l : levels) cells *= l.size();
  return cells;
}

std::string describe(const PositivityWarning& w) {
  std::ostringstream out;
  out << "mediator " << w.mediator << " level " << w.level << " never observed with treatment arm "
      << w.arm;
  return out.str();
}

std::span<const double> ObservationTable::covariate_row(std::size_t row,
                                                        std::vector<double>& buffer) const {
  buffer.resize(num_covariates());
  for (std::size_t j = 0; j < buffer.size(); ++j) {
    buffer[j] = covariates(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j));
  }
  return buffer;
}

bool ObservationTable::operator==(const ObservationTable& o) const {
  return covariates.rows() == o.covariates.rows() && covariates.cols() == o.covariates.cols() &&
         covariates == o.covariates && treatment == o.treatment &&
         mediators.rows() == o.mediators.rows() && mediators.cols() == o.mediators.cols() &&
         mediators == o.mediators && outcome.size() == o.outcome.size() && outcome == o.outcome &&
         outcome_scale == o.outcome_scale && support == o.support &&
         covariate_names == o.covariate_names && mediator_names == o.mediator_names &&
         warnings == o.warnings;
}

std::vector<int> bin_values(std::span<const double> raw, std::span<const double> edges) {
  if (edges.size() < 2) throw DataError("bin edges need at least two cut points");
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (!(edges[k] > edges[k - 1])) throw DataError("bin edges must be strictly increasing");
  }
  std::vector<int> bins(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = raw[i];
    if (!(v >= edges.front() && v <= edges.back())) {
      std::ostringstream msg;
      msg << "value " << v << " at row " << i + 1 << " not covered by bin edges";
      throw DataError(msg.str());
    }
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    auto bin = static_cast<int>(std::distance(edges.begin(), it)) - 1;
    bins[i] = std::min(bin, static_cast<int>(edges.size()) - 2);
  }
  return bins;
}

std::vector<PositivityWarning> positivity_screen(const ObservationTable& table) {
  std::vector<PositivityWarning> warnings;
  const std::size_t t = table.num_mediators();
  for (int arm = 0; arm <= 1; ++arm) {
    for (std::size_t j = 0; j < t; ++j) {
      std::vector<bool> seen(table.support.num_levels(j), false);
      for (std::size_t i = 0; i < table.size(); ++i) {
        if (table.treatment[i] == arm) seen[static_cast<std::size_t>(table.mediator_level(i, j))] = true;
      }
      for (std::size_t k = 0; k < seen.size(); ++k) {
        if (!seen[k]) warnings.push_back({arm, j + 1, table.support.levels[j][k]});
      }
    }
  }
  return warnings;
}

ObservationTable validate_dataset(const RawData& raw, const SupportSpec& spec) {
  const Eigen::Index n = raw.treatment.size();
  const Eigen::Index t = raw.mediators.cols();
  if (n < 1) throw DataError("dataset has no rows");
  if (raw.covariates.rows() != n || raw.mediators.rows() != n || raw.outcome.size() != n) {
    throw DataError("column lengths disagree");
  }
  if (t < 1) throw DataError("at least one mediator is required");

  for (Eigen::Index i = 0; i < n; ++i) {
    bool missing = std::isnan(raw.treatment[i]) || std::isnan(raw.outcome[i]);
    for (Eigen::Index j = 0; j < raw.covariates.cols(); ++j) missing |= std::isnan(raw.covariates(i, j));
    for (Eigen::Index j = 0; j < t; ++j) missing |= std::isnan(raw.mediators(i, j));
    if (missing) throw DataError("missing value in " + row_label(i));
    if (!std::isfinite(raw.outcome[i]) || !raw.covariates.row(i).allFinite()) {
      throw DataError("non-finite value in " + row_label(i));
    }
    if (raw.treatment[i] != 0.0 && raw.treatment[i] != 1.0) {
      throw DataError("treatment not binary in " + row_label(i));
    }
  }

  ObservationTable table;
  table.covariates = raw.covariates;
  table.covariate_names = raw.covariate_names;
  table.mediator_names = raw.mediator_names;
  if (table.covariate_names.empty()) {
    for (Eigen::Index j = 0; j < raw.covariates.cols(); ++j) table.covariate_names.push_back("c" + std::to_string(j + 1));
  }
  if (table.mediator_names.empty()) {
    for (Eigen::Index j = 0; j < t; ++j) table.mediator_names.push_back("m" + std::to_string(j + 1));
  }
  table.treatment.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) table.treatment[static_cast<std::size_t>(i)] = static_cast<int>(raw.treatment[i]);

  table.mediators.resize(n, t);
  table.support.levels.resize(static_cast<std::size_t>(t));
  table.support.bin_edges.resize(static_cast<std::size_t>(t));
  for (Eigen::Index j = 0; j < t; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    std::vector<double> column(raw.mediators.col(j).data(), raw.mediators.col(j).data() + n);
    const bool binned = ju < spec.bin_edges.size() && spec.bin_edges[ju].has_value();
    if (binned) {
      const auto& edges = *spec.bin_edges[ju];
      auto bins = bin_values(column, edges);
      std::vector<int> levels(edges.size() - 1);
      for (std::size_t k = 0; k < levels.size(); ++k) levels[k] = static_cast<int>(k);
      check_increasing(levels, ju);
      for (Eigen::Index i = 0; i < n; ++i) table.mediators(i, j) = bins[static_cast<std::size_t>(i)];
      table.support.levels[ju] = std::move(levels);
      table.support.bin_edges[ju] = edges;
      continue;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (column[static_cast<std::size_t>(i)] != std::round(column[static_cast<std::size_t>(i)])) {
        throw DataError("mediator " + std::to_string(j + 1) + " is not integer-valued in " + row_label(i) +
                        "; supply bin edges for continuous mediators");
      }
    }
    std::vector<int> levels;
    if (ju < spec.levels.size() && spec.levels[ju].has_value()) {
      levels = *spec.levels[ju];
    } else {
      std::set<int> observed;
      for (double v : column) observed.insert(static_cast<int>(v));
      levels.assign(observed.begin(), observed.end());
    }
    check_increasing(levels, ju);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int v = static_cast<int>(column[static_cast<std::size_t>(i)]);
      auto it = std::lower_bound(levels.begin(), levels.end(), v);
      if (it == levels.end() || *it != v) {
        throw DataError("mediator " + std::to_string(j + 1) + " value " + std::to_string(v) + " in " +
                        row_label(i) + " outside declared support");
      }
      table.mediators(i, j) = static_cast<int>(std::distance(levels.begin(), it));
    }
    table.support.levels[ju] = std::move(levels);
  }

  const double y_min = spec.y_min.value_or(raw.outcome.minCoeff());
  const double y_max = spec.y_max.value_or(raw.outcome.maxCoeff());
  auto scaled = scale_outcome(std::span<const double>(raw.outcome.data(), static_cast<std::size_t>(n)), y_min, y_max);
  table.outcome = std::move(scaled.values);
  table.outcome_scale = scaled.scale;
  table.warnings = positivity_screen(table);
  return table;
}

ObservationTable validate_dataset(const ObservationTable& table) {
  const auto n = static_cast<Eigen::Index>(table.size());
  const auto t = static_cast<Eigen::Index>(table.num_mediators());
  if (n < 1) throw DataError("dataset has no rows");
  if (table.covariates.rows() != n || table.mediators.rows() != n || table.mediators.cols() != t ||
      table.outcome.size() != n) {
    throw DataError("column lengths disagree");
  }
  if (!(table.outcome_scale.y_min < table.outcome_scale.y_max)) {
    throw DataError("outcome bounds require y_min < y_max");
  }
  for (std::size_t j = 0; j < table.num_mediators(); ++j) check_increasing(table.support.levels[j], j);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = table.treatment[static_cast<std::size_t>(i)];
    if (a != 0 && a != 1) throw DataError("treatment not binary in " + row_label(i));
    const double y = table.outcome[i];
    if (!(y >= 0.0 && y <= 1.0)) throw DataError("scaled outcome outside [0, 1] in " + row_label(i));
    if (!table.covariates.row(i).allFinite()) throw DataError("missing value in " + row_label(i));
    for (Eigen::Index j = 0; j < t; ++j) {
      const int level = table.mediators(i, j);
      if (level < 0 || static_cast<std::size_t>(level) >= table.support.num_levels(static_cast<std::size_t>(j))) {
        throw DataError("mediator level outside support in " + row_label(i));
      }
    }
  }
  ObservationTable out = table;
  out.warnings = positivity_screen(out);
  return out;
}

}  // namespace medfx
