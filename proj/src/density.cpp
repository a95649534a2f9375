#include "medfx/density.hpp"

#include <algorithm>
#include <numeric>

namespace medfx {

std::vector<std::size_t> cell_strides(const MediatorSupport& support) {
  const std::size_t t = support.num_mediators();
  std::vector<std::size_t> strides(t, 1);
  for (std::size_t j = t; j-- > 1;) strides[j - 1] = strides[j] * support.num_levels(j);
  return strides;
}

std::size_t cell_index(const MediatorSupport& support, std::span<const int> levels) {
  std::size_t index = 0;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    index = index * support.num_levels(j) + static_cast<std::size_t>(levels[j]);
  }
  return index;
}

std::size_t observed_cell(const ObservationTable& table, std::size_t row) {
  std::size_t index = 0;
  for (std::size_t j = 0; j < table.num_mediators(); ++j) {
    index = index * table.support.num_levels(j) + static_cast<std::size_t>(table.mediator_level(row, j));
  }
  return index;
}

LongFormTable expand_long_form(const ObservationTable& table, std::size_t mediator,
                               std::vector<std::size_t> conditioning) {
  if (mediator >= table.num_mediators()) throw DataError("mediator index out of range");
  LongFormTable out;
  out.mediator = mediator;
  out.conditioning = std::move(conditioning);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const int level = table.mediator_level(i, mediator);
    for (int b = 0; b <= level; ++b) {
      out.parent_row.push_back(i);
      out.bin.push_back(b);
      out.event.push_back(b == level ? 1 : 0);
    }
  }
  return out;
}

LongFormTable expand_long_form(const ObservationTable& table, LongFormKind which) {
  if (table.num_mediators() != 2) throw DataError("M2 / M1-given-M2 long forms need exactly two mediators");
  return which == LongFormKind::m2 ? expand_long_form(table, 1) : expand_long_form(table, 0, {1});
}

Eigen::RowVectorXd HazardModel::feature_row(int bin, int arm, std::span<const double> c,
                                            std::span<const int> conditioning_levels) const {
  const std::size_t p = num_covariates_;
  if (features_ == HazardFeatures::main_terms) {
    const std::size_t dummies = num_levels_ > 2 ? num_levels_ - 2 : 0;
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(dummies + p + 1 + conditioning_values_.size()));
    if (bin >= 1) row[bin - 1] = 1.0;
    for (std::size_t j = 0; j < p; ++j) row[static_cast<Eigen::Index>(dummies + j)] = c[j];
    row[static_cast<Eigen::Index>(dummies + p)] = arm;
    for (std::size_t k = 0; k < conditioning_values_.size(); ++k) {
      row[static_cast<Eigen::Index>(dummies + p + 1 + k)] =
          conditioning_values_[k][static_cast<std::size_t>(conditioning_levels[k])];
    }
    return row;
  }
  std::size_t cells = (num_levels_ - 1) * 2;
  std::size_t cell = static_cast<std::size_t>(bin) * 2 + static_cast<std::size_t>(arm);
  for (std::size_t k = 0; k < conditioning_values_.size(); ++k) {
    cells *= conditioning_values_[k].size();
    cell = cell * conditioning_values_[k].size() + static_cast<std::size_t>(conditioning_levels[k]);
  }
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(cells - 1 + p));
  if (cell >= 1) row[static_cast<Eigen::Index>(cell - 1)] = 1.0;
  for (std::size_t j = 0; j < p; ++j) row[static_cast<Eigen::Index>(cells - 1 + j)] = c[j];
  return row;
}

std::vector<double> HazardModel::hazards(int arm, std::span<const double> c,
                                         std::span<const int> conditioning_levels) const {
  std::vector<double> out(num_levels_, 1.0);
  if (num_levels_ < 2) return out;
  if (!learner_) {
    // No subject ever sat below the top level: all mass on the top bin.
    std::fill(out.begin(), out.end() - 1, floor_);
    return out;
  }
  const auto bins = static_cast<Eigen::Index>(num_levels_ - 1);
  Eigen::MatrixXd rows(bins, feature_row(0, arm, c, conditioning_levels).size());
  for (Eigen::Index b = 0; b < bins; ++b) rows.row(b) = feature_row(static_cast<int>(b), arm, c, conditioning_levels);
  Eigen::VectorXd lambda = learner_->predict(rows);
  for (Eigen::Index b = 0; b < bins; ++b) out[static_cast<std::size_t>(b)] = std::clamp(lambda[b], floor_, 1.0 - floor_);
  return out;
}

HazardModel fit_hazards(const LongFormTable& long_form, const ObservationTable& table, const LearnerSpec& spec,
                        HazardFeatures features) {
  spec.validate();
  HazardModel model;
  model.features_ = features;
  model.num_levels_ = table.support.num_levels(long_form.mediator);
  model.num_covariates_ = table.num_covariates();
  model.floor_ = spec.prediction_floor;
  for (std::size_t k : long_form.conditioning) model.conditioning_values_.push_back(table.support.levels[k]);

  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < long_form.size(); ++r) {
    if (static_cast<std::size_t>(long_form.bin[r]) + 1 < model.num_levels_) keep.push_back(r);
  }
  if (keep.empty() || model.num_levels_ < 2) return model;

  std::vector<double> c(table.num_covariates());
  std::vector<int> cond(long_form.conditioning.size());
  const auto width = model.feature_row(0, 0, std::span<const double>(c), cond).size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(keep.size()), width);
  Eigen::VectorXd y(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const std::size_t row = long_form.parent_row[keep[r]];
    table.covariate_row(row, c);
    for (std::size_t k = 0; k < cond.size(); ++k) cond[k] = table.mediator_level(row, long_form.conditioning[k]);
    x.row(static_cast<Eigen::Index>(r)) = model.feature_row(long_form.bin[keep[r]], table.treatment[row], c, cond);
    y[static_cast<Eigen::Index>(r)] = long_form.event[keep[r]];
  }
  model.learner_ = fit_learner(spec, x, y, Eigen::VectorXd::Ones(y.size()));
  model.diagnostics_ = model.learner_->diagnostics();
  return model;
}

std::vector<double> density_from_hazards(std::span<const double> hazards) {
  std::vector<double> q(hazards.size());
  double survival = 1.0;
  for (std::size_t m = 0; m < hazards.size(); ++m) {
    q[m] = hazards[m] * survival;
    survival *= 1.0 - hazards[m];
  }
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  if (!(total > 0.0)) throw DataError("hazards imply zero total mass");
  for (double& v : q) v /= total;
  return q;
}

void floor_and_renormalize(std::vector<double>& p, double floor) {
  if (p.empty()) return;
  if (floor * static_cast<double>(p.size()) >= 1.0) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
    return;
  }
  std::vector<bool> pinned(p.size(), false);
  for (;;) {
    double free_mass = 0.0;
    std::size_t n_pinned = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (!pinned[k] && p[k] < floor) pinned[k] = true;
      if (pinned[k]) {
        ++n_pinned;
      } else {
        free_mass += p[k];
      }
    }
    const double target = 1.0 - floor * static_cast<double>(n_pinned);
    const double scale = free_mass > 0.0 ? target / free_mass : 0.0;
    bool changed = false;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (pinned[k]) {
        p[k] = floor;
      } else {
        p[k] *= scale;
        if (p[k] < floor) changed = true;
      }
    }
    if (!changed) return;
  }
}

std::vector<std::vector<double>> marginals_of(const MediatorSupport& support, std::span<const double> joint) {
  const std::size_t t = support.num_mediators();
  const auto strides = cell_strides(support);
  std::vector<std::vector<double>> out(t);
  for (std::size_t j = 0; j < t; ++j) out[j].assign(support.num_levels(j), 0.0);
  for (std::size_t cell = 0; cell < joint.size(); ++cell) {
    for (std::size_t j = 0; j < t; ++j) out[j][(cell / strides[j]) % support.num_levels(j)] += joint[cell];
  }
  return out;
}

MediatorDensityModel fit_mediator_density(const ObservationTable& table, const LearnerSpec& spec,
                                          const DensityOptions& options) {
  if (table.support.num_cells() > options.cell_cap) {
    throw DataError("joint mediator support has " + std::to_string(table.support.num_cells()) +
                    " cells, above the cap of " + std::to_string(options.cell_cap) + "; use coarser bins");
  }
  MediatorDensityModel model;
  model.support_ = table.support;
  model.floor_ = options.floor;
  const std::size_t t = table.num_mediators();
  model.hazards_.resize(t);
  for (std::size_t j = 0; j < t; ++j) {
    std::vector<std::size_t> conditioning;
    for (std::size_t k = j + 1; k < t; ++k) conditioning.push_back(k);
    model.hazards_[j] = fit_hazards(expand_long_form(table, j, conditioning), table, spec, options.features);
  }
  return model;
}

MediatorLaw MediatorDensityModel::law(int arm, std::span<const double> c) const {
  const std::size_t t = support_.num_mediators();
  const auto strides = cell_strides(support_);
  MediatorLaw out;
  out.joint.assign(support_.num_cells(), 0.0);

  // Walk the chain from the last mediator down, carrying the partial product.
  std::vector<int> levels(t, 0);
  auto recurse = [&](auto&& self, std::size_t j, double mass, std::size_t offset) -> void {
    std::span<const int> cond(levels.data() + j + 1, t - j - 1);
    const auto q = density_from_hazards(hazards_[j].hazards(arm, c, cond));
    for (std::size_t k = 0; k < q.size(); ++k) {
      levels[j] = static_cast<int>(k);
      const double m = mass * q[k];
      const std::size_t cell = offset + k * strides[j];
      if (j == 0) {
        out.joint[cell] = m;
      } else {
        self(self, j - 1, m, cell);
      }
    }
  };
  recurse(recurse, t - 1, 1.0, 0);
  floor_and_renormalize(out.joint, floor_);
  out.marginals = marginals_of(support_, out.joint);
  return out;
}

std::vector<std::string> MediatorDensityModel::diagnostics() const {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < hazards_.size(); ++j) {
    for (const auto& d : hazards_[j].diagnostics()) out.push_back("hazard M" + std::to_string(j + 1) + ": " + d);
  }
  return out;
}

MediatorLaw build_joint_and_marginals(const MediatorDensityModel& model, int arm, std::span<const double> c) {
  return model.law(arm, c);
}

}  // namespace medfx
