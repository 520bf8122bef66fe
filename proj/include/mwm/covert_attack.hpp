#pragma once

// Matched covert attacker: free actuator injection phi_u, and a sensor
// correction phi_y = -y_a produced by the attacker's copy of the H-P-W
// cascade built from stale watermark parameters.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mwm/lti.hpp"
#include "mwm/watermark.hpp"

namespace mwm {

class BudgetExceededError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Actuator injection sequence. Steps are counted from the start of the
/// simulation; the signal is zero before `onset`.
struct AttackSignal {
  enum class Kind { zero, square, custom };

  Kind kind = Kind::zero;
  double amplitude = 0.0;
  int period = 2;
  /// Rows are time steps (relative to onset), columns are channels.
  Matrix samples;
  int onset = 0;
  Eigen::Index channels = 1;

  static AttackSignal zero(Eigen::Index channels = 1) {
    AttackSignal s;
    s.channels = channels;
    return s;
  }

  /// `amplitude` on every channel when (k - onset) mod period == 0, else 0.
  static AttackSignal square(double amplitude, int period, Eigen::Index channels = 1) {
    if (period < 1) throw DomainError("square attack period must be >= 1");
    if (!std::isfinite(amplitude)) throw NumericalError("square attack amplitude is not finite");
    AttackSignal s;
    s.kind = Kind::square;
    s.amplitude = amplitude;
    s.period = period;
    s.channels = channels;
    return s;
  }

  static AttackSignal custom(Matrix samples) {
    if (!samples.allFinite()) throw NumericalError("attack samples contain non-finite entries");
    AttackSignal s;
    s.kind = Kind::custom;
    s.channels = samples.cols();
    s.samples = std::move(samples);
    return s;
  }

  AttackSignal with_onset(int step) const {
    if (step < 0) throw DomainError("attack onset must be >= 0");
    AttackSignal s = *this;
    s.onset = step;
    return s;
  }

  AttackSignal scaled(double factor) const {
    AttackSignal s = *this;
    s.amplitude *= factor;
    s.samples *= factor;
    return s;
  }

  Vector at(int k) const {
    Vector v = Vector::Zero(channels);
    const int rel = k - onset;
    if (rel < 0) return v;
    switch (kind) {
      case Kind::zero: break;
      case Kind::square:
        if (rel % period == 0) v.setConstant(amplitude);
        break;
      case Kind::custom:
        if (rel < samples.rows()) v = samples.row(rel).transpose();
        break;
    }
    return v;
  }

  /// Samples k = 0..horizon-1 as a (channels x horizon) matrix.
  Matrix sequence(int horizon) const {
    Matrix out(channels, horizon);
    for (int k = 0; k < horizon; ++k) out.col(k) = at(k);
    return out;
  }

  std::string tag() const {
    switch (kind) {
      case Kind::zero: return "zero";
      case Kind::square: {
        std::ostringstream os;
        os << "square:" << amplitude << ":" << period;
        return os.str();
      }
      case Kind::custom: return "custom";
    }
    return "?";
  }
};

/// CSV with one row per step and one column per channel. Blank lines and
/// lines starting with '#' are skipped.
inline Matrix read_attack_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open attack file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("attack file '" + path + "': cannot parse '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError("attack file '" + path + "': inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("attack file '" + path + "' is empty");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

/// Parses `zero`, `square:AMP:PERIOD` or `file:<path>`.
inline AttackSignal parse_attack_spec(const std::string& spec) {
  if (spec == "zero") return AttackSignal::zero();
  if (spec.rfind("square:", 0) == 0) {
    const auto rest = spec.substr(7);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw ConfigError("attack spec '" + spec + "': expected square:AMP:PERIOD");
    try {
      return AttackSignal::square(std::stod(rest.substr(0, colon)), std::stoi(rest.substr(colon + 1)));
    } catch (const std::logic_error&) {
      throw ConfigError("attack spec '" + spec + "': malformed amplitude or period");
    }
  }
  if (spec.rfind("file:", 0) == 0) return AttackSignal::custom(read_attack_csv(spec.substr(5)));
  throw ConfigError("unknown attack spec '" + spec + "'");
}

/// Attacker with its own copy of the cascade H -> P -> W (stale parameters).
class CovertAttacker {
 public:
  CovertAttacker(StateSpaceModel model, double energy_budget, int theta_epoch)
      : model_(std::move(model)),
        x_(Vector::Zero(model_.states())),
        budget_(energy_budget),
        epoch_(theta_epoch) {}

  const StateSpaceModel& model() const noexcept { return model_; }
  const Vector& state() const noexcept { return x_; }
  double energy_budget() const noexcept { return budget_; }
  double energy_spent() const noexcept { return spent_; }
  int theta_epoch() const noexcept { return epoch_; }

  void enforce_budget(bool on) noexcept { enforce_ = on; }
  bool budget_enforced() const noexcept { return enforce_; }

  /// Advances one step with injection phi_u and returns phi_y = -(C_a x_a + D_a phi_u).
  Vector step(const Vector& phi_u) {
    if (phi_u.size() != model_.inputs()) throw DimensionError("step_attack: phi_u has wrong dimension");
    const double e = phi_u.squaredNorm();
    if (enforce_ && spent_ + e > budget_)
      throw BudgetExceededError("attack energy budget exceeded: " + std::to_string(spent_ + e) + " > " +
                                std::to_string(budget_));
    Vector phi_y = -(model_.C() * x_ + model_.D() * phi_u);
    x_ = model_.A() * x_ + model_.B() * phi_u;
    spent_ += e;
    return phi_y;
  }

  void reset() {
    x_.setZero();
    spent_ = 0.0;
  }

 private:
  StateSpaceModel model_;
  Vector x_;
  double budget_;
  double spent_ = 0.0;
  int epoch_;
  bool enforce_ = false;
};

/// Attacker cascade H(theta_a) -> plant -> W(theta_a).
inline StateSpaceModel attacker_model(const WatermarkBank& stale, const StateSpaceModel& plant) {
  return series(series(stale.h.filter, plant), stale.w.filter);
}

inline CovertAttacker build_attacker(const WatermarkBank& bank_stale, const StateSpaceModel& plant, double eps_a) {
  if (!(eps_a > 0.0)) throw DomainError("attack energy budget must be positive");
  return CovertAttacker(attacker_model(bank_stale, plant), eps_a, bank_stale.epoch);
}

}  // namespace mwm
