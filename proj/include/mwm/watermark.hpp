#pragma once

// Matched multiplicative-watermark filter banks: (G, H) on the actuator
// channel and (W, Q) on the sensor channel, each pair being a filter and its
// exact state-space inverse.

#include <array>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mwm/lti.hpp"

namespace mwm {

enum class Channel { g, h, w, q };

inline const char* to_string(Channel c) {
  switch (c) {
    case Channel::g: return "g";
    case Channel::h: return "h";
    case Channel::w: return "w";
    case Channel::q: return "q";
  }
  return "?";
}

/// Parameters of one watermark filter at one switching epoch.
struct WatermarkTheta {
  Channel sigma = Channel::q;
  StateSpaceModel filter;
  int epoch = 0;

  /// Concatenation of vec(A), vec(B), vec(C), vec(D), column-major.
  Vector vectorized() const {
    const auto& f = filter;
    Vector v(f.A().size() + f.B().size() + f.C().size() + f.D().size());
    Eigen::Index o = 0;
    for (const Matrix* m : {&f.A(), &f.B(), &f.C(), &f.D()}) {
      v.segment(o, m->size()) = Eigen::Map<const Vector>(m->data(), m->size());
      o += m->size();
    }
    return v;
  }
};

/// Raised when a filter or its inverse fails the stability requirement.
class FilterUnstableError : public DomainError {
 public:
  FilterUnstableError(Channel defining, bool inverse, double radius)
      : DomainError(message(defining, inverse, radius)), defining_(defining), inverse_(inverse), radius_(radius) {}

  /// The user-supplied filter (h or q) whose realization failed.
  Channel defining_channel() const noexcept { return defining_; }
  /// True when the failing matrix is the inverse (g or w), false for h or q.
  bool inverse() const noexcept { return inverse_; }
  double spectral_radius() const noexcept { return radius_; }

 private:
  static std::string message(Channel c, bool inverse, double radius) {
    std::string name = inverse ? (c == Channel::h ? "g (inverse of h)" : "w (inverse of q)") : to_string(c);
    return "filter unstable: " + name + " has spectral radius " + std::to_string(radius);
  }
  Channel defining_;
  bool inverse_;
  double radius_;
};

/// The matched quadruple (G, H, W, Q) live during one epoch.
struct WatermarkBank {
  WatermarkTheta g, h, w, q;
  /// Lyapunov certificates for A_g, A_h, A_w, A_q (in that order). Since G
  /// and H are mutual inverses these also certify both inverse realizations.
  std::array<LyapunovCertificate, 4> certificates;
  int epoch = 0;

  const WatermarkTheta& operator[](Channel c) const {
    switch (c) {
      case Channel::g: return g;
      case Channel::h: return h;
      case Channel::w: return w;
      case Channel::q: return q;
    }
    return q;
  }
};

namespace detail {

inline LyapunovCertificate certify_filter(const StateSpaceModel& f, Channel defining, bool inverse) {
  if (!f.square()) throw DimensionError(std::string("watermark filters must be square (") + to_string(defining) + ")");
  auto cert = lyapunov_certificate(f.A());
  if (!cert) throw FilterUnstableError(defining, inverse, spectral_radius(f.A()));
  return *std::move(cert);
}

}  // namespace detail

/// Builds a bank from the user-supplied H and Q; G = H^{-1}, W = Q^{-1}.
inline WatermarkBank make_bank(const StateSpaceModel& h, const StateSpaceModel& q, int epoch = 0) {
  auto cert_h = detail::certify_filter(h, Channel::h, false);
  auto cert_q = detail::certify_filter(q, Channel::q, false);
  StateSpaceModel g = inverse_realization(h);
  StateSpaceModel w = inverse_realization(q);
  auto cert_g = detail::certify_filter(g, Channel::h, true);
  auto cert_w = detail::certify_filter(w, Channel::q, true);

  WatermarkBank bank;
  bank.epoch = epoch;
  bank.g = {Channel::g, std::move(g), epoch};
  bank.h = {Channel::h, h, epoch};
  bank.w = {Channel::w, std::move(w), epoch};
  bank.q = {Channel::q, q, epoch};
  bank.certificates = {std::move(cert_g), std::move(cert_h), std::move(cert_w), std::move(cert_q)};
  return bank;
}

inline WatermarkBank make_bank(const Matrix& a_h, const Matrix& b_h, const Matrix& c_h, const Matrix& d_h,
                               const Matrix& a_q, const Matrix& b_q, const Matrix& c_q, const Matrix& d_q,
                               int epoch = 0) {
  return make_bank(StateSpaceModel(a_h, b_h, c_h, d_h), StateSpaceModel(a_q, b_q, c_q, d_q), epoch);
}

/// Identity watermarking of the given channel widths: all filters are the
/// static identity gain with `order` inert states.
inline WatermarkBank identity_bank(Eigen::Index inputs, Eigen::Index outputs, Eigen::Index order = 0) {
  auto ident = [order](Eigen::Index width) {
    return StateSpaceModel(Matrix::Zero(order, order), Matrix::Zero(order, width), Matrix::Zero(width, order),
                           Matrix::Identity(width, width));
  };
  return make_bank(ident(inputs), ident(outputs));
}

/// Maximum mismatch tolerated by verify_pair.
inline constexpr double kTransparencyTolerance = 1e-9;

/// Drives F followed by Finv with random inputs from zero state and checks
/// that the cascade reproduces its input.
inline bool verify_pair(const WatermarkTheta& f, const WatermarkTheta& f_inv, int horizon = 500,
                        std::uint64_t seed = 1) {
  if (f.filter.outputs() != f_inv.filter.inputs() || f.filter.inputs() != f_inv.filter.outputs()) return false;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix u(f.filter.inputs(), horizon);
  for (Eigen::Index k = 0; k < u.size(); ++k) u.data()[k] = dist(rng);
  const Matrix y = simulate(series(f.filter, f_inv.filter), u);
  return (y - u).cwiseAbs().maxCoeff() <= kTransparencyTolerance;
}

/// Optional check of a common Lyapunov function across epochs: true iff Z
/// certifies every filter A-matrix of every bank.
inline bool shares_common_lyapunov(const std::vector<WatermarkBank>& banks, const Matrix& z, Channel c) {
  for (const auto& bank : banks)
    if (!certifies(z, bank[c].filter.A())) return false;
  return true;
}

/// Seeded generator of feedthrough gains for (H, Q).
///
/// Draws are recorded; a draw within 1e-12 of an earlier draw for the same
/// channel is rejected and redrawn, so successive epochs get pairwise
/// distinct feedthroughs. Access is serialized with a mutex.
class FeedthroughSampler {
 public:
  struct Draw {
    Matrix d_h;
    Matrix d_q;
  };

  explicit FeedthroughSampler(std::uint64_t seed) : rng_(seed) {}

  /// Diagonal D_h (width_h) and D_q (width_q) with entries uniform in [lo, hi].
  Draw sample(double lo, double hi, Eigen::Index width_h = 1, Eigen::Index width_q = 1) {
    if (!(lo > 0.0)) throw DomainError("feedthrough range must exclude zero (lo > 0)");
    if (!(hi > lo)) throw DomainError("feedthrough range must satisfy lo < hi");
    std::lock_guard<std::mutex> lock(mutex_);
    std::uniform_real_distribution<double> dist(lo, hi);
    Draw d{Matrix::Zero(width_h, width_h), Matrix::Zero(width_q, width_q)};
    for (Eigen::Index i = 0; i < width_h; ++i) d.d_h(i, i) = fresh(dist, history_h_);
    for (Eigen::Index i = 0; i < width_q; ++i) d.d_q(i, i) = fresh(dist, history_q_);
    return d;
  }

  const std::vector<double>& history_h() const noexcept { return history_h_; }
  const std::vector<double>& history_q() const noexcept { return history_q_; }

 private:
  double fresh(std::uniform_real_distribution<double>& dist, std::vector<double>& history) {
    for (;;) {
      const double v = dist(rng_);
      bool repeated = false;
      for (double old : history) repeated = repeated || std::abs(old - v) <= 1e-12;
      if (!repeated) {
        history.push_back(v);
        return v;
      }
    }
  }

  std::mt19937_64 rng_;
  std::mutex mutex_;
  std::vector<double> history_h_, history_q_;
};

/// Single-shot convenience: (D_h, D_q) scalars from a fresh sampler.
inline std::pair<double, double> sample_feedthroughs(std::uint64_t seed, double lo, double hi) {
  FeedthroughSampler sampler(seed);
  const auto d = sampler.sample(lo, hi);
  return {d.d_h(0, 0), d.d_q(0, 0)};
}

}  // namespace mwm
