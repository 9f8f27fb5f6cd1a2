#pragma once

// Multi-component learning/forgetting models: parameters, state, and the
// right-hand sides of the two-, four- and n-component systems.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace didactic {

/// Raised when a caller breaks a dimensional or structural precondition.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for arguments outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Knowledge amounts per firmness category. Index 0 is the weakest
/// category (fastest forgetting), the last index the firmest.
struct KnowledgeState {
  std::vector<double> z;

  KnowledgeState() = default;
  explicit KnowledgeState(std::vector<double> values) : z(std::move(values)) {}
  static KnowledgeState zeros(std::size_t n) { return KnowledgeState(std::vector<double>(n, 0.0)); }

  std::size_t size() const noexcept { return z.size(); }
  double operator[](std::size_t i) const { return z[i]; }
  double& operator[](std::size_t i) { return z[i]; }

  bool operator==(const KnowledgeState&) const = default;
};

/// Total knowledge Z = Z_1 + ... + Z_n.
inline double total_knowledge(std::span<const double> z) noexcept {
  return std::accumulate(z.begin(), z.end(), 0.0);
}
inline double total_knowledge(const KnowledgeState& s) noexcept { return total_knowledge(s.z); }

/// Coefficients of one simulated student.
///
/// `alphas[0]` is the acquisition rate from the requirement deficit,
/// `alphas[i]` (i >= 1) the transfer rate from category i-1 into category i.
/// `gammas` are forgetting rates and must be strictly decreasing: weak
/// knowledge is forgotten faster than firm knowledge.
class ModelParams {
 public:
  ModelParams() = default;

  ModelParams(std::vector<double> alphas, std::vector<double> gammas, double b = 0.0,
              double lambda = 1.0, double s = 0.0)
      : alphas_(std::move(alphas)), gammas_(std::move(gammas)), b_(b), lambda_(lambda), s_(s) {
    validate();
  }

  std::size_t size() const noexcept { return gammas_.size(); }
  const std::vector<double>& alphas() const noexcept { return alphas_; }
  const std::vector<double>& gammas() const noexcept { return gammas_; }
  double b() const noexcept { return b_; }
  double lambda() const noexcept { return lambda_; }
  double s() const noexcept { return s_; }

  bool operator==(const ModelParams&) const = default;

 private:
  void validate() const {
    if (alphas_.size() != gammas_.size()) {
      std::ostringstream os;
      os << "alphas has length " << alphas_.size() << " but gammas has length " << gammas_.size();
      throw ContractError(os.str());
    }
    if (gammas_.size() < 2) throw ContractError("a model needs at least two knowledge categories");
    for (std::size_t i = 0; i < alphas_.size(); ++i) {
      if (!(alphas_[i] >= 0.0) || !std::isfinite(alphas_[i]))
        throw DomainError("alphas[" + std::to_string(i) + "] must be a finite value >= 0");
      if (!(gammas_[i] >= 0.0) || !std::isfinite(gammas_[i]))
        throw DomainError("gammas[" + std::to_string(i) + "] must be a finite value >= 0");
    }
    for (std::size_t i = 1; i < gammas_.size(); ++i) {
      if (!(gammas_[i] < gammas_[i - 1]))
        throw DomainError("gammas must be strictly decreasing (gamma_1 > gamma_2 > ... > gamma_n); gammas[" +
                          std::to_string(i) + "] violates the ordering");
    }
    if (!(b_ >= 0.0) || !std::isfinite(b_)) throw DomainError("b must be a finite value >= 0");
    if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) throw DomainError("lambda must be a finite value > 0");
    if (!(s_ >= 0.0 && s_ <= 1.0)) throw DomainError("s must lie in [0, 1]");
  }

  std::vector<double> alphas_;
  std::vector<double> gammas_;
  double b_ = 0.0;
  double lambda_ = 1.0;
  double s_ = 0.0;
};

/// Teacher input: lesson/break flag and requirement level U.
struct TeachingControl {
  bool teaching = false;
  double u = 0.0;

  bool operator==(const TeachingControl&) const = default;
};

/// Which system of equations drives a student.
enum class ModelKind { two, three, four, general };

inline const char* to_string(ModelKind k) noexcept {
  switch (k) {
    case ModelKind::two: return "two";
    case ModelKind::three: return "three";
    case ModelKind::four: return "four";
    case ModelKind::general: return "general";
  }
  return "?";
}

/// Number of components a model kind implies; 0 for `general` (free n).
inline std::size_t fixed_dimension(ModelKind k) noexcept {
  switch (k) {
    case ModelKind::two: return 2;
    case ModelKind::three: return 3;
    case ModelKind::four: return 4;
    case ModelKind::general: return 0;
  }
  return 0;
}

namespace detail {

inline void require_dims(std::span<const double> z, const ModelParams& p, std::size_t n, const char* what) {
  if (z.size() != n || p.size() != n) {
    std::ostringstream os;
    os << what << ": expected " << n << " components, got state of length " << z.size()
       << " and params of length " << p.size();
    throw ContractError(os.str());
  }
}

// Z^b with 0^0 = 1 and 0^b = 0 for b > 0.
inline double knowledge_power(double z, double b) noexcept {
  if (b == 0.0) return 1.0;
  if (z <= 0.0) return 0.0;
  return std::pow(z, b);
}

}  // namespace detail

/// Four-component system. The last equation mirrors the n-component form:
/// dZ_4/dt = k a_4 Z_3 - g_4 Z_4.
inline void derivatives_four(std::span<const double> z, const ModelParams& p, const TeachingControl& c,
                             std::span<double> out) {
  detail::require_dims(z, p, 4, "derivatives_four");
  if (out.size() != 4) throw ContractError("derivatives_four: output must have length 4");
  const auto& a = p.alphas();
  const auto& g = p.gammas();
  const double k = c.teaching ? 1.0 : 0.0;
  const double total = total_knowledge(z);
  out[0] = k * a[0] * (c.u - total) * detail::knowledge_power(total, p.b()) - k * a[1] * z[0] - g[0] * z[0];
  out[1] = k * a[1] * z[0] - k * a[2] * z[1] - g[1] * z[1];
  out[2] = k * a[2] * z[1] - k * a[3] * z[2] - g[2] * z[2];
  out[3] = k * a[3] * z[2] - g[3] * z[3];
}

inline std::vector<double> derivatives_four(const KnowledgeState& s, const ModelParams& p, const TeachingControl& c) {
  std::vector<double> out(4);
  derivatives_four(s.z, p, c, out);
  return out;
}

/// Two-component system; the acquisition term carries no Z^b factor.
inline void derivatives_two(std::span<const double> z, const ModelParams& p, const TeachingControl& c,
                            std::span<double> out) {
  detail::require_dims(z, p, 2, "derivatives_two");
  if (out.size() != 2) throw ContractError("derivatives_two: output must have length 2");
  const auto& a = p.alphas();
  const auto& g = p.gammas();
  const double k = c.teaching ? 1.0 : 0.0;
  const double total = z[0] + z[1];
  out[0] = k * a[0] * (c.u - total) - k * a[1] * z[0] - g[0] * z[0];
  out[1] = k * a[1] * z[0] - g[1] * z[1];
}

inline std::vector<double> derivatives_two(const KnowledgeState& s, const ModelParams& p, const TeachingControl& c) {
  std::vector<double> out(2);
  derivatives_two(s.z, p, c, out);
  return out;
}

/// Generalized n-component system with complexity S. Every teaching term is
/// scaled by r(1 - S); with r = 0 each category decays as -g_i Z_i.
inline void derivatives_general(std::span<const double> z, const ModelParams& p, const TeachingControl& c,
                                std::span<double> out) {
  const std::size_t n = z.size();
  if (n < 2) throw ContractError("derivatives_general: state needs at least two components");
  detail::require_dims(z, p, n, "derivatives_general");
  if (out.size() != n) throw ContractError("derivatives_general: output length must match the state");
  const auto& a = p.alphas();
  const auto& g = p.gammas();
  if (!c.teaching) {
    for (std::size_t i = 0; i < n; ++i) out[i] = -g[i] * z[i];
    return;
  }
  const double drive = 1.0 - p.s();
  const double total = total_knowledge(z);
  out[0] = drive * (a[0] * (c.u - total) * detail::knowledge_power(total, p.b()) - a[1] * z[0]) - g[0] * z[0];
  for (std::size_t i = 1; i + 1 < n; ++i)
    out[i] = drive * (a[i] * z[i - 1] - a[i + 1] * z[i]) - g[i] * z[i];
  out[n - 1] = drive * a[n - 1] * z[n - 2] - g[n - 1] * z[n - 1];
}

inline std::vector<double> derivatives_general(const KnowledgeState& s, const ModelParams& p,
                                               const TeachingControl& c) {
  std::vector<double> out(s.size());
  derivatives_general(s.z, p, c, out);
  return out;
}

/// Share of knowledge held in the firmest of four categories, Z_4 / Z.
/// Zero for an empty state.
inline double strength_pf(std::span<const double> z) {
  if (z.size() != 4) throw ContractError("strength_pf: state must have 4 components");
  const double total = total_knowledge(z);
  return total > 0.0 ? z[3] / total : 0.0;
}
inline double strength_pf(const KnowledgeState& s) { return strength_pf(std::span<const double>(s.z)); }

/// Weighted firm fraction (sum_{i=2..n} Z_i / 2^(n-i)) / Z. Category 1 has
/// weight 0. Zero for an empty state.
inline double strength_pr(std::span<const double> z) {
  const std::size_t n = z.size();
  if (n < 2) throw ContractError("strength_pr: state needs at least two components");
  const double total = total_knowledge(z);
  if (!(total > 0.0)) return 0.0;
  double weighted = 0.0;
  double w = 1.0;
  for (std::size_t i = n - 1; i >= 1; --i) {
    weighted += z[i] * w;
    w *= 0.5;
  }
  return weighted / total;
}
inline double strength_pr(const KnowledgeState& s) { return strength_pr(std::span<const double>(s.z)); }

/// Forgetting rate from the e-folding time tau.
inline double gamma_from_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("tau must be a finite value > 0");
  return 1.0 / tau;
}

/// A model kind bound to one student's coefficients.
struct Model {
  ModelKind kind = ModelKind::four;
  ModelParams params;

  Model() = default;
  Model(ModelKind k, ModelParams p) : kind(k), params(std::move(p)) {
    const std::size_t want = fixed_dimension(kind);
    if (want != 0 && params.size() != want) {
      std::ostringstream os;
      os << "model '" << to_string(kind) << "' needs " << want << " components, params have " << params.size();
      throw ContractError(os.str());
    }
  }

  std::size_t size() const noexcept { return params.size(); }

  void rates(std::span<const double> z, const TeachingControl& c, std::span<double> out) const {
    switch (kind) {
      case ModelKind::two: derivatives_two(z, params, c, out); return;
      case ModelKind::four: derivatives_four(z, params, c, out); return;
      case ModelKind::three:
      case ModelKind::general: derivatives_general(z, params, c, out); return;
    }
  }

  /// Pf for the four-component model, Pr for everything else.
  double strength(std::span<const double> z) const {
    return kind == ModelKind::four ? strength_pf(z) : strength_pr(z);
  }

  const char* strength_name() const noexcept { return kind == ModelKind::four ? "pf" : "pr"; }

  bool operator==(const Model&) const = default;
};

}  // namespace didactic
