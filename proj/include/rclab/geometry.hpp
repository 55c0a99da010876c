#pragma once

// Chart-level representations of Q, TQ, T*Q and objects living on them.
//
// Sign convention, fixed repo-wide: a two-form at a point is a 2n x 2n matrix
// Omega with omega(u, v) = u^T Omega v. The canonical form on T*Q in the
// (dq, dp) basis is Omega_0 = [[0, I], [-I, 0]], i.e. omega_0 = sum dq^i ^ dp_i
// with (dq^i ^ dp_i)(u, v) = u_q^i v_p_i - u_p_i v_q^i.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rclab/expr.hpp"

namespace rclab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Interval {
  double lower = 0.0;
  double upper = 1.0;
};

/// Named coordinate chart of the configuration manifold with a sampling box.
class ConfigSpace {
 public:
  ConfigSpace() = default;
  ConfigSpace(std::vector<std::string> names, std::vector<bool> periodic,
              std::vector<Interval> q_box, std::vector<Interval> qdot_box);

  std::size_t dim() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  bool periodic(std::size_t i) const { return periodic_.at(i); }
  const std::vector<bool>& periodic_flags() const noexcept { return periodic_; }
  const std::vector<Interval>& q_box() const noexcept { return q_box_; }
  const std::vector<Interval>& qdot_box() const noexcept { return qdot_box_; }
  std::optional<std::size_t> index_of(const std::string& name) const;

  /// Wrap periodic coordinates into [0, 2*pi).
  double wrap(std::size_t i, double value) const;
  Vec wrap(const Vec& q) const;

  bool in_box(const Vec& q, const Vec& qdot) const;

 private:
  std::vector<std::string> names_;
  std::vector<bool> periodic_;
  std::vector<Interval> q_box_;
  std::vector<Interval> qdot_box_;
};

/// (q, qdot) in TQ.
struct TangentPoint {
  Vec q;
  Vec qdot;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(q.size()); }
  Vec stacked() const;
  static TangentPoint from_stacked(const Vec& z);
};

/// (q, p) in T*Q.
struct CotangentPoint {
  Vec q;
  Vec p;

  Vec stacked() const;
  static CotangentPoint from_stacked(const Vec& z);
};

/// Element of T(TQ): a base point and components (dq, dqdot).
struct DoubleTangentVector {
  TangentPoint base;
  Vec dq;
  Vec dqdot;

  Vec stacked() const;
  static DoubleTangentVector from_stacked(const TangentPoint& base, const Vec& w);
};

/// A two-form at a point, stored as a dense antisymmetric matrix.
struct TwoFormAtPoint {
  Vec base;
  Mat matrix;
  bool symplectic = false;

  double operator()(const Vec& u, const Vec& v) const { return u.dot(matrix * v); }
};

Mat canonical_matrix(std::size_t n);
TwoFormAtPoint canonical_form(const CotangentPoint& point);

/// J^T Omega J, the pullback of `form` by a map with Jacobian J at `preimage`.
TwoFormAtPoint pullback_form(const Mat& jacobian, const TwoFormAtPoint& form, const Vec& preimage);

double antisymmetry_defect(const Mat& m);
double smallest_singular_value(const Mat& m);

/// phi: Q1 -> Q2 given by component expressions in the source coordinates.
class PointMap {
 public:
  struct Jet {
    Vec value;
    Mat jacobian;
    std::vector<Mat> hessians;  // one n x n Hessian per component
  };

  PointMap() = default;
  PointMap(ConfigSpace source, ConfigSpace target, const std::vector<std::string>& forward,
           const std::optional<std::vector<std::string>>& inverse);

  static PointMap identity(const ConfigSpace& space);

  const ConfigSpace& source() const noexcept { return source_; }
  const ConfigSpace& target() const noexcept { return target_; }
  bool has_inverse() const noexcept { return !inverse_.empty(); }

  /// The inverse map (source and target swapped). Throws ValidationError when absent.
  PointMap inverse() const;

  Vec apply(const Vec& q) const;
  Jet jet(const Vec& q) const;

  /// max |phi(phi^-1(Q)) - Q| over seeded target-box samples and the reverse
  /// composition over source-box samples.
  double inverse_defect(std::size_t samples, std::uint64_t seed) const;

  /// psi o phi, with inverse phi^-1 o psi^-1 when both inverses exist.
  friend PointMap compose(const PointMap& psi, const PointMap& phi);

  const std::vector<expr::Expression>& forward_expressions() const noexcept { return forward_; }
  const expr::SymbolTable& source_table() const noexcept { return source_table_; }
  std::vector<std::string> forward_text() const;
  std::vector<std::string> inverse_text() const;

 private:
  ConfigSpace source_;
  ConfigSpace target_;
  expr::SymbolTable source_table_;
  expr::SymbolTable target_table_;
  std::vector<expr::Expression> forward_;
  std::vector<expr::Expression> inverse_;
};

PointMap compose(const PointMap& psi, const PointMap& phi);

/// T phi (q, qdot) = (phi(q), D phi(q) qdot).
TangentPoint tangent_lift(const PointMap& map, const TangentPoint& v);

/// Jacobian of T phi at v in the (q, qdot) basis:
/// [[D phi, 0], [D^2 phi . qdot, D phi]].
Mat tangent_lift_jacobian(const PointMap& map, const TangentPoint& v);

/// T(T phi) w: base transported by T phi, components pushed by its Jacobian.
DoubleTangentVector double_tangent_lift(const PointMap& map, const DoubleTangentVector& w);

/// Seeded uniform sampler over chart boxes.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lower, double upper);
  Vec uniform_vector(std::size_t n, double lower, double upper);
  TangentPoint tangent(const ConfigSpace& space);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Box center and, when distinct, the box point closest to q = 0, qdot = 0.
std::vector<TangentPoint> anchor_points(const ConfigSpace& space);

}  // namespace rclab
