#include "rclab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rclab/error.hpp"

namespace rclab {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

// ---------------------------------------------------------------------------
// ConfigSpace

ConfigSpace::ConfigSpace(std::vector<std::string> names, std::vector<bool> periodic,
                         std::vector<Interval> q_box, std::vector<Interval> qdot_box)
    : names_(std::move(names)),
      periodic_(std::move(periodic)),
      q_box_(std::move(q_box)),
      qdot_box_(std::move(qdot_box)) {
  const std::size_t n = names_.size();
  if (n == 0) throw ValidationError("configuration space needs at least one coordinate");
  if (periodic_.empty()) periodic_.assign(n, false);
  if (periodic_.size() != n || q_box_.size() != n || qdot_box_.size() != n) {
    throw ValidationError("configuration space: periodic flags and boxes must match the coordinate count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(q_box_[i].lower < q_box_[i].upper) || !(qdot_box_[i].lower < qdot_box_[i].upper)) {
      throw ValidationError("configuration space: box for '" + names_[i] + "' needs lower < upper");
    }
  }
}

std::optional<std::size_t> ConfigSpace::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

double ConfigSpace::wrap(std::size_t i, double value) const {
  if (!periodic_.at(i)) return value;
  double r = std::fmod(value, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

Vec ConfigSpace::wrap(const Vec& q) const {
  Vec out = q;
  for (Eigen::Index i = 0; i < q.size(); ++i) out[i] = wrap(static_cast<std::size_t>(i), q[i]);
  return out;
}

bool ConfigSpace::in_box(const Vec& q, const Vec& qdot) const {
  for (std::size_t i = 0; i < dim(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (!periodic_[i] && (q[k] < q_box_[i].lower || q[k] > q_box_[i].upper)) return false;
    if (qdot[k] < qdot_box_[i].lower || qdot[k] > qdot_box_[i].upper) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Points

Vec TangentPoint::stacked() const {
  Vec z(q.size() + qdot.size());
  z << q, qdot;
  return z;
}

TangentPoint TangentPoint::from_stacked(const Vec& z) {
  const Eigen::Index n = z.size() / 2;
  return TangentPoint{z.head(n), z.tail(n)};
}

Vec CotangentPoint::stacked() const {
  Vec z(q.size() + p.size());
  z << q, p;
  return z;
}

CotangentPoint CotangentPoint::from_stacked(const Vec& z) {
  const Eigen::Index n = z.size() / 2;
  return CotangentPoint{z.head(n), z.tail(n)};
}

Vec DoubleTangentVector::stacked() const {
  Vec w(dq.size() + dqdot.size());
  w << dq, dqdot;
  return w;
}

DoubleTangentVector DoubleTangentVector::from_stacked(const TangentPoint& base, const Vec& w) {
  const Eigen::Index n = w.size() / 2;
  return DoubleTangentVector{base, w.head(n), w.tail(n)};
}

// ---------------------------------------------------------------------------
// Forms

Mat canonical_matrix(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  Mat omega = Mat::Zero(2 * k, 2 * k);
  omega.topRightCorner(k, k) = Mat::Identity(k, k);
  omega.bottomLeftCorner(k, k) = -Mat::Identity(k, k);
  return omega;
}

TwoFormAtPoint canonical_form(const CotangentPoint& point) {
  return TwoFormAtPoint{point.stacked(), canonical_matrix(static_cast<std::size_t>(point.q.size())), true};
}

TwoFormAtPoint pullback_form(const Mat& jacobian, const TwoFormAtPoint& form, const Vec& preimage) {
  Mat pulled = jacobian.transpose() * form.matrix * jacobian;
  // J^T A J is antisymmetric in exact arithmetic; enforce it bitwise.
  Mat anti = 0.5 * (pulled - pulled.transpose());
  return TwoFormAtPoint{preimage, std::move(anti), form.symplectic};
}

double antisymmetry_defect(const Mat& m) { return (m + m.transpose()).cwiseAbs().maxCoeff(); }

double smallest_singular_value(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues().minCoeff();
}

// ---------------------------------------------------------------------------
// PointMap

namespace {

std::vector<expr::Expression> parse_all(const std::vector<std::string>& texts,
                                        const expr::SymbolTable& table, std::size_t expected,
                                        const char* what) {
  if (texts.size() != expected) {
    throw ValidationError(std::string("point map: ") + what + " needs " + std::to_string(expected) +
                          " component expressions, got " + std::to_string(texts.size()));
  }
  std::vector<expr::Expression> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(expr::parse(t, table));
  return out;
}

Vec apply_exprs(const std::vector<expr::Expression>& exprs, const Vec& q) {
  Vec out(static_cast<Eigen::Index>(exprs.size()));
  const std::span<const double> point(q.data(), static_cast<std::size_t>(q.size()));
  for (std::size_t i = 0; i < exprs.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = expr::evaluate(exprs[i], point, {});
  }
  return out;
}

}  // namespace

PointMap::PointMap(ConfigSpace source, ConfigSpace target, const std::vector<std::string>& forward,
                   const std::optional<std::vector<std::string>>& inverse)
    : source_(std::move(source)),
      target_(std::move(target)),
      source_table_(source_.names(), {}, false),
      target_table_(target_.names(), {}, false) {
  if (source_.dim() != target_.dim()) {
    throw ValidationError("point map: source and target dimensions differ");
  }
  forward_ = parse_all(forward, source_table_, target_.dim(), "forward");
  if (inverse) inverse_ = parse_all(*inverse, target_table_, source_.dim(), "inverse");
}

PointMap PointMap::identity(const ConfigSpace& space) {
  return PointMap(space, space, space.names(), space.names());
}

PointMap PointMap::inverse() const {
  if (!has_inverse()) throw ValidationError("point map has no declared inverse");
  PointMap inv;
  inv.source_ = target_;
  inv.target_ = source_;
  inv.source_table_ = target_table_;
  inv.target_table_ = source_table_;
  inv.forward_ = inverse_;
  inv.inverse_ = forward_;
  return inv;
}

Vec PointMap::apply(const Vec& q) const { return apply_exprs(forward_, q); }

PointMap::Jet PointMap::jet(const Vec& q) const {
  const auto n = static_cast<Eigen::Index>(forward_.size());
  Jet j;
  j.value.resize(n);
  j.jacobian.resize(n, q.size());
  j.hessians.reserve(forward_.size());
  const std::span<const double> point(q.data(), static_cast<std::size_t>(q.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    auto d = expr::eval2(forward_[static_cast<std::size_t>(i)], point, {});
    j.value[i] = d.value;
    j.jacobian.row(i) = d.gradient.transpose();
    j.hessians.push_back(std::move(d.hessian));
  }
  return j;
}

double PointMap::inverse_defect(std::size_t samples, std::uint64_t seed) const {
  if (!has_inverse()) throw ValidationError("point map has no declared inverse");
  Sampler sampler(seed);
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const TangentPoint a = sampler.tangent(source_);
    const Vec back = apply_exprs(inverse_, apply(a.q));
    worst = std::max(worst, (back - a.q).cwiseAbs().maxCoeff());
    const TangentPoint b = sampler.tangent(target_);
    const Vec fwd = apply(apply_exprs(inverse_, b.q));
    worst = std::max(worst, (fwd - b.q).cwiseAbs().maxCoeff());
  }
  return worst;
}

PointMap compose(const PointMap& psi, const PointMap& phi) {
  if (psi.source_.dim() != phi.target_.dim()) throw ValidationError("compose: dimension mismatch");
  std::vector<expr::NodePtr> phi_roots;
  for (const auto& e : phi.forward_) phi_roots.push_back(e.root_ptr());
  PointMap out;
  out.source_ = phi.source_;
  out.target_ = psi.target_;
  out.source_table_ = phi.source_table_;
  out.target_table_ = psi.target_table_;
  for (const auto& e : psi.forward_) out.forward_.push_back(expr::substitute(e, phi_roots));
  if (psi.has_inverse() && phi.has_inverse()) {
    std::vector<expr::NodePtr> psi_inv_roots;
    for (const auto& e : psi.inverse_) psi_inv_roots.push_back(e.root_ptr());
    for (const auto& e : phi.inverse_) out.inverse_.push_back(expr::substitute(e, psi_inv_roots));
  }
  return out;
}

std::vector<std::string> PointMap::forward_text() const {
  std::vector<std::string> out;
  for (const auto& e : forward_) out.push_back(expr::to_string(e, source_table_));
  return out;
}

std::vector<std::string> PointMap::inverse_text() const {
  std::vector<std::string> out;
  for (const auto& e : inverse_) out.push_back(expr::to_string(e, target_table_));
  return out;
}

TangentPoint tangent_lift(const PointMap& map, const TangentPoint& v) {
  const PointMap::Jet j = map.jet(v.q);
  return TangentPoint{j.value, j.jacobian * v.qdot};
}

Mat tangent_lift_jacobian(const PointMap& map, const TangentPoint& v) {
  const PointMap::Jet j = map.jet(v.q);
  const Eigen::Index n = j.jacobian.rows();
  Mat J = Mat::Zero(2 * n, 2 * n);
  J.topLeftCorner(n, n) = j.jacobian;
  J.bottomRightCorner(n, n) = j.jacobian;
  for (Eigen::Index i = 0; i < n; ++i) {
    J.block(n + i, 0, 1, n) = (j.hessians[static_cast<std::size_t>(i)] * v.qdot).transpose();
  }
  return J;
}

DoubleTangentVector double_tangent_lift(const PointMap& map, const DoubleTangentVector& w) {
  const TangentPoint base = tangent_lift(map, w.base);
  const Vec pushed = tangent_lift_jacobian(map, w.base) * w.stacked();
  return DoubleTangentVector::from_stacked(base, pushed);
}

// ---------------------------------------------------------------------------
// Sampling

double Sampler::uniform(double lower, double upper) {
  // 53 random mantissa bits; identical on every platform for a given seed.
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lower + (upper - lower) * u;
}

Vec Sampler::uniform_vector(std::size_t n, double lower, double upper) {
  Vec out(static_cast<Eigen::Index>(n));
  for (auto& x : out) x = uniform(lower, upper);
  return out;
}

TangentPoint Sampler::tangent(const ConfigSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.dim());
  TangentPoint v{Vec(n), Vec(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& b = space.q_box()[static_cast<std::size_t>(i)];
    v.q[i] = space.wrap(static_cast<std::size_t>(i), uniform(b.lower, b.upper));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& b = space.qdot_box()[static_cast<std::size_t>(i)];
    v.qdot[i] = uniform(b.lower, b.upper);
  }
  return v;
}

std::vector<TangentPoint> anchor_points(const ConfigSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.dim());
  TangentPoint center{Vec(n), Vec(n)};
  TangentPoint nearest{Vec(n), Vec(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const auto& qb = space.q_box()[k];
    const auto& vb = space.qdot_box()[k];
    center.q[i] = space.wrap(k, 0.5 * (qb.lower + qb.upper));
    center.qdot[i] = 0.5 * (vb.lower + vb.upper);
    nearest.q[i] = space.wrap(k, std::clamp(0.0, qb.lower, qb.upper));
    nearest.qdot[i] = std::clamp(0.0, vb.lower, vb.upper);
  }
  std::vector<TangentPoint> out{center};
  if (nearest.stacked() != center.stacked()) out.push_back(nearest);
  return out;
}

}  // namespace rclab
