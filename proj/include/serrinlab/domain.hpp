#pragma once

#include <Eigen/Core>
#include <string>

#include <utility>
#include <variant>
#include <vector>

namespace serrinlab {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Spatial dimension of every mesh-based computation.
inline constexpr int kDim = 2;

struct FourierMode {
  int k = 1;
  double a = 0.0;  // cosine coefficient, relative to rho0
  double b = 0.0;  // sine coefficient, relative to rho0
};

/// Axis-aligned ellipse written as a polar graph about its center. Used as a
/// closed-form oracle shape; it is not a finite Fourier sum.
struct EllipseShape {
  double a = 1.0;
  double b = 1.0;
};

/// r(theta) together with its first two derivatives.
struct RadialJet {
  double r = 0.0;
  double dr = 0.0;
  double d2r = 0.0;
};

struct BoundaryFrame {
  double theta = 0.0;
  Vec2 point = Vec2::Zero();
  Vec2 nu = Vec2::Zero();       // exterior unit normal
  Vec2 tangent = Vec2::Zero();  // unit tangent, counter-clockwise
  double kappa = 0.0;           // signed curvature, positive for convex arcs
  double arclength_density = 0.0;
};

struct DomainMeasures {
  double area = 0.0;
  double perimeter = 0.0;
  double R = 0.0;  // N |Omega| / |Gamma|
  double diameter = 0.0;
  double r_i = 0.0;
  double r_e = 0.0;
  double kappa_min = 0.0;
  double kappa_max = 0.0;
};

/// Planar domain whose boundary is a polar graph x = center + r(theta) e(theta).
/// Immutable after construction.
class StarDomain {
 public:
  /// Validated construction of r = rho0 (1 + sum a_k cos k theta + b_k sin k theta).
  static StarDomain fourier(double rho0, std::vector<FourierMode> modes, Vec2 center = Vec2::Zero());
  static StarDomain ellipse(double a, double b, Vec2 center = Vec2::Zero());
  static StarDomain disk(double radius = 1.0, Vec2 center = Vec2::Zero());

  const Vec2& center() const { return center_; }
  double rho0() const { return rho0_; }
  bool is_ellipse() const { return std::holds_alternative<EllipseShape>(shape_); }
  const std::vector<FourierMode>& modes() const;
  const EllipseShape& ellipse_shape() const { return std::get<EllipseShape>(shape_); }

  RadialJet jet(double theta) const;
  double radius(double theta) const { return jet(theta).r; }
  Vec2 point(double theta) const;
  /// First and second derivative of the boundary curve with respect to theta.
  std::pair<Vec2, Vec2> curve_derivatives(double theta) const;
  BoundaryFrame frame(double theta) const;

  /// Sampled extremes of r(theta) over `samples` equispaced angles.
  double min_radius(int samples = 4096) const;
  double max_radius(int samples = 4096) const;
  /// Largest arclength density |gamma'(theta)| on a dense sample.
  double max_speed(int samples = 4096) const;

  /// True when x lies in the closed domain, with a relative slack `tol`.
  bool contains(const Vec2& x, double tol = 1e-12) const;

  StarDomain translated(const Vec2& shift) const;

  /// Short stable identifier of the shape used in reports.
  std::string fingerprint() const;

 private:
  StarDomain(Vec2 center, double rho0, std::variant<std::vector<FourierMode>, EllipseShape> shape)
      : center_(std::move(center)), rho0_(rho0), shape_(std::move(shape)) {}

  Vec2 center_;
  double rho0_;
  std::variant<std::vector<FourierMode>, EllipseShape> shape_;
};

DomainMeasures measures(const StarDomain& domain);

/// Distance from x to the boundary curve. Throws OutsideDomain.
double distance_to_boundary(const StarDomain& domain, const Vec2& x);

/// (rho_i, rho_e): nearest and farthest boundary distance from z. Throws PointNotInterior.
std::pair<double, double> radii_about(const StarDomain& domain, const Vec2& z);

/// Dense boundary sample reused for many distance queries.
class BoundarySampler {
 public:
  explicit BoundarySampler(const StarDomain& domain, int samples = 1024);

  double distance(const Vec2& x) const;
  /// Parameter of the nearest boundary point.
  double nearest_theta(const Vec2& x) const;

 private:
  StarDomain domain_;
  std::vector<double> theta_;
  std::vector<Vec2> points_;
};

}  // namespace serrinlab
