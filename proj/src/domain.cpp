#include "serrinlab/domain.hpp"

#include "serrinlab/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace serrinlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kValidationSamples = 4096;

template <class F>
double periodic_integral(F&& f) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 31>::integrate(f, 0.0, kTwoPi, 15, 1e-13);
}

// Safeguarded Newton iteration for a zero of `g` bracketed in [lo, hi].
template <class G, class DG>
double bracketed_root(G&& g, DG&& dg, double lo, double hi, double x0) {
  double glo = g(lo);
  double ghi = g(hi);
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  if ((glo < 0.0) == (ghi < 0.0)) return x0;
  if (glo > 0.0) std::swap(lo, hi);  // now g(lo) < 0 < g(hi)
  double x = std::clamp(x0, std::min(lo, hi), std::max(lo, hi));
  for (int it = 0; it < 100; ++it) {
    const double gx = g(x);
    if (gx == 0.0) return x;
    if (gx < 0.0) lo = x; else hi = x;
    const double d = dg(x);
    double next = (d != 0.0) ? x - gx / d : 0.5 * (lo + hi);
    if (!(next > std::min(lo, hi) && next < std::max(lo, hi))) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < 1e-15 * (1.0 + std::abs(x))) return next;
    x = next;
  }
  return x;
}

// Extremum of phi(theta) = 0.5 |gamma(theta) - p|^2 near the sample `theta0`.
// `sign` = +1 refines a minimum, -1 a maximum.
double refine_squared_distance(const StarDomain& domain, const Vec2& p, double theta0, double spacing,
                               double sign) {
  auto dphi = [&](double t) {
    const auto [d1, d2] = domain.curve_derivatives(t);
    (void)d2;
    return sign * (domain.point(t) - p).dot(d1);
  };
  auto d2phi = [&](double t) {
    const auto [d1, d2] = domain.curve_derivatives(t);
    return sign * (d1.squaredNorm() + (domain.point(t) - p).dot(d2));
  };
  return bracketed_root(dphi, d2phi, theta0 - spacing, theta0 + spacing, theta0);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

StarDomain StarDomain::fourier(double rho0, std::vector<FourierMode> modes, Vec2 center) {
  if (!(rho0 > 0.0)) throw Error(ErrorCode::NonPositiveRadius, "rho0 must be positive");
  for (const auto& m : modes) {
    if (m.k < 1) throw Error(ErrorCode::InvalidArgument, "Fourier mode index must be >= 1");
  }
  StarDomain d(std::move(center), rho0, std::move(modes));
  const double rmin = d.min_radius(kValidationSamples);
  if (!(rmin > 0.0)) throw Error(ErrorCode::NonPositiveRadius, "min r(theta) = " + fmt_double(rmin));
  double weighted = 0.0;
  for (const auto& m : d.modes()) weighted += double(m.k) * m.k * (std::abs(m.a) + std::abs(m.b));
  if (weighted >= 1.0) {
    throw Error(ErrorCode::NotStarShaped, "sum k^2 (|a_k| + |b_k|) = " + fmt_double(weighted) + " >= 1");
  }
  // Positivity margin: the radial graph must stay within a factor two of rho0.
  if (rmin < 0.5 * rho0) {
    throw Error(ErrorCode::NotStarShaped,
                "min r(theta) = " + fmt_double(rmin) + " below the positivity margin rho0/2");
  }
  return d;
}

StarDomain StarDomain::ellipse(double a, double b, Vec2 center) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorCode::NonPositiveRadius, "ellipse semi-axes must be positive");
  return StarDomain(std::move(center), std::max(a, b), EllipseShape{a, b});
}

StarDomain StarDomain::disk(double radius, Vec2 center) { return fourier(radius, {}, std::move(center)); }

const std::vector<FourierMode>& StarDomain::modes() const {
  static const std::vector<FourierMode> kEmpty;
  if (auto* m = std::get_if<std::vector<FourierMode>>(&shape_)) return *m;
  return kEmpty;
}

RadialJet StarDomain::jet(double theta) const {
  if (const auto* e = std::get_if<EllipseShape>(&shape_)) {
    // r = ab D^{-1/2}, D = b^2 cos^2 + a^2 sin^2
    const double a2 = e->a * e->a;
    const double b2 = e->b * e->b;
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double D = b2 * c * c + a2 * s * s;
    const double D1 = (a2 - b2) * 2.0 * s * c;
    const double D2 = (a2 - b2) * 2.0 * (c * c - s * s);
    const double ab = e->a * e->b;
    const double r = ab / std::sqrt(D);
    const double dr = -0.5 * ab * D1 / (D * std::sqrt(D));
    const double d2r = ab * (0.75 * D1 * D1 / (D * D * std::sqrt(D)) - 0.5 * D2 / (D * std::sqrt(D)));
    return {r, dr, d2r};
  }
  RadialJet j{1.0, 0.0, 0.0};
  for (const auto& m : modes()) {
    const double c = std::cos(m.k * theta);
    const double s = std::sin(m.k * theta);
    const double k = m.k;
    j.r += m.a * c + m.b * s;
    j.dr += k * (-m.a * s + m.b * c);
    j.d2r += -k * k * (m.a * c + m.b * s);
  }
  j.r *= rho0_;
  j.dr *= rho0_;
  j.d2r *= rho0_;
  return j;
}

Vec2 StarDomain::point(double theta) const {
  const double r = radius(theta);
  return center_ + r * Vec2(std::cos(theta), std::sin(theta));
}

std::pair<Vec2, Vec2> StarDomain::curve_derivatives(double theta) const {
  const RadialJet j = jet(theta);
  const Vec2 er(std::cos(theta), std::sin(theta));
  const Vec2 et(-std::sin(theta), std::cos(theta));
  return {j.dr * er + j.r * et, (j.d2r - j.r) * er + 2.0 * j.dr * et};
}

BoundaryFrame StarDomain::frame(double theta) const {
  const RadialJet j = jet(theta);
  const Vec2 er(std::cos(theta), std::sin(theta));
  const Vec2 et(-std::sin(theta), std::cos(theta));
  const Vec2 d1 = j.dr * er + j.r * et;
  const double speed = std::hypot(j.r, j.dr);
  BoundaryFrame f;
  f.theta = theta;
  f.point = center_ + j.r * er;
  f.tangent = d1 / speed;
  f.nu = Vec2(f.tangent.y(), -f.tangent.x());
  f.kappa = (j.r * j.r + 2.0 * j.dr * j.dr - j.r * j.d2r) / (speed * speed * speed);
  f.arclength_density = speed;
  return f;
}

double StarDomain::min_radius(int samples) const {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) m = std::min(m, radius(kTwoPi * i / samples));
  return m;
}

double StarDomain::max_radius(int samples) const {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) m = std::max(m, radius(kTwoPi * i / samples));
  return m;
}

double StarDomain::max_speed(int samples) const {
  double m = 0.0;
  for (int i = 0; i < samples; ++i) {
    const RadialJet j = jet(kTwoPi * i / samples);
    m = std::max(m, std::hypot(j.r, j.dr));
  }
  return m;
}

bool StarDomain::contains(const Vec2& x, double tol) const {
  const Vec2 d = x - center_;
  const double rho = d.norm();
  if (rho == 0.0) return true;
  const double r = radius(std::atan2(d.y(), d.x()));
  return rho <= r * (1.0 + tol);
}

StarDomain StarDomain::translated(const Vec2& shift) const { return StarDomain(center_ + shift, rho0_, shape_); }

std::string StarDomain::fingerprint() const {
  std::string s;
  if (const auto* e = std::get_if<EllipseShape>(&shape_)) {
    s = "ellipse(a=" + fmt_double(e->a) + ",b=" + fmt_double(e->b) + ")";
  } else {
    s = "fourier(rho0=" + fmt_double(rho0_) + ",modes=[";
    for (std::size_t i = 0; i < modes().size(); ++i) {
      const auto& m = modes()[i];
      if (i) s += ",";
      s += "(" + std::to_string(m.k) + "," + fmt_double(m.a) + "," + fmt_double(m.b) + ")";
    }
    s += "])";
  }
  s += "@(" + fmt_double(center_.x()) + "," + fmt_double(center_.y()) + ")";
  return s;
}

DomainMeasures measures(const StarDomain& domain) {
  DomainMeasures m;
  m.area = 0.5 * periodic_integral([&](double t) {
    const double r = domain.radius(t);
    return r * r;
  });
  m.perimeter = periodic_integral([&](double t) {
    const RadialJet j = domain.jet(t);
    return std::hypot(j.r, j.dr);
  });
  m.R = kDim * m.area / m.perimeter;

  constexpr int n = 2048;
  std::vector<Vec2> pts(n);
  std::vector<BoundaryFrame> frames(n);
  m.kappa_min = std::numeric_limits<double>::infinity();
  m.kappa_max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    frames[i] = domain.frame(kTwoPi * i / n);
    pts[i] = frames[i].point;
    m.kappa_min = std::min(m.kappa_min, frames[i].kappa);
    m.kappa_max = std::max(m.kappa_max, frames[i].kappa);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) m.diameter = std::max(m.diameter, (pts[i] - pts[j]).norm());
  }

  auto min_dist = [&](const Vec2& c) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) d = std::min(d, (p - c).norm());
    return d;
  };
  // Largest radius r <= cap for which the tangent disk at every test point clears the boundary.
  auto tangent_disk_radius = [&](double cap, double side) {
    double best = cap;
    constexpr int tests = 256;
    for (int t = 0; t < tests; ++t) {
      const BoundaryFrame& f = frames[(t * n) / tests];
      auto ok = [&](double r) {
        const Vec2 c = f.point - side * r * f.nu;
        return min_dist(c) >= r * (1.0 - 1e-9);
      };
      if (ok(best)) continue;
      double lo = 0.0, hi = best;
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
      }
      best = lo;
    }
    return best;
  };
  const double exterior_cap = 100.0 * m.diameter;
  const double interior_curv = m.kappa_max > 0.0 ? 1.0 / m.kappa_max : m.diameter;
  const double exterior_curv = m.kappa_min < 0.0 ? std::min(exterior_cap, -1.0 / m.kappa_min) : exterior_cap;
  m.r_i = tangent_disk_radius(interior_curv, 1.0);
  m.r_e = tangent_disk_radius(exterior_curv, -1.0);
  return m;
}

BoundarySampler::BoundarySampler(const StarDomain& domain, int samples)
    : domain_(domain), theta_(samples), points_(samples) {
  for (int i = 0; i < samples; ++i) {
    theta_[i] = kTwoPi * i / samples;
    points_[i] = domain.point(theta_[i]);
  }
}

double BoundarySampler::nearest_theta(const Vec2& x) const {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double d = (points_[i] - x).squaredNorm();
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  const double spacing = kTwoPi / double(points_.size());
  return refine_squared_distance(domain_, x, theta_[best], spacing, 1.0);
}

double BoundarySampler::distance(const Vec2& x) const {
  const double t = nearest_theta(x);
  return (domain_.point(t) - x).norm();
}

double distance_to_boundary(const StarDomain& domain, const Vec2& x) {
  if (!domain.contains(x, 1e-12)) throw Error(ErrorCode::OutsideDomain, "point lies outside the closed domain");
  return BoundarySampler(domain, 1024).distance(x);
}

std::pair<double, double> radii_about(const StarDomain& domain, const Vec2& z) {
  if (!domain.contains(z, -1e-12)) throw Error(ErrorCode::PointNotInterior, "center point is not interior");
  constexpr int n = 4096;
  const double spacing = kTwoPi / n;
  int imin = 0, imax = 0;
  double dmin = std::numeric_limits<double>::infinity(), dmax = -1.0;
  for (int i = 0; i < n; ++i) {
    const double d = (domain.point(spacing * i) - z).norm();
    if (d < dmin) { dmin = d; imin = i; }
    if (d > dmax) { dmax = d; imax = i; }
  }
  const double tmin = refine_squared_distance(domain, z, spacing * imin, spacing, 1.0);
  const double tmax = refine_squared_distance(domain, z, spacing * imax, spacing, -1.0);
  const double rho_i = std::min(dmin, (domain.point(tmin) - z).norm());
  const double rho_e = std::max(dmax, (domain.point(tmax) - z).norm());
  return {rho_i, rho_e};
}

}  // namespace serrinlab
