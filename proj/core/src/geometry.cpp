#include "fields/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fields {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}

void require_positive(double v, const char* what) {
  require_finite(v, what);
  if (!(v > 0.0)) throw DomainError(std::string(what) + " must be > 0");
}

double signed_area(std::span<const Vec2> pts) {
  double twice = 0.0;
  for (std::size_t i = 0, n = pts.size(); i < n; ++i) {
    const Vec2& a = pts[i];
    const Vec2& b = pts[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

// Drops repeated and collinear vertices left behind by clipping.
std::vector<Vec2> simplify(std::vector<Vec2> pts) {
  constexpr double kMergeDistance = 1e-12;
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const Vec2& p : pts) {
    if (!out.empty() && (p - out.back()).norm() <= kMergeDistance) continue;
    out.push_back(p);
  }
  while (out.size() > 1 && (out.front() - out.back()).norm() <= kMergeDistance) out.pop_back();

  bool changed = true;
  while (changed && out.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < out.size() && out.size() >= 3; ++i) {
      const Vec2& prev = out[(i + out.size() - 1) % out.size()];
      const Vec2& next = out[(i + 1) % out.size()];
      const Vec2 e1 = out[i] - prev;
      const Vec2 e2 = next - out[i];
      if (std::abs(e1.cross(e2)) <= 1e-15 * std::max(1.0, e1.norm() * e2.norm())) {
        out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        --i;
      }
    }
  }
  return out;
}

Vec2 line_intersection(const Vec2& p0, const Vec2& p1, const Vec2& a, const Vec2& b) {
  const Vec2 edge = b - a;
  const double d0 = edge.cross(p0 - a);
  const double d1 = edge.cross(p1 - a);
  const double s = d0 / (d0 - d1);
  return p0 + (p1 - p0) * s;
}

}  // namespace

double normalize_angle(double radians) {
  require_finite(radians, "angle");
  double a = std::fmod(radians + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  a -= kPi;
  if (a >= kPi) a -= 2.0 * kPi;
  return a;
}

Vec2::Vec2(double x_, double y_) : x(x_), y(y_) {
  require_finite(x_, "Vec2.x");
  require_finite(y_, "Vec2.y");
}

double Vec2::norm() const { return std::hypot(x, y); }

Vec2 Vec2::rotated(double radians) const {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  return unchecked(c * x - s * y, s * x + c * y);
}

Vec2 Vec2::unit(double radians) { return unchecked(std::cos(radians), std::sin(radians)); }

EllipseField::EllipseField(Vec2 center_, double r_major_, double r_minor_, double heading_)
    : center(center_), r_major(r_major_), r_minor(r_minor_), heading(normalize_angle(heading_)) {
  require_positive(r_minor_, "ellipse r_minor");
  require_finite(r_major_, "ellipse r_major");
  if (r_major_ < r_minor_) throw DomainError("ellipse r_major must be >= r_minor");
}

HalfDiskField::HalfDiskField(Vec2 center_, double radius_, double facing_)
    : center(center_), radius(radius_), facing(normalize_angle(facing_)) {
  require_positive(radius_, "half-disk radius");
}

CircleField::CircleField(Vec2 center_, double radius_) : center(center_), radius(radius_) {
  require_positive(radius_, "circle radius");
}

ConvexPolygon ConvexPolygon::from_vertices(std::vector<Vec2> vertices) {
  if (vertices.empty()) return {};
  if (vertices.size() < 3) throw DomainError("polygon needs at least 3 vertices");
  for (const Vec2& v : vertices) {
    require_finite(v.x, "polygon vertex");
    require_finite(v.y, "polygon vertex");
  }
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e1 = vertices[(i + 1) % n] - vertices[i];
    const Vec2 e2 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
    if (e1.norm() == 0.0) throw DomainError("polygon has repeated vertices");
    if (e1.cross(e2) < -kConvexityTolerance) {
      throw DomainError("polygon is not convex with counter-clockwise winding");
    }
  }
  if (!(signed_area(vertices) > 0.0)) {
    throw DomainError("polygon must have positive counter-clockwise area");
  }
  return ConvexPolygon(Trusted{}, std::move(vertices));
}

EllipseAxes ellipse_axes(double speed, double k, double area_constant) {
  require_finite(speed, "speed");
  require_finite(k, "k");
  require_finite(area_constant, "area constant");
  if (speed < 0.0) throw DomainError("speed must be >= 0");
  if (k < 0.0) throw DomainError("k must be >= 0");
  if (!(area_constant > 0.0)) throw DomainError("area constant must be > 0");
  const double ratio = k * speed + 1.0;
  return {std::sqrt(area_constant * ratio), std::sqrt(area_constant / ratio)};
}

ConvexPolygon to_polygon(const FieldShape& shape, int n) {
  if (n < kMinPolygonVertices) {
    throw DomainError("polygon vertex count must be >= " + std::to_string(kMinPolygonVertices));
  }
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n));

  if (const auto* e = std::get_if<EllipseField>(&shape)) {
    for (int i = 0; i < n; ++i) {
      const double theta = 2.0 * kPi * i / n;
      const Vec2 local(e->r_major * std::cos(theta), e->r_minor * std::sin(theta));
      pts.push_back(e->center + local.rotated(e->heading));
    }
  } else if (const auto* c = std::get_if<CircleField>(&shape)) {
    for (int i = 0; i < n; ++i) {
      const double theta = 2.0 * kPi * i / n;
      pts.push_back(c->center + Vec2(c->radius * std::cos(theta), c->radius * std::sin(theta)));
    }
  } else {
    const auto& h = std::get<HalfDiskField>(shape);
    const Vec2 u = Vec2::unit(h.facing);
    const Vec2 right(u.y * h.radius, -u.x * h.radius);
    pts.push_back(h.center + right);
    const int arc_segments = n - 1;
    for (int j = 1; j < n - 1; ++j) {
      const double phi = h.facing - kPi / 2.0 + kPi * j / arc_segments;
      pts.push_back(h.center + Vec2::unit(phi) * h.radius);
    }
    pts.push_back(h.center - right);
  }
  return ConvexPolygon(ConvexPolygon::Trusted{}, std::move(pts));
}

double polygon_area(const ConvexPolygon& p) {
  if (p.empty()) return 0.0;
  return std::max(0.0, signed_area(p.vertices()));
}

ConvexPolygon convex_intersect(const ConvexPolygon& p, const ConvexPolygon& q) {
  if (p.empty() || q.empty()) return {};

  // Sutherland-Hodgman: clip p by every edge of q (q is convex, CCW).
  std::vector<Vec2> out = p.vertices();
  std::vector<Vec2> in;
  const auto& clip = q.vertices();
  for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
    const Vec2& a = clip[i];
    const Vec2& b = clip[(i + 1) % clip.size()];
    const Vec2 edge = b - a;
    in.swap(out);
    out.clear();
    for (std::size_t j = 0; j < in.size(); ++j) {
      const Vec2& cur = in[j];
      const Vec2& nxt = in[(j + 1) % in.size()];
      const bool cur_in = edge.cross(cur - a) >= 0.0;
      const bool nxt_in = edge.cross(nxt - a) >= 0.0;
      if (cur_in) out.push_back(cur);
      if (cur_in != nxt_in) out.push_back(line_intersection(cur, nxt, a, b));
    }
  }

  out = simplify(std::move(out));
  if (out.size() < 3 || signed_area(out) < kDegenerateArea) return {};
  return ConvexPolygon(ConvexPolygon::Trusted{}, std::move(out));
}

double polygon_iou(const ConvexPolygon& p, const ConvexPolygon& q) {
  const double area_p = polygon_area(p);
  const double area_q = polygon_area(q);
  if (area_p <= 0.0 || area_q <= 0.0) return 0.0;
  const double inter = polygon_area(convex_intersect(p, q));
  const double uni = area_p + area_q - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou(const FieldShape& a, const FieldShape& b, int n) {
  return polygon_iou(to_polygon(a, n), to_polygon(b, n));
}

double circle_circle_iou_analytic(Vec2 c1, double r1, Vec2 c2, double r2) {
  require_positive(r1, "r1");
  require_positive(r2, "r2");
  const double d = (c2 - c1).norm();
  const double a1 = kPi * r1 * r1;
  const double a2 = kPi * r2 * r2;
  double inter = 0.0;
  if (d >= r1 + r2) {
    inter = 0.0;
  } else if (d <= std::abs(r1 - r2)) {
    inter = std::min(a1, a2);
  } else {
    const double alpha = std::acos(std::clamp((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1), -1.0, 1.0));
    const double beta = std::acos(std::clamp((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2), -1.0, 1.0));
    const double kite = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
    inter = r1 * r1 * alpha + r2 * r2 * beta - 0.5 * std::sqrt(std::max(0.0, kite));
  }
  return inter / (a1 + a2 - inter);
}

bool contains(const FieldShape& shape, Vec2 p) {
  if (const auto* e = std::get_if<EllipseField>(&shape)) {
    const Vec2 local = (p - e->center).rotated(-e->heading);
    const double u = local.x / e->r_major;
    const double v = local.y / e->r_minor;
    return u * u + v * v <= 1.0;
  }
  if (const auto* c = std::get_if<CircleField>(&shape)) {
    const Vec2 d = p - c->center;
    return d.dot(d) <= c->radius * c->radius;
  }
  const auto& h = std::get<HalfDiskField>(shape);
  const Vec2 d = p - h.center;
  return d.dot(d) <= h.radius * h.radius && d.dot(Vec2::unit(h.facing)) >= 0.0;
}

Box bounding_box(const FieldShape& shape) {
  if (const auto* e = std::get_if<EllipseField>(&shape)) {
    const double c = std::cos(e->heading);
    const double s = std::sin(e->heading);
    const double hx = std::hypot(e->r_major * c, e->r_minor * s);
    const double hy = std::hypot(e->r_major * s, e->r_minor * c);
    return {e->center - Vec2(hx, hy), e->center + Vec2(hx, hy)};
  }
  const Vec2 center = std::visit([](const auto& f) { return f.center; }, shape);
  const double r = std::holds_alternative<CircleField>(shape) ? std::get<CircleField>(shape).radius
                                                               : std::get<HalfDiskField>(shape).radius;
  return {center - Vec2(r, r), center + Vec2(r, r)};
}

MonteCarloEstimate mc_area_oracle(const FieldShape& a, const FieldShape& b, std::uint64_t samples,
                                  std::uint64_t seed) {
  if (samples < 10000) throw DomainError("Monte-Carlo oracle needs at least 1e4 samples");
  const Box ba = bounding_box(a);
  const Box bb = bounding_box(b);
  const Vec2 lo(std::min(ba.lo.x, bb.lo.x), std::min(ba.lo.y, bb.lo.y));
  const Vec2 hi(std::max(ba.hi.x, bb.hi.x), std::max(ba.hi.y, bb.hi.y));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(lo.x, hi.x);
  std::uniform_real_distribution<double> uy(lo.y, hi.y);
  std::uint64_t in_union = 0;
  std::uint64_t in_both = 0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const Vec2 p(ux(rng), uy(rng));
    const bool in_a = contains(a, p);
    const bool in_b = contains(b, p);
    in_union += (in_a || in_b) ? 1 : 0;
    in_both += (in_a && in_b) ? 1 : 0;
  }
  if (in_union == 0) return {};
  const double p = static_cast<double>(in_both) / static_cast<double>(in_union);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(in_union))};
}

FieldShape transformed(const FieldShape& shape, double rotation, Vec2 translation) {
  return std::visit(
      [&](const auto& f) -> FieldShape {
        using T = std::decay_t<decltype(f)>;
        const Vec2 c = f.center.rotated(rotation) + translation;
        if constexpr (std::is_same_v<T, EllipseField>) {
          return EllipseField(c, f.r_major, f.r_minor, f.heading + rotation);
        } else if constexpr (std::is_same_v<T, HalfDiskField>) {
          return HalfDiskField(c, f.radius, f.facing + rotation);
        } else {
          return CircleField(c, f.radius);
        }
      },
      shape);
}

}  // namespace fields
