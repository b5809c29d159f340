#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace fields {

/// Raised when an argument is outside the mathematical domain of an operation
/// (negative speed, non-positive radius, NaN, too few vertices, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into [-pi, pi).
double normalize_angle(double radians);

/// Planar point / vector in meters.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  /// Throws DomainError on non-finite components.
  Vec2(double x_, double y_);

  Vec2 operator+(const Vec2& o) const { return unchecked(x + o.x, y + o.y); }
  Vec2 operator-(const Vec2& o) const { return unchecked(x - o.x, y - o.y); }
  Vec2 operator*(double s) const { return unchecked(x * s, y * s); }
  bool operator==(const Vec2&) const = default;

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const;

  /// Rotates counter-clockwise by `radians` about the origin.
  Vec2 rotated(double radians) const;

  static Vec2 unit(double radians);

 private:
  static Vec2 unchecked(double x_, double y_) {
    Vec2 v;
    v.x = x_;
    v.y = y_;
    return v;
  }
};

/// Ellipse with major axis along `heading`. Semi-axes in meters.
struct EllipseField {
  Vec2 center;
  double r_major = 0.0;
  double r_minor = 0.0;
  double heading = 0.0;

  EllipseField() = default;
  EllipseField(Vec2 center_, double r_major_, double r_minor_, double heading_);
};

/// Half-disk whose flat edge passes through `center`, bulging along `facing`.
struct HalfDiskField {
  Vec2 center;
  double radius = 0.0;
  double facing = 0.0;

  HalfDiskField() = default;
  HalfDiskField(Vec2 center_, double radius_, double facing_);
};

struct CircleField {
  Vec2 center;
  double radius = 0.0;

  CircleField() = default;
  CircleField(Vec2 center_, double radius_);
};

/// Every alternative is convex.
using FieldShape = std::variant<EllipseField, HalfDiskField, CircleField>;

/// Counter-clockwise strictly convex polygon, or the empty polygon.
class ConvexPolygon {
 public:
  static constexpr double kConvexityTolerance = 1e-9;

  /// The empty polygon.
  ConvexPolygon() = default;

  /// Validates winding and convexity; throws DomainError otherwise.
  static ConvexPolygon from_vertices(std::vector<Vec2> vertices);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  bool empty() const { return vertices_.empty(); }

 private:
  struct Trusted {};
  ConvexPolygon(Trusted, std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {}
  friend ConvexPolygon to_polygon(const FieldShape&, int);
  friend ConvexPolygon convex_intersect(const ConvexPolygon&, const ConvexPolygon&);

  std::vector<Vec2> vertices_;
};

struct EllipseAxes {
  double r_major = 0.0;
  double r_minor = 0.0;
};

/// Constant-area ellipse law: r_major / r_minor = k * speed + 1 and
/// r_major * r_minor = area_constant.
EllipseAxes ellipse_axes(double speed, double k, double area_constant);

inline constexpr int kMinPolygonVertices = 8;
inline constexpr int kEngineVertices = 64;

/// Inscribed polygon with `n` vertices. Ellipses and circles are sampled
/// uniformly in the parametric angle starting at the major axis; half-disks
/// get n-2 interior arc samples plus both diameter endpoints.
ConvexPolygon to_polygon(const FieldShape& shape, int n);

/// Shoelace area; 0 for the empty polygon.
double polygon_area(const ConvexPolygon& p);

/// Intersections with area below this are reported as empty.
inline constexpr double kDegenerateArea = 1e-12;

ConvexPolygon convex_intersect(const ConvexPolygon& p, const ConvexPolygon& q);

/// Intersection over union of the n-gon approximations of `a` and `b`.
double iou(const FieldShape& a, const FieldShape& b, int n);

/// Same as iou() but on already polygonized regions.
double polygon_iou(const ConvexPolygon& p, const ConvexPolygon& q);

// Oracles. Independent of the polygon path above; used by tests and the
// acceptance suite.

/// Exact circle/circle IOU from the circular-lens area.
double circle_circle_iou_analytic(Vec2 c1, double r1, Vec2 c2, double r2);

/// Exact point membership (boundary inclusive).
bool contains(const FieldShape& shape, Vec2 p);

struct Box {
  Vec2 lo;
  Vec2 hi;
};

Box bounding_box(const FieldShape& shape);

struct MonteCarloEstimate {
  double iou = 0.0;
  double std_error = 0.0;
};

/// Uniform sampling over the joint bounding box; binomial standard error of
/// the in-both fraction among in-union samples. Deterministic per seed.
MonteCarloEstimate mc_area_oracle(const FieldShape& a, const FieldShape& b,
                                  std::uint64_t samples, std::uint64_t seed);

/// Translates and rotates a shape rigidly about the origin.
FieldShape transformed(const FieldShape& shape, double rotation, Vec2 translation);

}  // namespace fields
