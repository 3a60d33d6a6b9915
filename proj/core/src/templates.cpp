#include "catre/category.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace catre {

namespace {

constexpr double kPi = std::numbers::pi;

struct Patch {
  double area = 0.0;
  // Draws one point and its outward normal.
  std::function<void(Rng&, Vec3&, Vec3&)> draw;
};

Vec3 radial(double phi) { return {std::cos(phi), 0.0, std::sin(phi)}; }

// Open cylinder about +y. inward flips the normal (inner walls).
Patch cylinder_side(double r, double y0, double y1, bool inward = false) {
  return {2.0 * kPi * r * (y1 - y0), [=](Rng& rng, Vec3& p, Vec3& n) {
            const double phi = uniform(rng, 0.0, 2.0 * kPi);
            const double y = uniform(rng, y0, y1);
            n = radial(phi);
            p = r * n + Vec3(0, y, 0);
            if (inward) n = -n;
          }};
}

// Annulus (r_in may be 0) in the plane y = y0, normal +-y.
Patch disk(double r_in, double r_out, double y0, double ny) {
  return {kPi * (r_out * r_out - r_in * r_in), [=](Rng& rng, Vec3& p, Vec3& n) {
            const double phi = uniform(rng, 0.0, 2.0 * kPi);
            const double rho = std::sqrt(uniform(rng, r_in * r_in, r_out * r_out));
            p = rho * radial(phi) + Vec3(0, y0, 0);
            n = Vec3(0, ny, 0);
          }};
}

// Frustum between radius r0 at y0 and r1 at y1.
Patch frustum(double r0, double y0, double r1, double y1) {
  const double h = y1 - y0;
  const double slant = std::hypot(r0 - r1, h);
  const double rmax = std::max(r0, r1);
  return {kPi * (r0 + r1) * slant, [=](Rng& rng, Vec3& p, Vec3& n) {
            double u = 0.0;
            do {
              u = uniform(rng);
            } while (uniform(rng) * rmax > r0 + (r1 - r0) * u);
            const double phi = uniform(rng, 0.0, 2.0 * kPi);
            const double r = r0 + (r1 - r0) * u;
            p = r * radial(phi) + Vec3(0, y0 + h * u, 0);
            n = (h * radial(phi) + Vec3(0, r0 - r1, 0)).normalized();
          }};
}

// Spherical zone of a sphere centered at c: polar heights y in [y0, y1]
// (relative to c). Uniform in y by Archimedes' theorem.
Patch sphere_zone(const Vec3& c, double r, double y0, double y1, bool inward) {
  return {2.0 * kPi * r * (y1 - y0), [=](Rng& rng, Vec3& p, Vec3& n) {
            const double y = uniform(rng, y0, y1);
            const double rho = std::sqrt(std::max(0.0, r * r - y * y));
            const double phi = uniform(rng, 0.0, 2.0 * kPi);
            n = Vec3(rho * std::cos(phi), y, rho * std::sin(phi)) / r;
            p = c + r * n;
            if (inward) n = -n;
          }};
}

// One rectangular face: origin corner, two edge vectors, outward normal.
Patch face(const Vec3& origin, const Vec3& e0, const Vec3& e1, const Vec3& normal) {
  return {e0.cross(e1).norm(), [=](Rng& rng, Vec3& p, Vec3& n) {
            p = origin + uniform(rng) * e0 + uniform(rng) * e1;
            n = normal;
          }};
}

// Box from a corner and three orthogonal edge vectors.
void add_box(std::vector<Patch>& patches, const Vec3& o, const Vec3& a, const Vec3& b,
             const Vec3& c) {
  const Vec3 na = a.normalized(), nb = b.normalized(), nc = c.normalized();
  patches.push_back(face(o, b, c, -na));
  patches.push_back(face(o + a, b, c, na));
  patches.push_back(face(o, a, c, -nb));
  patches.push_back(face(o + b, a, c, nb));
  patches.push_back(face(o, a, b, -nc));
  patches.push_back(face(o + c, a, b, nc));
}

// Half torus in the x-y plane bulging toward +x.
Patch handle(const Vec3& center, double major, double minor) {
  const double area = 2.0 * kPi * minor * kPi * major;
  return {area, [=](Rng& rng, Vec3& p, Vec3& n) {
            double psi = 0.0;
            do {
              psi = uniform(rng, 0.0, 2.0 * kPi);
            } while (uniform(rng) * (major + minor) > major + minor * std::cos(psi));
            const double phi = uniform(rng, -kPi / 2.0, kPi / 2.0);
            const Vec3 ring(std::cos(phi), std::sin(phi), 0.0);
            n = std::cos(psi) * ring + std::sin(psi) * Vec3::UnitZ();
            p = center + major * ring + minor * n;
          }};
}

std::vector<Patch> bottle(std::span<const double> q) {
  const double r = q[0], body_h = q[1], shoulder_h = q[2], neck_r = q[3], neck_h = q[4];
  const double y1 = body_h, y2 = body_h + shoulder_h, y3 = y2 + neck_h;
  return {cylinder_side(r, 0.0, y1), frustum(r, y1, neck_r, y2), cylinder_side(neck_r, y2, y3),
          disk(0.0, r, 0.0, -1.0), disk(0.0, neck_r, y3, 1.0)};
}

std::vector<Patch> bowl(std::span<const double> q) {
  const double r = q[0], depth = q[1] * r, thick = q[2];
  const Vec3 c(0, r, 0);
  const double ri = r - thick;
  // Rim plane sits at height `depth` above the bottom.
  const double rim_y = depth - r;
  const double rim_out = std::sqrt(r * r - rim_y * rim_y);
  const double rim_in = std::sqrt(std::max(0.0, ri * ri - rim_y * rim_y));
  return {sphere_zone(c, r, -r, rim_y, false), sphere_zone(c, ri, -ri, rim_y, true),
          disk(rim_in, rim_out, depth, 1.0)};
}

std::vector<Patch> can(std::span<const double> q) {
  const double r = q[0], h = q[1];
  return {cylinder_side(r, 0.0, h), disk(0.0, r, 0.0, -1.0), disk(0.0, r, h, 1.0)};
}

std::vector<Patch> laptop(std::span<const double> q) {
  const double w = q[0], d = q[1], base_th = q[2], screen_th = q[3];
  const double angle = q[4] * kPi / 180.0, screen_h = q[5] * d;
  std::vector<Patch> patches;
  add_box(patches, Vec3(-w / 2, 0, -d / 2), Vec3(w, 0, 0), Vec3(0, base_th, 0), Vec3(0, 0, d));
  // Screen hinged on the back edge; `angle` is measured from the base plane.
  const Vec3 up(0, std::sin(angle), std::cos(angle));
  const Vec3 front(0, -std::cos(angle), std::sin(angle));
  const Vec3 hinge(-w / 2, base_th, -d / 2);
  add_box(patches, hinge - screen_th * front, Vec3(w, 0, 0), screen_h * up, screen_th * front);
  return patches;
}

std::vector<Patch> mug(std::span<const double> q) {
  const double r = q[0], h = q[1], thick = q[2], major = q[3], minor = q[4];
  const double ri = r - thick;
  return {cylinder_side(r, 0.0, h),         cylinder_side(ri, thick, h, true),
          disk(0.0, r, 0.0, -1.0),          disk(0.0, ri, thick, 1.0),
          disk(ri, r, h, 1.0),              handle(Vec3(r, h / 2, 0), major, minor)};
}

std::vector<CategorySpec> build_defaults() {
  const SymmetrySpec y_axis = SymmetrySpec::continuous(Vec3::UnitY());
  return {
      {"bottle", TemplateId::kBottle,
       {{"radius", 0.028, 0.042}, {"body_height", 0.11, 0.17}, {"shoulder_height", 0.02, 0.04},
        {"neck_radius", 0.010, 0.016}, {"neck_height", 0.02, 0.05}},
       y_axis},
      {"bowl", TemplateId::kBowl,
       {{"radius", 0.055, 0.09}, {"depth_ratio", 0.45, 0.75}, {"thickness", 0.004, 0.008}},
       y_axis},
      {"can", TemplateId::kCan, {{"radius", 0.028, 0.045}, {"height", 0.09, 0.14}}, y_axis},
      {"laptop", TemplateId::kLaptop,
       {{"width", 0.26, 0.36},
        {"depth", 0.18, 0.25},
        {"base_thickness", 0.012, 0.02},
        {"screen_thickness", 0.005, 0.009},
        {"open_angle_deg", 95.0, 125.0},
        {"screen_ratio", 0.9, 1.0}},
       SymmetrySpec::none()},
      {"mug", TemplateId::kMug,
       {{"radius", 0.035, 0.05},
        {"height", 0.08, 0.11},
        {"thickness", 0.003, 0.006},
        {"handle_major", 0.022, 0.03},
        {"handle_minor", 0.005, 0.008}},
       SymmetrySpec::none()},
  };
}

}  // namespace

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::kBottle: return "bottle";
    case TemplateId::kBowl: return "bowl";
    case TemplateId::kCan: return "can";
    case TemplateId::kLaptop: return "laptop";
    case TemplateId::kMug: return "mug";
  }
  return "unknown";
}

TemplateId template_from_string(std::string_view name) {
  for (TemplateId id : {TemplateId::kBottle, TemplateId::kBowl, TemplateId::kCan,
                        TemplateId::kLaptop, TemplateId::kMug}) {
    if (to_string(id) == name) return id;
  }
  throw Error(ErrorKind::kUnknownCategory, "unknown template '" + std::string(name) + "'");
}

std::vector<double> CategorySpec::mean_params() const {
  std::vector<double> out;
  out.reserve(shape_param_ranges.size());
  for (const auto& range : shape_param_ranges) out.push_back(0.5 * (range.min + range.max));
  return out;
}

const std::vector<CategorySpec>& default_categories() {
  static const std::vector<CategorySpec> categories = build_defaults();
  return categories;
}

const CategorySpec& find_category(std::string_view name) {
  for (const auto& cat : default_categories()) {
    if (cat.name == name) return cat;
  }
  throw Error(ErrorKind::kUnknownCategory, "unknown category '" + std::string(name) + "'");
}

SurfaceSample sample_template(TemplateId shape, std::span<const double> params, int n_points,
                              Rng& rng) {
  std::vector<Patch> patches;
  std::size_t expected = 0;
  switch (shape) {
    case TemplateId::kBottle: expected = 5; break;
    case TemplateId::kBowl: expected = 3; break;
    case TemplateId::kCan: expected = 2; break;
    case TemplateId::kLaptop: expected = 6; break;
    case TemplateId::kMug: expected = 5; break;
  }
  if (params.size() != expected) {
    throw Error(ErrorKind::kInvalidConfig, "wrong parameter count for template " +
                                               std::string(to_string(shape)));
  }
  switch (shape) {
    case TemplateId::kBottle: patches = bottle(params); break;
    case TemplateId::kBowl: patches = bowl(params); break;
    case TemplateId::kCan: patches = can(params); break;
    case TemplateId::kLaptop: patches = laptop(params); break;
    case TemplateId::kMug: patches = mug(params); break;
  }

  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& patch : patches) {
    total += patch.area;
    cumulative.push_back(total);
  }

  SurfaceSample out;
  out.points.resize(n_points, 3);
  out.normals.resize(n_points, 3);
  for (int i = 0; i < n_points; ++i) {
    const double pick = uniform(rng, 0.0, total);
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    const auto idx = std::min<std::size_t>(it - cumulative.begin(), patches.size() - 1);
    Vec3 p, n;
    patches[idx].draw(rng, p, n);
    out.points.row(i) = p.transpose();
    out.normals.row(i) = n.transpose();
  }
  const Vec3 lo = out.points.colwise().minCoeff().transpose();
  const Vec3 hi = out.points.colwise().maxCoeff().transpose();
  const Vec3 center = 0.5 * (lo + hi);
  out.points.rowwise() -= center.transpose();
  out.size = hi - lo;
  return out;
}

}  // namespace catre
