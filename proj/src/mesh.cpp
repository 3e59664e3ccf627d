#include "brinkman/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

namespace brinkman {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

int longest_edge(const std::vector<Point>& v, const std::array<int, 3>& t) {
  int best = 0;
  double best_len = -1.0;
  for (int i = 0; i < 3; ++i) {
    const double len = (v[t[(i + 2) % 3]] - v[t[(i + 1) % 3]]).norm();
    if (len > best_len * (1.0 + 1e-12)) {
      best_len = len;
      best = i;
    }
  }
  return best;
}

bool point_on_segment(const Point& p, const BoundarySegment& s) {
  const Point d = s.to - s.from;
  const double len = d.norm();
  if (len == 0.0) return false;
  const double tol = 1e-10 * std::max(1.0, len);
  if (std::abs(cross(d, p - s.from)) / len > tol) return false;
  const double t = d.dot(p - s.from) / (len * len);
  return t >= -1e-12 && t <= 1.0 + 1e-12;
}

}  // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<int> regions, std::vector<BoundaryEdge> boundary,
           std::vector<int> refinement_edge, int generation)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      regions_(std::move(regions)),
      boundary_(std::move(boundary)),
      refinement_edge_(std::move(refinement_edge)),
      generation_(generation) {
  if (regions_.empty()) regions_.assign(triangles_.size(), 0);
  if (regions_.size() != triangles_.size())
    throw std::invalid_argument("mesh: region array does not match triangle count");
  const int nv = num_vertices();
  for (std::size_t e = 0; e < triangles_.size(); ++e) {
    const auto& t = triangles_[e];
    for (int v : t)
      if (v < 0 || v >= nv) throw std::invalid_argument("mesh: vertex index out of range");
    const double twice_area = cross(vertices_[t[1]] - vertices_[t[0]], vertices_[t[2]] - vertices_[t[0]]);
    if (!(twice_area > 0.0))
      throw std::invalid_argument("mesh: triangle " + std::to_string(e) +
                                  " is degenerate or clockwise");
  }
  if (refinement_edge_.empty()) {
    refinement_edge_.reserve(triangles_.size());
    for (const auto& t : triangles_) refinement_edge_.push_back(longest_edge(vertices_, t));
  }
  if (refinement_edge_.size() != triangles_.size())
    throw std::invalid_argument("mesh: refinement edge array does not match triangle count");
  build_facets();
}

void Mesh::build_facets() {
  facets_.clear();
  element_facets_.assign(triangles_.size(), {-1, -1, -1});
  edge_lookup_.clear();
  edge_lookup_.reserve(triangles_.size() * 2);

  for (int e = 0; e < num_elements(); ++e) {
    const auto& t = triangles_[e];
    for (int i = 0; i < 3; ++i) {
      const int a = t[(i + 1) % 3];
      const int b = t[(i + 2) % 3];
      const auto key = edge_key(a, b);
      auto it = edge_lookup_.find(key);
      if (it == edge_lookup_.end()) {
        Facet f;
        f.vertices = {std::min(a, b), std::max(a, b)};
        f.elements = {e, -1};
        f.local_edge = {i, -1};
        edge_lookup_.emplace(key, num_facets());
        element_facets_[e][i] = num_facets();
        facets_.push_back(f);
      } else {
        Facet& f = facets_[it->second];
        if (f.elements[1] >= 0)
          throw std::invalid_argument("mesh: edge shared by more than two triangles");
        f.elements[1] = e;
        f.local_edge[1] = i;
        f.kind = FacetKind::Interior;
        element_facets_[e][i] = it->second;
      }
    }
  }

  std::unordered_map<std::uint64_t, BoundaryTag> tags;
  tags.reserve(boundary_.size());
  for (const auto& be : boundary_) tags[edge_key(be.v0, be.v1)] = be.tag;

  int boundary_count = 0;
  for (auto& f : facets_) {
    if (!f.is_boundary()) continue;
    ++boundary_count;
    auto it = tags.find(edge_key(f.vertices[0], f.vertices[1]));
    if (it == tags.end())
      throw std::invalid_argument("mesh: boundary facet (" + std::to_string(f.vertices[0]) + ", " +
                                  std::to_string(f.vertices[1]) + ") has no boundary tag");
    f.kind = it->second == BoundaryTag::Gamma1 ? FacetKind::Gamma1 : FacetKind::Gamma2;
  }
  if (static_cast<int>(tags.size()) != boundary_count)
    throw std::invalid_argument("mesh: boundary list contains edges that are not boundary facets");
}

int Mesh::find_facet(int a, int b) const {
  auto it = edge_lookup_.find(edge_key(a, b));
  return it == edge_lookup_.end() ? -1 : it->second;
}

double Mesh::area(int e) const {
  const auto& t = triangles_[e];
  return 0.5 * cross(vertices_[t[1]] - vertices_[t[0]], vertices_[t[2]] - vertices_[t[0]]);
}

double Mesh::diameter(int e) const {
  const auto& t = triangles_[e];
  double h = 0.0;
  for (int i = 0; i < 3; ++i) h = std::max(h, (vertices_[t[(i + 1) % 3]] - vertices_[t[i]]).norm());
  return h;
}

Point Mesh::barycenter(int e) const {
  const auto& t = triangles_[e];
  return (vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]) / 3.0;
}

double Mesh::facet_length(int f) const {
  const auto& v = facets_[f].vertices;
  return (vertices_[v[1]] - vertices_[v[0]]).norm();
}

Point Mesh::facet_midpoint(int f) const {
  const auto& v = facets_[f].vertices;
  return 0.5 * (vertices_[v[0]] + vertices_[v[1]]);
}

Point Mesh::facet_normal(int f) const {
  const Facet& fc = facets_[f];
  const Point t = vertices_[fc.vertices[1]] - vertices_[fc.vertices[0]];
  Point n(t.y(), -t.x());
  n /= n.norm();
  if (n.dot(facet_midpoint(f) - barycenter(fc.elements[0])) < 0.0) n = -n;
  return n;
}

double Mesh::min_angle() const {
  double result = std::numbers::pi;
  for (const auto& t : triangles_) {
    for (int i = 0; i < 3; ++i) {
      const Point a = vertices_[t[(i + 1) % 3]] - vertices_[t[i]];
      const Point b = vertices_[t[(i + 2) % 3]] - vertices_[t[i]];
      result = std::min(result, std::atan2(std::abs(cross(a, b)), a.dot(b)));
    }
  }
  return result;
}

double Mesh::total_area() const {
  double s = 0.0;
  for (int e = 0; e < num_elements(); ++e) s += area(e);
  return s;
}

double Mesh::mesh_size() const {
  double h = 0.0;
  for (int e = 0; e < num_elements(); ++e) h = std::max(h, diameter(e));
  return h;
}

bool Mesh::has_gamma2() const { return count_facets(FacetKind::Gamma2) > 0; }

int Mesh::count_facets(FacetKind kind) const {
  return static_cast<int>(
      std::count_if(facets_.begin(), facets_.end(), [kind](const Facet& f) { return f.kind == kind; }));
}

// ---------------------------------------------------------------------------

void RegionSpec::validate() const {
  if (background_kappa < 0.0) throw std::invalid_argument("region: negative background kappa");
  for (const auto& r : regions) {
    if (r.kappa < 0.0) throw std::invalid_argument("region '" + r.name + "': negative kappa");
    for (const auto& b : r.boxes)
      if (!(b.upper.x() > b.lower.x() && b.upper.y() > b.lower.y()))
        throw std::invalid_argument("region '" + r.name + "': empty box");
  }
  for (std::size_t i = 0; i < regions.size(); ++i)
    for (std::size_t j = i + 1; j < regions.size(); ++j)
      for (const auto& a : regions[i].boxes)
        for (const auto& b : regions[j].boxes) {
          const double w = std::min(a.upper.x(), b.upper.x()) - std::max(a.lower.x(), b.lower.x());
          const double h = std::min(a.upper.y(), b.upper.y()) - std::max(a.lower.y(), b.lower.y());
          if (w > 0.0 && h > 0.0)
            throw std::invalid_argument("regions '" + regions[i].name + "' and '" + regions[j].name +
                                        "' overlap");
        }
}

int RegionSpec::region_of(const Point& p) const {
  for (std::size_t i = 0; i < regions.size(); ++i)
    for (const auto& b : regions[i].boxes)
      if (b.contains(p)) return static_cast<int>(i) + 1;
  return 0;
}

std::vector<double> RegionSpec::kappa_by_region() const {
  std::vector<double> k{background_kappa};
  for (const auto& r : regions) k.push_back(r.kappa);
  return k;
}

bool RegionSpec::aligned_with_grid(int N) const {
  auto on_grid = [N](double c) { return std::abs(c * N - std::round(c * N)) < 1e-9; };
  for (const auto& r : regions)
    for (const auto& b : r.boxes)
      if (!on_grid(b.lower.x()) || !on_grid(b.lower.y()) || !on_grid(b.upper.x()) ||
          !on_grid(b.upper.y()))
        return false;
  return true;
}

RegionSpec RegionSpec::porous_box(double kappa) {
  RegionSpec spec;
  spec.regions.push_back({"porous", {Box{Point(0.375, 0.375), Point(0.625, 0.625)}}, kappa});
  return spec;
}

std::vector<double> element_kappa(const Mesh& mesh, const std::vector<double>& kappa_by_region) {
  std::vector<double> k(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const int r = mesh.region(e);
    if (r < 0 || r >= static_cast<int>(kappa_by_region.size()))
      throw std::out_of_range("element region id has no kappa value");
    k[e] = kappa_by_region[r];
  }
  return k;
}

BoundarySpec BoundarySpec::lshape_default() {
  BoundarySpec s;
  s.segments = {
      {Point(0.0, 0.0), Point(0.5, 0.0), BoundaryTag::Gamma2},
      {Point(1.0, 0.5), Point(1.0, 1.0), BoundaryTag::Gamma2},
      {Point(0.5, 0.0), Point(0.5, 0.5), BoundaryTag::Gamma1},
      {Point(0.5, 0.5), Point(1.0, 0.5), BoundaryTag::Gamma1},
      {Point(1.0, 1.0), Point(0.0, 1.0), BoundaryTag::Gamma1},
      {Point(0.0, 1.0), Point(0.0, 0.0), BoundaryTag::Gamma1},
  };
  return s;
}

// ---------------------------------------------------------------------------

namespace {

Mesh build_grid_mesh(int N, Diagonal pattern, const std::function<bool(int, int)>& keep_cell,
                     const RegionSpec& regions, const BoundarySpec& boundary) {
  if (N < 1) throw std::invalid_argument("mesh resolution N must be >= 1");
  regions.validate();

  const int nn = N + 1;
  std::vector<int> index(static_cast<std::size_t>(nn) * nn, -1);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i)
      if (keep_cell(i, j))
        for (int dj = 0; dj < 2; ++dj)
          for (int di = 0; di < 2; ++di) index[(j + dj) * nn + (i + di)] = 0;

  std::vector<Point> vertices;
  for (int j = 0; j < nn; ++j)
    for (int i = 0; i < nn; ++i)
      if (index[j * nn + i] == 0) {
        index[j * nn + i] = static_cast<int>(vertices.size());
        vertices.emplace_back(static_cast<double>(i) / N, static_cast<double>(j) / N);
      }

  std::vector<std::array<int, 3>> triangles;
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) {
      if (!keep_cell(i, j)) continue;
      const int v00 = index[j * nn + i];
      const int v10 = index[j * nn + i + 1];
      const int v01 = index[(j + 1) * nn + i];
      const int v11 = index[(j + 1) * nn + i + 1];
      if (pattern == Diagonal::Right) {
        triangles.push_back({v00, v10, v11});
        triangles.push_back({v00, v11, v01});
      } else {
        triangles.push_back({v00, v10, v01});
        triangles.push_back({v10, v11, v01});
      }
    }

  std::vector<int> region_ids;
  region_ids.reserve(triangles.size());
  for (const auto& t : triangles)
    region_ids.push_back(regions.region_of((vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0));

  // Boundary edges are those seen once.
  std::unordered_map<std::uint64_t, int> seen;
  for (const auto& t : triangles)
    for (int i = 0; i < 3; ++i) ++seen[edge_key(t[(i + 1) % 3], t[(i + 2) % 3])];

  std::vector<BoundaryEdge> bnd;
  for (const auto& t : triangles)
    for (int i = 0; i < 3; ++i) {
      const int a = t[(i + 1) % 3];
      const int b = t[(i + 2) % 3];
      if (seen[edge_key(a, b)] != 1) continue;
      BoundaryTag tag = BoundaryTag::Gamma1;
      if (!boundary.segments.empty()) {
        bool found = false;
        for (const auto& s : boundary.segments)
          if (point_on_segment(vertices[a], s) && point_on_segment(vertices[b], s)) {
            tag = s.tag;
            found = true;
            break;
          }
        if (!found)
          throw std::invalid_argument("boundary specification does not cover the boundary edge at (" +
                                      std::to_string(vertices[a].x()) + ", " +
                                      std::to_string(vertices[a].y()) + ")");
      }
      bnd.push_back({a, b, tag});
    }

  return Mesh(std::move(vertices), std::move(triangles), std::move(region_ids), std::move(bnd));
}

}  // namespace

Mesh generate_unit_square(int N, Diagonal pattern, const RegionSpec& regions,
                          const BoundarySpec& boundary) {
  return build_grid_mesh(N, pattern, [](int, int) { return true; }, regions, boundary);
}

Mesh generate_square_with_inner_box(int N, const RegionSpec& box, Diagonal pattern) {
  if (N < 1) throw std::invalid_argument("mesh resolution N must be >= 1");
  if (!box.aligned_with_grid(N))
    throw std::invalid_argument("N = " + std::to_string(N) +
                                " does not resolve the region boundary; the box would cut elements");
  return build_grid_mesh(N, pattern, [](int, int) { return true; }, box, BoundarySpec::all_gamma1());
}

RegionSpec lshape_chessboard_regions(const ChessboardSpec& chessboard) {
  const int b = chessboard.blocks_per_side;
  if (b < 1) throw std::invalid_argument("chessboard: blocks_per_side must be >= 1");
  Region porous{"porous", {}, chessboard.kappa};
  const double s = 1.0 / b;
  for (int j = 0; j < b; ++j)
    for (int i = 0; i < b; ++i) {
      const bool even = (i + j) % 2 == 0;
      if (even != chessboard.porous_on_even) continue;
      const Box box{Point(i * s, j * s), Point((i + 1) * s, (j + 1) * s)};
      // Blocks entirely inside the removed quadrant carry no elements.
      if (box.lower.x() >= 0.5 - 1e-12 && box.upper.y() <= 0.5 + 1e-12) continue;
      porous.boxes.push_back(box);
    }
  RegionSpec spec;
  spec.regions.push_back(std::move(porous));
  return spec;
}

Mesh generate_lshape_chessboard(int N, const BoundarySpec& boundary, const ChessboardSpec& chessboard,
                                Diagonal pattern) {
  if (N < 2 || N % 2 != 0)
    throw std::invalid_argument("L-shape requires an even N so that (0.5, 0.5) is a grid vertex");
  if (N % chessboard.blocks_per_side != 0)
    throw std::invalid_argument("L-shape: N must be a multiple of the chessboard block count");
  const int half = N / 2;
  return build_grid_mesh(
      N, pattern, [half](int i, int j) { return !(i >= half && j < half); },
      lshape_chessboard_regions(chessboard), boundary);
}

}  // namespace brinkman
