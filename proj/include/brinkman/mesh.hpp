#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace brinkman {

using Point = Eigen::Vector2d;

/// Boundary condition carried by a boundary facet: no-slip (Gamma1) or
/// do-nothing (Gamma2).
enum class BoundaryTag : int { Gamma1 = 1, Gamma2 = 2 };

enum class FacetKind { Interior, Gamma1, Gamma2 };

struct BoundaryEdge {
  int v0 = 0;
  int v1 = 0;
  BoundaryTag tag = BoundaryTag::Gamma1;
};

/// Mesh edge. `vertices` is sorted ascending, which fixes the facet
/// parametrization shared by both neighbours. `normal()` on the mesh is the
/// unit normal pointing out of `elements[0]`; on boundary facets
/// `elements[1] == -1`.
struct Facet {
  std::array<int, 2> vertices{};
  std::array<int, 2> elements{-1, -1};
  std::array<int, 2> local_edge{-1, -1};
  FacetKind kind = FacetKind::Interior;

  bool is_boundary() const { return elements[1] < 0; }
};

/// Conforming triangulation with region ids and boundary tags.
///
/// Local edge i of a triangle joins vertices (i+1)%3 and (i+2)%3, i.e. it is
/// the edge opposite local vertex i. Immutable once constructed.
class Mesh {
public:
  Mesh() = default;

  /// Validates orientation and boundary coverage; throws std::invalid_argument
  /// on clockwise or degenerate triangles, non-manifold edges, or boundary
  /// facets without a tag. An empty `refinement_edge` selects the longest
  /// edge of every triangle.
  Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
       std::vector<int> regions, std::vector<BoundaryEdge> boundary,
       std::vector<int> refinement_edge = {}, int generation = 0);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_elements() const { return static_cast<int>(triangles_.size()); }
  int num_facets() const { return static_cast<int>(facets_.size()); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<int>& regions() const { return regions_; }
  const std::vector<Facet>& facets() const { return facets_; }
  const std::vector<BoundaryEdge>& boundary() const { return boundary_; }
  const std::vector<int>& refinement_edges() const { return refinement_edge_; }
  int generation() const { return generation_; }

  const Point& vertex(int v) const { return vertices_[v]; }
  const std::array<int, 3>& triangle(int e) const { return triangles_[e]; }
  int region(int e) const { return regions_[e]; }
  const Facet& facet(int f) const { return facets_[f]; }
  int refinement_edge(int e) const { return refinement_edge_[e]; }

  /// Facet index of each local edge of element e.
  std::span<const int, 3> element_facets(int e) const {
    return std::span<const int, 3>(element_facets_[e]);
  }

  /// Facet joining two vertices, or -1.
  int find_facet(int a, int b) const;

  double area(int e) const;
  /// Longest edge (element diameter h_K).
  double diameter(int e) const;
  Point barycenter(int e) const;
  double facet_length(int f) const;
  Point facet_midpoint(int f) const;
  /// Unit normal pointing out of facet(f).elements[0].
  Point facet_normal(int f) const;
  /// Smallest interior angle over all triangles, in radians.
  double min_angle() const;
  double total_area() const;
  /// max_K h_K.
  double mesh_size() const;

  bool has_gamma2() const;
  int count_facets(FacetKind kind) const;

private:
  void build_facets();

  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<int> regions_;
  std::vector<BoundaryEdge> boundary_;
  std::vector<int> refinement_edge_;
  int generation_ = 0;

  std::vector<Facet> facets_;
  std::vector<std::array<int, 3>> element_facets_;
  std::unordered_map<std::uint64_t, int> edge_lookup_;
};

// ---------------------------------------------------------------------------
// Regions

struct Box {
  Point lower;
  Point upper;
  bool contains(const Point& p) const {
    return p.x() > lower.x() && p.x() < upper.x() && p.y() > lower.y() && p.y() < upper.y();
  }
};

struct Region {
  std::string name;
  std::vector<Box> boxes;  // union of axis-aligned boxes
  double kappa = 0.0;      // inverse permeability, K^{-1} = kappa * I
};

/// Tagged subdomains. Region id 0 is the background (free flow) with
/// `background_kappa`; `regions[i]` has id i + 1. Elements are assigned by
/// barycenter.
struct RegionSpec {
  std::vector<Region> regions;
  double background_kappa = 0.0;

  /// Throws std::invalid_argument on negative kappa or overlapping regions.
  void validate() const;
  int region_of(const Point& p) const;
  /// Inverse permeability indexed by region id.
  std::vector<double> kappa_by_region() const;
  /// True when every box edge lies on a grid line x = i/N, y = j/N.
  bool aligned_with_grid(int N) const;

  /// Omega_D = (3/8, 5/8)^2 with the given kappa, free flow elsewhere.
  static RegionSpec porous_box(double kappa);
};

/// Per-element inverse permeability.
std::vector<double> element_kappa(const Mesh& mesh, const std::vector<double>& kappa_by_region);

// ---------------------------------------------------------------------------
// Boundary specification

struct BoundarySegment {
  Point from;
  Point to;
  BoundaryTag tag = BoundaryTag::Gamma1;
};

/// Ordered list of segments; the first segment containing a boundary facet
/// decides its tag.
struct BoundarySpec {
  std::vector<BoundarySegment> segments;

  static BoundarySpec all_gamma1() { return {}; }
  /// L-shape default: do-nothing on the two arm ends (x = 1, y in [0.5, 1] and
  /// y = 0, x in [0, 0.5]), no-slip elsewhere.
  static BoundarySpec lshape_default();
};

// ---------------------------------------------------------------------------
// Generators

/// Direction of the diagonal splitting each grid cell.
enum class Diagonal {
  Right,  // lower-left to upper-right
  Left,   // lower-right to upper-left
};

Mesh generate_unit_square(int N, Diagonal pattern = Diagonal::Right,
                          const RegionSpec& regions = {},
                          const BoundarySpec& boundary = BoundarySpec::all_gamma1());

/// Unit square with the box region resolved by grid lines. Rejects N for
/// which the region boundary would cut elements.
Mesh generate_square_with_inner_box(int N, const RegionSpec& box,
                                    Diagonal pattern = Diagonal::Right);

struct ChessboardSpec {
  int blocks_per_side = 2;     // chessboard blocks across the unit square
  double kappa = 1e3;          // value on the porous blocks
  bool porous_on_even = true;  // block (i, j) porous iff (i + j) even
};

/// (0,1)^2 without the lower-right quadrant, chessboard permeability blocks.
/// N must be even and a multiple of blocks_per_side.
Mesh generate_lshape_chessboard(int N, const BoundarySpec& boundary = BoundarySpec::lshape_default(),
                                const ChessboardSpec& chessboard = {},
                                Diagonal pattern = Diagonal::Right);

/// Region spec describing the chessboard porous blocks inside the L-shape.
RegionSpec lshape_chessboard_regions(const ChessboardSpec& chessboard);

// ---------------------------------------------------------------------------
// Refinement

/// Newest-vertex bisection with conformity closure. Every marked element is
/// bisected at least once; children inherit regions and boundary tags.
/// An empty marked set returns a copy of the input.
Mesh refine(const Mesh& mesh, std::span<const int> marked);

/// Bisects every element once.
Mesh refine_all(const Mesh& mesh);

// ---------------------------------------------------------------------------
// ASCII exchange format (`brinkman-dg-mesh v1`)

void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);
void write_mesh_file(const std::string& path, const Mesh& mesh);
Mesh read_mesh_file(const std::string& path);

}  // namespace brinkman
