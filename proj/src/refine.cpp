#include <stdexcept>
#include <vector>

#include "brinkman/mesh.hpp"

namespace brinkman {

namespace {

struct Bisector {
  const Mesh& mesh;
  const std::vector<char>& marked_facet;
  const std::vector<int>& midpoint;  // new vertex per facet, -1 if not split

  std::vector<std::array<int, 3>> triangles;
  std::vector<int> regions;
  std::vector<int> refinement_edge;

  bool marked(int a, int b) const {
    const int f = mesh.find_facet(a, b);
    return f >= 0 && marked_facet[f];
  }

  // Triangle (v0, v1, v2) with refinement edge opposite local vertex `ref`.
  void emit(const std::array<int, 3>& v, int ref, int region) {
    const int peak = v[ref];
    const int left = v[(ref + 1) % 3];
    const int right = v[(ref + 2) % 3];
    if (!marked(left, right)) {
      triangles.push_back(v);
      regions.push_back(region);
      refinement_edge.push_back(ref);
      return;
    }
    const int m = midpoint[mesh.find_facet(left, right)];
    // The new vertex m becomes the newest vertex of both children, so each
    // child's refinement edge is the parent edge opposite m.
    emit({peak, left, m}, 2, region);
    emit({peak, m, right}, 1, region);
  }
};

}  // namespace

Mesh refine(const Mesh& mesh, std::span<const int> marked) {
  if (marked.empty()) return mesh;

  const int nf = mesh.num_facets();
  std::vector<char> marked_facet(nf, 0);
  for (int e : marked) {
    if (e < 0 || e >= mesh.num_elements())
      throw std::out_of_range("refine: marked element id out of range");
    marked_facet[mesh.element_facets(e)[mesh.refinement_edge(e)]] = 1;
  }

  // Closure: an element with any split edge must split its refinement edge.
  for (bool changed = true; changed;) {
    changed = false;
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const auto facets = mesh.element_facets(e);
      const int ref = facets[mesh.refinement_edge(e)];
      if (marked_facet[ref]) continue;
      if (marked_facet[facets[0]] || marked_facet[facets[1]] || marked_facet[facets[2]]) {
        marked_facet[ref] = 1;
        changed = true;
      }
    }
  }

  std::vector<Point> vertices = mesh.vertices();
  std::vector<int> midpoint(nf, -1);
  for (int f = 0; f < nf; ++f) {
    if (!marked_facet[f]) continue;
    midpoint[f] = static_cast<int>(vertices.size());
    vertices.push_back(mesh.facet_midpoint(f));
  }

  Bisector b{mesh, marked_facet, midpoint, {}, {}, {}};
  b.triangles.reserve(mesh.num_elements() * 2);
  for (int e = 0; e < mesh.num_elements(); ++e) b.emit(mesh.triangle(e), mesh.refinement_edge(e), mesh.region(e));

  std::vector<BoundaryEdge> boundary;
  boundary.reserve(mesh.boundary().size() * 2);
  for (const auto& be : mesh.boundary()) {
    const int f = mesh.find_facet(be.v0, be.v1);
    if (marked_facet[f]) {
      boundary.push_back({be.v0, midpoint[f], be.tag});
      boundary.push_back({midpoint[f], be.v1, be.tag});
    } else {
      boundary.push_back(be);
    }
  }

  return Mesh(std::move(vertices), std::move(b.triangles), std::move(b.regions), std::move(boundary),
              std::move(b.refinement_edge), mesh.generation() + 1);
}

Mesh refine_all(const Mesh& mesh) {
  std::vector<int> all(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) all[e] = e;
  return refine(mesh, all);
}

}  // namespace brinkman
