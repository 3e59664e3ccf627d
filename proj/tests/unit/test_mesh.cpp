#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>
#include <sstream>

#include "brinkman/femspace.hpp"
#include "brinkman/mesh.hpp"

using namespace brinkman;

namespace {

double signed_area(const Mesh& m, int e) {
  const auto& t = m.triangle(e);
  const Point a = m.vertex(t[1]) - m.vertex(t[0]);
  const Point b = m.vertex(t[2]) - m.vertex(t[0]);
  return 0.5 * (a.x() * b.y() - a.y() * b.x());
}

// Checks orientation, facet adjacency, boundary coverage, and the absence of
// hanging nodes (no vertex strictly inside any facet).
void check_valid(const Mesh& m) {
  for (int e = 0; e < m.num_elements(); ++e) REQUIRE(signed_area(m, e) > 0.0);
  int boundary = 0;
  for (int f = 0; f < m.num_facets(); ++f) {
    const Facet& fc = m.facet(f);
    REQUIRE(fc.elements[0] >= 0);
    if (fc.is_boundary()) {
      ++boundary;
      REQUIRE(fc.kind != FacetKind::Interior);
    } else {
      REQUIRE(fc.kind == FacetKind::Interior);
      REQUIRE(fc.elements[0] != fc.elements[1]);
    }
    const Point a = m.vertex(fc.vertices[0]), b = m.vertex(fc.vertices[1]);
    const double len = (b - a).norm();
    for (int v = 0; v < m.num_vertices(); ++v) {
      if (v == fc.vertices[0] || v == fc.vertices[1]) continue;
      const Point p = m.vertex(v);
      const double cross = (b - a).x() * (p - a).y() - (b - a).y() * (p - a).x();
      const double t = (p - a).dot(b - a) / (len * len);
      REQUIRE_FALSE((std::abs(cross) < 1e-12 * len && t > 1e-12 && t < 1 - 1e-12));
    }
  }
  CHECK(boundary == m.count_facets(FacetKind::Gamma1) + m.count_facets(FacetKind::Gamma2));
  CHECK(m.num_facets() ==
        m.count_facets(FacetKind::Interior) + m.count_facets(FacetKind::Gamma1) + m.count_facets(FacetKind::Gamma2));
}

}  // namespace

TEST_CASE("unit square counts") {
  const Mesh m1 = generate_unit_square(1);
  CHECK(m1.num_vertices() == 4);
  CHECK(m1.num_elements() == 2);
  CHECK(m1.num_facets() == 5);
  CHECK(m1.count_facets(FacetKind::Interior) == 1);
  CHECK(m1.count_facets(FacetKind::Gamma1) == 4);
  check_valid(m1);

  const Mesh m2 = generate_unit_square(2, Diagonal::Left);
  CHECK(m2.num_vertices() == 9);
  CHECK(m2.num_elements() == 8);
  check_valid(m2);

  const Mesh m16 = generate_unit_square(16);
  CHECK(m16.num_elements() == 512);
  const DofMap dm(m16.num_elements(), 1);
  CHECK(dm.total() == 3584);
  for (int k = 1; k <= 3; ++k)
    CHECK(DofMap(m16.num_elements(), k).total() == 2 * 16 * 16 * (2 * dim_pk(k) + dim_pk(k - 1)));
}

TEST_CASE("square with inner box") {
  const Mesh m8 = generate_square_with_inner_box(8, RegionSpec::porous_box(1e3));
  int porous = 0;
  for (int e = 0; e < m8.num_elements(); ++e) {
    const Point c = m8.barycenter(e);
    const bool inside = c.x() > 0.375 && c.x() < 0.625 && c.y() > 0.375 && c.y() < 0.625;
    CHECK((m8.region(e) != 0) == inside);
    porous += m8.region(e) != 0;
  }
  CHECK(porous == 8);
  const auto kappa = element_kappa(m8, RegionSpec::porous_box(1e3).kappa_by_region());
  for (int e = 0; e < m8.num_elements(); ++e) CHECK(kappa[e] == (m8.region(e) != 0 ? 1e3 : 0.0));

  const Mesh m16 = generate_square_with_inner_box(16, RegionSpec::porous_box(1e3));
  int p16 = 0;
  for (int e = 0; e < m16.num_elements(); ++e) p16 += m16.region(e) != 0;
  CHECK(p16 == 32);
  check_valid(m16);

  // Region interfaces coincide with facets: no element straddles the box.
  for (int e = 0; e < m16.num_elements(); ++e) {
    const auto& t = m16.triangle(e);
    for (int i = 0; i < 3; ++i) {
      const Point v = m16.vertex(t[i]);
      const bool strictly_inside = v.x() > 0.375 && v.x() < 0.625 && v.y() > 0.375 && v.y() < 0.625;
      if (strictly_inside) CHECK(m16.region(e) != 0);
    }
  }

  CHECK_THROWS_AS(generate_square_with_inner_box(4, RegionSpec::porous_box(1e3)), std::invalid_argument);
}

TEST_CASE("L-shape chessboard") {
  const Mesh m2 = generate_lshape_chessboard(2);
  CHECK(m2.num_elements() == 6);
  const Mesh m10 = generate_lshape_chessboard(10, BoundarySpec::lshape_default(), {5, 1e3, true});
  CHECK(m10.num_elements() == (10 * 10 - 5 * 5) * 2);
  check_valid(m10);
  CHECK(m10.has_gamma2());
  CHECK(std::abs(m10.total_area() - 0.75) < 1e-14);

  const Mesh closed = generate_lshape_chessboard(4, BoundarySpec::all_gamma1());
  CHECK_FALSE(closed.has_gamma2());
  CHECK(closed.count_facets(FacetKind::Gamma2) == 0);

  // Gamma2 facets of the default spec lie on the two arm ends.
  const Mesh m4 = generate_lshape_chessboard(4);
  for (int f = 0; f < m4.num_facets(); ++f)
    if (m4.facet(f).kind == FacetKind::Gamma2) {
      const Point c = m4.facet_midpoint(f);
      const bool right_end = std::abs(c.x() - 1.0) < 1e-14 && c.y() > 0.5;
      const bool bottom_end = std::abs(c.y()) < 1e-14 && c.x() < 0.5;
      CHECK((right_end || bottom_end));
    }
}

TEST_CASE("refinement of the two-triangle square") {
  const Mesh m = generate_unit_square(1);
  const std::vector<int> both{0, 1};
  const Mesh r2 = refine(m, both);
  CHECK(r2.num_elements() == 4);
  check_valid(r2);

  const std::vector<int> one{0};
  const Mesh r1 = refine(m, one);
  CHECK(r1.num_elements() == 4);
  check_valid(r1);

  CHECK(refine(m, std::vector<int>{}).num_elements() == 2);
}

TEST_CASE("repeated refinement keeps angles and identities") {
  std::mt19937 rng(5);
  for (const Mesh& start : {generate_unit_square(2), generate_lshape_chessboard(4)}) {
    Mesh m = start;
    const double initial = m.min_angle();
    const double area = m.total_area();
    for (int g = 0; g < 10; ++g) {
      std::vector<int> marked;
      std::bernoulli_distribution coin(0.35);
      for (int e = 0; e < m.num_elements(); ++e)
        if (coin(rng)) marked.push_back(e);
      const int before = m.num_elements();
      const auto regions_before = m.regions();
      m = refine(m, marked);
      CHECK(m.num_elements() >= before + static_cast<int>(marked.size()));
      CHECK(m.min_angle() >= 0.5 * initial);
      CHECK(std::abs(m.total_area() - area) <= 1e-12 * area);
      CHECK(m.num_vertices() - m.num_facets() + m.num_elements() == 1);
    }
    check_valid(m);
  }
}

TEST_CASE("refinement inherits regions and boundary tags") {
  Mesh m = generate_lshape_chessboard(4);
  const ChessboardSpec cb;
  const RegionSpec spec = lshape_chessboard_regions(cb);
  for (int g = 0; g < 3; ++g) m = refine_all(m);
  for (int e = 0; e < m.num_elements(); ++e) CHECK(m.region(e) == spec.region_of(m.barycenter(e)));
  double gamma2 = 0.0;
  for (int f = 0; f < m.num_facets(); ++f)
    if (m.facet(f).kind == FacetKind::Gamma2) gamma2 += m.facet_length(f);
  CHECK(std::abs(gamma2 - 1.0) < 1e-12);
}

TEST_CASE("mesh exchange round trip") {
  const Mesh m = refine(generate_lshape_chessboard(4), std::vector<int>{0, 5, 9});
  std::stringstream ss;
  write_mesh(ss, m);
  const Mesh back = read_mesh(ss);
  CHECK(back.num_vertices() == m.num_vertices());
  CHECK(back.num_elements() == m.num_elements());
  CHECK(back.triangles() == m.triangles());
  CHECK(back.regions() == m.regions());
  CHECK(back.refinement_edges() == m.refinement_edges());
  CHECK(back.count_facets(FacetKind::Gamma2) == m.count_facets(FacetKind::Gamma2));
  for (int v = 0; v < m.num_vertices(); ++v) CHECK(back.vertex(v) == m.vertex(v));

  std::stringstream bad("not a mesh\n");
  CHECK_THROWS(read_mesh(bad));
}

TEST_CASE("invalid meshes are rejected") {
  using T = std::array<int, 3>;
  const std::vector<Point> v{Point(0, 0), Point(1, 0), Point(0, 1)};
  const std::vector<BoundaryEdge> b{{0, 1, BoundaryTag::Gamma1}, {1, 2, BoundaryTag::Gamma1},
                                    {2, 0, BoundaryTag::Gamma1}};
  CHECK_THROWS_AS(Mesh(v, {T{0, 2, 1}}, {0}, b), std::invalid_argument);
  CHECK_THROWS_AS(Mesh(v, {T{0, 1, 2}}, {0}, {b[0], b[1]}), std::invalid_argument);
  CHECK_THROWS_AS(Mesh({Point(0, 0), Point(1, 0), Point(2, 0)}, {T{0, 1, 2}}, {0}, b), std::invalid_argument);
  CHECK_NOTHROW(Mesh(v, {T{0, 1, 2}}, {0}, b));
}

TEST_CASE("geometry queries") {
  const Mesh m = generate_unit_square(1);
  CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-15));
  const int diag = [&] {
    for (int f = 0; f < m.num_facets(); ++f)
      if (!m.facet(f).is_boundary()) return f;
    return -1;
  }();
  REQUIRE(diag >= 0);
  CHECK(m.facet_length(diag) == doctest::Approx(std::sqrt(2.0)));
  const Point n = m.facet_normal(diag);
  CHECK(n.norm() == doctest::Approx(1.0));
  // Normal points out of elements[0]: away from its barycenter.
  CHECK(n.dot(m.facet_midpoint(diag) - m.barycenter(m.facet(diag).elements[0])) > 0.0);
  CHECK(m.min_angle() == doctest::Approx(M_PI / 4));
  CHECK(m.mesh_size() == doctest::Approx(std::sqrt(2.0)));
}
