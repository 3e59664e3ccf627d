#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "brinkman/mesh.hpp"

namespace brinkman {

namespace {

constexpr const char* kHeader = "brinkman-dg-mesh v1";

std::size_t expect_section(std::istream& is, const std::string& name) {
  std::string word;
  std::size_t count = 0;
  if (!(is >> word >> count) || word != name)
    throw std::runtime_error("mesh file: expected section '" + name + "'");
  return count;
}

}  // namespace

void write_mesh(std::ostream& os, const Mesh& mesh) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << kHeader << '\n';
  os << "vertices " << mesh.num_vertices() << '\n';
  os << std::setprecision(17);
  for (const auto& p : mesh.vertices()) os << p.x() << ' ' << p.y() << '\n';
  os << "triangles " << mesh.num_elements() << '\n';
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.triangle(e);
    os << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << mesh.region(e) << '\n';
  }
  os << "boundary " << mesh.boundary().size() << '\n';
  for (const auto& b : mesh.boundary()) os << b.v0 << ' ' << b.v1 << ' ' << static_cast<int>(b.tag) << '\n';
  os.flags(flags);
  os.precision(precision);
}

Mesh read_mesh(std::istream& is) {
  std::string header;
  while (header.empty() && std::getline(is, header)) {
  }
  if (header != kHeader) throw std::runtime_error("mesh file: missing header '" + std::string(kHeader) + "'");

  std::vector<Point> vertices(expect_section(is, "vertices"));
  for (auto& p : vertices)
    if (!(is >> p.x() >> p.y())) throw std::runtime_error("mesh file: truncated vertex list");

  const std::size_t nt = expect_section(is, "triangles");
  std::vector<std::array<int, 3>> triangles(nt);
  std::vector<int> regions(nt);
  for (std::size_t e = 0; e < nt; ++e)
    if (!(is >> triangles[e][0] >> triangles[e][1] >> triangles[e][2] >> regions[e]))
      throw std::runtime_error("mesh file: truncated triangle list");

  std::vector<BoundaryEdge> boundary(expect_section(is, "boundary"));
  for (auto& b : boundary) {
    int tag = 0;
    if (!(is >> b.v0 >> b.v1 >> tag)) throw std::runtime_error("mesh file: truncated boundary list");
    if (tag != 1 && tag != 2) throw std::runtime_error("mesh file: boundary tag must be 1 or 2");
    b.tag = static_cast<BoundaryTag>(tag);
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(regions), std::move(boundary));
}

void write_mesh_file(const std::string& path, const Mesh& mesh) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_mesh(os, mesh);
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return read_mesh(is);
}

}  // namespace brinkman
