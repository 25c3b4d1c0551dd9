#include "hho/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

namespace hho {

namespace {

using VertexPair = std::pair<int, int>;

VertexPair sorted_edge(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Strict interior of segment [a,b] contains p?
bool point_in_open_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len2 = d.squaredNorm();
  const double t = (p - a).dot(d) / len2;
  if (t <= 1e-12 || t >= 1.0 - 1e-12) return false;
  const double dist = std::abs(cross2(d, p - a)) / std::sqrt(len2);
  return dist < 1e-12 * std::sqrt(len2);
}

bool point_strictly_inside_triangle(const Vec2& p, const Vec2& a, const Vec2& b,
                                    const Vec2& c) {
  const double d1 = cross2(b - a, p - a);
  const double d2 = cross2(c - b, p - b);
  const double d3 = cross2(a - c, p - c);
  const double eps = 1e-12;
  const bool all_pos = d1 > eps && d2 > eps && d3 > eps;
  const bool all_neg = d1 < -eps && d2 < -eps && d3 < -eps;
  return all_pos || all_neg;
}

bool segments_properly_cross(const Vec2& a, const Vec2& b, const Vec2& c,
                             const Vec2& d) {
  const double d1 = cross2(b - a, c - a);
  const double d2 = cross2(b - a, d - a);
  const double d3 = cross2(d - c, a - c);
  const double d4 = cross2(d - c, b - c);
  const double eps = 1e-12;
  return ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) &&
         ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps));
}

// Reorder so that the longest edge is (v[0],v[1]); ties broken by the
// lexicographically smallest sorted vertex pair.
std::array<int, 3> longest_edge_first(const std::vector<Vec2>& pts,
                                      const std::array<int, 3>& v) {
  int best = 2;  // edge opposite local vertex i is (v[(i+1)%3], v[(i+2)%3])
  double best_len = -1.0;
  VertexPair best_pair{0, 0};
  for (int i = 0; i < 3; ++i) {
    const int a = v[(i + 1) % 3], b = v[(i + 2) % 3];
    const double len = (pts[a] - pts[b]).norm();
    const VertexPair pair = sorted_edge(a, b);
    if (len > best_len * (1.0 + 1e-12) ||
        (std::abs(len - best_len) <= 1e-12 * best_len && pair < best_pair)) {
      best = i;
      best_len = len;
      best_pair = pair;
    }
  }
  return {v[(best + 1) % 3], v[(best + 2) % 3], v[best]};
}

Mesh finalize(std::vector<Vec2> points, std::vector<std::array<int, 3>> cellverts,
              bool validate) {
  Mesh mesh;
  mesh.points = std::move(points);
  mesh.cells.resize(cellverts.size());

  std::map<VertexPair, int> facet_ids;
  for (std::size_t c = 0; c < cellverts.size(); ++c) {
    Cell& cell = mesh.cells[c];
    cell.v = cellverts[c];
    for (int i = 0; i < 3; ++i) {
      const int a = cell.v[Mesh::facet_vertices[i][0]];
      const int b = cell.v[Mesh::facet_vertices[i][1]];
      const VertexPair key = sorted_edge(a, b);
      auto [it, inserted] = facet_ids.try_emplace(key, mesh.n_facets());
      if (inserted) {
        Facet f;
        f.v = {key.first, key.second};
        f.cell_plus = static_cast<int>(c);
        mesh.facets.push_back(f);
      } else {
        Facet& f = mesh.facets[it->second];
        if (f.cell_minus >= 0)
          throw std::invalid_argument(
              "non-conforming mesh: facet shared by more than two cells (cells " +
              std::to_string(f.cell_plus) + ", " + std::to_string(f.cell_minus) +
              ", " + std::to_string(c) + ")");
        f.cell_minus = static_cast<int>(c);
      }
      cell.facet[i] = it->second;
    }
  }

  // Cell geometry.
  for (Cell& cell : mesh.cells) {
    const Vec2& p0 = mesh.points[cell.v[0]];
    const Vec2& p1 = mesh.points[cell.v[1]];
    const Vec2& p2 = mesh.points[cell.v[2]];
    cell.area = 0.5 * std::abs(cross2(p1 - p0, p2 - p0));
    if (cell.area <= 0.0) throw std::invalid_argument("degenerate cell");
    const double e01 = (p1 - p0).norm(), e12 = (p2 - p1).norm(), e20 = (p0 - p2).norm();
    cell.h = std::max({e01, e12, e20});
    const double perimeter = e01 + e12 + e20;
    cell.rho = cell.h * perimeter / (2.0 * cell.area);
    cell.centroid = (p0 + p1 + p2) / 3.0;
  }

  // Facet geometry and the T+/T- convention.
  for (Facet& f : mesh.facets) {
    const Vec2& a = mesh.points[f.v[0]];
    const Vec2& b = mesh.points[f.v[1]];
    f.length = (b - a).norm();
    f.midpoint = 0.5 * (a + b);
    const Vec2 t = (b - a) / f.length;
    const Vec2 nu(t.y(), -t.x());

    auto outward = [&](int c) {
      const Cell& cell = mesh.cells[c];
      Vec2 opposite;
      for (int i = 0; i < 3; ++i)
        if (cell.v[i] != f.v[0] && cell.v[i] != f.v[1]) opposite = mesh.points[cell.v[i]];
      return (nu.dot(f.midpoint - opposite) > 0.0) ? 1.0 : -1.0;
    };

    if (f.cell_minus < 0) {
      // Boundary: nu_F is the outer normal of the domain.
      const double s = outward(f.cell_plus);
      f.normal = s * nu;
      f.tangent = Vec2(-f.normal.y(), f.normal.x());
    } else {
      f.normal = nu;
      f.tangent = t;
      if (outward(f.cell_plus) < 0.0) std::swap(f.cell_plus, f.cell_minus);
    }
  }
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    Cell& cell = mesh.cells[c];
    for (int i = 0; i < 3; ++i) {
      const Facet& f = mesh.facets[cell.facet[i]];
      cell.facet_sign[i] = (f.cell_plus == static_cast<int>(c)) ? 1.0 : -1.0;
    }
  }

  // Entity classification.
  mesh.vertex_on_boundary.assign(mesh.n_vertices(), 0);
  for (int fi = 0; fi < mesh.n_facets(); ++fi) {
    const Facet& f = mesh.facets[fi];
    if (f.on_boundary()) {
      mesh.boundary_facets.push_back(fi);
      mesh.vertex_on_boundary[f.v[0]] = 1;
      mesh.vertex_on_boundary[f.v[1]] = 1;
    } else {
      mesh.interior_facets.push_back(fi);
    }
  }
  for (int v = 0; v < mesh.n_vertices(); ++v)
    (mesh.vertex_on_boundary[v] ? mesh.boundary_vertices : mesh.interior_vertices)
        .push_back(v);

  if (validate) {
    // Hanging nodes: a vertex in the open interior of another cell's facet.
    for (int v = 0; v < mesh.n_vertices(); ++v)
      for (int fi = 0; fi < mesh.n_facets(); ++fi) {
        const Facet& f = mesh.facets[fi];
        if (f.v[0] == v || f.v[1] == v) continue;
        if (point_in_open_segment(mesh.points[v], mesh.points[f.v[0]],
                                  mesh.points[f.v[1]]))
          throw std::invalid_argument(
              "non-conforming mesh: vertex " + std::to_string(v) +
              " hangs on a facet of cell " + std::to_string(f.cell_plus));
      }
    // Overlaps: proper edge crossings or vertex containment between cells
    // sharing no facet.
    for (int c0 = 0; c0 < mesh.n_cells(); ++c0)
      for (int c1 = c0 + 1; c1 < mesh.n_cells(); ++c1) {
        const auto& va = mesh.cells[c0].v;
        const auto& vb = mesh.cells[c1].v;
        bool overlap = false;
        for (int i = 0; i < 3 && !overlap; ++i)
          overlap = point_strictly_inside_triangle(
                        mesh.points[vb[i]], mesh.points[va[0]], mesh.points[va[1]],
                        mesh.points[va[2]]) ||
                    point_strictly_inside_triangle(
                        mesh.points[va[i]], mesh.points[vb[0]], mesh.points[vb[1]],
                        mesh.points[vb[2]]);
        for (int i = 0; i < 3 && !overlap; ++i)
          for (int j = 0; j < 3 && !overlap; ++j)
            overlap = segments_properly_cross(
                mesh.points[va[i]], mesh.points[va[(i + 1) % 3]], mesh.points[vb[j]],
                mesh.points[vb[(j + 1) % 3]]);
        if (overlap)
          throw std::invalid_argument("non-conforming mesh: cells " +
                                      std::to_string(c0) + " and " +
                                      std::to_string(c1) + " overlap");
      }
  }
  return mesh;
}

}  // namespace

double Mesh::total_area() const {
  double a = 0.0;
  for (const Cell& c : cells) a += c.area;
  return a;
}

double Mesh::h_max() const {
  double h = 0.0;
  for (const Cell& c : cells) h = std::max(h, c.h);
  return h;
}

double Mesh::rho_max() const {
  double r = 0.0;
  for (const Cell& c : cells) r = std::max(r, c.rho);
  return r;
}

void Mesh::write_ascii(std::ostream& os) const {
  os << "cells " << n_cells() << " vertices " << n_vertices() << "\n";
  for (const Vec2& p : points) os << p.x() << " " << p.y() << "\n";
  for (const Cell& c : cells) os << c.v[0] << " " << c.v[1] << " " << c.v[2] << "\n";
}

Mesh build_initial(Domain domain) {
  std::vector<Vec2> pts;
  std::vector<std::array<int, 3>> cv;
  if (domain == Domain::unit_square) {
    pts = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    cv = {{0, 1, 2}, {0, 2, 3}};
  } else {
    // (-1,1)^2 without [0,1]x[-1,0]; each of the three unit squares split
    // along its diagonal through the reentrant corner at the origin.
    pts = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}};
    cv = {{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 5}, {0, 5, 6}, {0, 6, 7}};
  }
  for (auto& v : cv) v = longest_edge_first(pts, v);
  return finalize(std::move(pts), std::move(cv), false);
}

Mesh build_custom(std::vector<Vec2> points,
                  std::vector<std::array<int, 3>> cell_vertices) {
  for (auto& v : cell_vertices) v = longest_edge_first(points, v);
  return finalize(std::move(points), std::move(cell_vertices), true);
}

namespace {

struct WorkCell {
  std::array<int, 3> v;  // base (v[0],v[1]), peak v[2]
  int root;
  bool alive = true;
};

class Bisector {
 public:
  explicit Bisector(const Mesh& mesh) : pts_(mesh.points) {
    cells_.reserve(2 * mesh.cells.size());
    for (int c = 0; c < mesh.n_cells(); ++c) {
      cells_.push_back({mesh.cells[c].v, c, true});
      add_edges(c);
    }
  }

  void ensure_bisected(int c, int depth = 0) {
    if (depth > 4096)
      throw std::runtime_error("newest-vertex bisection closure did not terminate");
    if (!cells_[c].alive) return;
    const VertexPair base = sorted_edge(cells_[c].v[0], cells_[c].v[1]);
    int partner = neighbor_across(base, c);
    if (partner >= 0 &&
        sorted_edge(cells_[partner].v[0], cells_[partner].v[1]) != base) {
      ensure_bisected(partner, depth + 1);
      partner = neighbor_across(base, c);
    }
    const int mid = midpoint(base);
    split(c, mid);
    if (partner >= 0) split(partner, mid);
  }

  RefineResult harvest(int n_roots) {
    std::vector<Vec2> pts = pts_;
    std::vector<std::array<int, 3>> cv;
    std::vector<std::vector<int>> children(n_roots);
    for (const WorkCell& wc : cells_) {
      if (!wc.alive) continue;
      children[wc.root].push_back(static_cast<int>(cv.size()));
      cv.push_back(wc.v);
    }
    RefineResult result;
    result.mesh = finalize(std::move(pts), std::move(cv), false);
    result.children = std::move(children);
    return result;
  }

 private:
  void add_edges(int c) {
    const auto& v = cells_[c].v;
    for (int i = 0; i < 3; ++i)
      edge2cells_[sorted_edge(v[i], v[(i + 1) % 3])].push_back(c);
  }

  void remove_edges(int c) {
    const auto& v = cells_[c].v;
    for (int i = 0; i < 3; ++i) {
      auto& list = edge2cells_[sorted_edge(v[i], v[(i + 1) % 3])];
      list.erase(std::remove(list.begin(), list.end(), c), list.end());
    }
  }

  int neighbor_across(const VertexPair& edge, int c) const {
    auto it = edge2cells_.find(edge);
    if (it == edge2cells_.end()) return -1;
    for (int other : it->second)
      if (other != c && cells_[other].alive) return other;
    return -1;
  }

  int midpoint(const VertexPair& edge) {
    auto [it, inserted] = midpoints_.try_emplace(edge, static_cast<int>(pts_.size()));
    if (inserted) pts_.push_back(0.5 * (pts_[edge.first] + pts_[edge.second]));
    return it->second;
  }

  void split(int c, int mid) {
    WorkCell& wc = cells_[c];
    wc.alive = false;
    remove_edges(c);
    const auto [v0, v1, v2] = std::tuple(wc.v[0], wc.v[1], wc.v[2]);
    const int root = wc.root;
    cells_.push_back({{v0, v2, mid}, root, true});
    add_edges(static_cast<int>(cells_.size()) - 1);
    cells_.push_back({{v2, v1, mid}, root, true});
    add_edges(static_cast<int>(cells_.size()) - 1);
  }

  std::vector<Vec2> pts_;
  std::vector<WorkCell> cells_;
  std::map<VertexPair, std::vector<int>> edge2cells_;
  std::map<VertexPair, int> midpoints_;
};

}  // namespace

RefineResult refine(const Mesh& mesh, const std::vector<int>& marked) {
  for (int c : marked)
    if (c < 0 || c >= mesh.n_cells())
      throw std::invalid_argument("marked cell id out of range");
  Bisector bisector(mesh);
  std::vector<int> order(marked);
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  for (int c : order) bisector.ensure_bisected(c);
  return bisector.harvest(mesh.n_cells());
}

RefineResult uniform_refine(const Mesh& mesh) {
  std::vector<int> all(mesh.n_cells());
  for (int c = 0; c < mesh.n_cells(); ++c) all[c] = c;
  return refine(mesh, all);
}

}  // namespace hho
