// Conforming 2D triangulations with entity classification and orientation
// conventions, plus newest-vertex bisection with conforming closure.
//
// Orientation conventions:
//  - Interior facet: tangent tau_F points from the lower to the higher global
//    vertex id, nu_F = tau_F rotated by -pi/2. The neighbor whose outward
//    normal equals nu_F is T+.
//  - Boundary facet: nu_F is the outer normal of the domain, tau_F = nu_F
//    rotated by +pi/2.
//  - The refinement edge of a cell is the edge (v[0], v[1]); v[2] is the peak.

#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace hho {

using Vec2 = Eigen::Vector2d;

struct Facet {
  std::array<int, 2> v;  // global vertex ids
  Vec2 normal;           // nu_F
  Vec2 tangent;          // tau_F
  Vec2 midpoint;
  double length = 0.0;   // |F| = h_F
  int cell_plus = -1;    // outward normal on F equals nu_F
  int cell_minus = -1;   // -1 on the boundary

  bool on_boundary() const { return cell_minus < 0; }
};

struct Cell {
  std::array<int, 3> v;           // refinement edge (v[0],v[1]), peak v[2]
  std::array<int, 3> facet = {};  // facet[i] is opposite vertex v[i]
  std::array<double, 3> facet_sign = {};  // nu_F . nu_{dT} on facet[i]
  double h = 0.0;                 // diameter
  double area = 0.0;
  double rho = 0.0;               // diameter / inradius
  Vec2 centroid;
};

class Mesh {
 public:
  std::vector<Vec2> points;
  std::vector<Cell> cells;
  std::vector<Facet> facets;
  std::vector<int> interior_facets;
  std::vector<int> boundary_facets;
  std::vector<int> interior_vertices;
  std::vector<int> boundary_vertices;
  std::vector<char> vertex_on_boundary;

  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_facets() const { return static_cast<int>(facets.size()); }
  int n_vertices() const { return static_cast<int>(points.size()); }
  double total_area() const;
  double h_max() const;
  double rho_max() const;

  // Local vertex ids bounding local facet i (the facet opposite vertex i).
  static constexpr std::array<std::array<int, 2>, 3> facet_vertices = {
      {{1, 2}, {2, 0}, {0, 1}}};

  // "cells <n> vertices <m>" header, vertex lines, cell lines.
  void write_ascii(std::ostream& os) const;
};

enum class Domain { lshape, unit_square };

// Six triangles fanning around the reentrant corner at the origin (lshape)
// or two triangles (unit_square); refinement edges are the longest edges.
Mesh build_initial(Domain domain);

// Custom conforming input; throws std::invalid_argument naming the offending
// cell pair on non-conforming input.
Mesh build_custom(std::vector<Vec2> points,
                  std::vector<std::array<int, 3>> cell_vertices);

struct RefineResult {
  Mesh mesh;
  // children[i] lists the cell ids of the refined mesh covering input cell i
  // (a single entry when cell i was untouched).
  std::vector<std::vector<int>> children;
};

// Newest-vertex bisection of all marked cells plus conforming closure.
RefineResult refine(const Mesh& mesh, const std::vector<int>& marked);

RefineResult uniform_refine(const Mesh& mesh);

}  // namespace hho
