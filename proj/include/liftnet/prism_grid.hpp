#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "liftnet/boundary.hpp"

namespace liftnet {

struct PrismElement {
  int id = -1;
  int triangle = -1;
  double s0 = 0.0, s1 = 0.0;
  int level_x = 0, level_s = 0;
  int parent = -1;
  bool alive = true;
  double height() const { return s1 - s0; }
};

// A triangle of the 2D bisection tree. Leaves carry the stack of element ids
// above them, sorted by s.
struct TriangleNode {
  std::array<int, 3> v{-1, -1, -1};  // counterclockwise
  int level = 0;
  int parent = -1;
  std::array<int, 2> children{-1, -1};
  bool leaf = true;
  std::vector<int> stack;
};

// Sorted non-hanging s-breakpoints above one x-node. Entry k < intervals()
// is also the index of the N'' coefficient (v_offset + k); every entry is an
// N' coefficient (s_offset + k).
struct Column {
  int node = -1;
  bool boundary = false;
  std::vector<double> s;
  int v_offset = 0;
  int s_offset = 0;
  int intervals() const { return static_cast<int>(s.size()) - 1; }
  double height(int k) const { return s[k + 1] - s[k]; }
};

struct SemiRegularityReport {
  std::vector<std::string> violations;
  bool passed() const { return violations.empty(); }
};

class PrismGrid {
 public:
  // Hand-built grid: node coordinates, counterclockwise triangles and one
  // breakpoint list (0 = s_0 < ... < s_n = M) per triangle. No validation
  // beyond basic shape; use check_semi_regular.
  PrismGrid(const Domain& domain, double M, std::vector<Vec2> nodes,
            std::vector<std::array<int, 3>> triangles, std::vector<std::vector<double>> stacks);

  PrismGrid() = default;
  static PrismGrid uniform(const Domain& domain, double M, int x_level, int s_level);

  // Splits the element into its two s-halves plus the closure needed for the
  // half-edge rule. Returns every created element id.
  std::vector<int> s_refine(int element);
  // Bisects the longest edge of the element's triangle, splitting the whole
  // column and propagating to neighbours until the triangulation is conforming.
  std::vector<int> x_refine(int element);

  const Domain& domain() const { return domain_; }
  double top() const { return M_; }
  std::uint64_t lineage() const { return lineage_; }
  // Incremented by every mutation.
  int revision() const { return revision_; }

  int node_count() const { return static_cast<int>(nodes_.size()); }
  const Vec2& node(int n) const { return nodes_[n]; }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  // Endpoints of the edge whose midpoint created this node, or (-1,-1).
  std::pair<int, int> node_parents(int n) const { return node_parents_[n]; }
  bool is_boundary_node(int n) const { return boundary_node_[n]; }
  const std::vector<int>& node_triangles(int n) const { return node_triangles_[n]; }

  int triangle_count() const { return static_cast<int>(triangles_.size()); }
  const TriangleNode& triangle(int t) const { return triangles_[t]; }
  std::vector<int> leaf_triangles() const;
  double triangle_area(int t) const;
  double min_angle() const;
  double max_edge_length() const;
  double min_edge_length() const;

  const PrismElement& element(int id) const { return elements_[id]; }
  int element_id_bound() const { return static_cast<int>(elements_.size()); }
  std::vector<int> alive_elements() const;
  int element_count() const { return alive_count_; }

  // Neighbouring leaf triangle across the edge (a,b), or -1.
  int neighbor(int t, int a, int b) const;
  // Local index of the vertex opposite the longest edge.
  int longest_edge(int t) const;

  std::vector<Column> columns() const;

 private:
  static std::uint64_t edge_key(int a, int b);
  int add_node(const Vec2& p, int pa, int pb);
  int add_triangle(std::array<int, 3> v, int level, int parent);
  void attach(int t);
  void detach(int t);
  int add_element(int triangle, double s0, double s1, int level_x, int level_s, int parent);
  void bisect(int t, std::vector<int>& created);
  void split_triangle(int t, int opposite_local, int mid, std::vector<int>& created);
  void split_element(int e, std::vector<int>& created, std::vector<int>& queue);
  void vertex_neighbours(int t, std::vector<int>& out) const;

  Domain domain_;
  double M_ = 1.0;
  std::uint64_t lineage_ = 0;
  int revision_ = 0;
  std::vector<Vec2> nodes_;
  std::vector<std::pair<int, int>> node_parents_;
  std::vector<char> boundary_node_;
  std::vector<std::vector<int>> node_triangles_;
  std::vector<TriangleNode> triangles_;
  std::unordered_map<std::uint64_t, std::array<int, 2>> edges_;
  std::vector<PrismElement> elements_;
  int alive_count_ = 0;
};

inline PrismGrid make_uniform_grid(const Domain& domain, const BoundaryData& data, int x_level,
                                   int s_level) {
  return PrismGrid::uniform(domain, data.top(), x_level, s_level);
}

SemiRegularityReport check_semi_regular(const PrismGrid& grid);
inline std::vector<Column> columns(const PrismGrid& grid) { return grid.columns(); }

struct CellField {
  std::string name;
  std::vector<double> values;  // indexed like alive_elements()
};

// Legacy VTK ASCII unstructured grid with wedge cells.
void write_vtk(const PrismGrid& grid, std::ostream& os, const std::vector<CellField>& fields = {});

}  // namespace liftnet
