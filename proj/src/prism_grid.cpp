#include "liftnet/prism_grid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>

#include "liftnet/error.hpp"

namespace liftnet {

namespace {

std::atomic<std::uint64_t> next_lineage{1};

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Intersection of two sorted breakpoint lists, equality up to tol.
std::vector<double> intersect_sorted(const std::vector<double>& a, const std::vector<double>& b,
                                     double tol) {
  std::vector<double> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::abs(a[i] - b[j]) <= tol) {
      out.push_back(a[i]);
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

bool near_any(double x, std::initializer_list<double> ys, double tol) {
  for (double y : ys)
    if (std::abs(x - y) <= tol) return true;
  return false;
}

}  // namespace

std::uint64_t PrismGrid::edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

PrismGrid::PrismGrid(const Domain& domain, double M, std::vector<Vec2> nodes,
                     std::vector<std::array<int, 3>> triangles,
                     std::vector<std::vector<double>> stacks)
    : domain_(domain), M_(M), lineage_(next_lineage++) {
  if (!(M > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid height M must be positive");
  if (stacks.size() != triangles.size())
    throw Error(ErrorCode::DimensionMismatch, "one breakpoint list per triangle expected");
  for (const auto& p : nodes) add_node(p, -1, -1);
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (int v : triangles[t])
      if (v < 0 || v >= node_count()) throw Error(ErrorCode::InvalidArgument, "bad node index");
    int id = add_triangle(triangles[t], 0, -1);
    const auto& bp = stacks[t];
    if (bp.size() < 2 || bp.front() != 0.0 || std::abs(bp.back() - M) > 1e-12 * M)
      throw Error(ErrorCode::InvalidArgument, "stack must run from 0 to M");
    for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
      double h = bp[k + 1] - bp[k];
      if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "stack breakpoints must increase");
      int ls = static_cast<int>(std::lround(std::log2(M / h)));
      int e = add_element(id, bp[k], k + 2 == bp.size() ? M : bp[k + 1], 0, ls, -1);
      triangles_[id].stack.push_back(e);
    }
  }
}

PrismGrid PrismGrid::uniform(const Domain& domain, double M, int x_level, int s_level) {
  if (x_level < 0 || s_level < 0) throw Error(ErrorCode::InvalidArgument, "levels must be >= 0");
  const double W = domain.width, H = domain.height;
  std::vector<double> bp;
  const int layers = 1 << s_level;
  for (int k = 0; k <= layers; ++k) bp.push_back(k == layers ? M : M * k / layers);
  PrismGrid g(domain, M, {{0, 0}, {W, 0}, {W, H}, {0, H}}, {{0, 1, 2}, {0, 2, 3}}, {bp, bp});
  for (int e : g.alive_elements()) g.elements_[e].level_s = s_level;
  for (int pass = 0; pass < x_level; ++pass) {
    std::vector<int> todo;
    for (int t : g.leaf_triangles())
      if (g.triangles_[t].level == pass) todo.push_back(t);
    std::vector<int> created;
    for (int t : todo)
      if (g.triangles_[t].leaf) g.bisect(t, created);
  }
  g.revision_ = 0;
  return g;
}

int PrismGrid::add_node(const Vec2& p, int pa, int pb) {
  bool bnd = domain_.on_boundary(p, 1e-12);
  nodes_.push_back(bnd ? domain_.snap(p, 1e-12) : p);
  node_parents_.emplace_back(pa, pb);
  boundary_node_.push_back(bnd ? 1 : 0);
  node_triangles_.emplace_back();
  return node_count() - 1;
}

int PrismGrid::add_triangle(std::array<int, 3> v, int level, int parent) {
  TriangleNode t;
  t.v = v;
  t.level = level;
  t.parent = parent;
  triangles_.push_back(std::move(t));
  int id = triangle_count() - 1;
  attach(id);
  return id;
}

void PrismGrid::attach(int t) {
  const auto& v = triangles_[t].v;
  for (int k = 0; k < 3; ++k) {
    node_triangles_[v[k]].push_back(t);
    auto key = edge_key(v[k], v[(k + 1) % 3]);
    auto it = edges_.find(key);
    if (it == edges_.end())
      edges_.emplace(key, std::array<int, 2>{t, -1});
    else if (it->second[0] < 0)
      it->second[0] = t;
    else
      it->second[1] = t;
  }
}

void PrismGrid::detach(int t) {
  const auto& v = triangles_[t].v;
  for (int k = 0; k < 3; ++k) {
    auto& nt = node_triangles_[v[k]];
    nt.erase(std::remove(nt.begin(), nt.end(), t), nt.end());
    auto it = edges_.find(edge_key(v[k], v[(k + 1) % 3]));
    if (it->second[0] == t) it->second[0] = it->second[1];
    it->second[1] = -1;
    if (it->second[0] < 0) edges_.erase(it);
  }
}

int PrismGrid::add_element(int triangle, double s0, double s1, int level_x, int level_s,
                           int parent) {
  PrismElement e;
  e.id = static_cast<int>(elements_.size());
  e.triangle = triangle;
  e.s0 = s0;
  e.s1 = s1;
  e.level_x = level_x;
  e.level_s = level_s;
  e.parent = parent;
  elements_.push_back(e);
  ++alive_count_;
  return e.id;
}

int PrismGrid::neighbor(int t, int a, int b) const {
  auto it = edges_.find(edge_key(a, b));
  if (it == edges_.end()) return -1;
  if (it->second[0] == t) return it->second[1];
  return it->second[0];
}

int PrismGrid::longest_edge(int t) const {
  const auto& v = triangles_[t].v;
  int best = -1;
  double best_len = -1.0;
  std::pair<int, int> best_pair;
  for (int k = 0; k < 3; ++k) {
    int a = v[(k + 1) % 3], b = v[(k + 2) % 3];
    double len = (nodes_[a] - nodes_[b]).squaredNorm();
    std::pair<int, int> pr = std::minmax(a, b);
    bool better;
    if (best < 0)
      better = true;
    else if (std::abs(len - best_len) <= 1e-12 * std::max(len, best_len))
      better = pr < best_pair;
    else
      better = len > best_len;
    if (better) {
      best = k;
      best_len = len;
      best_pair = pr;
    }
  }
  return best;
}

void PrismGrid::split_triangle(int t, int k, int mid, std::vector<int>& created) {
  detach(t);
  triangles_[t].leaf = false;
  const std::array<int, 3> v = triangles_[t].v;
  const int c = v[k], a = v[(k + 1) % 3], b = v[(k + 2) % 3];
  const int level = triangles_[t].level + 1;
  int c0 = add_triangle({c, a, mid}, level, t);
  int c1 = add_triangle({c, mid, b}, level, t);
  triangles_[t].children = {c0, c1};
  std::vector<int> old_stack = std::move(triangles_[t].stack);
  triangles_[t].stack.clear();
  for (int e : old_stack) {
    PrismElement& pe = elements_[e];
    pe.alive = false;
    --alive_count_;
    const double s0 = pe.s0, s1 = pe.s1;
    const int lx = pe.level_x + 1, ls = pe.level_s;
    int e0 = add_element(c0, s0, s1, lx, ls, e);
    int e1 = add_element(c1, s0, s1, lx, ls, e);
    triangles_[c0].stack.push_back(e0);
    triangles_[c1].stack.push_back(e1);
    created.push_back(e0);
    created.push_back(e1);
  }
}

void PrismGrid::bisect(int t, std::vector<int>& created) {
  while (true) {
    const int k = longest_edge(t);
    const auto v = triangles_[t].v;
    const int a = v[(k + 1) % 3], b = v[(k + 2) % 3];
    const int nb = neighbor(t, a, b);
    if (nb < 0) {
      int mid = add_node(0.5 * (nodes_[a] + nodes_[b]), a, b);
      split_triangle(t, k, mid, created);
      return;
    }
    const int kn = longest_edge(nb);
    const auto vn = triangles_[nb].v;
    if (edge_key(vn[(kn + 1) % 3], vn[(kn + 2) % 3]) == edge_key(a, b)) {
      int mid = add_node(0.5 * (nodes_[a] + nodes_[b]), a, b);
      split_triangle(t, k, mid, created);
      split_triangle(nb, kn, mid, created);
      return;
    }
    // The neighbour's longest edge is strictly longer in the tie-broken
    // order, so this recursion moves away from t and terminates.
    bisect(nb, created);
  }
}

std::vector<int> PrismGrid::x_refine(int element) {
  if (element < 0 || element >= element_id_bound() || !elements_[element].alive)
    throw Error(ErrorCode::InvalidArgument, "x_refine: no such element");
  std::vector<int> created;
  bisect(elements_[element].triangle, created);
  ++revision_;
  std::vector<int> alive;
  for (int e : created)
    if (elements_[e].alive) alive.push_back(e);
  return alive;
}

void PrismGrid::vertex_neighbours(int t, std::vector<int>& out) const {
  out.clear();
  for (int v : triangles_[t].v)
    for (int u : node_triangles_[v])
      if (u != t) out.push_back(u);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

void PrismGrid::split_element(int e, std::vector<int>& created, std::vector<int>& queue) {
  PrismElement& pe = elements_[e];
  pe.alive = false;
  --alive_count_;
  const int t = pe.triangle;
  const double s0 = pe.s0, s1 = pe.s1, sm = 0.5 * (s0 + s1);
  const int lx = pe.level_x, ls = pe.level_s + 1;
  int lo = add_element(t, s0, sm, lx, ls, e);
  int hi = add_element(t, sm, s1, lx, ls, e);
  auto& st = triangles_[t].stack;
  auto it = std::find(st.begin(), st.end(), e);
  *it = hi;
  st.insert(it, lo);
  created.push_back(lo);
  created.push_back(hi);
  queue.push_back(lo);
  queue.push_back(hi);
}

std::vector<int> PrismGrid::s_refine(int element) {
  if (element < 0 || element >= element_id_bound() || !elements_[element].alive)
    throw Error(ErrorCode::InvalidArgument, "s_refine: no such element");
  std::vector<int> created, queue, nbrs;
  split_element(element, created, queue);
  while (!queue.empty()) {
    int y = queue.back();
    queue.pop_back();
    if (!elements_[y].alive) continue;
    const PrismElement ey = elements_[y];
    vertex_neighbours(ey.triangle, nbrs);
    bool split_any = false;
    for (int u : nbrs) {
      // Copy: splitting modifies the stack.
      std::vector<int> stack = triangles_[u].stack;
      for (int f : stack) {
        const PrismElement& ef = elements_[f];
        if (ef.s1 <= ey.s0 || ef.s0 >= ey.s1) continue;
        if (ef.height() > 2.0 * ey.height() * (1.0 + 1e-12)) {
          split_element(f, created, queue);
          split_any = true;
        }
      }
    }
    if (split_any) queue.push_back(y);
  }
  ++revision_;
  std::vector<int> alive;
  for (int e : created)
    if (elements_[e].alive) alive.push_back(e);
  return alive;
}

std::vector<int> PrismGrid::leaf_triangles() const {
  std::vector<int> out;
  for (int t = 0; t < triangle_count(); ++t)
    if (triangles_[t].leaf) out.push_back(t);
  return out;
}

double PrismGrid::triangle_area(int t) const {
  const auto& v = triangles_[t].v;
  return 0.5 * cross(nodes_[v[1]] - nodes_[v[0]], nodes_[v[2]] - nodes_[v[0]]);
}

double PrismGrid::min_angle() const {
  double best = M_PI;
  for (int t : leaf_triangles()) {
    const auto& v = triangles_[t].v;
    for (int k = 0; k < 3; ++k) {
      Vec2 p = nodes_[v[(k + 1) % 3]] - nodes_[v[k]];
      Vec2 q = nodes_[v[(k + 2) % 3]] - nodes_[v[k]];
      best = std::min(best, std::acos(std::clamp(p.dot(q) / (p.norm() * q.norm()), -1.0, 1.0)));
    }
  }
  return best;
}

double PrismGrid::max_edge_length() const {
  double h = 0.0;
  for (int t : leaf_triangles()) {
    const auto& v = triangles_[t].v;
    for (int k = 0; k < 3; ++k) h = std::max(h, (nodes_[v[k]] - nodes_[v[(k + 1) % 3]]).norm());
  }
  return h;
}

double PrismGrid::min_edge_length() const {
  double h = INFINITY;
  for (int t : leaf_triangles()) {
    const auto& v = triangles_[t].v;
    for (int k = 0; k < 3; ++k) h = std::min(h, (nodes_[v[k]] - nodes_[v[(k + 1) % 3]]).norm());
  }
  return h;
}

std::vector<int> PrismGrid::alive_elements() const {
  std::vector<int> out;
  out.reserve(alive_count_);
  for (const auto& e : elements_)
    if (e.alive) out.push_back(e.id);
  return out;
}

std::vector<Column> PrismGrid::columns() const {
  const double tol = 1e-12 * M_;
  std::vector<Column> cols(nodes_.size());
  std::vector<double> bp;
  int v_off = 0, s_off = 0;
  for (int n = 0; n < node_count(); ++n) {
    Column& c = cols[n];
    c.node = n;
    c.boundary = boundary_node_[n];
    bool first = true;
    for (int t : node_triangles_[n]) {
      bp.clear();
      for (int e : triangles_[t].stack) bp.push_back(elements_[e].s0);
      bp.push_back(M_);
      if (first) {
        c.s = bp;
        first = false;
      } else {
        c.s = intersect_sorted(c.s, bp, tol);
      }
    }
    if (first) c.s = {0.0, M_};  // orphan node, never produced by refinement
    c.v_offset = v_off;
    c.s_offset = s_off;
    v_off += c.intervals();
    s_off += static_cast<int>(c.s.size());
  }
  return cols;
}

SemiRegularityReport check_semi_regular(const PrismGrid& g) {
  SemiRegularityReport rep;
  const double M = g.top();
  const double tol = 1e-12 * std::max(1.0, M);
  const Domain& d = g.domain();
  auto say = [&](const std::string& s) { rep.violations.push_back(s); };

  double area = 0.0, volume = 0.0;
  const auto leaves = g.leaf_triangles();
  for (int t : leaves) {
    const auto& tri = g.triangle(t);
    double A = g.triangle_area(t);
    if (!(A > 0.0)) say("triangle " + std::to_string(t) + " is degenerate or clockwise");
    area += A;
    for (int k = 0; k < 3; ++k) {
      int a = tri.v[k], b = tri.v[(k + 1) % 3];
      if (g.neighbor(t, a, b) < 0) {
        Vec2 mid = 0.5 * (g.node(a) + g.node(b));
        if (!(d.on_boundary(g.node(a)) && d.on_boundary(g.node(b)) && d.on_boundary(mid)))
          say("edge (" + std::to_string(a) + "," + std::to_string(b) + ") of triangle " +
              std::to_string(t) + " has no neighbour: x-hanging node");
      }
    }
    const auto& st = tri.stack;
    if (st.empty()) {
      say("triangle " + std::to_string(t) + " has no elements");
      continue;
    }
    double prev = 0.0;
    for (int e : st) {
      const auto& pe = g.element(e);
      if (!pe.alive) say("dead element " + std::to_string(e) + " in a stack");
      if (std::abs(pe.s0 - prev) > tol)
        say("stack of triangle " + std::to_string(t) + " has a gap or overlap at element " +
            std::to_string(e));
      if (!(pe.s1 > pe.s0)) say("element " + std::to_string(e) + " has nonpositive height");
      volume += A * pe.height();
      prev = pe.s1;
    }
    if (std::abs(prev - M) > tol) say("stack of triangle " + std::to_string(t) + " does not reach M");
  }
  const double dom_area = d.width * d.height;
  if (std::abs(area - dom_area) > 1e-10 * dom_area) say("triangles do not tile the domain");
  if (std::abs(volume - dom_area * M) > 1e-10 * dom_area * M) say("element volumes do not sum to |domain|*M");

  // Half-edge rule for elements over vertex-adjacent triangles.
  for (int t : leaves) {
    std::vector<int> nb;
    for (int v : g.triangle(t).v)
      for (int u : g.node_triangles(v))
        if (u > t) nb.push_back(u);
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    for (int u : nb) {
      const auto& A = g.triangle(t).stack;
      const auto& B = g.triangle(u).stack;
      std::size_t i = 0, j = 0;
      while (i < A.size() && j < B.size()) {
        const auto& ea = g.element(A[i]);
        const auto& eb = g.element(B[j]);
        if (ea.s1 > eb.s0 + tol && eb.s1 > ea.s0 + tol) {
          double rm = 0.5 * (eb.s0 + eb.s1), sm = 0.5 * (ea.s0 + ea.s1);
          bool a_in_b = near_any(ea.s0, {eb.s0, rm, eb.s1}, tol) &&
                        near_any(ea.s1, {eb.s0, rm, eb.s1}, tol);
          bool b_in_a = near_any(eb.s0, {ea.s0, sm, ea.s1}, tol) &&
                        near_any(eb.s1, {ea.s0, sm, ea.s1}, tol);
          if (!a_in_b && !b_in_a)
            say("half-edge rule violated by elements " + std::to_string(ea.id) + " and " +
                std::to_string(eb.id));
        }
        if (ea.s1 < eb.s1)
          ++i;
        else
          ++j;
      }
    }
  }
  return rep;
}

void write_vtk(const PrismGrid& g, std::ostream& os, const std::vector<CellField>& fields) {
  const auto alive = g.alive_elements();
  std::map<std::pair<int, double>, int> point_index;
  for (int e : alive) {
    const auto& pe = g.element(e);
    for (int v : g.triangle(pe.triangle).v) {
      point_index.emplace(std::make_pair(v, pe.s0), 0);
      point_index.emplace(std::make_pair(v, pe.s1), 0);
    }
  }
  int idx = 0;
  for (auto& kv : point_index) kv.second = idx++;

  os << "# vtk DataFile Version 3.0\n";
  os << "liftnet prism grid; points ordered by x-node index then s; wedge = bottom triangle, top triangle\n";
  os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << point_index.size() << " double\n";
  os.precision(17);
  for (const auto& kv : point_index) {
    const Vec2& p = g.node(kv.first.first);
    os << p.x() << ' ' << p.y() << ' ' << kv.first.second << '\n';
  }
  os << "CELLS " << alive.size() << ' ' << alive.size() * 7 << '\n';
  for (int e : alive) {
    const auto& pe = g.element(e);
    const auto& v = g.triangle(pe.triangle).v;
    os << 6;
    for (int k = 0; k < 3; ++k) os << ' ' << point_index.at({v[k], pe.s0});
    for (int k = 0; k < 3; ++k) os << ' ' << point_index.at({v[k], pe.s1});
    os << '\n';
  }
  os << "CELL_TYPES " << alive.size() << '\n';
  for (std::size_t i = 0; i < alive.size(); ++i) os << "13\n";
  os << "CELL_DATA " << alive.size() << '\n';
  auto scalar = [&](const std::string& name, auto&& value) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < alive.size(); ++i) os << value(i) << '\n';
  };
  scalar("element_id", [&](std::size_t i) { return double(alive[i]); });
  scalar("level_x", [&](std::size_t i) { return double(g.element(alive[i]).level_x); });
  scalar("level_s", [&](std::size_t i) { return double(g.element(alive[i]).level_s); });
  for (const auto& f : fields) {
    if (f.values.size() != alive.size())
      throw Error(ErrorCode::DimensionMismatch, "cell field " + f.name + " has wrong length");
    scalar(f.name, [&](std::size_t i) { return f.values[i]; });
  }
}

}  // namespace liftnet
