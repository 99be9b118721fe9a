#include "snslab/fem/mesh.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

namespace snslab {
namespace {

int wrap(int i, int n) { return ((i % n) + n) % n; }

int direction_code(const std::array<int, 3>& d) { return d[0] * 4 + d[1] * 2 + d[2]; }

}  // namespace

PeriodicMesh::PeriodicMesh(int n) : n_(n) {
  if (n < 2) throw std::invalid_argument("periodic mesh needs n >= 2");
  const std::array<std::array<int, 3>, 6> perms = {{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  const double s = spacing();
  for (int t = 0; t < kTypes; ++t) {
    TetType& tt = types_[t];
    std::array<int, 3> corner{0, 0, 0};
    tt.offsets[0] = corner;
    for (int step = 0; step < 3; ++step) {
      corner[perms[t][step]] = 1;
      tt.offsets[step + 1] = corner;
    }
    Eigen::Matrix3d jac;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) jac(c, r) = s * (tt.offsets[r + 1][c] - tt.offsets[0][c]);
    tt.volume = std::abs(jac.determinant()) / 6.0;
    // Rows of jac^{-1} are the gradients of lambda_1..lambda_3.
    const Eigen::Matrix3d inv = jac.inverse();
    Vec3 g0{0, 0, 0};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        tt.grad_lambda[r + 1][c] = inv(r, c);
        g0[c] -= inv(r, c);
      }
    }
    tt.grad_lambda[0] = g0;
  }
}

double PeriodicMesh::h() const { return spacing() * std::sqrt(3.0); }

int PeriodicMesh::vertex_index(int i, int j, int k) const {
  return (wrap(i, n_) * n_ + wrap(j, n_)) * n_ + wrap(k, n_);
}

std::array<int, 3> PeriodicMesh::cube_coords(int cube) const {
  return {cube / (n_ * n_), (cube / n_) % n_, cube % n_};
}

Vec3 PeriodicMesh::vertex_position(int v) const {
  const auto c = cube_coords(v);
  return {c[0] * spacing(), c[1] * spacing(), c[2] * spacing()};
}

Vec3 PeriodicMesh::cube_origin(int cube) const { return vertex_position(cube); }

std::array<int, 4> PeriodicMesh::tet_vertices(int tet) const {
  const auto c = cube_coords(tet_cube(tet));
  const auto& off = types_[tet_type(tet)].offsets;
  std::array<int, 4> v{};
  for (int i = 0; i < 4; ++i) v[i] = vertex_index(c[0] + off[i][0], c[1] + off[i][1], c[2] + off[i][2]);
  return v;
}

std::array<int, 6> PeriodicMesh::tet_edges(int tet) const {
  const auto c = cube_coords(tet_cube(tet));
  const auto& off = types_[tet_type(tet)].offsets;
  std::array<int, 6> e{};
  for (int i = 0; i < 6; ++i) {
    // Corners along a Kuhn chain are componentwise ordered, so b - a is in {0,1}^3.
    const auto& a = off[kLocalEdges[i][0]];
    const auto& b = off[kLocalEdges[i][1]];
    const std::array<int, 3> d{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    const int base = vertex_index(c[0] + a[0], c[1] + a[1], c[2] + a[2]);
    e[i] = 7 * base + direction_code(d) - 1;
  }
  return e;
}

Vec3 PeriodicMesh::edge_midpoint(int e) const {
  const Vec3 base = vertex_position(e / 7);
  const int code = e % 7 + 1;
  const double s = spacing();
  return {base[0] + 0.5 * s * ((code >> 2) & 1), base[1] + 0.5 * s * ((code >> 1) & 1), base[2] + 0.5 * s * (code & 1)};
}

PeriodicMesh::FaceCount PeriodicMesh::count_faces() const {
  // A face is keyed by its lexicographically smallest corner (wrapped) and the
  // offsets of the other two corners relative to it.
  using Key = std::array<int, 7>;
  std::map<Key, int> faces;
  for (int tet = 0; tet < tet_count(); ++tet) {
    const auto c = cube_coords(tet_cube(tet));
    const auto& off = types_[tet_type(tet)].offsets;
    for (int skip = 0; skip < 4; ++skip) {
      std::array<std::array<int, 3>, 3> p{};
      int q = 0;
      for (int i = 0; i < 4; ++i)
        if (i != skip) p[q++] = {c[0] + off[i][0], c[1] + off[i][1], c[2] + off[i][2]};
      std::sort(p.begin(), p.end());
      Key key{vertex_index(p[0][0], p[0][1], p[0][2]),
              p[1][0] - p[0][0], p[1][1] - p[0][1], p[1][2] - p[0][2],
              p[2][0] - p[0][0], p[2][1] - p[0][1], p[2][2] - p[0][2]};
      ++faces[key];
    }
  }
  FaceCount fc;
  fc.faces = static_cast<int>(faces.size());
  fc.all_shared_twice = std::all_of(faces.begin(), faces.end(), [](const auto& f) { return f.second == 2; });
  return fc;
}

void PeriodicMesh::dump(std::ostream& out) const {
  out << "# periodic Kuhn mesh n=" << n_ << " h=" << h() << "\n";
  out << "vertices " << vertex_count() << "\n";
  for (int v = 0; v < vertex_count(); ++v) {
    const Vec3 x = vertex_position(v);
    out << v << " " << x[0] << " " << x[1] << " " << x[2] << "\n";
  }
  out << "tets " << tet_count() << "\n";
  for (int t = 0; t < tet_count(); ++t) {
    const auto v = tet_vertices(t);
    const auto e = tet_edges(t);
    out << t << " type " << tet_type(t) << " v";
    for (int x : v) out << " " << x;
    out << " e";
    for (int x : e) out << " " << x;
    out << "\n";
  }
}

}  // namespace snslab
