#pragma once

// Periodic structured tetrahedral mesh of [0,2pi)^3.
//
// Each of the n^3 cubes is split into six Kuhn tetrahedra, one per
// permutation of the axes: 0 -> e_a -> e_a+e_b -> (1,1,1). All tets of one
// type are translates of each other, so geometric data is stored per type.
// Edges are keyed by their lower vertex and a direction in {0,1}^3 \ {0},
// which gives exactly 7 edges per vertex.

#include <array>
#include <iosfwd>
#include <vector>

#include "snslab/spectral.hpp"

namespace snslab {

struct TetType {
  std::array<std::array<int, 3>, 4> offsets{};  // corner offsets within the cube
  std::array<Vec3, 4> grad_lambda{};             // gradients of the barycentric coordinates
  double volume = 0.0;
};

class PeriodicMesh {
 public:
  static constexpr int kTypes = 6;
  static constexpr std::array<std::array<int, 2>, 6> kLocalEdges = {{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

  explicit PeriodicMesh(int n);

  int n() const { return n_; }
  double spacing() const { return kTwoPi / n_; }
  /// Largest tet diameter (the cube diagonal).
  double h() const;

  int vertex_count() const { return n_ * n_ * n_; }
  int edge_count() const { return 7 * vertex_count(); }
  int cube_count() const { return n_ * n_ * n_; }
  int tet_count() const { return kTypes * cube_count(); }

  int vertex_index(int i, int j, int k) const;
  Vec3 vertex_position(int v) const;

  const TetType& type(int t) const { return types_[t]; }
  /// Tet id = cube * 6 + type.
  static int tet_type(int tet) { return tet % kTypes; }
  static int tet_cube(int tet) { return tet / kTypes; }
  std::array<int, 3> cube_coords(int cube) const;
  Vec3 cube_origin(int cube) const;

  std::array<int, 4> tet_vertices(int tet) const;
  std::array<int, 6> tet_edges(int tet) const;
  /// Midpoint of edge e (representative in the fundamental cell image).
  Vec3 edge_midpoint(int e) const;

  /// Number of distinct faces, and whether each is shared by exactly two tets.
  struct FaceCount {
    int faces = 0;
    bool all_shared_twice = false;
  };
  FaceCount count_faces() const;

  void dump(std::ostream& out) const;

 private:
  int n_;
  std::array<TetType, kTypes> types_;
};

}  // namespace snslab
