#include "snslab/fem/space.hpp"

#include <ostream>
#include <stdexcept>

namespace snslab {
namespace {

using Triplet = Eigen::Triplet<double>;

std::array<double, 10> p2_values(const std::array<double, 4>& l) {
  std::array<double, 10> v{};
  for (int i = 0; i < 4; ++i) v[i] = l[i] * (2.0 * l[i] - 1.0);
  for (int e = 0; e < 6; ++e) {
    const auto [a, b] = PeriodicMesh::kLocalEdges[e];
    v[4 + e] = 4.0 * l[a] * l[b];
  }
  return v;
}

std::array<Vec3, 10> p2_gradients(const std::array<double, 4>& l, const std::array<Vec3, 4>& gl) {
  std::array<Vec3, 10> g{};
  for (int i = 0; i < 4; ++i)
    for (int c = 0; c < 3; ++c) g[i][c] = (4.0 * l[i] - 1.0) * gl[i][c];
  for (int e = 0; e < 6; ++e) {
    const auto [a, b] = PeriodicMesh::kLocalEdges[e];
    for (int c = 0; c < 3; ++c) g[4 + e][c] = 4.0 * (l[b] * gl[a][c] + l[a] * gl[b][c]);
  }
  return g;
}

}  // namespace

TaylorHoodSpace::TaylorHoodSpace(int n) : mesh_(n) {
  assembly_ = tabulate(2);
  accurate_ = tabulate(3);
  assemble_static();
}

Tabulation TaylorHoodSpace::tabulate(int s) const {
  Tabulation tab;
  tab.rule = grundmann_moeller(s);
  const double h = mesh_.spacing();
  for (const auto& l : tab.rule.points) {
    tab.p2.push_back(p2_values(l));
    tab.p1.push_back(l);
  }
  for (int t = 0; t < PeriodicMesh::kTypes; ++t) {
    const TetType& tt = mesh_.type(t);
    for (const auto& l : tab.rule.points) {
      tab.p2_grad[t].push_back(p2_gradients(l, tt.grad_lambda));
      Vec3 x{0, 0, 0};
      for (int i = 0; i < 4; ++i)
        for (int c = 0; c < 3; ++c) x[c] += l[i] * h * tt.offsets[i][c];
      tab.offset[t].push_back(x);
    }
  }
  return tab;
}

std::array<int, 10> TaylorHoodSpace::local_dofs(int tet) const {
  std::array<int, 10> d{};
  const auto v = mesh_.tet_vertices(tet);
  const auto e = mesh_.tet_edges(tet);
  for (int i = 0; i < 4; ++i) d[i] = v[i];
  for (int i = 0; i < 6; ++i) d[4 + i] = mesh_.vertex_count() + e[i];
  return d;
}

Vec3 TaylorHoodSpace::dof_position(int s) const {
  if (s < mesh_.vertex_count()) return mesh_.vertex_position(s);
  return mesh_.edge_midpoint(s - mesh_.vertex_count());
}

void TaylorHoodSpace::assemble_static() {
  const Tabulation& tab = assembly_;
  const std::size_t nq = tab.points();
  const int S = scalar_dofs();
  const int P = pressure_dofs();

  // Local matrices depend only on the tet type.
  std::array<Eigen::Matrix<double, 10, 10>, PeriodicMesh::kTypes> mass, stiff;
  std::array<std::array<Eigen::Matrix<double, 4, 10>, 3>, PeriodicMesh::kTypes> div;
  std::array<Eigen::Matrix4d, PeriodicMesh::kTypes> pmass;
  for (int t = 0; t < PeriodicMesh::kTypes; ++t) {
    const double vol = mesh_.type(t).volume;
    mass[t].setZero();
    stiff[t].setZero();
    pmass[t].setZero();
    for (auto& d : div[t]) d.setZero();
    for (std::size_t q = 0; q < nq; ++q) {
      const double w = vol * tab.rule.weights[q];
      const auto& v = tab.p2[q];
      const auto& g = tab.p2_grad[t][q];
      const auto& l = tab.p1[q];
      for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) {
          mass[t](i, j) += w * v[i] * v[j];
          stiff[t](i, j) += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1] + g[i][2] * g[j][2]);
        }
      for (int p = 0; p < 4; ++p) {
        for (int j = 0; j < 10; ++j)
          for (int c = 0; c < 3; ++c) div[t][c](p, j) += w * l[p] * g[j][c];
        for (int r = 0; r < 4; ++r) pmass[t](p, r) += w * l[p] * l[r];
      }
    }
  }

  std::vector<Triplet> tm, ts, tb, tp;
  for (int tet = 0; tet < mesh_.tet_count(); ++tet) {
    const int t = PeriodicMesh::tet_type(tet);
    const auto d = local_dofs(tet);
    const auto pv = mesh_.tet_vertices(tet);
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) {
        tm.emplace_back(d[i], d[j], mass[t](i, j));
        ts.emplace_back(d[i], d[j], stiff[t](i, j));
      }
    for (int p = 0; p < 4; ++p) {
      for (int c = 0; c < 3; ++c)
        for (int j = 0; j < 10; ++j) tb.emplace_back(pv[p], c * S + d[j], div[t][c](p, j));
      for (int r = 0; r < 4; ++r) tp.emplace_back(pv[p], pv[r], pmass[t](p, r));
    }
  }
  scalar_mass_.resize(S, S);
  scalar_mass_.setFromTriplets(tm.begin(), tm.end());
  scalar_stiffness_.resize(S, S);
  scalar_stiffness_.setFromTriplets(ts.begin(), ts.end());
  divergence_.resize(P, 3 * S);
  divergence_.setFromTriplets(tb.begin(), tb.end());
  pressure_mass_.resize(P, P);
  pressure_mass_.setFromTriplets(tp.begin(), tp.end());
  pressure_weights_ = pressure_mass_ * Eigen::VectorXd::Ones(P);
}

SparseMatrix block_diagonal(const SparseMatrix& s) {
  std::vector<Triplet> t;
  t.reserve(3 * s.nonZeros());
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < s.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(s, k); it; ++it)
        t.emplace_back(c * s.rows() + it.row(), c * s.cols() + it.col(), it.value());
  SparseMatrix out(3 * s.rows(), 3 * s.cols());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

SparseMatrix TaylorHoodSpace::velocity_mass() const { return block_diagonal(scalar_mass_); }
SparseMatrix TaylorHoodSpace::velocity_stiffness() const { return block_diagonal(scalar_stiffness_); }

void TaylorHoodSpace::dump(std::ostream& out) const {
  mesh_.dump(out);
  out << "dofs scalar " << scalar_dofs() << " velocity " << velocity_dofs() << " pressure " << pressure_dofs() << "\n";
  for (int tet = 0; tet < mesh_.tet_count(); ++tet) {
    out << "tet " << tet << " p2";
    for (int d : local_dofs(tet)) out << " " << d;
    out << "\n";
  }
}

FemState zero_state(const TaylorHoodSpace& space) {
  FemState s;
  s.velocity = Eigen::VectorXd::Zero(space.velocity_dofs());
  s.pressure = Eigen::VectorXd::Zero(space.pressure_dofs());
  s.divergence_free = true;
  return s;
}

std::size_t sample_index(const TaylorHoodSpace& space, const Tabulation& tab, int type, std::size_t q, int cube) {
  return (static_cast<std::size_t>(type) * tab.points() + q) * space.mesh().cube_count() + cube;
}

QuadSamples sample_function(const TaylorHoodSpace& space, const Tabulation& tab, const PointFunction& f,
                            const PointGradient& grad) {
  const auto& mesh = space.mesh();
  const std::size_t total = PeriodicMesh::kTypes * tab.points() * mesh.cube_count();
  QuadSamples s;
  s.value.resize(total);
  if (grad) s.grad.resize(total);
  for (int t = 0; t < PeriodicMesh::kTypes; ++t)
    for (std::size_t q = 0; q < tab.points(); ++q)
      for (int cube = 0; cube < mesh.cube_count(); ++cube) {
        const Vec3 o = mesh.cube_origin(cube);
        const Vec3 x{o[0] + tab.offset[t][q][0], o[1] + tab.offset[t][q][1], o[2] + tab.offset[t][q][2]};
        const std::size_t i = sample_index(space, tab, t, q, cube);
        s.value[i] = f(x);
        if (grad) s.grad[i] = grad(x);
      }
  return s;
}

QuadSamples sample_spectral(const TaylorHoodSpace& space, const Tabulation& tab, const SpectralField& v) {
  const auto& mesh = space.mesh();
  const std::size_t total = PeriodicMesh::kTypes * tab.points() * mesh.cube_count();
  QuadSamples s;
  s.value.resize(total);
  s.grad.resize(total);
  // The cube lattice is exactly the lattice offset + (2pi/n)(a,b,c).
  std::vector<Vec3> offsets;
  for (int t = 0; t < PeriodicMesh::kTypes; ++t)
    for (std::size_t q = 0; q < tab.points(); ++q) offsets.push_back(tab.offset[t][q]);
  const auto jets = evaluate_on_lattices(v, offsets, mesh.n());
  std::size_t o = 0;
  for (int t = 0; t < PeriodicMesh::kTypes; ++t)
    for (std::size_t q = 0; q < tab.points(); ++q, ++o)
      for (int cube = 0; cube < mesh.cube_count(); ++cube) {
        const std::size_t i = sample_index(space, tab, t, q, cube);
        s.value[i] = jets[o][cube].value;
        s.grad[i] = jets[o][cube].grad;
      }
  return s;
}

QuadSamples sample_state(const TaylorHoodSpace& space, const Tabulation& tab, const Eigen::VectorXd& velocity) {
  const auto& mesh = space.mesh();
  const int S = space.scalar_dofs();
  const std::size_t total = PeriodicMesh::kTypes * tab.points() * mesh.cube_count();
  QuadSamples s;
  s.value.assign(total, Vec3{0, 0, 0});
  s.grad.assign(total, std::array<Vec3, 3>{});
  for (int tet = 0; tet < mesh.tet_count(); ++tet) {
    const int t = PeriodicMesh::tet_type(tet);
    const int cube = PeriodicMesh::tet_cube(tet);
    const auto d = space.local_dofs(tet);
    for (std::size_t q = 0; q < tab.points(); ++q) {
      const std::size_t idx = sample_index(space, tab, t, q, cube);
      Vec3& val = s.value[idx];
      auto& g = s.grad[idx];
      for (int i = 0; i < 10; ++i) {
        const double phi = tab.p2[q][i];
        const Vec3& dphi = tab.p2_grad[t][q][i];
        for (int c = 0; c < 3; ++c) {
          const double coef = velocity[c * S + d[i]];
          val[c] += coef * phi;
          for (int j = 0; j < 3; ++j) g[c][j] += coef * dphi[j];
        }
      }
    }
  }
  return s;
}

Eigen::VectorXd load_vector(const TaylorHoodSpace& space, const Tabulation& tab, const QuadSamples& samples) {
  const auto& mesh = space.mesh();
  const int S = space.scalar_dofs();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(space.velocity_dofs());
  for (int tet = 0; tet < mesh.tet_count(); ++tet) {
    const int t = PeriodicMesh::tet_type(tet);
    const int cube = PeriodicMesh::tet_cube(tet);
    const double vol = mesh.type(t).volume;
    const auto d = space.local_dofs(tet);
    for (std::size_t q = 0; q < tab.points(); ++q) {
      const Vec3& v = samples.value[sample_index(space, tab, t, q, cube)];
      const double w = vol * tab.rule.weights[q];
      for (int i = 0; i < 10; ++i)
        for (int c = 0; c < 3; ++c) f[c * S + d[i]] += w * v[c] * tab.p2[q][i];
    }
  }
  return f;
}

FemState interpolate(const TaylorHoodSpace& space, const PointFunction& f) {
  FemState s = zero_state(space);
  s.divergence_free = false;
  const int S = space.scalar_dofs();
  for (int d = 0; d < S; ++d) {
    const Vec3 v = f(space.dof_position(d));
    for (int c = 0; c < 3; ++c) s.velocity[c * S + d] = v[c];
  }
  return s;
}

namespace {

double block_quadratic(const SparseMatrix& m, const Eigen::VectorXd& u) {
  const Eigen::Index S = m.rows();
  if (u.size() != 3 * S) throw std::invalid_argument("velocity vector size mismatch");
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto seg = u.segment(c * S, S);
    sum += seg.dot(m * seg);
  }
  return sum;
}

}  // namespace

double mass_norm_sq(const TaylorHoodSpace& space, const Eigen::VectorXd& u) {
  return block_quadratic(space.scalar_mass(), u);
}

double stiffness_norm_sq(const TaylorHoodSpace& space, const Eigen::VectorXd& u) {
  return block_quadratic(space.scalar_stiffness(), u);
}

double divergence_residual(const TaylorHoodSpace& space, const Eigen::VectorXd& u) {
  return (space.divergence() * u).norm();
}

}  // namespace snslab
