#include "snslab/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "snslab/gmres.hpp"
#include "snslab/pressure.hpp"

namespace snslab {
namespace {

// Band modes |k_i| <= dealias_cutoff(n), packed component-major.
class BandLayout {
 public:
  explicit BandLayout(int n) : n_(n) {
    const int c = dealias_cutoff(n);
    for (int k1 = -c; k1 <= c; ++k1)
      for (int k2 = -c; k2 <= c; ++k2)
        for (int k3 = -c; k3 <= c; ++k3) {
          full_.push_back((static_cast<std::size_t>(fft_index(k1, n)) * n + fft_index(k2, n)) * n + fft_index(k3, n));
          k_.push_back({k1, k2, k3});
        }
  }

  int n() const { return n_; }
  std::size_t modes() const { return full_.size(); }
  std::size_t full_index(std::size_t b) const { return full_[b]; }
  const std::array<int, 3>& k(std::size_t b) const { return k_[b]; }
  double k2(std::size_t b) const { return k_[b][0] * k_[b][0] + k_[b][1] * k_[b][1] + k_[b][2] * k_[b][2]; }

  Eigen::VectorXcd pack(const SpectralField& f) const {
    Eigen::VectorXcd v(3 * modes());
    for (int c = 0; c < 3; ++c)
      for (std::size_t b = 0; b < modes(); ++b) v[c * modes() + b] = f.component(c)[full_[b]];
    return v;
  }

  SpectralField unpack(const Eigen::VectorXcd& v) const {
    SpectralField f(n_);
    for (int c = 0; c < 3; ++c)
      for (std::size_t b = 0; b < modes(); ++b) f.component(c)[full_[b]] = v[c * modes() + b];
    return f;
  }

  // In-place Leray projection of a packed vector.
  void project(Eigen::VectorXcd& v) const {
    const std::size_t nb = modes();
    for (std::size_t b = 0; b < nb; ++b) {
      const double kk = k2(b);
      if (kk == 0.0) continue;
      const auto& k = k_[b];
      const Complex s = (static_cast<double>(k[0]) * v[b] + static_cast<double>(k[1]) * v[nb + b] +
                         static_cast<double>(k[2]) * v[2 * nb + b]) / kk;
      for (int c = 0; c < 3; ++c) v[c * nb + b] -= static_cast<double>(k[c]) * s;
    }
  }

 private:
  int n_;
  std::vector<std::size_t> full_;
  std::vector<std::array<int, 3>> k_;
};

const BandLayout& band_layout(int n) {
  thread_local std::vector<std::unique_ptr<BandLayout>> cache;
  for (const auto& l : cache)
    if (l->n() == n) return *l;
  cache.push_back(std::make_unique<BandLayout>(n));
  return *cache.back();
}

// x -> P[(w.grad) x] on packed band vectors. Real grids are transformed two
// at a time by packing them into the real and imaginary parts of one complex
// FFT.
class ConvectionOperator {
 public:
  ConvectionOperator(const BandLayout& layout, const SpectralField& w) : layout_(layout), n_(layout.n()) {
    const std::size_t size = static_cast<std::size_t>(n_) * n_ * n_;
    w_grid_ = to_grid(truncate_to_band(w));
    work_.resize(size);
    out_.resize(size);
    for (auto& g : grad_) g.resize(size);
    for (auto& p : prod_) p.resize(size);
  }

  void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
    const std::size_t nb = layout_.modes();
    const std::size_t size = work_.size();
    // Nine derivative grids d_j x_i, two per FFT.
    for (int pair = 0; pair < 5; ++pair) {
      std::fill(work_.begin(), work_.end(), Complex{});
      for (int half = 0; half < 2; ++half) {
        const int q = 2 * pair + half;
        if (q >= 9) break;
        const int i = q / 3, j = q % 3;
        const Complex unit = half == 0 ? Complex{1.0, 0.0} : Complex{0.0, 1.0};
        for (std::size_t b = 0; b < nb; ++b)
          work_[layout_.full_index(b)] += unit * Complex{0.0, static_cast<double>(layout_.k(b)[j])} * x[i * nb + b];
      }
      fft_backward(n_, work_, out_);
      for (std::size_t p = 0; p < size; ++p) {
        grad_[2 * pair][p] = out_[p].real();
        if (2 * pair + 1 < 9) grad_[2 * pair + 1][p] = out_[p].imag();
      }
    }
    for (int i = 0; i < 3; ++i) {
      auto& g = prod_[i];
      for (std::size_t p = 0; p < size; ++p)
        g[p] = w_grid_.values[0][p] * grad_[3 * i][p] + w_grid_.values[1][p] * grad_[3 * i + 1][p] +
               w_grid_.values[2][p] * grad_[3 * i + 2][p];
    }
    const double scale = 1.0 / static_cast<double>(size);
    y.resize(3 * nb);
    // Components 0 and 1 together, then component 2 alone.
    for (std::size_t p = 0; p < size; ++p) work_[p] = Complex{prod_[0][p], prod_[1][p]};
    fft_forward(n_, work_, out_);
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& k = layout_.k(b);
      const std::size_t ip = layout_.full_index(b);
      const std::size_t im = (static_cast<std::size_t>(fft_index(-k[0], n_)) * n_ + fft_index(-k[1], n_)) * n_ + fft_index(-k[2], n_);
      const Complex zp = out_[ip], zm = std::conj(out_[im]);
      y[b] = 0.5 * (zp + zm) * scale;
      y[nb + b] = Complex{0.0, -0.5} * (zp - zm) * scale;
    }
    for (std::size_t p = 0; p < size; ++p) work_[p] = Complex{prod_[2][p], 0.0};
    fft_forward(n_, work_, out_);
    for (std::size_t b = 0; b < nb; ++b) y[2 * nb + b] = out_[layout_.full_index(b)] * scale;
    layout_.project(y);
  }

 private:
  const BandLayout& layout_;
  int n_;
  VectorGrid w_grid_;
  std::vector<Complex> work_, out_;
  std::array<std::vector<double>, 9> grad_;
  std::array<std::vector<double>, 3> prod_;
};

void require_solenoidal(const SpectralField& u, const char* what) {
  if (!u.divergence_free() || divergence_defect(u) > 1e-10)
    throw std::invalid_argument(std::string(what) + " must be divergence-free");
}

}  // namespace

void StepConfig::validate() const {
  if (!(mu > 0.0)) throw std::invalid_argument("viscosity must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("time step must be positive");
  if (steps < 1) throw std::invalid_argument("step count must be >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("truncation radius must be positive");
  if (!(tolerance > 0.0 && tolerance <= 1e-6)) throw std::invalid_argument("solver tolerance must lie in (0, 1e-6]");
  if (max_iterations < 1) throw std::invalid_argument("solver max iterations must be >= 1");
}

double cutoff_zeta(double x, double radius) {
  if (x <= radius) return 1.0;
  if (x >= 2.0 * radius) return 0.0;
  const double t = (x - radius) / radius;
  const double s = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
  return 1.0 - s;
}

StepResult step_scaled(const SpectralField& u_prev, const SpectralField& noise, const StepConfig& config, double scale) {
  require_solenoidal(u_prev, "previous state");
  if (noise.n() != u_prev.n()) throw std::invalid_argument("step: noise resolution mismatch");
  const int n = u_prev.n();
  const BandLayout& layout = band_layout(n);
  const std::size_t nb = layout.modes();

  Eigen::VectorXcd rhs = layout.pack(u_prev);
  if (scale != 0.0) rhs += scale * layout.pack(noise);
  layout.project(rhs);

  Eigen::VectorXd diag(3 * nb);
  for (int c = 0; c < 3; ++c)
    for (std::size_t b = 0; b < nb; ++b) diag[c * nb + b] = 1.0 + config.tau * config.mu * layout.k2(b);

  Eigen::VectorXcd x = rhs.cwiseQuotient(diag.cast<Complex>());
  GmresResult res;
  if (scale == 0.0) {
    res.converged = true;
  } else {
    ConvectionOperator conv(layout, u_prev);
    Eigen::VectorXcd cx;
    const double weight = scale * config.tau;
    auto apply = [&](const Eigen::VectorXcd& v, Eigen::VectorXcd& out) {
      conv.apply(v, cx);
      out = diag.cast<Complex>().cwiseProduct(v) + weight * cx;
    };
    auto precondition = [&](const Eigen::VectorXcd& v, Eigen::VectorXcd& out) { out = v.cwiseQuotient(diag.cast<Complex>()); };
    res = gmres(apply, precondition, rhs, x, config.tolerance, config.max_iterations);
    if (!res.converged)
      throw SolverError("semi-implicit step did not converge (relative residual " + std::to_string(res.relative_residual) +
                            " after " + std::to_string(res.iterations) + " iterations)",
                        -1);
  }
  SpectralField u = layout.unpack(x);
  symmetrize(u);
  for (int c = 0; c < 3; ++c) u.at(c, 0, 0, 0) = u.at(c, 0, 0, 0).real();
  u.set_divergence_free(true);
  return {std::move(u), res.iterations, res.relative_residual};
}

StepResult step_semi_implicit(const SpectralField& u_prev, const SpectralField& noise, const StepConfig& config) {
  return step_scaled(u_prev, noise, config, 1.0);
}

StepResult step_truncated(const SpectralField& u_prev, const SpectralField& noise, const StepConfig& config) {
  return step_scaled(u_prev, noise, config, cutoff_zeta(sobolev_norm(u_prev, 2), config.radius));
}

int discrete_stop_index(std::span<const double> norms, double radius) {
  if (norms.empty()) throw std::invalid_argument("discrete_stop_index: empty norm sequence");
  double running = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < norms.size(); ++m) {
    running = std::max(running, norms[m]);
    if (running >= radius) return static_cast<int>(m);
  }
  return static_cast<int>(norms.size()) - 1;
}

double seminorm(const SpectralField& v, int s) {
  if (s < 0 || s > 3) throw std::invalid_argument("seminorm order must be in 0..3");
  const int n = v.n();
  double sum = 0.0;
  for (int i1 = 0; i1 < n; ++i1)
    for (int i2 = 0; i2 < n; ++i2)
      for (int i3 = 0; i3 < n; ++i3) {
        const int k1 = wavenumber(i1, n), k2 = wavenumber(i2, n), k3 = wavenumber(i3, n);
        const double kk = static_cast<double>(k1 * k1 + k2 * k2 + k3 * k3);
        const std::size_t idx = (static_cast<std::size_t>(i1) * n + i2) * n + i3;
        const double a = std::norm(v.component(0)[idx]) + std::norm(v.component(1)[idx]) + std::norm(v.component(2)[idx]);
        sum += std::pow(kk, s) * a;
      }
  return std::sqrt(kTorusVolume * sum);
}

std::vector<double> Trajectory::h2_norms() const {
  std::vector<double> out(norms.size());
  for (std::size_t m = 0; m < norms.size(); ++m) out[m] = norms[m][2];
  return out;
}

Trajectory run_trajectory(const SpectralField& u0, const NoisePath& path, const StepConfig& config,
                          const Diffusion& diffusion, TrajectoryOptions options) {
  config.validate();
  require_solenoidal(u0, "initial state");
  if (path.modes() != static_cast<int>(diffusion.basis().size()))
    throw std::invalid_argument("noise path mode count does not match the diffusion basis");
  int steps = std::min(config.steps, path.steps());
  if (options.max_steps >= 0) steps = std::min(steps, options.max_steps);

  Trajectory traj;
  traj.tau = config.tau;
  auto record = [&](const SpectralField& u) {
    traj.norms.push_back({sobolev_norm(u, 0), sobolev_norm(u, 1), sobolev_norm(u, 2)});
    traj.seminorms.push_back({seminorm(u, 0), seminorm(u, 1), seminorm(u, 2), seminorm(u, 3)});
    if (options.store_states) traj.states.push_back(u);
  };
  record(u0);
  traj.increment_l2.push_back(0.0);
  traj.increment_h1.push_back(0.0);
  traj.iterations.push_back(0);

  SpectralField u = u0;
  for (int m = 1; m <= steps; ++m) {
    const SpectralField noise = diffusion.is_zero() ? SpectralField(u.n()) : diffusion.apply(u, path.step(m - 1));
    StepResult step;
    try {
      step = config.variant == SchemeVariant::plain ? step_semi_implicit(u, noise, config)
                                                    : step_truncated(u, noise, config);
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " at step " + std::to_string(m), m);
    }
    const SpectralField diff = step.u - u;
    traj.increment_l2.push_back(sobolev_norm(diff, 0));
    traj.increment_h1.push_back(seminorm(diff, 1));
    traj.iterations.push_back(step.iterations);
    u = std::move(step.u);
    record(u);
  }
  traj.stop_index = discrete_stop_index(traj.h2_norms(), config.radius);
  return traj;
}

DiscretePressure discrete_pressure(const SpectralField& u_m, const SpectralField& u_prev, const Diffusion& diffusion) {
  require_solenoidal(u_m, "current state");
  require_solenoidal(u_prev, "previous state");
  const int n = u_m.n();
  const auto t = tensor_product(u_m, u_prev);
  // div div T = sum_ij (i k_i)(i k_j) T_ij; then -Delta^{-1}.
  ScalarSpectralField dd(n);
  for (int i1 = 0; i1 < n; ++i1)
    for (int i2 = 0; i2 < n; ++i2)
      for (int i3 = 0; i3 < n; ++i3) {
        const std::array<int, 3> k = {wavenumber(i1, n), wavenumber(i2, n), wavenumber(i3, n)};
        const std::size_t idx = (static_cast<std::size_t>(i1) * n + i2) * n + i3;
        Complex s{};
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) s -= static_cast<double>(k[i] * k[j]) * t[3 * i + j][idx];
        dd.coeffs()[idx] = s;
      }
  dd.coeffs()[0] = Complex{};
  ScalarSpectralField det = inv_laplacian(dd);
  for (auto& c : det.coeffs()) c = -c;
  DiscretePressure out{std::move(det), {}};
  for (const auto& f : diffusion.mode_fields(u_prev)) out.noise.push_back(gradient_part(f));
  return out;
}

namespace {

Estimate estimate(const std::vector<double>& samples) {
  Estimate e;
  const double n = static_cast<double>(samples.size());
  for (double s : samples) e.mean += s;
  e.mean /= n;
  if (samples.size() > 1) {
    double var = 0.0;
    for (double s : samples) var += (s - e.mean) * (s - e.mean);
    var /= (n - 1.0);
    e.standard_error = std::sqrt(var / n);
  }
  return e;
}

// max_{m in range} a_m^{p} + tau sum_{m in range} a_m^{p-2} b_m^2 over m = 1..last.
double moment_statistic(const Trajectory& t, int s, int last, double p) {
  double peak = 0.0, sum = 0.0;
  for (int m = 1; m <= last; ++m) {
    const double a = t.seminorms[m][s];
    const double b = t.seminorms[m][s + 1];
    peak = std::max(peak, std::pow(a, p));
    sum += std::pow(a, p - 2.0) * b * b;
  }
  return peak + t.tau * sum;
}

}  // namespace

MomentReport moment_report(std::span<const Trajectory> trajectories, int q) {
  if (trajectories.empty()) throw std::invalid_argument("moment_report: no trajectories");
  if (q < 1) throw std::invalid_argument("moment_report: q must be >= 1");
  const double p = std::pow(2.0, q);
  std::vector<double> l2, h1, h2, inc;
  for (const auto& t : trajectories) {
    const int last = t.steps();
    const int stop = std::min(t.stop_index, last);
    l2.push_back(moment_statistic(t, 0, last, p));
    h1.push_back(moment_statistic(t, 1, stop, p));
    h2.push_back(moment_statistic(t, 2, stop, p));
    double s = 0.0;
    for (int m = 1; m <= stop; ++m) s += t.increment_h1[m] * t.increment_h1[m];
    inc.push_back(std::pow(s, q));
  }
  MomentReport r;
  r.paths = static_cast<int>(trajectories.size());
  r.q = q;
  r.l2 = estimate(l2);
  r.h1 = estimate(h1);
  r.h2 = estimate(h2);
  r.increments = estimate(inc);
  return r;
}

}  // namespace snslab
