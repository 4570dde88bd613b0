#include "enclab/cgo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <string>

#include <fftw3.h>
#include <fmt/format.h>

#include "enclab/errors.hpp"
#include "enclab/kernels.hpp"

namespace enclab {

namespace {

CVec2 make_z(const Direction& dir, double tau, cplx zeta) {
  const Vec2 w = dir.omega();
  const Vec2 t = dir.theta();
  return {tau * w.x + kI * zeta * t.x, tau * w.y + kI * zeta * t.y};
}

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument(fmt::format("tau must be positive, got {}", tau));
}

// FFTW's planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class FftPlan {
 public:
  FftPlan(int n, cplx* buffer, int sign) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto* p = reinterpret_cast<fftw_complex*>(buffer);
    plan_ = fftw_plan_dft_2d(n, n, p, p, sign, FFTW_ESTIMATE);
    if (plan_ == nullptr) throw InvalidArgument("FFTW plan creation failed");
  }
  ~FftPlan() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  void run(cplx* buffer) const {
    auto* p = reinterpret_cast<fftw_complex*>(buffer);
    fftw_execute_dft(plan_, p, p);
  }

 private:
  fftw_plan plan_;
};

double l2(const std::vector<cplx>& a) {
  double s = 0.0;
  for (const cplx& x : a) s += std::norm(x);
  return std::sqrt(s);
}

// 8th-order central stencils, offsets -4..4.
constexpr double kD2[9] = {-1.0 / 560, 8.0 / 315, -1.0 / 5, 8.0 / 5, -205.0 / 72, 8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560};
constexpr double kD1[9] = {1.0 / 280, -4.0 / 105, 1.0 / 5, -4.0 / 5, 0.0, 4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280};
constexpr int kHalfWidth = 4;

}  // namespace

SpectralParam SpectralParam::exponential(const Direction& dir, double tau, double k) {
  check_tau(tau);
  if (!(k >= 0.0) || !std::isfinite(k)) throw InvalidArgument(fmt::format("k must be >= 0, got {}", k));
  SpectralParam p;
  p.direction = dir;
  p.tau = tau;
  p.k2 = k * k;
  p.zeta = std::sqrt(tau * tau + k * k);
  p.z = make_z(dir, tau, p.zeta);
  return p;
}

SpectralParam SpectralParam::for_constant(const Direction& dir, double tau, cplx v0) {
  check_tau(tau);
  if (!std::isfinite(v0.real()) || !std::isfinite(v0.imag())) throw InvalidArgument("V0 must be finite");
  SpectralParam p;
  p.direction = dir;
  p.tau = tau;
  p.k2 = v0;
  p.zeta = std::sqrt(cplx(tau * tau) + v0);
  p.z = make_z(dir, tau, p.zeta);
  return p;
}

SpectralParam SpectralParam::conjugate() const {
  SpectralParam p = *this;
  p.zeta = -zeta;
  p.z = make_z(direction, tau, p.zeta);
  return p;
}

double SpectralParam::k() const { return std::sqrt(std::max(0.0, k2.real())); }

PotentialGrid PotentialGrid::sample(const BoundingBox& omega, int n, const std::function<cplx(Vec2)>& v0) {
  if (n < 2 * kHalfWidth + 1) throw InvalidArgument(fmt::format("grid needs at least {} intervals", 2 * kHalfWidth + 1));
  if (!(omega.width() > 0.0) || !(omega.height() > 0.0)) throw InvalidArgument("empty domain box");
  PotentialGrid g;
  g.grid.lo = omega.lo;
  g.grid.h = omega.width() / n;
  g.grid.nx = n;
  const double steps = omega.height() / g.grid.h;
  g.grid.ny = static_cast<int>(std::lround(steps));
  if (g.grid.ny < 1 || std::abs(steps - g.grid.ny) > 1e-9 * steps) {
    throw InvalidArgument(fmt::format("domain height is not a whole number of steps ({})", steps));
  }
  g.values.resize(g.grid.size());
  for (int j = 0; j <= g.grid.ny; ++j) {
    for (int i = 0; i <= g.grid.nx; ++i) {
      const cplx v = v0(g.grid.point(i, j));
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw InvalidArgument("V0 sample is not finite");
      g.values[g.grid.index(i, j)] = v;
    }
  }
  return g;
}

bool PotentialGrid::is_real(double tol) const {
  return std::all_of(values.begin(), values.end(), [tol](const cplx& v) { return std::abs(v.imag()) <= tol; });
}

cplx CGOField::psi_at(Vec2 x) const {
  if (closed_form()) return 0.0;
  const double s = std::clamp((x.x - grid.lo.x) / grid.h, 0.0, static_cast<double>(grid.nx));
  const double t = std::clamp((x.y - grid.lo.y) / grid.h, 0.0, static_cast<double>(grid.ny));
  const int i = std::min(static_cast<int>(s), grid.nx - 1);
  const int j = std::min(static_cast<int>(t), grid.ny - 1);
  const double a = s - i;
  const double b = t - j;
  return (1 - a) * (1 - b) * psi[grid.index(i, j)] + a * (1 - b) * psi[grid.index(i + 1, j)] +
         (1 - a) * b * psi[grid.index(i, j + 1)] + a * b * psi[grid.index(i + 1, j + 1)];
}

cplx CGOField::value(Vec2 x) const { return value_scaled(x, 0.0); }

cplx CGOField::value_scaled(Vec2 x, double shift) const {
  return std::exp(dot(param.z, x) - param.tau * shift) * (1.0 + psi_at(x));
}

CVec2 CGOField::gradient_scaled(Vec2 x, double shift) const {
  const cplx e = std::exp(dot(param.z, x) - param.tau * shift);
  if (closed_form()) return {param.z.x * e, param.z.y * e};
  const double s = std::clamp((x.x - grid.lo.x) / grid.h, 0.0, static_cast<double>(grid.nx));
  const double t = std::clamp((x.y - grid.lo.y) / grid.h, 0.0, static_cast<double>(grid.ny));
  const int i = std::min(static_cast<int>(s), grid.nx - 1);
  const int j = std::min(static_cast<int>(t), grid.ny - 1);
  const double a = s - i;
  const double b = t - j;
  const cplx p00 = psi[grid.index(i, j)], p10 = psi[grid.index(i + 1, j)];
  const cplx p01 = psi[grid.index(i, j + 1)], p11 = psi[grid.index(i + 1, j + 1)];
  const cplx p = (1 - a) * (1 - b) * p00 + a * (1 - b) * p10 + (1 - a) * b * p01 + a * b * p11;
  const cplx px = ((p10 - p00) * (1 - b) + (p11 - p01) * b) / grid.h;
  const cplx py = ((p01 - p00) * (1 - a) + (p11 - p10) * a) / grid.h;
  return {e * (param.z.x * (1.0 + p) + px), e * (param.z.y * (1.0 + p) + py)};
}

CGOField make_exp_cgo(const Direction& dir, double tau, double k) {
  CGOField f;
  f.param = SpectralParam::exponential(dir, tau, k);
  return f;
}

CGOField make_exp_cgo(const Direction& dir, double tau, cplx v0) {
  CGOField f;
  f.param = SpectralParam::for_constant(dir, tau, v0);
  return f;
}

int faddeev_box_size(const CgoGrid& grid) {
  const double diam = std::hypot(grid.nx * grid.h, grid.ny * grid.h);
  const auto need = static_cast<unsigned>(std::ceil(2.0 * diam / grid.h - 1e-9));
  const auto fit = static_cast<unsigned>(std::max(grid.nx, grid.ny) + 1);
  return static_cast<int>(std::bit_ceil(std::max(need, fit)));
}

CGOField solve_faddeev(const PotentialGrid& v0, const Direction& dir, double tau, const FaddeevOptions& opt) {
  return solve_faddeev(v0, SpectralParam::exponential(dir, tau, 0.0), opt);
}

CGOField solve_faddeev(const PotentialGrid& v0, const SpectralParam& param, const FaddeevOptions& opt) {
  const CgoGrid& g = v0.grid;
  if (g.empty() || v0.values.size() != g.size()) throw InvalidArgument("potential grid is empty or inconsistent");
  check_tau(param.tau);
  if (std::abs(dot(param.z, param.z)) > 1e-10 * param.tau * param.tau) {
    throw InvalidArgument("Faddeev solver needs z.z = 0");
  }
  if (opt.max_iterations < 1 || !(opt.tolerance > 0.0)) throw InvalidArgument("bad Born iteration options");

  const int n = faddeev_box_size(g);
  const size_t nn = static_cast<size_t>(n) * static_cast<size_t>(n);
  const int ox = (n - g.nx) / 2;
  const int oy = (n - g.ny) / 2;
  const double box = n * g.h;
  auto at = [n](int i, int j) { return static_cast<size_t>(j) * static_cast<size_t>(n) + static_cast<size_t>(i); };

  std::vector<cplx> vbox(nn, 0.0);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) vbox[at(ox + i, oy + j)] = v0.values[g.index(i, j)];

  // Modulating by e^{-i pi (i + j) / n} maps FFT bin m to frequency 2 pi (m + 1/2) / box.
  std::vector<cplx> mod1(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) mod1[static_cast<size_t>(i)] = std::polar(1.0, -kPi * i / n);
  std::vector<cplx> mod(nn), demod(nn), symbol(nn);
  const double scale = 1.0 / static_cast<double>(nn);
  for (int j = 0; j < n; ++j) {
    const int mj = j < n / 2 ? j : j - n;
    const double xy = 2.0 * kPi * (mj + 0.5) / box;
    for (int i = 0; i < n; ++i) {
      const int mi = i < n / 2 ? i : i - n;
      const double xx = 2.0 * kPi * (mi + 0.5) / box;
      const size_t k = at(i, j);
      mod[k] = mod1[static_cast<size_t>(i)] * mod1[static_cast<size_t>(j)];
      demod[k] = std::conj(mod[k]);
      symbol[k] = scale / (cplx(xx * xx + xy * xy) - 2.0 * kI * (param.z.x * xx + param.z.y * xy));
    }
  }

  std::vector<cplx> psi(nn, 0.0), work(nn);
  FftPlan forward(n, work.data(), FFTW_FORWARD);
  FftPlan backward(n, work.data(), FFTW_BACKWARD);

  CGOField out;
  out.param = param;
  out.grid = g;
  double prev_step = 0.0;
  int growing = 0;
  bool converged = false;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    kernels::born_source(vbox, psi, work);
    kernels::apply_symbol(work, mod);
    forward.run(work.data());
    kernels::apply_symbol(work, symbol);
    backward.run(work.data());
    kernels::apply_symbol(work, demod);

    double step2 = 0.0;
    for (size_t k = 0; k < nn; ++k) step2 += std::norm(work[k] - psi[k]);
    const double step = std::sqrt(step2);
    const double size = l2(work);
    if (!std::isfinite(step) || !std::isfinite(size)) {
      throw BornDiverged(fmt::format("non-finite iterate at iteration {} (tau = {})", it, param.tau));
    }
    if (prev_step > 0.0) out.contraction = step / prev_step;
    psi.swap(work);
    out.iterations = it;
    if (size == 0.0 || step <= opt.tolerance * size) {
      converged = true;
      break;
    }
    growing = (prev_step > 0.0 && step >= prev_step) ? growing + 1 : 0;
    if (growing >= 3) {
      throw BornDiverged(fmt::format("Born iteration not contracting at tau = {}: factor {:.4g}", param.tau,
                                     out.contraction));
    }
    prev_step = step;
  }
  if (!converged) {
    throw BornDiverged(fmt::format("no convergence in {} iterations at tau = {}: factor {:.4g}", opt.max_iterations,
                                   param.tau, out.contraction));
  }

  out.psi.resize(g.size());
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      const cplx p = psi[at(ox + i, oy + j)];
      out.psi[g.index(i, j)] = p;
      out.sup_psi = std::max(out.sup_psi, std::abs(p));
    }
  }
  return out;
}

CGOField conjugate_cgo(const PotentialGrid& v0, const CGOField& field, const FaddeevOptions& opt) {
  if (field.closed_form()) {
    CGOField f;
    f.param = field.param.conjugate();
    return f;
  }
  if (field.grid.nx != v0.grid.nx || field.grid.ny != v0.grid.ny || field.grid.h != v0.grid.h) {
    throw InvalidArgument("conjugate_cgo needs the grid the field was solved on");
  }
  return solve_faddeev(v0, field.param.conjugate(), opt);
}

double cgo_residual(const CGOField& field, const PotentialGrid& v0) {
  const CgoGrid& g = v0.grid;
  if (g.empty() || v0.values.size() != g.size()) throw InvalidArgument("potential grid is empty or inconsistent");
  if (!field.closed_form() && (field.grid.nx != g.nx || field.grid.ny != g.ny || field.grid.h != g.h)) {
    throw InvalidArgument("field and potential grids differ");
  }
  if (g.nx <= 2 * kHalfWidth || g.ny <= 2 * kHalfWidth) throw InvalidArgument("grid too small for the stencil");
  const SpectralParam& p = field.param;
  const Vec2 w = p.direction.omega();
  double shift = -INFINITY;
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) shift = std::max(shift, dot(g.point(i, j), w));

  auto psi = [&](int i, int j) -> cplx { return field.closed_form() ? cplx(0.0) : field.psi[g.index(i, j)]; };
  const cplx zz = dot(p.z, p.z);
  double num = 0.0;
  double den = 0.0;
  const double h = g.h;
  for (int j = kHalfWidth; j <= g.ny - kHalfWidth; ++j) {
    for (int i = kHalfWidth; i <= g.nx - kHalfWidth; ++i) {
      cplx dxx = 0.0, dyy = 0.0, dx = 0.0, dy = 0.0;
      for (int o = -kHalfWidth; o <= kHalfWidth; ++o) {
        const cplx px = psi(i + o, j);
        const cplx py = psi(i, j + o);
        dxx += kD2[o + kHalfWidth] * px;
        dyy += kD2[o + kHalfWidth] * py;
        dx += kD1[o + kHalfWidth] * px;
        dy += kD1[o + kHalfWidth] * py;
      }
      const cplx c = psi(i, j);
      const cplx e = std::exp(dot(p.z, g.point(i, j)) - p.tau * shift);
      const cplx inner = (dxx + dyy) / (h * h) + 2.0 * (p.z.x * dx + p.z.y * dy) / h +
                         (zz + v0.values[g.index(i, j)]) * (1.0 + c);
      num += std::norm(e * inner);
      den += std::norm(e * (1.0 + c));
    }
  }
  return std::sqrt(num / den);
}

CVector sample_scaled(const CGOField& field, const Mesh& mesh, double shift) {
  CVector out(static_cast<Eigen::Index>(mesh.nodes.size()));
  for (size_t i = 0; i < mesh.nodes.size(); ++i) out[static_cast<Eigen::Index>(i)] = field.value_scaled(mesh.nodes[i], shift);
  return out;
}

double max_projection(const Mesh& mesh, Vec2 omega) {
  if (mesh.nodes.empty()) throw InvalidArgument("empty mesh");
  double m = -INFINITY;
  for (const Vec2& x : mesh.nodes) m = std::max(m, dot(x, omega));
  return m;
}

namespace {

// Row of K - M_kappa applied to e^{x.z}, divided by the node value. The P1 stencil on the
// diagonal-cut grid couples the four axis neighbours and the two along (1, 1).
cplx dispersion(CVec2 z, double hx, double hy, cplx kappa) {
  const cplx cx = std::cosh(hx * z.x), cy = std::cosh(hy * z.y), cd = std::cosh(hx * z.x + hy * z.y);
  return (hy / hx) * (2.0 - 2.0 * cx) + (hx / hy) * (2.0 - 2.0 * cy) - kappa * hx * hy * (0.5 + (cx + cy + cd) / 6.0);
}

CVec2 dispersion_gradient(CVec2 z, double hx, double hy, cplx kappa) {
  const cplx sx = std::sinh(hx * z.x), sy = std::sinh(hy * z.y), sd = std::sinh(hx * z.x + hy * z.y);
  return {-2.0 * hy * sx - kappa * hx * hy * hx * (sx + sd) / 6.0,
          -2.0 * hx * sy - kappa * hx * hy * hy * (sy + sd) / 6.0};
}

}  // namespace

CVec2 discrete_frequency(const SpectralParam& param, double hx, double hy) {
  if (!(hx > 0.0) || !(hy > 0.0)) throw InvalidArgument(fmt::format("mesh steps must be positive, got {} {}", hx, hy));
  const Vec2 re{param.z.x.real(), param.z.y.real()};
  auto at = [&](Vec2 im) { return CVec2{cplx(re.x, im.x), cplx(re.y, im.y)}; };
  // S is a cancellation of O(cosh) terms, so its roundoff floor scales with their size
  const double mag = 2.0 * (hy / hx) * (1.0 + std::cosh(hx * re.x)) + 2.0 * (hx / hy) * (1.0 + std::cosh(hy * re.y)) +
                     std::abs(param.k2) * hx * hy * 4.0 * std::cosh(hx * std::abs(re.x) + hy * std::abs(re.y));
  Vec2 q{param.z.x.imag(), param.z.y.imag()};
  Vec2 best = q;
  double best_res = INFINITY;
  int polish = 2;  // Newton steps taken after the residual first reaches the floor
  for (int it = 0; it < 60 && polish > 0; ++it) {
    const CVec2 z = at(q);
    const cplx s = dispersion(z, hx, hy, param.k2);
    if (!std::isfinite(std::abs(s))) break;
    if (std::abs(s) < best_res) {
      best_res = std::abs(s);
      best = q;
    }
    if (best_res <= 1e-13 * mag) --polish;
    // dS/dq_j = i dS/dz_j; solve the real 2x2 system for Re S = Im S = 0
    const CVec2 g = dispersion_gradient(z, hx, hy, param.k2);
    const cplx jx = cplx(0.0, 1.0) * g.x, jy = cplx(0.0, 1.0) * g.y;
    const double det = jx.real() * jy.imag() - jy.real() * jx.imag();
    if (!std::isfinite(det) || det == 0.0) break;
    q.x -= (s.real() * jy.imag() - jy.real() * s.imag()) / det;
    q.y -= (jx.real() * s.imag() - s.real() * jx.imag()) / det;
  }
  if (best_res <= 1e-13 * mag) return at(best);
  throw NoConvergence(fmt::format("no discrete frequency near tau = {} for steps {} x {}", param.tau, hx, hy));
}

CVector sample_exponential(const Mesh& mesh, CVec2 z, double tau, double shift) {
  CVector out(static_cast<Eigen::Index>(mesh.nodes.size()));
  for (size_t i = 0; i < mesh.nodes.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = std::exp(dot(z, mesh.nodes[i]) - tau * shift);
  }
  return out;
}

}  // namespace enclab
