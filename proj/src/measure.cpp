#include "loggas/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "loggas/errors.hpp"

namespace loggas {

using std::numbers::pi;

AliasTable::AliasTable(const std::vector<double>& weights) {
  const std::size_t n = weights.size();
  require(n > 0, ErrorKind::configuration, "alias table needs at least one weight");
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0 && std::isfinite(w), ErrorKind::configuration, "weights must be finite and >= 0");
    total += w;
  }
  require(total > 0.0, ErrorKind::configuration, "weights sum to zero");
  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back(), l = large.back();
    small.pop_back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::size_t i : large) prob_[i] = 1.0, alias_[i] = i;
  for (std::size_t i : small) prob_[i] = 1.0, alias_[i] = i;
}

std::size_t AliasTable::draw(Stream& stream) const {
  const std::size_t i = stream.index(prob_.size());
  return stream.uniform() < prob_[i] ? i : alias_[i];
}

namespace {

std::size_t grid_total(int d, int cells) {
  std::size_t t = 1;
  for (int c = 0; c < d; ++c) t *= static_cast<std::size_t>(cells);
  return t;
}

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

}  // namespace

double BaseMeasure::cell_width() const {
  const double L = domain_.is_torus() ? 1.0 : 2.0 * domain_.radius;
  return cells_ > 0 ? L / cells_ : L;
}

BaseMeasure BaseMeasure::uniform(const Domain& domain) {
  BaseMeasure m;
  m.domain_ = domain;
  m.kind_ = Kind::uniform;
  m.linf_ = domain.is_torus() ? 1.0 : std::pow(2.0 * domain.radius, -domain.d);
  m.description_ = "uniform";
  return m;
}

BaseMeasure BaseMeasure::grid(const Domain& domain, int cells, std::vector<double> density) {
  require(cells >= 1, ErrorKind::configuration, "grid needs >= 1 cell per axis");
  const std::size_t total = grid_total(domain.d, cells);
  require(density.size() == total, ErrorKind::configuration, "grid density has wrong number of cells");
  BaseMeasure m;
  m.domain_ = domain;
  m.kind_ = Kind::grid;
  m.cells_ = cells;
  const double vol = std::pow(m.cell_width(), domain.d);
  double sum = 0.0;
  for (double v : density) {
    require(v >= 0.0 && std::isfinite(v), ErrorKind::configuration, "grid density must be finite and >= 0");
    sum += v;
  }
  require(sum > 0.0, ErrorKind::configuration, "grid density has zero mass");
  for (double& v : density) v /= sum * vol;
  m.density_ = std::move(density);
  m.linf_ = *std::max_element(m.density_.begin(), m.density_.end());
  m.alias_ = AliasTable(m.density_);
  if (domain.is_torus()) {
    std::vector<cplx> in(m.density_.begin(), m.density_.end());
    FftPlan plan(domain.d, cells);
    plan.forward(in, m.dft_);
  }
  m.description_ = "grid";
  return m;
}

BaseMeasure BaseMeasure::grid_from(const Domain& domain, int cells, const std::function<double(const Point&)>& f) {
  const std::size_t total = grid_total(domain.d, cells);
  const double lo = domain.is_torus() ? 0.0 : -domain.radius;
  const double h = (domain.is_torus() ? 1.0 : 2.0 * domain.radius) / cells;
  std::vector<double> values(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Point x{0.0, 0.0, 0.0};
    std::size_t rest = idx;
    for (int c = domain.d - 1; c >= 0; --c) {
      x[c] = lo + (static_cast<double>(rest % cells) + 0.5) * h;
      rest /= cells;
    }
    values[idx] = f(x);
  }
  return grid(domain, cells, std::move(values));
}

BaseMeasure BaseMeasure::single_mode(const Domain& domain, int cells, double amplitude) {
  require(std::abs(amplitude) < 1.0, ErrorKind::configuration, "single-mode amplitude must satisfy |a| < 1");
  require(domain.is_torus(), ErrorKind::unsupported, "single-mode density is defined on the torus");
  auto m = grid_from(domain, cells, [&](const Point& x) { return 1.0 + amplitude * std::cos(2.0 * pi * x[0]); });
  std::ostringstream os;
  os << "single-mode(a=" << amplitude << ")";
  m.description_ = os.str();
  return m;
}

BaseMeasure BaseMeasure::two_bump(const Domain& domain, int cells, double width) {
  require(width > 0.0, ErrorKind::configuration, "bump width must be positive");
  const double scale = domain.is_torus() ? 1.0 : 2.0 * domain.radius;
  const double shift = domain.is_torus() ? 0.0 : -domain.radius;
  auto bump = [&](const Point& x, double center) {
    double r2 = 0.0;
    for (int c = 0; c < domain.d; ++c) {
      double z = (x[c] - shift) / scale - center;
      if (domain.is_torus()) z -= std::round(z);
      r2 += z * z;
    }
    return std::exp(-0.5 * r2 / (width * width));
  };
  auto m = grid_from(domain, cells, [&](const Point& x) { return 0.5 * (bump(x, 0.3) + bump(x, 0.7)); });
  m.description_ = "two-bump";
  return m;
}

BaseMeasure BaseMeasure::atomic(const Domain& domain, std::vector<Point> points, std::vector<double> weights) {
  require(!points.empty() && points.size() == weights.size(), ErrorKind::configuration,
          "atomic measure needs matching points and weights");
  double sum = 0.0;
  for (double w : weights) {
    require(w >= 0.0 && std::isfinite(w), ErrorKind::configuration, "atom weights must be finite and >= 0");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-12, ErrorKind::configuration, "atom weights must sum to 1");
  BaseMeasure m;
  m.domain_ = domain;
  m.kind_ = Kind::atomic;
  if (domain.is_torus())
    for (auto& p : points)
      for (int c = 0; c < domain.d; ++c) p[c] = wrap01(p[c]);
  m.atoms_ = std::move(points);
  m.weights_ = std::move(weights);
  m.linf_ = std::numeric_limits<double>::infinity();
  m.alias_ = AliasTable(m.weights_);
  m.description_ = "atomic(" + std::to_string(m.atoms_.size()) + ")";
  return m;
}

void BaseMeasure::sample_point(Stream& stream, double* out) const {
  const int d = domain_.d;
  switch (kind_) {
    case Kind::uniform:
      for (int c = 0; c < d; ++c)
        out[c] = domain_.is_torus() ? stream.uniform() : stream.uniform(-domain_.radius, domain_.radius);
      return;
    case Kind::grid: {
      std::size_t idx = alias_.draw(stream);
      const double h = cell_width(), lo = lower_corner();
      for (int c = d - 1; c >= 0; --c) {
        const auto j = static_cast<double>(idx % static_cast<std::size_t>(cells_));
        idx /= static_cast<std::size_t>(cells_);
        out[c] = lo + (j + stream.uniform()) * h;
        if (domain_.is_torus()) out[c] = wrap01(out[c]);
      }
      return;
    }
    case Kind::atomic: {
      const Point& p = atoms_[alias_.draw(stream)];
      for (int c = 0; c < d; ++c) out[c] = p[c];
      return;
    }
  }
}

Configuration BaseMeasure::sample(std::size_t n, Stream& stream) const {
  require(n >= 1, ErrorKind::configuration, "sample size must be >= 1");
  Configuration cfg(domain_.d, n);
  for (std::size_t i = 0; i < n; ++i) sample_point(stream, cfg.data(i));
  return cfg;
}

double BaseMeasure::density_at(const Point& x) const {
  switch (kind_) {
    case Kind::uniform: return linf_;
    case Kind::atomic: raise(ErrorKind::unsupported, "atomic measures have no density");
    case Kind::grid: {
      const double h = cell_width(), lo = lower_corner();
      std::size_t idx = 0;
      for (int c = 0; c < domain_.d; ++c) {
        double u = x[c];
        if (domain_.is_torus()) u = wrap01(u);
        else if (u < -domain_.radius || u > domain_.radius) return 0.0;
        const int j = std::clamp(static_cast<int>(std::floor((u - lo) / h)), 0, cells_ - 1);
        idx = idx * static_cast<std::size_t>(cells_) + static_cast<std::size_t>(j);
      }
      return density_[idx];
    }
  }
  return 0.0;
}

double BaseMeasure::total_mass() const {
  switch (kind_) {
    case Kind::uniform: return 1.0;
    case Kind::atomic: {
      double s = 0.0;
      for (double w : weights_) s += w;
      return s;
    }
    case Kind::grid: {
      double s = 0.0;
      for (double v : density_) s += v;
      return s * std::pow(cell_width(), domain_.d);
    }
  }
  return 0.0;
}

cplx BaseMeasure::fourier(const std::array<int, 3>& k) const {
  require(domain_.is_torus(), ErrorKind::unsupported, "Fourier coefficients need a torus domain");
  const int d = domain_.d;
  switch (kind_) {
    case Kind::uniform:
      for (int c = 0; c < d; ++c)
        if (k[c] != 0) return cplx(0.0, 0.0);
      return cplx(1.0, 0.0);
    case Kind::atomic: {
      cplx s(0.0, 0.0);
      for (std::size_t j = 0; j < atoms_.size(); ++j) {
        double phase = 0.0;
        for (int c = 0; c < d; ++c) phase += k[c] * atoms_[j][c];
        s += weights_[j] * std::polar(1.0, 2.0 * pi * phase);
      }
      return s;
    }
    case Kind::grid: {
      const double h = cell_width();
      cplx factor(1.0, 0.0);
      std::size_t idx = 0;
      for (int c = 0; c < d; ++c) {
        factor *= h * sinc(pi * k[c] * h) * std::polar(1.0, pi * k[c] * h);
        idx = idx * static_cast<std::size_t>(cells_) + static_cast<std::size_t>(wrap_index(-k[c], cells_));
      }
      return factor * dft_[idx];
    }
  }
  return cplx(0.0, 0.0);
}

std::vector<cplx> BaseMeasure::fourier_table(const Kernel& kernel) const {
  std::vector<cplx> out;
  out.reserve(kernel.half_modes().size());
  for (const Mode& m : kernel.half_modes()) out.push_back(fourier(m.k));
  return out;
}

std::vector<double> convolve(const Kernel& kernel, double eps, const BaseMeasure& measure, int cells) {
  require(eps >= 0.0, ErrorKind::domain, "eps must be >= 0");
  const Domain& dom = measure.domain();
  require(dom.is_torus(), ErrorKind::unsupported,
          "grid convolution is torus-only; free space uses atomic measures and direct summation");
  const int d = dom.d;
  const int M = measure.kind() == BaseMeasure::Kind::grid ? measure.cells() : cells;
  require(M >= 1, ErrorKind::configuration, "convolution needs a grid resolution");
  const std::size_t total = grid_total(d, M);
  if (kernel.family() == Family::zero || measure.kind() == BaseMeasure::Kind::uniform)
    return std::vector<double>(total, 0.0);
  if (measure.kind() == BaseMeasure::Kind::atomic) {
    std::vector<Point> centers(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rest = idx;
      Point x{0.0, 0.0, 0.0};
      for (int c = d - 1; c >= 0; --c) {
        x[c] = (static_cast<double>(rest % M) + 0.5) / M;
        rest /= M;
      }
      centers[idx] = x;
    }
    return convolve_at(kernel, eps, measure, centers);
  }
  std::vector<cplx> values(measure.density().begin(), measure.density().end()), spec, back;
  FftPlan plan(d, M);
  plan.forward(values, spec);
  const int kmax = std::min(kernel.cutoff(), (M - 1) / 2);
  const double norm = 1.0 / static_cast<double>(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::array<int, 3> k{0, 0, 0};
    std::size_t rest = idx;
    bool keep = true;
    for (int c = d - 1; c >= 0; --c) {
      k[c] = signed_freq(static_cast<int>(rest % M), M);
      rest /= M;
      if (std::abs(k[c]) > kmax) keep = false;
    }
    const double ck = keep ? kernel.coefficient(k) : 0.0;
    if (ck == 0.0) {
      spec[idx] = 0.0;
      continue;
    }
    const double freq = 2.0 * pi * std::sqrt(double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2]);
    spec[idx] *= norm * ck * (eps > 0.0 ? kernel.multiplier(freq, eps) : 1.0);
  }
  plan.backward(spec, back);
  std::vector<double> out(total);
  for (std::size_t i = 0; i < total; ++i) out[i] = back[i].real();
  return out;
}

std::vector<double> convolve_at_spectral(const Kernel& kernel, double eps, const BaseMeasure& measure,
                                         const std::vector<Point>& points) {
  require(measure.domain().is_torus() && kernel.spectral(), ErrorKind::unsupported,
          "spectral convolution needs a torus kernel");
  const auto& modes = kernel.half_modes();
  const auto fhat = measure.fourier_table(kernel);
  std::vector<double> out(points.size(), 0.0);
  const int d = kernel.dim();
  for (std::size_t i = 0; i < points.size(); ++i) {
    double s = 0.0;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      double phase = 0.0;
      for (int c = 0; c < d; ++c) phase += modes[m].k[c] * points[i][c];
      const cplx e = std::polar(1.0, 2.0 * pi * phase);
      const double w = 2.0 * modes[m].coeff * (eps > 0.0 ? kernel.multiplier(modes[m].freq, eps) : 1.0);
      s += w * (std::conj(e) * fhat[m]).real();
    }
    out[i] = s;
  }
  return out;
}

std::vector<double> convolve_at(const Kernel& kernel, double eps, const BaseMeasure& measure,
                                const std::vector<Point>& points) {
  require(eps >= 0.0, ErrorKind::domain, "eps must be >= 0");
  if (kernel.family() == Family::zero) return std::vector<double>(points.size(), 0.0);
  switch (measure.kind()) {
    case BaseMeasure::Kind::atomic: {
      std::vector<double> out(points.size(), 0.0);
      for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = 0; j < measure.atoms().size(); ++j)
          out[i] += measure.weights()[j] * kernel.value_eps(eps, points[i], measure.atoms()[j]);
      return out;
    }
    case BaseMeasure::Kind::uniform:
      require(measure.domain().is_torus(), ErrorKind::unsupported,
              "free-space convolution is available for atomic measures only");
      return std::vector<double>(points.size(), 0.0);
    case BaseMeasure::Kind::grid:
      require(measure.domain().is_torus(), ErrorKind::unsupported,
              "free-space convolution is available for atomic measures only");
      return convolve_at_spectral(kernel, eps, measure, points);
  }
  return {};
}

double self_energy(const Kernel& kernel, double eps, const BaseMeasure& measure) {
  require(eps >= 0.0, ErrorKind::domain, "eps must be >= 0");
  if (kernel.family() == Family::zero) return 0.0;
  if (kernel.spectral()) {
    if (measure.kind() == BaseMeasure::Kind::uniform) return 0.0;
    const auto fhat = measure.fourier_table(kernel);
    double s = 0.0;
    const auto& modes = kernel.half_modes();
    for (std::size_t m = 0; m < modes.size(); ++m)
      s += 2.0 * modes[m].coeff * (eps > 0.0 ? kernel.multiplier(modes[m].freq, eps) : 1.0) * std::norm(fhat[m]);
    return s;
  }
  require(measure.kind() == BaseMeasure::Kind::atomic, ErrorKind::unsupported,
          "free-space self energy is available for atomic measures only");
  double s = 0.0;
  const auto& a = measure.atoms();
  const auto& w = measure.weights();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) s += w[i] * w[j] * kernel.value_eps(eps, a[i], a[j]);
  return s;
}

}  // namespace loggas
