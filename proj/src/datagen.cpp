#include "poslab/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "poslab/io.hpp"

namespace poslab {

void SyntheticSpec::validate() const {
  if (ambient_dim < 1) throw Error(Errc::InvalidSpec, "ambient_dim must be >= 1");
  if (components.empty()) throw Error(Errc::InvalidSpec, "at least one component required");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw Error(Errc::InvalidSpec, "noise_sigma must be finite and >= 0");
  for (const auto& c : components) {
    if (c.basis.rows() != ambient_dim)
      throw Error(Errc::InvalidSpec, "component basis rows differ from ambient_dim");
    if (c.basis.cols() >= ambient_dim)
      throw Error(Errc::InvalidSpec, "component dimension must be below ambient_dim");
    if (numerical_rank(c.basis, 1e-12) != c.basis.cols())
      throw Error(Errc::InvalidSpec, "component basis is rank deficient");
  }
}

void Dataset::validate() const {
  if (samples.empty()) throw Error(Errc::InvalidSpec, "dataset is empty");
  if (labels.size() != samples.size()) throw Error(Errc::InvalidSpec, "labels and samples differ in length");
  const std::size_t n = samples.front().size();
  if (n == 0) throw Error(Errc::InvalidSpec, "zero-dimensional samples");
  for (const auto& s : samples) {
    if (s.size() != n) throw Error(Errc::InvalidSpec, "ragged samples");
    if (!all_finite(s)) throw Error(Errc::InvalidSpec, "non-finite sample entry");
  }
}

Dataset Dataset::subset(std::size_t label) const {
  Dataset out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (labels[i] != label) continue;
    out.samples.push_back(samples[i]);
    out.labels.push_back(label);
  }
  return out;
}

void Dataset::append(const Dataset& other, std::size_t label_offset) {
  samples.insert(samples.end(), other.samples.begin(), other.samples.end());
  for (auto l : other.labels) labels.push_back(l + label_offset);
}

namespace {

struct Slot {
  std::size_t component;
  std::size_t index;
};

std::vector<Slot> slots_of(const SyntheticSpec& spec) {
  std::vector<Slot> slots;
  for (std::size_t c = 0; c < spec.components.size(); ++c)
    for (std::size_t j = 0; j < spec.components[c].count; ++j) slots.push_back({c, j});
  return slots;
}

Vector draw_sample(const SyntheticSpec& spec, const Rng& root, Slot slot) {
  const Matrix& basis = spec.components[slot.component].basis;
  Rng rng = root.split(slot.component).split(slot.index);
  Vector coeffs(basis.cols());
  for (double& c : coeffs) {
    c = rng.normal();
    if (spec.nonnegative_coeffs) c = std::abs(c);
  }
  Vector s = basis * coeffs;
  if (spec.noise_sigma > 0.0)
    for (double& x : s) x += spec.noise_sigma * rng.normal();
  return s;
}

Dataset finish(const std::vector<Slot>& slots, std::vector<Vector> samples) {
  Dataset d;
  d.samples = std::move(samples);
  d.labels.reserve(slots.size());
  for (const auto& s : slots) d.labels.push_back(s.component);
  if (d.samples.empty()) throw Error(Errc::InvalidSpec, "spec produces no samples");
  return d;
}

}  // namespace

Dataset gen_union(const SyntheticSpec& spec) {
  spec.validate();
  const auto slots = slots_of(spec);
  const Rng root(spec.seed);
  std::vector<Vector> samples(slots.size());
  const auto count = static_cast<std::ptrdiff_t>(slots.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) samples[i] = draw_sample(spec, root, slots[i]);
  return finish(slots, std::move(samples));
}

Dataset serial::gen_union(const SyntheticSpec& spec) {
  spec.validate();
  const auto slots = slots_of(spec);
  const Rng root(spec.seed);
  std::vector<Vector> samples;
  samples.reserve(slots.size());
  for (const auto& s : slots) samples.push_back(draw_sample(spec, root, s));
  return finish(slots, std::move(samples));
}

Dataset gen_circle(std::size_t count, double noise_sigma, std::uint64_t seed) {
  if (count < 3) throw Error(Errc::InvalidSpec, "gen_circle needs count >= 3");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw Error(Errc::InvalidSpec, "noise_sigma must be finite and >= 0");
  Rng rng(seed);
  Dataset d;
  for (std::size_t j = 0; j < count; ++j) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(count);
    const double r = noise_sigma > 0.0 ? 1.0 + noise_sigma * rng.normal() : 1.0;
    d.samples.push_back({r * std::cos(t), r * std::sin(t)});
    d.labels.push_back(0);
  }
  return d;
}

Vector mask(std::span<const double> v, MaskWindow w) {
  if (w.length < 1 || w.start + w.length > v.size())
    throw Error(Errc::WindowOutOfRange, "mask window [" + std::to_string(w.start) + ", " +
                                            std::to_string(w.start + w.length) + ") exceeds dim " +
                                            std::to_string(v.size()));
  Vector out(v.begin(), v.end());
  std::fill(out.begin() + static_cast<std::ptrdiff_t>(w.start),
            out.begin() + static_cast<std::ptrdiff_t>(w.start + w.length), 0.0);
  return out;
}

std::pair<Vector, MaskWindow> random_mask(std::span<const double> v, std::size_t wmin, std::size_t wmax,
                                          Rng& rng) {
  if (wmin < 1 || wmin > wmax || wmax > v.size())
    throw Error(Errc::InvalidSpec, "random_mask needs 1 <= wmin <= wmax <= dim");
  MaskWindow w;
  w.length = rng.uniform_int(wmin, wmax);
  w.start = rng.uniform_int(0, v.size() - w.length);
  return {mask(v, w), w};
}

Vector blur1d(std::span<const double> v, double sigma) {
  if (!(sigma >= 0.0)) throw Error(Errc::InvalidArgument, "blur1d: sigma must be >= 0");
  if (sigma == 0.0 || v.empty()) return Vector(v.begin(), v.end());
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    total += kernel[k + radius];
  }
  for (double& k : kernel) k /= total;

  const auto n = static_cast<std::ptrdiff_t>(v.size());
  auto reflect = [n](std::ptrdiff_t i) {
    // d c b a | a b c d | d c b a, period 2n
    const std::ptrdiff_t period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
  };
  Vector out(v.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) acc += kernel[k + radius] * v[reflect(i + k)];
    out[i] = acc;
  }
  return out;
}

void write_csv(std::ostream& os, const Dataset& d) {
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    for (double x : d.samples[i]) os << format_double(x) << ',';
    os << d.labels[i] << '\n';
  }
}

Dataset read_csv(std::istream& is) {
  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 2) throw Error(Errc::IoError, "csv line " + std::to_string(lineno) + ": need values and a label");
    Vector s;
    try {
      for (std::size_t c = 0; c + 1 < cells.size(); ++c) s.push_back(std::stod(cells[c]));
      d.labels.push_back(static_cast<std::size_t>(std::stoull(cells.back())));
    } catch (const std::logic_error&) {
      throw Error(Errc::IoError, "csv line " + std::to_string(lineno) + ": unparseable number");
    }
    d.samples.push_back(std::move(s));
  }
  d.validate();
  return d;
}

}  // namespace poslab
