#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "cli.hpp"
#include "poslab/error.hpp"
#include "poslab/linalg.hpp"

namespace poslab::cli {

Section::Section(const json& j, std::string path, std::initializer_list<std::string_view> allowed)
    : j_(&j), path_(std::move(path)) {
  if (!j.is_object()) fail("expected an object");
  for (const auto& [key, value] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) fail("unknown key '" + key + "'");
}

bool Section::has(std::string_view key) const { return j_->contains(key); }

const json& Section::raw(std::string_view key) const {
  if (!has(key)) fail("missing key '" + std::string(key) + "'");
  return j_->at(std::string(key));
}

Section Section::sub(std::string_view key, std::initializer_list<std::string_view> allowed) const {
  return Section(raw(key), path_ + "." + std::string(key), allowed);
}

void Section::fail(const std::string& msg) const { throw Error(Errc::InvalidConfig, path_ + ": " + msg); }

Outputs::Outputs(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir_.string() + ": " + ec.message());
}

void Outputs::write(const std::string& name, const std::string& contents) {
  write_file(dir_ / name, contents);
  files_[name] = sha256_hex(contents);
}

void Outputs::write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

void Outputs::finish(std::string_view command, std::uint64_t seed, const json& config) {
  json manifest{{"command", command}, {"seed", seed}, {"config", config}, {"files", files_}};
  write_file(dir_ / "manifest.json", manifest.dump(2) + "\n");
}

std::uint64_t effective_seed(const json& config, const RunContext& ctx) {
  if (ctx.seed_override) return *ctx.seed_override;
  if (!config.contains("seed")) return 0;
  try {
    return config.at("seed").get<std::uint64_t>();
  } catch (const json::exception&) {
    throw Error(Errc::InvalidConfig, "config.seed must be a nonnegative integer");
  }
}

namespace {

std::filesystem::path resolve(const RunContext& ctx, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : ctx.config_dir / path;
}

Dataset gen_from_section(const Section& s, std::uint64_t seed) {
  const std::string kind = s.get<std::string>("kind", "union");
  if (kind == "circle")
    return gen_circle(s.require<std::size_t>("count"), s.get<double>("noise_sigma", 0.0), s.get<std::uint64_t>("seed", seed));
  if (kind != "union") s.fail("kind must be 'union' or 'circle'");
  SyntheticSpec spec;
  spec.ambient_dim = s.require<std::size_t>("ambient_dim");
  spec.noise_sigma = s.get<double>("noise_sigma", 0.0);
  spec.seed = s.get<std::uint64_t>("seed", seed);
  spec.nonnegative_coeffs = s.get<bool>("nonnegative_coeffs", false);
  const json& comps = s.raw("components");
  if (!comps.is_array()) s.fail("components must be an array");
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const Section c(comps[i], s.path() + ".components[" + std::to_string(i) + "]", {"basis", "count"});
    spec.components.push_back({matrix_from_json(c.raw("basis")), c.require<std::size_t>("count")});
  }
  return gen_union(spec);
}

}  // namespace

Dataset load_dataset(const json& source, const std::string& path, std::uint64_t seed, const RunContext& ctx) {
  if (source.is_string()) {
    std::istringstream is(read_file(resolve(ctx, source.get<std::string>())));
    return read_csv(is);
  }
  const Section s(source, path,
                  {"kind", "ambient_dim", "components", "noise_sigma", "nonnegative_coeffs", "seed", "count"});
  return gen_from_section(s, seed);
}

UnionProjector load_projector(const json& source, const std::string& path, const RunContext& ctx) {
  if (source.is_string()) {
    try {
      return load_projector(json::parse(read_file(resolve(ctx, source.get<std::string>()))), path, ctx);
    } catch (const json::parse_error& e) {
      throw Error(Errc::InvalidConfig, path + ": " + e.what());
    }
  }
  const Section s(source, path, {"ambient_dim", "tie_tol", "components"});
  const json& comps = s.raw("components");
  if (!comps.is_array()) s.fail("components must be an array");
  for (std::size_t i = 0; i < comps.size(); ++i)
    if (comps[i].is_object()) Section(comps[i], path + ".components[" + std::to_string(i) + "]", {"basis", "offset"});
  return projector_from_json(source);
}

void for_each_trial(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_at = std::numeric_limits<std::size_t>::max();
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

std::string fmt2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

}  // namespace

std::string svg_scatter(const std::vector<Series>& series, const std::string& title) {
  constexpr double W = 640, H = 480, margin = 40;
  std::size_t dim = 0;
  for (const auto& s : series)
    if (!s.points.empty()) dim = s.points.front().size();

  // axes for the 2-D view
  Vector mean(dim, 0.0);
  Matrix axes(dim, std::min<std::size_t>(dim, 2));
  if (dim <= 2) {
    for (std::size_t i = 0; i < axes.cols(); ++i) axes(i, i) = 1.0;
  } else {
    const auto& ref = series.front().points;
    for (const auto& p : ref)
      for (std::size_t i = 0; i < dim; ++i) mean[i] += p[i] / static_cast<double>(ref.size());
    Matrix centered(ref.size(), dim);
    for (std::size_t r = 0; r < ref.size(); ++r)
      for (std::size_t i = 0; i < dim; ++i) centered(r, i) = ref[r][i] - mean[i];
    const SVD f = svd(centered);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t c = 0; c < 2; ++c) axes(i, c) = f.v(i, c);
  }
  auto view = [&](const Vector& p) {
    double xy[2] = {0.0, 0.0};
    for (std::size_t c = 0; c < axes.cols(); ++c)
      for (std::size_t i = 0; i < dim; ++i) xy[c] += (p[i] - mean[i]) * axes(i, c);
    return std::pair{xy[0], xy[1]};
  };

  double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
  bool first = true;
  for (const auto& s : series)
    for (const auto& p : s.points) {
      const auto [x, y] = view(p);
      if (first) {
        lo_x = hi_x = x;
        lo_y = hi_y = y;
        first = false;
      }
      lo_x = std::min(lo_x, x), hi_x = std::max(hi_x, x);
      lo_y = std::min(lo_y, y), hi_y = std::max(hi_y, y);
    }
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12});
  const double scale = std::min(W, H) - 2 * margin;
  const double cx = (lo_x + hi_x) / 2, cy = (lo_y + hi_y) / 2;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
  os << "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  os << "<text x=\"10\" y=\"20\" font-family=\"monospace\" font-size=\"14\">" << title << "</text>\n";
  for (const auto& s : series) {
    os << "<g fill=\"" << s.color << "\" fill-opacity=\"0.7\">\n";
    for (const auto& p : s.points) {
      const auto [x, y] = view(p);
      os << "<circle cx=\"" << fmt2(W / 2 + (x - cx) / span * scale) << "\" cy=\""
         << fmt2(H / 2 - (y - cy) / span * scale) << "\" r=\"2\"/>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace poslab::cli
