#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "poslab/datagen.hpp"
#include "poslab/io.hpp"
#include "poslab/projector.hpp"

namespace poslab::cli {

struct RunContext {
  std::filesystem::path config_dir;  ///< relative data paths resolve against this
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed_override;
  std::size_t jobs = 1;
};

/// Read-only view of a JSON object that rejects keys outside `allowed`.
class Section {
 public:
  Section(const json& j, std::string path, std::initializer_list<std::string_view> allowed);

  bool has(std::string_view key) const;
  const json& raw(std::string_view key) const;
  Section sub(std::string_view key, std::initializer_list<std::string_view> allowed) const;
  const std::string& path() const { return path_; }

  template <class T>
  T get(std::string_view key, T fallback) const {
    return has(key) ? convert<T>(key) : fallback;
  }
  template <class T>
  T require(std::string_view key) const {
    if (!has(key)) fail("missing key '" + std::string(key) + "'");
    return convert<T>(key);
  }

  [[noreturn]] void fail(const std::string& msg) const;

 private:
  template <class T>
  T convert(std::string_view key) const {
    try {
      return raw(key).template get<T>();
    } catch (const json::exception&) {
      fail("key '" + std::string(key) + "' has the wrong type");
    }
  }

  const json* j_;
  std::string path_;
};

/// Collects output files and their SHA-256 for the manifest.
class Outputs {
 public:
  explicit Outputs(std::filesystem::path dir);
  void write(const std::string& name, const std::string& contents);
  void write_json(const std::string& name, const json& j);
  void finish(std::string_view command, std::uint64_t seed, const json& config);

 private:
  std::filesystem::path dir_;
  json files_ = json::object();
};

struct Series {
  std::string color;
  std::vector<Vector> points;
};

/// 640×480 scatter; inputs above 2-D are shown on the first two principal
/// axes of the first series.
std::string svg_scatter(const std::vector<Series>& series, const std::string& title);

std::uint64_t effective_seed(const json& config, const RunContext& ctx);
Dataset load_dataset(const json& source, const std::string& path, std::uint64_t seed, const RunContext& ctx);
UnionProjector load_projector(const json& source, const std::string& path, const RunContext& ctx);

/// Runs fn(0..n-1) on up to `jobs` threads; the first failing index (lowest) is rethrown.
void for_each_trial(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

using Command = void (*)(const json& config, const RunContext& ctx);
void cmd_gen(const json& config, const RunContext& ctx);
void cmd_diagnose(const json& config, const RunContext& ctx);
void cmd_project(const json& config, const RunContext& ctx);
void cmd_train_ae(const json& config, const RunContext& ctx);
void cmd_fold(const json& config, const RunContext& ctx);
void cmd_intersect(const json& config, const RunContext& ctx);
void cmd_dba(const json& config, const RunContext& ctx);
void cmd_complexity(const json& config, const RunContext& ctx);

}  // namespace poslab::cli
