// Copyright 2026 The otbss Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "otbss/cli/config.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace otbss::cli {
namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// Reports errors as origin:line using the raw text.
class Source {
 public:
  Source(std::string text, std::string origin)
      : text_(std::move(text)), origin_(std::move(origin)) {}

  Json Parse() const {
    try {
      return Json::parse(text_);
    } catch (const Json::parse_error& e) {
      throw ConfigError(Where(LineOfByte(e.byte)) + ": malformed JSON: " + e.what());
    }
  }

  [[noreturn]] void Fail(const std::string& key, const std::string& message) const {
    throw ConfigError(Where(LineOfKey(key)) + ": " + message);
  }

  void CheckKeys(const Json& obj, std::initializer_list<const char*> allowed,
                 const std::string& context) const {
    if (!obj.is_object()) Fail(context, "'" + context + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
      const bool known = std::any_of(allowed.begin(), allowed.end(),
                                     [&](const char* k) { return key == k; });
      if (!known) Fail(key, "unknown key '" + key + "' in " + context);
    }
  }

  void CheckVersion(const Json& root) const {
    if (!root.is_object()) throw ConfigError(origin_ + ":1: top level must be an object");
    if (!root.contains("schema_version")) {
      throw ConfigError(origin_ + ":1: missing schema_version");
    }
    const Json& v = root["schema_version"];
    if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
      Fail("schema_version", "unsupported schema_version (expected " +
                                 std::to_string(kSchemaVersion) + ")");
    }
  }

  double Number(const Json& obj, const char* key, double fallback) const {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj[key];
    if (!v.is_number()) Fail(key, std::string("'") + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) Fail(key, std::string("'") + key + "' must be finite");
    return d;
  }

  long long Integer(const Json& obj, const char* key, long long fallback) const {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj[key];
    if (!v.is_number_integer()) Fail(key, std::string("'") + key + "' must be an integer");
    return v.get<long long>();
  }

  std::uint64_t Seed(const Json& obj, const char* key, std::uint64_t fallback) const {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj[key];
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      Fail(key, std::string("'") + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string String(const Json& obj, const char* key, const std::string& fallback) const {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj[key];
    if (!v.is_string()) Fail(key, std::string("'") + key + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<double> Numbers(const Json& obj, const char* key,
                              std::vector<double> fallback) const {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj[key];
    if (!v.is_array()) Fail(key, std::string("'") + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const Json& e : v) {
      if (!e.is_number()) Fail(key, std::string("'") + key + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  Point3 Triple(const Json& v, const char* key) const {
    if (!v.is_array() || v.size() != 3) {
      Fail(key, std::string("'") + key + "' entries must be [x, y, z] triples");
    }
    Point3 p{};
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) Fail(key, std::string("'") + key + "' entries must be numbers");
      p[i] = v[i].get<double>();
    }
    return p;
  }

  std::vector<Point3> Triples(const Json& obj, const char* key) const {
    std::vector<Point3> out;
    if (!obj.contains(key)) return out;
    const Json& v = obj[key];
    if (!v.is_array()) Fail(key, std::string("'") + key + "' must be an array");
    for (const Json& e : v) out.push_back(Triple(e, key));
    return out;
  }

  // Runs `check`, turning ValidationError into a located ConfigError.
  template <typename F>
  void Validated(const char* key, F check) const {
    try {
      check();
    } catch (const ConfigError&) {
      throw;
    } catch (const ValidationError& e) {
      Fail(key, e.what());
    }
  }

  const std::string& origin() const { return origin_; }

 private:
  std::string Where(int line) const { return origin_ + ":" + std::to_string(line); }

  int LineOfByte(std::size_t byte) const {
    const std::size_t end = std::min(byte, text_.size());
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + end, '\n'));
  }

  int LineOfKey(const std::string& key) const {
    const std::size_t pos = text_.find("\"" + key + "\"");
    return pos == std::string::npos ? 1 : LineOfByte(pos);
  }

  std::string text_;
  std::string origin_;
};

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::initializer_list<const char*> kSceneKeys = {
    "seed",       "sample_rate",      "duration",      "t60",
    "room",       "num_mics",         "mic_spacing",   "source_distance",
    "height",     "array_center",     "angles",        "mic_positions",
    "source_positions", "max_rir_len", "speed_of_sound", "source_files"};

void ReadScene(const Source& src, const Json& obj, SimulateConfig& cfg) {
  cfg.seed = src.Seed(obj, "seed", cfg.seed);
  cfg.sample_rate = static_cast<int>(src.Integer(obj, "sample_rate", cfg.sample_rate));
  if (cfg.sample_rate <= 0) src.Fail("sample_rate", "sample_rate must be positive");
  cfg.duration = src.Number(obj, "duration", cfg.duration);
  if (!(cfg.duration > 0.0)) src.Fail("duration", "duration must be positive");
  cfg.t60 = src.Number(obj, "t60", cfg.t60);
  if (!(cfg.t60 >= 0.0)) src.Fail("t60", "t60 must be >= 0");
  if (obj.contains("room")) cfg.geometry.dimensions = src.Triple(obj["room"], "room");
  cfg.geometry.num_mics = static_cast<int>(src.Integer(obj, "num_mics", cfg.geometry.num_mics));
  cfg.geometry.mic_spacing = src.Number(obj, "mic_spacing", cfg.geometry.mic_spacing);
  cfg.geometry.source_distance =
      src.Number(obj, "source_distance", cfg.geometry.source_distance);
  cfg.geometry.height = src.Number(obj, "height", cfg.geometry.height);
  if (obj.contains("array_center")) {
    cfg.geometry.center = src.Triple(obj["array_center"], "array_center");
  }
  src.Validated("room", [&] { cfg.geometry.Validate(); });
  cfg.angles = src.Numbers(obj, "angles", cfg.angles);
  cfg.mic_positions = src.Triples(obj, "mic_positions");
  cfg.source_positions = src.Triples(obj, "source_positions");
  if (cfg.mic_positions.empty() != cfg.source_positions.empty()) {
    src.Fail(cfg.mic_positions.empty() ? "source_positions" : "mic_positions",
             "mic_positions and source_positions must be given together");
  }
  cfg.max_rir_len = static_cast<int>(src.Integer(obj, "max_rir_len", cfg.max_rir_len));
  if (cfg.max_rir_len < 0) src.Fail("max_rir_len", "max_rir_len must be >= 0");
  cfg.speed_of_sound = src.Number(obj, "speed_of_sound", cfg.speed_of_sound);
  if (!(cfg.speed_of_sound > 0.0)) src.Fail("speed_of_sound", "speed_of_sound must be positive");
  if (obj.contains("source_files")) {
    const Json& v = obj["source_files"];
    if (!v.is_array()) src.Fail("source_files", "'source_files' must be an array of paths");
    cfg.source_files.clear();
    for (const Json& e : v) {
      if (!e.is_string()) src.Fail("source_files", "'source_files' must be an array of paths");
      cfg.source_files.emplace_back(e.get<std::string>());
    }
  }
}

const std::initializer_list<const char*> kSeparationKeys = {
    "method",     "num_sources", "basis",       "outer_iters", "sinkhorn",
    "kron_order", "kron_dims",   "dense_cost",  "update_form", "marginal",
    "ref_mic",    "seed",        "stft"};

void ReadSeparation(const Source& src, const Json& obj, SeparationConfig& cfg) {
  if (obj.contains("method")) {
    src.Validated("method", [&] { cfg.method = ParseMethod(src.String(obj, "method", "")); });
  }
  cfg.num_sources = static_cast<int>(src.Integer(obj, "num_sources", cfg.num_sources));
  cfg.basis = static_cast<int>(src.Integer(obj, "basis", cfg.basis));
  cfg.outer_iters = static_cast<int>(src.Integer(obj, "outer_iters", cfg.outer_iters));
  if (obj.contains("sinkhorn")) {
    const Json& s = obj["sinkhorn"];
    src.CheckKeys(s, {"mu", "gamma", "max_iter", "tol", "floor"}, "sinkhorn");
    cfg.sinkhorn.mu = src.Number(s, "mu", cfg.sinkhorn.mu);
    cfg.sinkhorn.gamma = src.Number(s, "gamma", cfg.sinkhorn.gamma);
    cfg.sinkhorn.max_iter = static_cast<int>(src.Integer(s, "max_iter", cfg.sinkhorn.max_iter));
    cfg.sinkhorn.tol = src.Number(s, "tol", cfg.sinkhorn.tol);
    cfg.sinkhorn.floor = src.Number(s, "floor", cfg.sinkhorn.floor);
    src.Validated("sinkhorn", [&] { cfg.sinkhorn.Validate(); });
  }
  cfg.kron_order = static_cast<int>(src.Integer(obj, "kron_order", cfg.kron_order));
  if (obj.contains("kron_dims")) {
    BinFactorization dims;
    for (double d : src.Numbers(obj, "kron_dims", {})) {
      if (d != std::floor(d)) src.Fail("kron_dims", "'kron_dims' must hold integers");
      dims.dims.push_back(static_cast<int>(d));
    }
    cfg.kron_dims = dims;
  }
  const std::string dense = src.String(
      obj, "dense_cost", cfg.dense_cost == DenseCost::kSquared ? "squared" : "separable");
  if (dense == "squared") {
    cfg.dense_cost = DenseCost::kSquared;
  } else if (dense == "separable") {
    cfg.dense_cost = DenseCost::kSeparable;
  } else {
    src.Fail("dense_cost", "dense_cost must be 'squared' or 'separable'");
  }
  const std::string form = src.String(
      obj, "update_form", cfg.update_form == UpdateForm::kCorrected ? "corrected" : "paper-verbatim");
  if (form == "corrected") {
    cfg.update_form = UpdateForm::kCorrected;
  } else if (form == "paper-verbatim") {
    cfg.update_form = UpdateForm::kPaperVerbatim;
  } else {
    src.Fail("update_form", "update_form must be 'corrected' or 'paper-verbatim'");
  }
  const std::string side =
      src.String(obj, "marginal", cfg.marginal == MarginalSide::kRow ? "row" : "column");
  if (side == "row") {
    cfg.marginal = MarginalSide::kRow;
  } else if (side == "column") {
    cfg.marginal = MarginalSide::kColumn;
  } else {
    src.Fail("marginal", "marginal must be 'row' or 'column'");
  }
  cfg.ref_mic = static_cast<int>(src.Integer(obj, "ref_mic", cfg.ref_mic));
  cfg.seed = src.Seed(obj, "seed", cfg.seed);
  if (obj.contains("stft")) {
    const Json& s = obj["stft"];
    src.CheckKeys(s, {"window_len", "hop", "window"}, "stft");
    cfg.stft.window_len = static_cast<int>(src.Integer(s, "window_len", cfg.stft.window_len));
    cfg.stft.hop = static_cast<int>(src.Integer(s, "hop", cfg.stft.hop));
    const std::string w = src.String(
        s, "window", cfg.stft.window == WindowType::kHann ? "hann" : "rectangular");
    if (w == "hann") {
      cfg.stft.window = WindowType::kHann;
    } else if (w == "rectangular") {
      cfg.stft.window = WindowType::kRectangular;
    } else {
      src.Fail("window", "window must be 'hann' or 'rectangular'");
    }
  }
  src.Validated("method", [&] { cfg.Validate(); });
}

OrderedJson SeparationJson(const SeparationConfig& cfg) {
  OrderedJson j;
  j["method"] = MethodName(cfg.method);
  j["num_sources"] = cfg.num_sources;
  j["basis"] = cfg.basis;
  j["outer_iters"] = cfg.outer_iters;
  j["sinkhorn"] = {{"mu", cfg.sinkhorn.mu},
                   {"gamma", cfg.sinkhorn.gamma},
                   {"max_iter", cfg.sinkhorn.max_iter},
                   {"tol", cfg.sinkhorn.tol},
                   {"floor", cfg.sinkhorn.floor}};
  j["kron_order"] = cfg.kron_order;
  if (cfg.kron_dims) j["kron_dims"] = cfg.kron_dims->dims;
  j["dense_cost"] = cfg.dense_cost == DenseCost::kSquared ? "squared" : "separable";
  j["update_form"] = cfg.update_form == UpdateForm::kCorrected ? "corrected" : "paper-verbatim";
  j["marginal"] = cfg.marginal == MarginalSide::kRow ? "row" : "column";
  j["ref_mic"] = cfg.ref_mic;
  j["seed"] = cfg.seed;
  j["stft"] = {{"window_len", cfg.stft.window_len},
               {"hop", cfg.stft.hop},
               {"window", cfg.stft.window == WindowType::kHann ? "hann" : "rectangular"}};
  return j;
}

}  // namespace

std::vector<double> DefaultT60Grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 12; ++i) grid.push_back(0.05 * i);
  return grid;
}

void BenchmarkPlan::Validate() const {
  if (t60_grid.empty()) throw ValidationError("t60_grid is empty");
  for (double t : t60_grid) {
    if (!(t >= 0.0)) throw ValidationError("t60_grid values must be >= 0");
  }
  if (trials < 1) throw ValidationError("trials must be >= 1");
  if (methods.empty()) throw ValidationError("methods is empty");
  separation.Validate();
}

SimulateConfig ParseSimulateConfig(const std::string& text, const std::string& origin) {
  const Source src(text, origin);
  const Json root = src.Parse();
  src.CheckVersion(root);
  std::vector<const char*> keys(kSceneKeys);
  keys.push_back("schema_version");
  for (const auto& [key, value] : root.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      src.Fail(key, "unknown key '" + key + "' in scene config");
    }
  }
  SimulateConfig cfg;
  ReadScene(src, root, cfg);
  return cfg;
}

SeparationConfig ParseSeparationConfig(const std::string& text, const std::string& origin) {
  const Source src(text, origin);
  const Json root = src.Parse();
  src.CheckVersion(root);
  std::vector<const char*> keys(kSeparationKeys);
  keys.push_back("schema_version");
  for (const auto& [key, value] : root.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      src.Fail(key, "unknown key '" + key + "' in separation config");
    }
  }
  SeparationConfig cfg;
  ReadSeparation(src, root, cfg);
  return cfg;
}

BenchmarkPlan ParseBenchmarkPlan(const std::string& text, const std::string& origin) {
  const Source src(text, origin);
  const Json root = src.Parse();
  src.CheckVersion(root);
  src.CheckKeys(root,
                {"schema_version", "t60_grid", "trials", "methods", "seed", "scene",
                 "separation"},
                "benchmark plan");
  BenchmarkPlan plan;
  plan.t60_grid = src.Numbers(root, "t60_grid", DefaultT60Grid());
  plan.trials = static_cast<int>(src.Integer(root, "trials", plan.trials));
  if (root.contains("methods")) {
    const Json& m = root["methods"];
    if (!m.is_array()) src.Fail("methods", "'methods' must be an array of method names");
    plan.methods.clear();
    for (const Json& e : m) {
      if (!e.is_string()) src.Fail("methods", "'methods' must be an array of method names");
      src.Validated("methods", [&] { plan.methods.push_back(ParseMethod(e.get<std::string>())); });
    }
  }
  plan.seed = src.Seed(root, "seed", plan.seed);
  if (root.contains("scene")) {
    const Json& s = root["scene"];
    src.CheckKeys(s, kSceneKeys, "scene");
    for (const char* k : {"seed", "t60", "angles"}) {
      if (s.contains(k)) {
        src.Fail(k, std::string("'") + k + "' is set per benchmark cell, not in 'scene'");
      }
    }
    ReadScene(src, s, plan.scene);
  }
  if (root.contains("separation")) {
    const Json& s = root["separation"];
    src.CheckKeys(s, kSeparationKeys, "separation");
    if (s.contains("method")) src.Fail("method", "use 'methods' at the top level");
    ReadSeparation(src, s, plan.separation);
  }
  src.Validated("t60_grid", [&] { plan.Validate(); });
  return plan;
}

SimulateConfig LoadSimulateConfig(const std::filesystem::path& path) {
  return ParseSimulateConfig(ReadText(path), path.string());
}

SeparationConfig LoadSeparationConfig(const std::filesystem::path& path) {
  return ParseSeparationConfig(ReadText(path), path.string());
}

BenchmarkPlan LoadBenchmarkPlan(const std::filesystem::path& path) {
  return ParseBenchmarkPlan(ReadText(path), path.string());
}

std::string SeparationConfigToJson(const SeparationConfig& cfg) {
  OrderedJson j;
  j["schema_version"] = kSchemaVersion;
  const OrderedJson body = SeparationJson(cfg);
  for (const auto& [k, v] : body.items()) j[k] = v;
  return j.dump(2) + "\n";
}

std::string BenchmarkPlanToJson(const BenchmarkPlan& plan) {
  OrderedJson j;
  j["schema_version"] = kSchemaVersion;
  j["t60_grid"] = plan.t60_grid;
  j["trials"] = plan.trials;
  std::vector<std::string> methods;
  for (Method m : plan.methods) methods.push_back(MethodName(m));
  j["methods"] = methods;
  j["seed"] = plan.seed;
  const SimulateConfig& s = plan.scene;
  OrderedJson scene;
  scene["sample_rate"] = s.sample_rate;
  scene["duration"] = s.duration;
  scene["room"] = s.geometry.dimensions;
  scene["num_mics"] = s.geometry.num_mics;
  scene["mic_spacing"] = s.geometry.mic_spacing;
  scene["source_distance"] = s.geometry.source_distance;
  scene["height"] = s.geometry.height;
  if (s.geometry.center) scene["array_center"] = *s.geometry.center;
  if (!s.mic_positions.empty()) {
    scene["mic_positions"] = s.mic_positions;
    scene["source_positions"] = s.source_positions;
  }
  scene["max_rir_len"] = s.max_rir_len;
  scene["speed_of_sound"] = s.speed_of_sound;
  std::vector<std::string> files;
  for (const auto& f : s.source_files) files.push_back(f.string());
  scene["source_files"] = files;
  j["scene"] = scene;
  OrderedJson sep = SeparationJson(plan.separation);
  sep.erase("method");
  j["separation"] = sep;
  return j.dump(2) + "\n";
}

}  // namespace otbss::cli
