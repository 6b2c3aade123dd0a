#include "surfconv/config.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "surfconv/error.h"
#include "surfconv/parallel.h"

namespace surfconv {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ',')) parts.push_back(Trim(item));
  return parts;
}

double ToDouble(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "config " + key + ": not a number: " + v);
  }
}

long long ToInt(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "config " + key + ": not an integer: " + v);
  }
}

bool ToBool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::kParse, "config " + key + ": not a boolean: " + v);
}

}  // namespace

void Config::Set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = Trim(raw_key);
  const std::string value = Trim(raw_value);
  if (key == "fx") camera.fx = ToDouble(key, value);
  else if (key == "fy") camera.fy = ToDouble(key, value);
  else if (key == "cx") camera.cx = ToDouble(key, value);
  else if (key == "cy") camera.cy = ToDouble(key, value);
  else if (key == "width") camera.width = static_cast<int>(ToInt(key, value));
  else if (key == "height") camera.height = static_cast<int>(ToInt(key, value));
  else if (key == "depth_scale") depth_scale = ToDouble(key, value);
  else if (key == "gravity") {
    const auto parts = SplitList(value);
    if (parts.size() != 3) throw Error(ErrorCode::kParse, "gravity needs x,y,z");
    for (int a = 0; a < 3; ++a) gravity[a] = ToDouble(key, parts[a]);
  }
  else if (key == "ground_height") ground_height = ToDouble(key, value);
  else if (key == "gamma") gamma = ToDouble(key, value);
  else if (key == "levels") levels = static_cast<int>(ToInt(key, value));
  else if (key == "delta") delta = ToDouble(key, value);
  else if (key == "densify_max_edge") densify_max_edge = ToDouble(key, value);
  else if (key == "densify_max_depth_gap") densify_max_depth_gap = ToDouble(key, value);
  else if (key == "loss") {
    if (value == "uniform") loss = LossMode::kUniform;
    else if (value == "r" || value == "reweighted") loss = LossMode::kImageAreaReweighted;
    else throw Error(ErrorCode::kParse, "config loss: expected uniform or r");
  }
  else if (key == "seed") seed = static_cast<std::uint64_t>(ToInt(key, value));
  else if (key == "threads") threads = static_cast<int>(ToInt(key, value));
  else if (key == "keep_context") keep_context = ToBool(key, value);
  else if (key == "num_classes") num_classes = static_cast<int>(ToInt(key, value));
  else if (key == "hidden") {
    hidden.clear();
    for (const auto& p : SplitList(value)) {
      if (!p.empty()) hidden.push_back(static_cast<int>(ToInt(key, p)));
    }
  }
  else if (key == "kernel") kernel = static_cast<int>(ToInt(key, value));
  else if (key == "epochs") epochs = static_cast<int>(ToInt(key, value));
  else if (key == "lr") learning_rate = ToDouble(key, value);
  else if (key == "batch_size") batch_size = static_cast<int>(ToInt(key, value));
  else throw Error(ErrorCode::kParse, "unknown config key '" + key + "'");
}

int Config::ResolvedThreads() const {
  return threads > 0 ? threads : DefaultThreadCount();
}

Config ParseConfig(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (Trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParse,
                  "config line " + std::to_string(line_no) + ": expected key = value");
    }
    cfg.Set(line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

Config LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

}  // namespace surfconv
