#include "mfish/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mfish/error.hpp"

namespace mfish {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw FormatError("config: bad value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

// libstdc++ 11 lacks floating-point from_chars; strtod is fine here.
double parse_double(std::string_view key, std::string_view value) {
  const std::string s(value);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw FormatError("config: bad value '" + s + "' for " + std::string(key));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw FormatError("config: bad boolean '" + std::string(value) + "' for " + std::string(key));
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::Pixel: return "pixel";
    case Method::Mean: return "mean";
    case Method::MeanStd: return "meanstd";
    case Method::Post: return "post";
  }
  return "?";
}

std::vector<Method> all_methods() {
  return {Method::Pixel, Method::Mean, Method::MeanStd, Method::Post};
}

std::vector<Method> parse_methods(std::string_view list) {
  std::vector<Method> out;
  while (!list.empty()) {
    const auto comma = list.find(',');
    const std::string_view item = trim(list.substr(0, comma));
    list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
    if (item.empty()) continue;
    bool matched = false;
    for (const Method m : all_methods()) {
      if (item == method_name(m)) {
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
        matched = true;
      }
    }
    if (!matched) throw InvalidArgument("unknown method '" + std::string(item) + "'");
  }
  if (out.empty()) throw InvalidArgument("method list is empty");
  return out;
}

void PipelineConfig::validate() const {
  blob.validate();
  segmentation.validate();
  post.validate();
  if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be >= 0");
  if (methods.empty()) throw InvalidArgument("no methods selected");
}

void PipelineConfig::set(std::string_view key, std::string_view value) {
  if (key == "blob_max_area") {
    blob.max_area = parse_number<long>(key, value);
  } else if (key == "blob_min_circularity") {
    blob.min_circularity = parse_double(key, value);
  } else if (key == "blob_connectivity") {
    blob.connectivity = connectivity_from_int(parse_number<int>(key, value));
  } else if (key == "minima_h") {
    segmentation.h = parse_double(key, value);
  } else if (key == "connectivity") {
    segmentation.connectivity = connectivity_from_int(parse_number<int>(key, value));
  } else if (key == "epsilon") {
    epsilon = parse_double(key, value);
  } else if (key == "small_threshold") {
    post.small_area_threshold = parse_number<long>(key, value);
  } else if (key == "postprocess") {
    postprocess = parse_bool(key, value);
  } else if (key == "methods") {
    methods = parse_methods(value);
  } else if (key == "palette") {
    palette = std::filesystem::path(std::string(value));
  } else {
    throw FormatError("config: unknown key '" + std::string(key) + "'");
  }
}

PipelineConfig parse_config(std::string_view text, PipelineConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      base.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
    } catch (const InvalidArgument& e) {
      throw FormatError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  base.validate();
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), std::move(base));
}

}  // namespace mfish
