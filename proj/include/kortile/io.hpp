// SPDX-License-Identifier: MIT
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kortile/common.hpp"

namespace kortile::io {

inline constexpr const char* kVersion = "0.1.0";

/// Shortest text that reads back as the same double; locale independent.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row(const std::vector<double>& values) {
    require(values.size() == header_.size(), "CSV row width does not match header");
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(fmt_double(v));
    rows_.push_back(std::move(cells));
    return *this;
  }
  CsvTable& row(std::vector<std::string> cells) {
    require(cells.size() == header_.size(), "CSV row width does not match header");
    rows_.push_back(std::move(cells));
    return *this;
  }

  [[nodiscard]] std::string str() const {
    std::string s;
    const auto line = [&](const std::vector<std::string>& c) {
      for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + c[i];
      s += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return s;
  }

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw NumericError("cannot write " + p.string());
  f << text;
  if (!f) throw NumericError("write failed for " + p.string());
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

/// Minimal SVG canvas with a data-to-pixel transform.
class Svg {
public:
  Svg(double x0, double x1, double y0, double y1, int width = 600, int height = 600)
      : x0_(x0), x1_(x1), y0_(y0), y1_(y1), w_(width), h_(height) {
    require(x1 > x0 && y1 > y0 && width > 0 && height > 0, "invalid SVG viewport");
  }

  [[nodiscard]] double px(double x) const { return (x - x0_) / (x1_ - x0_) * w_; }
  [[nodiscard]] double py(double y) const { return (y1_ - y) / (y1_ - y0_) * h_; }

  void rect(double x, double y, double dx, double dy, const std::string& fill) {
    body_ << "<rect x=\"" << num(px(x)) << "\" y=\"" << num(py(y + dy)) << "\" width=\"" << num(px(x + dx) - px(x))
          << "\" height=\"" << num(py(y) - py(y + dy)) << "\" fill=\"" << fill << "\"/>\n";
  }
  void circle(double x, double y, double r, const std::string& stroke) {
    body_ << "<ellipse cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" rx=\"" << num(px(x + r) - px(x))
          << "\" ry=\"" << num(py(y) - py(y + r)) << "\" fill=\"none\" stroke=\"" << stroke << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" points=\"";
    for (const auto& [x, y] : pts) body_ << num(px(x)) << ',' << num(py(y)) << ' ';
    body_ << "\"/>\n";
  }
  void dot(double x, double y, double r, const std::string& fill) {
    body_ << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"" << num(r) << "\" fill=\"" << fill << "\"/>\n";
  }

  [[nodiscard]] std::string str() const {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_ << "\" viewBox=\"0 0 " << w_ << ' '
      << h_ << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body_.str() << "</svg>\n";
    return s.str();
  }

  /// A fixed categorical palette, cycled.
  static std::string color(std::size_t i) {
    static const char* pal[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
    return pal[i % 10];
  }

private:
  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
  }
  double x0_, x1_, y0_, y1_;
  int w_, h_;
  std::ostringstream body_;
};

/// manifest.json: the resolved configuration of a run and the files it wrote.
/// Contains nothing that varies between identical runs.
struct Manifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> outputs;
  std::string status = "ok";

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"tool", "kortile"}, {"version", kVersion}, {"command", command}, {"config", config}, {"outputs", outputs}, {"status", status}};
  }
};

/// Output directory helper that records every file in the manifest.
class RunOutput {
public:
  RunOutput(std::filesystem::path dir, std::string command) : dir_(std::move(dir)) {
    manifest_.command = std::move(command);
    std::filesystem::create_directories(dir_);
  }

  nlohmann::json& config() { return manifest_.config; }
  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

  void json(const std::string& name, const nlohmann::json& j) {
    write_json(dir_ / name, j);
    manifest_.outputs.push_back(name);
  }
  void text(const std::string& name, const std::string& t) {
    write_text(dir_ / name, t);
    manifest_.outputs.push_back(name);
  }
  void finish(const std::string& status = "ok") {
    manifest_.status = status;
    write_json(dir_ / "manifest.json", manifest_.to_json());
  }

private:
  std::filesystem::path dir_;
  Manifest manifest_;
};

}  // namespace kortile::io
