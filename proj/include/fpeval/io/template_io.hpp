#pragma once

// Plain-text template format:
//
//   MINUTIAE <count> <width> <height> <dpi>
//   <x> <y> <theta> [quality]        (count lines)
//
// x and y are non-negative integer pixel coordinates, theta is in radians
// in [0, 2pi), quality is optional in [0, 1]. Lines starting with '#' are
// comments. Fields are separated by single spaces, lines end with LF.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fpeval/core.hpp"

namespace fpeval::io {

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline MinutiaeSet parse_template(std::string_view text) {
  using Kind = ParseError::Kind;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  std::size_t count = 0;
  int width = 0, height = 0, dpi = 0;
  std::size_t header_line = 0;
  std::vector<Minutia> minutiae;

  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty() && line.front() == '#') continue;
    const auto fields = detail::split_fields(line);
    if (fields.empty()) continue;

    if (!have_header) {
      long long c = 0;
      if (fields.size() != 5 || fields[0] != "MINUTIAE" || !detail::parse_number(fields[1], c) || c < 0 ||
          !detail::parse_number(fields[2], width) || !detail::parse_number(fields[3], height) ||
          !detail::parse_number(fields[4], dpi) || width <= 0 || height <= 0 || dpi <= 0)
        throw ParseError(Kind::kMalformedHeader, line_no,
                         "expected 'MINUTIAE <count> <width> <height> <dpi>'");
      count = static_cast<std::size_t>(c);
      have_header = true;
      header_line = line_no;
      continue;
    }

    if (minutiae.size() == count)
      throw ParseError(Kind::kCountMismatch, line_no,
                       "header declares " + std::to_string(count) + " minutiae but more lines follow");
    long long x = 0, y = 0;
    double theta = 0.0, quality = 0.0;
    if ((fields.size() != 3 && fields.size() != 4) || !detail::parse_number(fields[0], x) ||
        !detail::parse_number(fields[1], y) || !detail::parse_number(fields[2], theta) ||
        !std::isfinite(theta) || (fields.size() == 4 && !detail::parse_number(fields[3], quality)))
      throw ParseError(Kind::kMalformedLine, line_no, "expected 'x y theta [quality]'");
    if (x < 0 || y < 0 || x >= width || y >= height)
      throw ParseError(Kind::kOutOfBounds, line_no,
                       "minutia (" + std::to_string(x) + ", " + std::to_string(y) + ") outside " +
                           std::to_string(width) + "x" + std::to_string(height));
    if (fields.size() == 4 && !(quality >= 0.0 && quality <= 1.0))
      throw ParseError(Kind::kMalformedLine, line_no, "quality outside [0, 1]");
    Minutia m(static_cast<double>(x), static_cast<double>(y), theta);
    if (fields.size() == 4) m.quality = quality;
    minutiae.push_back(m);
  }
  if (!have_header) throw ParseError(Kind::kMalformedHeader, line_no == 0 ? 1 : line_no, "missing header");
  if (minutiae.size() != count)
    throw ParseError(Kind::kCountMismatch, header_line,
                     "header declares " + std::to_string(count) + " minutiae, found " +
                         std::to_string(minutiae.size()));
  return MinutiaeSet(std::move(minutiae), width, height, dpi);
}

inline MinutiaeSet load_template(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(ParseError::Kind::kIo, 0, "cannot open template '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_template(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.line(), path + ": " + e.detail());
  }
}

/// Serializes a set. Coordinates are rounded to the nearest pixel; minutiae
/// that then fall outside the image (possible for perturbed sets) are
/// dropped, which models the sensor cropping them.
inline std::string format_template(const MinutiaeSet& set) {
  std::vector<std::string> lines;
  for (const auto& m : set) {
    const double rx = std::round(m.x);
    const double ry = std::round(m.y);
    if (rx < 0 || ry < 0 || rx >= set.width() || ry >= set.height()) continue;
    std::string line = std::to_string(static_cast<long long>(rx)) + " " +
                       std::to_string(static_cast<long long>(ry)) + " " + detail::format_double(m.theta);
    if (m.quality) line += " " + detail::format_double(*m.quality);
    lines.push_back(std::move(line));
  }
  std::string out = "MINUTIAE " + std::to_string(lines.size()) + " " + std::to_string(set.width()) + " " +
                    std::to_string(set.height()) + " " + std::to_string(set.resolution()) + "\n";
  for (const auto& l : lines) out += l + "\n";
  return out;
}

inline void save_template(const MinutiaeSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write template '" + path + "'");
  out << format_template(set);
  if (!out) throw DataError("failed writing template '" + path + "'");
}

}  // namespace fpeval::io
