#pragma once

// JSON interchange: mmspace/1, excursion/1 and measure/1 documents.
// Rationals are written as "p/q" strings; readers also accept integers,
// decimal strings and JSON numbers, all converted exactly.

#include "mmspace/excursion.hpp"
#include "mmspace/gp_box.hpp"
#include "mmspace/mm_space.hpp"
#include "mmspace/rational.hpp"

#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace mmspace::io {

using json = nlohmann::json;

/// Error in an input document; the message names the field.
class format_error : public domain_error {
public:
  using domain_error::domain_error;
};

inline constexpr unsigned decimal_places = 12;

inline json rational_json(const Rational& r) { return to_string(r); }

/// {"exact": "p/q", "decimal": "...", "rounding": "half-even, 12 places"}.
inline json value_json(const Rational& r) {
  return {{"exact", to_string(r)},
          {"decimal", to_decimal(r, decimal_places)},
          {"rounding", "half-even, " + std::to_string(decimal_places) + " places"}};
}

inline json value_json(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return {{"float", s.str()}};
}

inline Rational read_rational(const json& v, const std::string& where) {
  try {
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.dump());
    if (v.is_number_float()) return parse_rational(v.dump());
  } catch (const parse_error& e) {
    throw format_error(where + ": " + e.what());
  }
  throw format_error(where + ": expected a rational (\"p/q\", integer or decimal), got " + v.dump());
}

inline std::vector<Rational> read_rational_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw format_error(where + ": expected an array");
  std::vector<Rational> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(read_rational(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline json rational_array(const std::vector<Rational>& v) {
  json out = json::array();
  for (const auto& r : v) out.push_back(rational_json(r));
  return out;
}

inline const json& field(const json& doc, const std::string& key, const std::string& where) {
  if (!doc.is_object()) throw format_error(where + ": expected a JSON object");
  auto it = doc.find(key);
  if (it == doc.end()) throw format_error(where + ": missing field '" + key + "'");
  return *it;
}

inline void expect_format(const json& doc, const std::string& format, const std::string& where) {
  const json& f = field(doc, "format", where);
  if (!f.is_string() || f.get<std::string>() != format)
    throw format_error(where + ".format: expected \"" + format + "\", got " + f.dump());
}

// --- mmspace/1 -------------------------------------------------------------

inline json to_json(const mm_space& s) {
  json rows = json::array();
  for (std::size_t i = 0; i < s.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < s.size(); ++j) row.push_back(rational_json(s.d(i, j)));
    rows.push_back(row);
  }
  return {{"format", "mmspace/1"}, {"labels", s.labels}, {"dist", rows}, {"weights", rational_array(s.weights)}};
}

/// Reads and validates a space; shape errors name the field.
inline mm_space space_from_json(const json& doc, const std::string& where = "space") {
  expect_format(doc, "mmspace/1", where);
  mm_space s;
  s.weights = read_rational_array(field(doc, "weights", where), where + ".weights");
  const std::size_t n = s.weights.size();
  if (n == 0) throw format_error(where + ".weights: a space needs at least one point");
  const json& rows = field(doc, "dist", where);
  if (!rows.is_array() || rows.size() != n)
    throw format_error(where + ".dist: expected " + std::to_string(n) + " rows to match the weights");
  s.dist = square_matrix<Rational>(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string at = where + ".dist[" + std::to_string(i) + "]";
    auto row = read_rational_array(rows[i], at);
    if (row.size() != n) throw format_error(at + ": expected " + std::to_string(n) + " entries");
    for (std::size_t j = 0; j < n; ++j) s.dist(i, j) = row[j];
  }
  if (auto it = doc.find("labels"); it != doc.end()) {
    if (!it->is_array() || it->size() != n)
      throw format_error(where + ".labels: expected " + std::to_string(n) + " labels");
    for (std::size_t i = 0; i < n; ++i) {
      const json& l = (*it)[i];
      s.labels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
    }
  } else {
    s.labels = default_labels(n);
  }
  return s;
}

// --- excursion/1 -----------------------------------------------------------

inline json to_json(const excursion& h) {
  json doc{{"format", "excursion/1"}, {"breakpoints", rational_array(h.breakpoints)}};
  if (h.kind == excursion_kind::piecewise_linear) {
    doc["kind"] = "pl";
    doc["values"] = rational_array(h.point_values);
  } else {
    doc["kind"] = "pc";
    doc["values"] = rational_array(h.piece_start);
    doc["breakpoint_values"] = rational_array(h.point_values);
  }
  return doc;
}

/// PL: `values` are the heights at the breakpoints. PC: `values` are the
/// piece heights and `breakpoint_values` (optional) the heights at the
/// breakpoints, defaulting to the smaller neighbouring piece.
inline excursion excursion_from_json(const json& doc, const std::string& where = "excursion") {
  expect_format(doc, "excursion/1", where);
  const json& kind = field(doc, "kind", where);
  auto breaks = read_rational_array(field(doc, "breakpoints", where), where + ".breakpoints");
  auto values = read_rational_array(field(doc, "values", where), where + ".values");
  excursion h;
  if (kind == "pl") {
    if (values.size() != breaks.size())
      throw format_error(where + ".values: piecewise-linear needs one value per breakpoint (" +
                         std::to_string(breaks.size()) + ")");
    h = excursion::piecewise_linear(std::move(breaks), std::move(values));
  } else if (kind == "pc") {
    if (breaks.empty() || values.size() + 1 != breaks.size())
      throw format_error(where + ".values: piecewise-constant needs one value per piece (" +
                         std::to_string(breaks.empty() ? 0 : breaks.size() - 1) + ")");
    std::vector<Rational> at;
    if (auto it = doc.find("breakpoint_values"); it != doc.end()) {
      at = read_rational_array(*it, where + ".breakpoint_values");
      if (at.size() != breaks.size())
        throw format_error(where + ".breakpoint_values: expected " + std::to_string(breaks.size()) + " entries");
    }
    h = excursion::piecewise_constant(std::move(breaks), std::move(values), std::move(at));
  } else {
    throw format_error(where + ".kind: expected \"pl\" or \"pc\", got " + kind.dump());
  }
  if (auto v = validate(h); !v.empty()) throw format_error(where + ": " + v.front());
  return h;
}

// --- measure/1 -------------------------------------------------------------

inline json measure_json(const std::vector<Rational>& w) {
  return {{"format", "measure/1"}, {"weights", rational_array(w)}};
}

/// A bare array of weights or {"format": "measure/1", "weights": [...]}.
inline std::vector<Rational> measure_from_json(const json& doc, const std::string& where = "measure") {
  if (doc.is_array()) return read_rational_array(doc, where);
  expect_format(doc, "measure/1", where);
  return read_rational_array(field(doc, "weights", where), where + ".weights");
}

// --- correspondences and gluings ---------------------------------------------

inline json pairs_json(const std::vector<point_pair>& k) {
  json out = json::array();
  for (auto [i, j] : k) out.push_back(json::array({i, j}));
  return out;
}

/// [[i, j], ...] with 0-based indices.
inline std::vector<point_pair> pairs_from_json(const json& doc, const std::string& where = "pairs") {
  if (!doc.is_array()) throw format_error(where + ": expected an array of [i, j] pairs");
  std::vector<point_pair> out;
  for (std::size_t k = 0; k < doc.size(); ++k) {
    const json& p = doc[k];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_unsigned() || !p[1].is_number_unsigned())
      throw format_error(where + "[" + std::to_string(k) + "]: expected [i, j] with nonnegative integers");
    out.emplace_back(p[0].get<std::size_t>(), p[1].get<std::size_t>());
  }
  return out;
}

inline json to_json(const correspondence& k) {
  return {{"pairs", pairs_json(k.pairs)}, {"distortion", value_json(k.distortion)}, {"maxmass", value_json(k.maxmass)}};
}

inline json to_json(const glued_space& g) {
  json rows = json::array();
  for (std::size_t i = 0; i < g.dist.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < g.dist.size(); ++j) row.push_back(rational_json(g.dist(i, j)));
    rows.push_back(row);
  }
  return {{"n1", g.n1}, {"n2", g.n2}, {"dist", rows}};
}

// --- files -------------------------------------------------------------------

/// Parses a JSON file; syntax errors carry the byte offset.
inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw format_error(path + ": cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw format_error(path + ": malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

/// Writes `text` to `path`, or to stdout when `path` is empty or "-".
inline void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw format_error(path + ": cannot open for writing");
  out << text;
}

/// Canonical rendering used for every written document.
inline std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace mmspace::io
