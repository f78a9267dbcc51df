#pragma once

// Aggregation of raw result rows: CSV I/O, protocol panels with deltas, accuracy vs
// epsilon series and a JSON summary.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eqml/error.hpp"
#include "eqml/harness.hpp"
#include "eqml/ringgrid.hpp"
#include "eqml/twirl.hpp"

namespace eqml {

inline const char* kResultsHeader = "dataset,train_variant,eval_variant,surrogate,attack,epsilon,seed,accuracy,n_eval";

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kResultsHeader) + "\n";
  for (const auto& r : rows) {
    out += r.dataset + "," + r.train_variant + "," + r.eval_variant + "," + r.surrogate + "," + r.attack + ",";
    out += detail::fmt("%.10g", r.epsilon) + "," + std::to_string(r.seed) + "," + detail::fmt("%.17g", r.accuracy) + ",";
    out += std::to_string(r.n_eval) + "\n";
  }
  return out;
}

inline std::vector<ResultRow> rows_from_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  require(static_cast<bool>(std::getline(ss, line)) && line == kResultsHeader, ErrorCode::InvalidArgs,
          "results CSV header mismatch");
  std::vector<ResultRow> rows;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto c = detail::split_csv_line(line);
    require(c.size() == 9, ErrorCode::InvalidArgs, "results CSV row must have 9 columns");
    ResultRow r{c[0], c[1], c[2], c[3], c[4], std::stod(c[5]), std::stoull(c[6]), std::stod(c[7]),
                static_cast<std::size_t>(std::stoull(c[8]))};
    require(r.accuracy >= 0.0 && r.accuracy <= 1.0, ErrorCode::InvalidArgs, "accuracy outside [0, 1]");
    rows.push_back(r);
  }
  return rows;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  std::size_t n = 0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  m.n = v.size();
  if (v.empty()) return m;
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) {
    m.mean = v.front();
    return m;
  }
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Protocol panels

struct PanelCell {
  std::string panel;  // "a": train clean / test variant, "b": train variant / test clean
  std::string dataset;
  std::string variant;
  MeanStd acc;
  double delta = 0.0;  // variant mean minus clean mean

  std::string formatted() const {
    std::string s = detail::fmt("%.2f", acc.mean) + " +- " + detail::fmt("%.2f", acc.std);
    if (variant != "clean") s += " (" + detail::fmt("%+.2f", delta) + ")";
    return s;
  }
};

inline std::vector<PanelCell> table1_panels(const std::vector<ResultRow>& rows) {
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> groups;
  std::map<std::string, std::vector<double>> baseline;
  std::vector<std::string> datasets;
  for (const auto& r : rows) {
    if (r.attack != "none") continue;
    if (r.train_variant == "clean" && r.eval_variant == "clean") {
      baseline[r.dataset].push_back(r.accuracy);
      continue;
    }
    if (r.train_variant == "clean")
      groups[{r.dataset, "a", r.eval_variant}].push_back(r.accuracy);
    else if (r.eval_variant == "clean")
      groups[{r.dataset, "b", r.train_variant}].push_back(r.accuracy);
  }
  for (const auto& [key, _] : groups)
    require(baseline.count(std::get<0>(key)) > 0, ErrorCode::MissingBaseline,
            "no clean/clean rows for dataset '" + std::get<0>(key) + "'");
  require(!baseline.empty(), ErrorCode::MissingBaseline, "no clean/clean rows");

  std::vector<PanelCell> cells;
  for (const auto& [ds, vals] : baseline) {
    const MeanStd base = mean_std(vals);
    for (const char* panel : {"a", "b"}) {
      cells.push_back({panel, ds, "clean", base, 0.0});
      for (const auto& [key, v] : groups) {
        if (std::get<0>(key) != ds || std::get<1>(key) != panel) continue;
        const MeanStd m = mean_std(v);
        cells.push_back({panel, ds, std::get<2>(key), m, m.mean - base.mean});
      }
    }
  }
  return cells;
}

inline std::string panels_to_text(const std::vector<PanelCell>& cells) {
  std::string out;
  std::string current;
  for (const auto& c : cells) {
    const std::string head = c.dataset + " panel " + c.panel;
    if (head != current) {
      out += "[" + head + (c.panel == "a" ? ": train clean, test variant]\n" : ": train variant, test clean]\n");
      current = head;
    }
    out += "  " + c.variant + "\t" + c.formatted() + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Accuracy vs epsilon series

struct SeriesPoint {
  double epsilon = 0.0;
  MeanStd acc;
};

struct Series {
  std::string dataset, surrogate, attack, train_variant, eval_variant;
  std::vector<SeriesPoint> points;  // ascending epsilon
};

inline std::vector<Series> sweep_series(const std::vector<ResultRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string, std::string, std::string>;
  std::map<Key, std::map<double, std::vector<double>>> groups;
  for (const auto& r : rows) {
    if (r.attack == "none") continue;
    groups[{r.dataset, r.surrogate, r.attack, r.train_variant, r.eval_variant}][r.epsilon].push_back(r.accuracy);
  }
  std::vector<Series> out;
  for (const auto& [k, by_eps] : groups) {
    Series s{std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), std::get<4>(k), {}};
    for (const auto& [eps, v] : by_eps) s.points.push_back({eps, mean_std(v)});
    out.push_back(std::move(s));
  }
  return out;
}

inline std::string series_to_csv(const std::vector<Series>& series) {
  std::string out = "dataset,surrogate,attack,train_variant,eval_variant,epsilon,mean,std,n\n";
  for (const auto& s : series)
    for (const auto& p : s.points)
      out += s.dataset + "," + s.surrogate + "," + s.attack + "," + s.train_variant + "," + s.eval_variant + "," +
             detail::fmt("%.10g", p.epsilon) + "," + detail::fmt("%.17g", p.acc.mean) + "," +
             detail::fmt("%.17g", p.acc.std) + "," + std::to_string(p.acc.n) + "\n";
  return out;
}

inline nlohmann::json summary_json(const std::vector<ResultRow>& rows) {
  nlohmann::json j;
  j["n_rows"] = rows.size();
  j["panels"] = nlohmann::json::array();
  bool has_protocol = false;
  for (const auto& r : rows) has_protocol = has_protocol || (r.attack == "none" && r.train_variant == "clean" && r.eval_variant == "clean");
  if (has_protocol)
    for (const auto& c : table1_panels(rows))
      j["panels"].push_back({{"panel", c.panel},
                             {"dataset", c.dataset},
                             {"variant", c.variant},
                             {"mean", c.acc.mean},
                             {"std", c.acc.std},
                             {"n", c.acc.n},
                             {"delta", c.delta},
                             {"formatted", c.formatted()}});
  j["series"] = nlohmann::json::array();
  for (const auto& s : sweep_series(rows)) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : s.points) pts.push_back({{"epsilon", p.epsilon}, {"mean", p.acc.mean}, {"std", p.acc.std}, {"n", p.acc.n}});
    j["series"].push_back({{"dataset", s.dataset},
                           {"surrogate", s.surrogate},
                           {"attack", s.attack},
                           {"train_variant", s.train_variant},
                           {"eval_variant", s.eval_variant},
                           {"points", pts}});
  }
  return j;
}

inline std::string correlation_export(const SampledImage& x, const std::vector<std::pair<std::size_t, std::size_t>>& ring_pairs) {
  return correlations_csv(circular_correlations(x), ring_pairs);
}

}  // namespace eqml
