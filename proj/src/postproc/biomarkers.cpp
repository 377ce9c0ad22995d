#include "cardioflow/postproc/biomarkers.hpp"

#include "cardioflow/common/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cardioflow::postproc {

BiomarkerRange BiomarkerRange::interval(std::string name, double a, double b, std::string units,
                                        std::string citation) {
  BiomarkerRange r;
  r.name = std::move(name);
  r.kind = Kind::interval;
  r.a = a;
  r.b = b;
  r.units = std::move(units);
  r.citation = std::move(citation);
  r.validate();
  return r;
}

BiomarkerRange BiomarkerRange::mean_sd(std::string name, double mean, double sd, std::string units,
                                       std::string citation) {
  BiomarkerRange r;
  r.name = std::move(name);
  r.kind = Kind::mean_sd;
  r.mean = mean;
  r.sd = sd;
  r.units = std::move(units);
  r.citation = std::move(citation);
  r.validate();
  return r;
}

void BiomarkerRange::validate() const {
  if (kind == Kind::interval && !(a < b))
    throw InvalidArgument(fmt::format("biomarker {}: interval needs a < b (got [{}, {}])", name, a, b));
  if (kind == Kind::mean_sd && !(sd > 0))
    throw InvalidArgument(fmt::format("biomarker {}: sd must be positive (got {})", name, sd));
}

double normalize_biomarker(double x, const BiomarkerRange& range) {
  if (range.kind == BiomarkerRange::Kind::interval)
    return 2.0 * (x - range.a) / (range.b - range.a) - 1.0;
  return (x - range.mean) / range.sd;
}

bool in_range(double normalized) { return normalized >= -1.0 && normalized <= 1.0; }

double display_normalized(double normalized, const BiomarkerRange& range) {
  if (range.kind == BiomarkerRange::Kind::mean_sd)
    return std::clamp(normalized, -kDisplayClip, kDisplayClip);
  return normalized;
}

std::vector<BiomarkerRange> ranges_from_toml(const toml::Table& root) {
  for (const auto& [key, value] : root)
    if (key != "biomarker")
      throw ParseError(fmt::format("ranges: unexpected key '{}'", key));
  const toml::Value* list = toml::find(root, "biomarker");
  if (!list)
    return {};
  if (!list->is_array())
    throw ParseError("ranges: 'biomarker' must be an array of tables ([[biomarker]])");

  std::vector<BiomarkerRange> out;
  for (const auto& entry : list->as_array()) {
    const auto& t = entry.as_table();
    BiomarkerRange r;
    r.name = toml::get_string(t, "name", "");
    if (r.name.empty())
      throw ParseError("ranges: entry without a name");
    for (const auto& [key, value] : t)
      if (key != "name" && key != "units" && key != "citation" && key != "column" && key != "interval" &&
          key != "mean" && key != "sd")
        throw ParseError(fmt::format("ranges: {}: unexpected key '{}'", r.name, key));
    r.units = toml::get_string(t, "units", "");
    r.citation = toml::get_string(t, "citation", "");
    r.column = toml::get_string(t, "column", "");
    const bool has_interval = toml::find(t, "interval") != nullptr;
    const bool has_mean = toml::find(t, "mean") != nullptr || toml::find(t, "sd") != nullptr;
    if (has_interval == has_mean)
      throw ParseError(fmt::format("ranges: {}: give either interval = [a, b] or mean and sd", r.name));
    if (has_interval) {
      const auto ab = toml::find(t, "interval")->as_numbers();
      if (ab.size() != 2)
        throw ParseError(fmt::format("ranges: {}: interval needs two numbers", r.name));
      r.kind = BiomarkerRange::Kind::interval;
      r.a = ab[0];
      r.b = ab[1];
    } else {
      r.kind = BiomarkerRange::Kind::mean_sd;
      r.mean = toml::require_number(t, "mean");
      r.sd = toml::require_number(t, "sd");
    }
    try {
      r.validate();
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<BiomarkerRange> load_ranges(const std::filesystem::path& path) {
  return ranges_from_toml(toml::parse_file(path));
}

ChamberBiomarkers chamber_biomarkers(std::span<const double> t, std::span<const double> V,
                                     std::span<const double> Q, std::span<const double> p, Window window) {
  if (V.size() != t.size() || (!Q.empty() && Q.size() != t.size()) || (!p.empty() && p.size() != t.size()))
    throw InvalidArgument("chamber_biomarkers: series lengths differ");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= window.t0 && t[i] <= window.t1)
      idx.push_back(i);
  if (idx.empty())
    throw InvalidArgument(fmt::format("chamber_biomarkers: no samples in [{}, {}]", window.t0, window.t1));

  ChamberBiomarkers b;
  b.ESV = b.EDV = V[idx[0]];
  for (auto i : idx) {
    b.ESV = std::min(b.ESV, V[i]);
    b.EDV = std::max(b.EDV, V[i]);
  }
  b.SV = b.EDV - b.ESV;
  b.EF = b.EDV > 0 ? b.SV / b.EDV : 0.0;
  if (!Q.empty()) {
    b.Q_max = Q[idx[0]];
    for (auto i : idx)
      b.Q_max = std::max(b.Q_max, Q[i]);
  }
  if (!p.empty()) {
    b.p_max = p[idx[0]];
    for (auto i : idx)
      b.p_max = std::max(b.p_max, p[i]);
    const double span = t[idx.back()] - t[idx.front()];
    if (span > 0) {
      double integral = 0;
      for (std::size_t k = 1; k < idx.size(); ++k)
        integral += 0.5 * (p[idx[k]] + p[idx[k - 1]]) * (t[idx[k]] - t[idx[k - 1]]);
      b.p_mean = integral / span;
    } else {
      b.p_mean = p[idx[0]];
    }
  }
  return b;
}

const std::vector<double>* Series::find(const std::string& name) const {
  auto it = columns.find(name);
  return it == columns.end() ? nullptr : &it->second;
}

std::size_t Series::rows() const { return columns.empty() ? 0 : columns.begin()->second.size(); }

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream s(line);
  while (std::getline(s, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  return out;
}

} // namespace

Series parse_series_csv(const std::string& text) {
  Series s;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    auto cells = split(line);
    if (!have_header) {
      s.names = cells;
      for (const auto& n : s.names) {
        if (n.empty() || s.columns.count(n))
          throw ParseError(fmt::format("series: empty or duplicate column name '{}'", n));
        s.columns[n];
      }
      have_header = true;
      continue;
    }
    if (cells.size() != s.names.size())
      throw ParseError(fmt::format("series: line {} has {} fields, expected {}", lineno, cells.size(), s.names.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double x = 0;
      const auto& cell = cells[c];
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw ParseError(fmt::format("series: line {}: '{}' is not a number", lineno, cell));
      s.columns[s.names[c]].push_back(x);
    }
  }
  if (!have_header)
    throw ParseError("series: no header line");
  return s;
}

Series read_series_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f)
    throw ParseError(fmt::format("cannot read {}", path.string()));
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_series_csv(ss.str());
}

std::optional<double> series_biomarker(const Series& series, const std::string& name, Window window,
                                       const std::map<std::string, std::string>& aliases,
                                       const std::string& column) {
  const auto us = name.find('_');
  if (us == std::string::npos)
    return std::nullopt;
  const std::string stat = name.substr(0, us), key = name.substr(us + 1);
  std::string prefix;
  if (stat == "ESV" || stat == "EDV" || stat == "SV" || stat == "EF")
    prefix = "V_";
  else if (stat == "Qmax")
    prefix = "Q_";
  else if (stat == "pmax" || stat == "pmean")
    prefix = "p_";
  else if (stat == "vmax")
    prefix = "v_";
  else
    return std::nullopt;

  std::string col = column.empty() ? prefix + key : column;
  if (auto it = aliases.find(col); it != aliases.end())
    col = it->second;
  const auto* t = series.find("t");
  const auto* x = series.find(col);
  if (!t || !x)
    return std::nullopt;

  const std::span<const double> none;
  if (prefix == "V_") {
    const auto b = chamber_biomarkers(*t, *x, none, none, window);
    if (stat == "ESV")
      return b.ESV;
    if (stat == "EDV")
      return b.EDV;
    if (stat == "SV")
      return b.SV;
    return 100.0 * b.EF;
  }
  // Reuse the chamber reducer with a dummy volume column.
  const std::vector<double> V(t->size(), 0.0);
  if (prefix == "p_") {
    const auto b = chamber_biomarkers(*t, V, none, *x, window);
    return stat == "pmax" ? b.p_max : b.p_mean;
  }
  return chamber_biomarkers(*t, V, *x, none, window).Q_max;
}

Report build_report(const Series& series, const std::vector<BiomarkerRange>& ranges, const ReportOptions& options) {
  Report report;
  for (const auto& range : ranges) {
    std::optional<double> value;
    if (auto it = options.values.find(range.name); it != options.values.end())
      value = it->second;
    else
      value = series_biomarker(series, range.name, options.window, options.aliases, range.column);
    if (!value) {
      report.skipped.push_back(range.name);
      continue;
    }
    const double n = normalize_biomarker(*value, range);
    report.rows.push_back({range.name, *value, range.units, display_normalized(n, range), in_range(n), range.citation});
  }
  return report;
}

namespace {

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string q = "\"";
  for (char c : s)
    q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

} // namespace

std::string report_csv(const Report& report) {
  std::string out;
  out += "# normalized: interval [a, b] -> 2(x - a)/(b - a) - 1; mean +- sd -> (x - mean)/sd\n";
  out += fmt::format("# mean +- sd values are clipped to [-{0}, {0}] for display; in_range is |n| <= 1 before clipping\n",
                     kDisplayClip);
  out += "name,value,units,normalized,in_range,citation\n";
  for (const auto& r : report.rows)
    out += fmt::format("{},{:.6g},{},{:.6f},{},{}\n", csv_text(r.name), r.value, csv_text(r.units), r.normalized,
                       r.in_range ? "true" : "false", csv_text(r.citation));
  return out;
}

void write_report_csv(const std::filesystem::path& path, const Report& report) {
  std::ofstream f(path);
  if (!f)
    throw Error(fmt::format("cannot write {}", path.string()));
  f << report_csv(report);
}

} // namespace cardioflow::postproc
