#pragma once

// Chamber biomarkers from time series and their normalization against
// physiological reference ranges.

#include "cardioflow/common/toml.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cardioflow::postproc {

struct BiomarkerRange {
  enum class Kind { interval, mean_sd };

  std::string name;
  Kind kind = Kind::interval;
  double a = 0, b = 1;       // interval bounds
  double mean = 0, sd = 1;   // mean ± sd
  std::string units;
  std::string citation;
  std::string column; // series column override; empty: derived from the name

  static BiomarkerRange interval(std::string name, double a, double b, std::string units = {},
                                 std::string citation = {});
  static BiomarkerRange mean_sd(std::string name, double mean, double sd, std::string units = {},
                                std::string citation = {});
  /// Throws InvalidArgument unless a < b (interval) or sd > 0.
  void validate() const;
};

/// Display clip for the z-score of mean ± sd ranges.
inline constexpr double kDisplayClip = 3.0;

/// Interval: 2(x - a)/(b - a) - 1. Mean ± sd: (x - mean)/sd (unclipped).
double normalize_biomarker(double x, const BiomarkerRange& range);
/// |n| <= 1.
bool in_range(double normalized);
/// Value written to reports: the z-score clipped to ±kDisplayClip, interval
/// values unchanged.
double display_normalized(double normalized, const BiomarkerRange& range);

/// `[[biomarker]]` entries with name, units, citation, optional column and
/// either `interval = [a, b]` or `mean`/`sd`.
std::vector<BiomarkerRange> ranges_from_toml(const toml::Table& root);
std::vector<BiomarkerRange> load_ranges(const std::filesystem::path& path);

struct ChamberBiomarkers {
  double ESV = 0, EDV = 0, SV = 0;
  double EF = 0; // fraction
  double Q_max = 0, p_max = 0, p_mean = 0;
};

struct Window {
  double t0 = -1e300, t1 = 1e300;
};

/// Extrema and trapezoidal time average over samples with t0 <= t <= t1.
/// Q or p may be empty, in which case the matching outputs stay zero.
/// Throws InvalidArgument on an empty window or mismatched lengths.
ChamberBiomarkers chamber_biomarkers(std::span<const double> t, std::span<const double> V,
                                     std::span<const double> Q, std::span<const double> p, Window window);

/// Numeric CSV with a header line; lines starting with '#' are skipped.
struct Series {
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> columns;

  const std::vector<double>* find(const std::string& name) const;
  std::size_t rows() const;
};
Series read_series_csv(const std::filesystem::path& path);
Series parse_series_csv(const std::string& text);

/// Value of a named biomarker from a series. Names are <stat>_<key>:
///   ESV_X, EDV_X, SV_X, EF_X (%)  from column V_X
///   Qmax_X                         from column Q_X
///   pmax_X, pmean_X                from column p_X
///   vmax_X                         from column v_X
/// `aliases` renames columns (e.g. V_LV -> V_fluid); `column` replaces the
/// source column outright. Returns nothing if the name or column is unknown.
std::optional<double> series_biomarker(const Series& series, const std::string& name, Window window,
                                       const std::map<std::string, std::string>& aliases = {},
                                       const std::string& column = {});

struct ReportRow {
  std::string name;
  double value = 0;
  std::string units;
  double normalized = 0; // display value
  bool in_range = false;
  std::string citation;
};

struct ReportOptions {
  Window window;
  std::map<std::string, std::string> aliases;
  std::map<std::string, double> values; // externally supplied biomarkers, take precedence
};

struct Report {
  std::vector<ReportRow> rows;
  std::vector<std::string> skipped; // ranges with no value in the series
};

Report build_report(const Series& series, const std::vector<BiomarkerRange>& ranges, const ReportOptions& options);

/// Columns: name, value, units, normalized, in_range, citation, preceded by
/// '#' lines describing the normalization rule.
std::string report_csv(const Report& report);
void write_report_csv(const std::filesystem::path& path, const Report& report);

} // namespace cardioflow::postproc
