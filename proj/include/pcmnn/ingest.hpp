#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace pcmnn::ingest {

/// One calendar day of trap counts and microclimate readings.
struct DailyRecord {
  int year = 0;
  int month = 0;
  int day = 0;
  int doy = 0;
  long long male_count = 0;  // individuals per 3 traps per day
  double temperature = 0.0;  // degrees C
  double humidity = 0.0;     // percent relative humidity
};

/// Study window: July 25 to August 23 inclusive, 30 calendar dates.
inline constexpr int kWindowDays = 30;

/// Interannual composite aligned on window dates. Population is the
/// doubled male count (equal sex ratio) averaged over years.
struct CompositeSeries {
  std::vector<int> day_index;
  std::vector<double> population;
  std::vector<double> temperature;
  std::vector<double> humidity;
  int n_years = 0;

  std::size_t size() const { return day_index.size(); }
  /// First `n` days; throws DataError if fewer are present.
  CompositeSeries head(std::size_t n) const;
};

/// Affine time map plus the scaled squared-deviation climate features fed
/// to the modulation network.
struct NormalizationSpec {
  double t_origin = 0.0;               // day index mapped to t = 0
  double t_span = kWindowDays - 1.0;   // days mapped onto the unit interval
  double T_star = 21.0;
  double H_star = 84.0;
  double temp_feature_scale = 1.0 / 100.0;
  double hum_feature_scale = 1.0 / 1000.0;

  double to_unit(double day) const { return (day - t_origin) / t_span; }
  double to_day(double t) const { return t_origin + t * t_span; }
  double temp_feature(double T) const { return (T - T_star) * (T - T_star) * temp_feature_scale; }
  double hum_feature(double H) const { return (H - H_star) * (H - H_star) * hum_feature_scale; }
  /// Throws UsageError when the time map is not invertible.
  void validate() const;
};

struct NormalizedSeries {
  std::vector<double> t;             // unit time
  std::vector<double> population;
  std::vector<double> temp_feature;
  std::vector<double> hum_feature;
};

bool is_leap_year(int year);
int day_of_year(int year, int month, int day);
/// Position of a calendar date inside the window, or -1 when outside.
int window_position(int month, int day);
/// "MM-DD" label of a window position.
std::string window_date(int position);
/// (month, day) of a window position.
std::pair<int, int> window_month_day(int position);

/// Parses `year,month,day,male_count,temp_c,rh_pct`. Errors carry path and line.
std::vector<DailyRecord> load_csv(const std::filesystem::path& path);

std::vector<DailyRecord> window(const std::vector<DailyRecord>& records);

/// Per-date means over `years`. Every requested year must cover all 30
/// window dates exactly once; records outside the window or from other
/// years are ignored.
CompositeSeries composite(const std::vector<DailyRecord>& records, const std::set<int>& years);

/// Distinct years present in the records, ascending.
std::set<int> years_of(const std::vector<DailyRecord>& records);

NormalizedSeries normalize(const CompositeSeries& series, const NormalizationSpec& spec);
/// Inverse time map, rounded back to integer day indices.
std::vector<int> denormalize_days(const NormalizedSeries& normalized, const NormalizationSpec& spec);

/// `day_index,date,population,temp_c,rh_pct`.
void write_composite_csv(const std::filesystem::path& path, const CompositeSeries& series);
CompositeSeries read_composite_csv(const std::filesystem::path& path);

/// Writes records in the input schema (used for synthetic data export).
void write_records_csv(const std::filesystem::path& path, const std::vector<DailyRecord>& records);

}  // namespace pcmnn::ingest
