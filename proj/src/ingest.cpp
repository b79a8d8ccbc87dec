#include "pcmnn/ingest.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "pcmnn/csv.hpp"
#include "pcmnn/error.hpp"

namespace pcmnn::ingest {

namespace {

constexpr int kDaysInMonth[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
constexpr int kWindowStartMonth = 7;
constexpr int kWindowStartDay = 25;

int days_in_month(int year, int month) {
  if (month == 2 && is_leap_year(year)) return 29;
  return kDaysInMonth[month - 1];
}

const std::vector<std::string> kInputHeader = {"year", "month", "day", "male_count", "temp_c", "rh_pct"};

}  // namespace

CompositeSeries CompositeSeries::head(std::size_t n) const {
  if (n > size()) {
    throw DataError("series has " + std::to_string(size()) + " days, requested " + std::to_string(n));
  }
  CompositeSeries out;
  out.n_years = n_years;
  out.day_index.assign(day_index.begin(), day_index.begin() + n);
  out.population.assign(population.begin(), population.begin() + n);
  out.temperature.assign(temperature.begin(), temperature.begin() + n);
  out.humidity.assign(humidity.begin(), humidity.begin() + n);
  return out;
}

void NormalizationSpec::validate() const {
  if (!(t_span != 0.0) || !std::isfinite(t_span)) throw UsageError("normalization: zero-length window");
  if (!(temp_feature_scale > 0.0) || !(hum_feature_scale > 0.0)) {
    throw UsageError("normalization: feature scales must be positive");
  }
}

bool is_leap_year(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

int day_of_year(int year, int month, int day) {
  if (month < 1 || month > 12) throw DataError("invalid month " + std::to_string(month));
  if (day < 1 || day > days_in_month(year, month)) {
    throw DataError("invalid day " + std::to_string(day) + " for month " + std::to_string(month));
  }
  int doy = day;
  for (int m = 1; m < month; ++m) doy += days_in_month(year, m);
  return doy;
}

int window_position(int month, int day) {
  if (month == 7 && day >= kWindowStartDay && day <= 31) return day - kWindowStartDay;
  if (month == 8 && day >= 1 && day <= 23) return 7 + day - 1;
  return -1;
}

std::pair<int, int> window_month_day(int position) {
  if (position < 0 || position >= kWindowDays) throw DataError("window position out of range");
  if (position < 7) return {kWindowStartMonth, kWindowStartDay + position};
  return {8, position - 6};
}

std::string window_date(int position) {
  const auto [month, day] = window_month_day(position);
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%02d-%02d", month, day);
  return buf;
}

std::vector<DailyRecord> load_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError(path.string() + ": file not found");
  const auto table = csv::read(path);
  if (table.header != kInputHeader) {
    throw DataError(path.string() + ":1: header must be year,month,day,male_count,temp_c,rh_pct");
  }
  std::vector<DailyRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = path.string() + ":" + std::to_string(table.line_numbers[i]);
    if (row.size() != kInputHeader.size()) {
      throw DataError(where + ": expected 6 fields, got " + std::to_string(row.size()));
    }
    DailyRecord r;
    r.year = static_cast<int>(csv::parse_int(row[0], where));
    r.month = static_cast<int>(csv::parse_int(row[1], where));
    r.day = static_cast<int>(csv::parse_int(row[2], where));
    try {
      r.doy = day_of_year(r.year, r.month, r.day);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    r.male_count = csv::parse_int(row[3], where);
    r.temperature = csv::parse_double(row[4], where);
    r.humidity = csv::parse_double(row[5], where);
    if (r.male_count < 0) throw DataError(where + ": negative male_count");
    if (!std::isfinite(r.temperature)) throw DataError(where + ": non-finite temperature");
    if (!(r.humidity >= 0.0 && r.humidity <= 100.0)) throw DataError(where + ": humidity outside [0,100]");
    records.push_back(r);
  }
  return records;
}

std::vector<DailyRecord> window(const std::vector<DailyRecord>& records) {
  std::vector<DailyRecord> out;
  for (const auto& r : records) {
    if (window_position(r.month, r.day) >= 0) out.push_back(r);
  }
  return out;
}

std::set<int> years_of(const std::vector<DailyRecord>& records) {
  std::set<int> years;
  for (const auto& r : records) years.insert(r.year);
  return years;
}

CompositeSeries composite(const std::vector<DailyRecord>& records, const std::set<int>& years) {
  if (years.empty()) throw DataError("composite: no years requested");
  std::map<std::pair<int, int>, const DailyRecord*> by_date;
  for (const auto& r : records) {
    const int pos = window_position(r.month, r.day);
    if (pos < 0 || !years.contains(r.year)) continue;
    if (!by_date.emplace(std::make_pair(r.year, pos), &r).second) {
      throw DataError("composite: duplicate record for " + std::to_string(r.year) + "-" + window_date(pos));
    }
  }
  CompositeSeries series;
  series.n_years = static_cast<int>(years.size());
  const double n = static_cast<double>(years.size());
  for (int pos = 0; pos < kWindowDays; ++pos) {
    double pop = 0.0;
    double temp = 0.0;
    double hum = 0.0;
    for (int year : years) {
      const auto it = by_date.find({year, pos});
      if (it == by_date.end()) {
        throw DataError("composite: missing record for " + std::to_string(year) + "-" + window_date(pos));
      }
      pop += 2.0 * static_cast<double>(it->second->male_count);
      temp += it->second->temperature;
      hum += it->second->humidity;
    }
    series.day_index.push_back(pos);
    series.population.push_back(pop / n);
    series.temperature.push_back(temp / n);
    series.humidity.push_back(hum / n);
  }
  return series;
}

NormalizedSeries normalize(const CompositeSeries& series, const NormalizationSpec& spec) {
  spec.validate();
  if (series.size() == 0) throw DataError("normalize: zero-length window");
  NormalizedSeries out;
  for (std::size_t i = 0; i < series.size(); ++i) {
    out.t.push_back(spec.to_unit(series.day_index[i]));
    out.population.push_back(series.population[i]);
    out.temp_feature.push_back(spec.temp_feature(series.temperature[i]));
    out.hum_feature.push_back(spec.hum_feature(series.humidity[i]));
  }
  return out;
}

std::vector<int> denormalize_days(const NormalizedSeries& normalized, const NormalizationSpec& spec) {
  std::vector<int> days;
  days.reserve(normalized.t.size());
  for (double t : normalized.t) days.push_back(static_cast<int>(std::lround(spec.to_day(t))));
  return days;
}

void write_composite_csv(const std::filesystem::path& path, const CompositeSeries& series) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < series.size(); ++i) {
    rows.push_back({std::to_string(series.day_index[i]), window_date(series.day_index[i]),
                    csv::format_double(series.population[i]), csv::format_double(series.temperature[i]),
                    csv::format_double(series.humidity[i])});
  }
  csv::write(path, {"day_index", "date", "population", "temp_c", "rh_pct"}, rows);
}

CompositeSeries read_composite_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError(path.string() + ": file not found");
  const auto table = csv::read(path);
  const auto c_day = table.column("day_index");
  const auto c_pop = table.column("population");
  const auto c_temp = table.column("temp_c");
  const auto c_hum = table.column("rh_pct");
  CompositeSeries series;
  series.n_years = 1;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = path.string() + ":" + std::to_string(table.line_numbers[i]);
    if (row.size() != table.header.size()) throw DataError(where + ": wrong field count");
    const int day = static_cast<int>(csv::parse_int(row[c_day], where));
    if (!series.day_index.empty() && day != series.day_index.back() + 1) {
      throw DataError(where + ": day_index must increase by one");
    }
    const double pop = csv::parse_double(row[c_pop], where);
    if (!(pop >= 0.0)) throw DataError(where + ": negative population");
    series.day_index.push_back(day);
    series.population.push_back(pop);
    series.temperature.push_back(csv::parse_double(row[c_temp], where));
    series.humidity.push_back(csv::parse_double(row[c_hum], where));
  }
  return series;
}

void write_records_csv(const std::filesystem::path& path, const std::vector<DailyRecord>& records) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : records) {
    rows.push_back({std::to_string(r.year), std::to_string(r.month), std::to_string(r.day),
                    std::to_string(r.male_count), csv::format_double(r.temperature),
                    csv::format_double(r.humidity)});
  }
  csv::write(path, kInputHeader, rows);
}

}  // namespace pcmnn::ingest
