#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <random>

#include "pcmnn/csv.hpp"
#include "pcmnn/error.hpp"
#include "pcmnn/ingest.hpp"
#include "test_support.hpp"

using namespace pcmnn;
using namespace pcmnn::ingest;

namespace {

// Every window date for a year with counts from `count(year, position)`.
std::vector<DailyRecord> full_year(int year, const std::function<long long(int, int)>& count) {
  std::vector<DailyRecord> out;
  for (int pos = 0; pos < kWindowDays; ++pos) {
    auto [month, day] = window_month_day(pos);
    DailyRecord r;
    r.year = year;
    r.month = month;
    r.day = day;
    r.doy = day_of_year(year, month, day);
    r.male_count = count(year, pos);
    r.temperature = 20.0 + 0.1 * pos + (year - 2020);
    r.humidity = 80.0 + 0.2 * pos;
    out.push_back(r);
  }
  return out;
}

std::string records_csv(const std::vector<DailyRecord>& records) {
  std::string text = "year,month,day,male_count,temp_c,rh_pct\n";
  for (const auto& r : records) {
    text += std::to_string(r.year) + "," + std::to_string(r.month) + "," + std::to_string(r.day) + "," +
            std::to_string(r.male_count) + "," + csv::format_double(r.temperature) + "," +
            csv::format_double(r.humidity) + "\n";
  }
  return text;
}

}  // namespace

TEST_CASE("calendar helpers") {
  CHECK(is_leap_year(2020));
  CHECK_FALSE(is_leap_year(2021));
  CHECK(is_leap_year(2000));
  CHECK_FALSE(is_leap_year(1900));
  CHECK(day_of_year(2021, 1, 1) == 1);
  CHECK(day_of_year(2021, 7, 25) == 206);
  CHECK(day_of_year(2020, 7, 25) == 207);
  CHECK_THROWS_AS(day_of_year(2021, 2, 29), DataError);
  CHECK_THROWS_AS(day_of_year(2021, 13, 1), DataError);
}

TEST_CASE("window positions span July 25 to August 23") {
  CHECK(window_position(7, 25) == 0);
  CHECK(window_position(7, 31) == 6);
  CHECK(window_position(8, 1) == 7);
  CHECK(window_position(8, 23) == 29);
  CHECK(window_position(7, 24) == -1);
  CHECK(window_position(8, 24) == -1);
  CHECK(window_date(0) == "07-25");
  CHECK(window_date(29) == "08-23");
  for (int pos = 0; pos < kWindowDays; ++pos) {
    auto [m, d] = window_month_day(pos);
    CHECK(window_position(m, d) == pos);
  }
  CHECK_THROWS_AS(window_date(30), DataError);
}

TEST_CASE("four-year composite of 10, 20, 30, 40 males is 50 individuals") {
  std::vector<DailyRecord> records;
  const long long counts[] = {10, 20, 30, 40};
  for (int i = 0; i < 4; ++i) {
    auto year = full_year(2020 + i, [&](int, int) { return counts[i]; });
    records.insert(records.end(), year.begin(), year.end());
  }
  auto series = composite(records, years_of(records));
  REQUIRE(series.size() == kWindowDays);
  CHECK(series.n_years == 4);
  for (double p : series.population) CHECK(p == 50.0);
}

TEST_CASE("composite equals brute-force per-date means") {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<long long> dist(0, 500);
  std::map<std::pair<int, int>, long long> table;
  std::vector<DailyRecord> records;
  for (int year : {2019, 2020, 2021}) {
    auto rows = full_year(year, [&](int y, int pos) {
      long long c = dist(gen);
      table[{y, pos}] = c;
      return c;
    });
    records.insert(records.end(), rows.begin(), rows.end());
  }
  std::shuffle(records.begin(), records.end(), gen);

  auto series = composite(records, {2019, 2020, 2021});
  for (int pos = 0; pos < kWindowDays; ++pos) {
    double total = 0.0;
    for (int year : {2019, 2020, 2021}) total += 2.0 * static_cast<double>(table[{year, pos}]);
    CHECK(series.population[pos] == total / 3.0);
    CHECK(series.day_index[pos] == pos);
  }
  auto only = composite(records, {2020});
  for (int pos = 0; pos < kWindowDays; ++pos) CHECK(only.population[pos] == 2.0 * table[{2020, pos}]);
}

TEST_CASE("window drops out-of-season rows and is idempotent") {
  auto records = full_year(2021, [](int, int pos) { return pos; });
  DailyRecord early{2021, 7, 1, day_of_year(2021, 7, 1), 5, 20.0, 80.0};
  DailyRecord late{2021, 9, 1, day_of_year(2021, 9, 1), 5, 20.0, 80.0};
  records.push_back(early);
  records.insert(records.begin(), late);
  auto once = window(records);
  CHECK(once.size() == kWindowDays);
  auto twice = window(once);
  REQUIRE(twice.size() == once.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(twice[i].year == once[i].year);
    CHECK(twice[i].month == once[i].month);
    CHECK(twice[i].day == once[i].day);
  }
}

TEST_CASE("missing and duplicate dates are data errors naming the gap") {
  auto records = full_year(2021, [](int, int) { return 3; });
  auto missing = records;
  missing.erase(missing.begin() + 5);
  try {
    composite(missing, {2021});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("2021-07-30") != std::string::npos);
  }
  auto duplicated = records;
  duplicated.push_back(records[3]);
  CHECK_THROWS_AS(composite(duplicated, {2021}), DataError);
  CHECK_THROWS_AS(composite(records, {2022}), DataError);
  CHECK_THROWS_AS(composite(records, {}), DataError);
}

TEST_CASE("load_csv parses and validates rows") {
  auto dir = test::scratch_dir("ingest_load");
  auto records = full_year(2021, [](int, int pos) { return 2 * pos; });
  test::write_text(dir / "ok.csv", records_csv(records));
  auto loaded = load_csv(dir / "ok.csv");
  REQUIRE(loaded.size() == records.size());
  CHECK(loaded[10].male_count == 20);
  CHECK(loaded[10].doy == records[10].doy);
  CHECK(loaded[10].temperature == doctest::Approx(records[10].temperature));

  test::write_text(dir / "bad_header.csv", "year,month,day,count\n2021,7,25,1\n");
  CHECK_THROWS_AS(load_csv(dir / "bad_header.csv"), DataError);

  test::write_text(dir / "bad_value.csv", "year,month,day,male_count,temp_c,rh_pct\n2021,7,25,abc,20,80\n");
  try {
    load_csv(dir / "bad_value.csv");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("bad_value.csv:2") != std::string::npos);
  }
  test::write_text(dir / "negative.csv", "year,month,day,male_count,temp_c,rh_pct\n2021,7,25,-1,20,80\n");
  CHECK_THROWS_AS(load_csv(dir / "negative.csv"), DataError);
  test::write_text(dir / "humid.csv", "year,month,day,male_count,temp_c,rh_pct\n2021,7,25,1,20,120\n");
  CHECK_THROWS_AS(load_csv(dir / "humid.csv"), DataError);
  CHECK_THROWS_AS(load_csv(dir / "absent.csv"), DataError);
}

TEST_CASE("composite CSV round trip is exact") {
  auto dir = test::scratch_dir("ingest_roundtrip");
  CompositeSeries s;
  for (int i = 0; i < kWindowDays; ++i) {
    s.day_index.push_back(i);
    s.population.push_back(1.0 / 3.0 + i * 7.1);
    s.temperature.push_back(21.0 + 0.123456789 * i);
    s.humidity.push_back(84.0 - 0.1 * i);
  }
  write_composite_csv(dir / "c.csv", s);
  auto back = read_composite_csv(dir / "c.csv");
  CHECK(back.day_index == s.day_index);
  CHECK(back.population == s.population);
  CHECK(back.temperature == s.temperature);
  CHECK(back.humidity == s.humidity);
  CHECK(back.head(5).size() == 5);
  CHECK_THROWS_AS(back.head(31), DataError);
}

TEST_CASE("normalization maps the window onto the unit interval") {
  NormalizationSpec spec;
  CHECK(spec.to_unit(0.0) == 0.0);
  CHECK(spec.to_unit(29.0) == 1.0);
  CHECK(spec.to_day(spec.to_unit(13.0)) == doctest::Approx(13.0));
  CHECK(spec.temp_feature(21.0) == 0.0);
  CHECK(spec.hum_feature(84.0) == 0.0);
  CHECK(spec.temp_feature(31.0) == doctest::Approx(1.0));
  CHECK(spec.hum_feature(74.0) == doctest::Approx(0.1));

  CompositeSeries s;
  for (int i = 0; i < 5; ++i) {
    s.day_index.push_back(i);
    s.population.push_back(i + 1.0);
    s.temperature.push_back(21.0);
    s.humidity.push_back(84.0);
  }
  auto n = normalize(s, spec);
  auto days = denormalize_days(n, spec);
  CHECK(days == s.day_index);
  CHECK_THROWS_AS(normalize(CompositeSeries{}, spec), DataError);
  NormalizationSpec zero = spec;
  zero.t_span = 0.0;
  CHECK_THROWS(zero.validate());
}

TEST_CASE("csv primitives") {
  CHECK(csv::parse_double(" 2.5 ", "x") == 2.5);
  CHECK_THROWS_AS(csv::parse_double("2.5x", "x"), DataError);
  CHECK(csv::parse_int("42", "x") == 42);
  CHECK_THROWS_AS(csv::parse_int("4.2", "x"), DataError);
  const double v = 0.1 + 0.2;
  CHECK(csv::parse_double(csv::format_double(v), "x") == v);
  CHECK(csv::parse_hex(csv::format_hex(v), "x") == v);
  auto dir = test::scratch_dir("csv_digest");
  test::write_text(dir / "a.txt", "hello");
  test::write_text(dir / "b.txt", "hellp");
  CHECK(csv::file_digest(dir / "a.txt").size() == 16);
  CHECK(csv::file_digest(dir / "a.txt") != csv::file_digest(dir / "b.txt"));
  // FNV-1a 64 of "hello".
  CHECK(csv::file_digest(dir / "a.txt") == "a430d84680aabd0b");
}
