#include "sidkit/timeutil.hpp"

#include <array>
#include <cstdio>
#include <cstring>

namespace sidkit::timeutil {

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
// civil-days algorithm).
int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t yy = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

constexpr std::array<const char*, 12> kMonths = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                 "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

int days_in_month(int year, int month) {
  static constexpr std::array<int, 12> lengths = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2) {
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    return leap ? 29 : 28;
  }
  return lengths[month - 1];
}

bool valid_civil(const Civil& c) {
  if (c.month < 1 || c.month > 12) return false;
  if (c.day < 1 || c.day > days_in_month(c.year, c.month)) return false;
  if (c.hour < 0 || c.hour > 23 || c.minute < 0 || c.minute > 59) return false;
  if (c.second < 0 || c.second > 60) return false;
  return true;
}

}  // namespace

int64_t to_epoch_seconds(const Civil& c) {
  return days_from_civil(c.year, c.month, c.day) * 86400 + c.hour * 3600 + c.minute * 60 +
         c.second;
}

Civil from_epoch_seconds(int64_t t) {
  int64_t days = t / 86400;
  int64_t rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  Civil c;
  civil_from_days(days, c.year, c.month, c.day);
  c.hour = static_cast<int>(rem / 3600);
  c.minute = static_cast<int>((rem % 3600) / 60);
  c.second = static_cast<int>(rem % 60);
  return c;
}

std::optional<Civil> parse_iso(const std::string& s) {
  Civil c;
  int n = std::sscanf(s.c_str(), "%d-%d-%d %d:%d:%d", &c.year, &c.month, &c.day, &c.hour,
                      &c.minute, &c.second);
  if (n == 5) c.second = 0;
  if (n < 5 || !valid_civil(c)) return std::nullopt;
  return c;
}

std::optional<Civil> parse_weekday_month(const std::string& s) {
  char wday[8] = {0}, mon[8] = {0}, zone[16] = {0};
  Civil c;
  int n = std::sscanf(s.c_str(), "%3s %3s %d %d:%d:%d %15s %d", wday, mon, &c.day, &c.hour,
                      &c.minute, &c.second, zone, &c.year);
  if (n != 8) return std::nullopt;
  c.month = 0;
  for (size_t i = 0; i < kMonths.size(); ++i) {
    if (std::strcmp(mon, kMonths[i]) == 0) {
      c.month = static_cast<int>(i) + 1;
      break;
    }
  }
  if (c.month == 0 || !valid_civil(c)) return std::nullopt;
  return c;
}

std::string format_minute(int64_t t) {
  const Civil c = from_epoch_seconds(t);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d", c.year, c.month, c.day, c.hour,
                c.minute);
  return buf;
}

std::string format_second(int64_t t) {
  const Civil c = from_epoch_seconds(t);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d", c.year, c.month, c.day, c.hour,
                c.minute, c.second);
  return buf;
}

int hour_of_day(int64_t t) { return from_epoch_seconds(t).hour; }

}  // namespace sidkit::timeutil
