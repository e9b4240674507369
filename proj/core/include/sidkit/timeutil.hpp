#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace sidkit::timeutil {

struct Civil {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  int hour = 0;
  int minute = 0;
  int second = 0;
};

// Proleptic-Gregorian conversions; no timezone handling anywhere. Timestamps
// are taken as written in the source files.
int64_t to_epoch_seconds(const Civil& c);
Civil from_epoch_seconds(int64_t t);

// "YYYY-MM-DD HH:MM:SS" (seconds optional).
std::optional<Civil> parse_iso(const std::string& s);
// "EEE MMM dd HH:mm:ss Z yyyy", e.g. "Tue Apr 03 18:00:09 +0000 2012".
// The offset field is read but not applied.
std::optional<Civil> parse_weekday_month(const std::string& s);

std::string format_minute(int64_t epoch_seconds);  // "YYYY-MM-DD HH:MM"
std::string format_second(int64_t epoch_seconds);  // "YYYY-MM-DD HH:MM:SS"

int hour_of_day(int64_t epoch_seconds);

}  // namespace sidkit::timeutil
