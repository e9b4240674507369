#include "sidkit/geocode.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace sidkit::geo {

const char kAlphabet[21] = "23456789CFGHJMPQRVWX";

namespace {

// One unit = 1/8000 degree, the edge of the finest (10-digit) cell.
constexpr int64_t kUnitsPerDegree = 8000;
constexpr int64_t kLatSpan = 180 * kUnitsPerDegree;   // 1,440,000
constexpr int64_t kLonSpan = 360 * kUnitsPerDegree;   // 2,880,000
// Cell edge in units for digit pairs 1..5.
constexpr int64_t kPairSize[5] = {160000, 8000, 400, 20, 1};

int digit_value(char c) {
  const char* p = std::strchr(kAlphabet, c);
  if (p == nullptr || c == '\0') return -1;
  return static_cast<int>(p - kAlphabet);
}

int64_t pair_size_for_precision(int precision) { return kPairSize[precision / 2 - 1]; }

void check_precision(int precision) {
  if (precision != 2 && precision != 4 && precision != 6 && precision != 8 && precision != 10) {
    throw std::invalid_argument("plus code precision must be 2, 4, 6, 8, or 10, got " +
                                std::to_string(precision));
  }
}

}  // namespace

std::string encode(double lat, double lon, int precision) {
  check_precision(precision);
  if (std::isnan(lat) || std::isnan(lon)) {
    throw std::invalid_argument("plus code encode: coordinate is NaN");
  }
  if (lat < -90.0) lat = -90.0;
  if (lat > 90.0) lat = 90.0;
  // Wrap longitude into [-180, 180).
  while (lon < -180.0) lon += 360.0;
  while (lon >= 180.0) lon -= 360.0;

  const int64_t cell = pair_size_for_precision(precision);
  int64_t lat_units = static_cast<int64_t>(std::floor((lat + 90.0) * kUnitsPerDegree));
  int64_t lon_units = static_cast<int64_t>(std::floor((lon + 180.0) * kUnitsPerDegree));
  if (lat_units < 0) lat_units = 0;
  // The north pole belongs to the topmost cell rather than a nonexistent one
  // past it.
  if (lat_units > kLatSpan - cell) lat_units = kLatSpan - cell;
  if (lon_units < 0) lon_units = 0;
  if (lon_units >= kLonSpan) lon_units = kLonSpan - 1;

  std::string code;
  const int pairs = precision / 2;
  for (int p = 0; p < pairs; ++p) {
    const int64_t size = kPairSize[p];
    code.push_back(kAlphabet[(lat_units / size) % 20]);
    code.push_back(kAlphabet[(lon_units / size) % 20]);
    if (code.size() == 8) code.push_back('+');
  }
  while (code.size() < 8) code.push_back('0');
  if (code.size() == 8) code.push_back('+');
  return code;
}

CellBounds decode_cell(const std::string& code) {
  const auto fail = [&code](const std::string& why) {
    throw std::invalid_argument("invalid plus code '" + code + "': " + why);
  };
  const size_t plus = code.find('+');
  if (plus == std::string::npos) fail("missing '+' separator");
  if (plus != 8) fail("'+' must follow the eighth position");
  if (code.size() != 9 && code.size() != 11) fail("length must be 9 or 11");

  std::string digits;
  bool padding = false;
  for (size_t i = 0; i < code.size(); ++i) {
    if (i == 8) continue;  // separator
    const char c = code[i];
    if (c == '0') {
      if (i >= 8) fail("padding after separator");
      padding = true;
      continue;
    }
    if (padding) fail("digit after padding");
    if (digit_value(c) < 0) fail(std::string("bad character '") + c + "'");
    digits.push_back(c);
  }
  const int precision = static_cast<int>(digits.size());
  if (precision != 2 && precision != 4 && precision != 6 && precision != 8 && precision != 10) {
    fail("significant digits must number 2, 4, 6, 8, or 10");
  }
  if (padding && code.size() == 11) fail("padded code cannot carry trailing digits");

  int64_t lat_units = 0;
  int64_t lon_units = 0;
  for (int p = 0; p < precision / 2; ++p) {
    const int64_t size = kPairSize[p];
    lat_units += digit_value(digits[2 * p]) * size;
    lon_units += digit_value(digits[2 * p + 1]) * size;
  }
  const int64_t cell = pair_size_for_precision(precision);
  if (lat_units + cell > kLatSpan) fail("latitude digits out of range");
  if (lon_units >= kLonSpan) fail("longitude digits out of range");

  CellBounds b;
  b.lat_lo = static_cast<double>(lat_units) / kUnitsPerDegree - 90.0;
  b.lon_lo = static_cast<double>(lon_units) / kUnitsPerDegree - 180.0;
  b.lat_hi = static_cast<double>(lat_units + cell) / kUnitsPerDegree - 90.0;
  b.lon_hi = static_cast<double>(lon_units + cell) / kUnitsPerDegree - 180.0;
  return b;
}

int code_precision(const std::string& code) {
  int n = 0;
  for (char c : code) {
    if (c == '+' || c == '0') continue;
    ++n;
  }
  return n;
}

int RegionVocab::add(const std::string& code) {
  auto [it, inserted] = ids_.try_emplace(code, static_cast<int>(codes_.size()));
  if (inserted) codes_.push_back(code);
  return it->second;
}

int RegionVocab::lookup(const std::string& code) const {
  auto it = ids_.find(code);
  return it == ids_.end() ? -1 : it->second;
}

const std::string& RegionVocab::code_of(int id) const {
  if (id < 0 || id >= static_cast<int>(codes_.size())) {
    throw std::out_of_range("RegionVocab: id " + std::to_string(id) + " out of range");
  }
  return codes_[static_cast<size_t>(id)];
}

void RegionVocab::finalize() {
  // ids_ is ordered, so renumber by walking it.
  codes_.clear();
  for (auto& [code, id] : ids_) {
    id = static_cast<int>(codes_.size());
    codes_.push_back(code);
  }
}

}  // namespace sidkit::geo
