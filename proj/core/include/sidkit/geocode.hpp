#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sidkit::geo {

// Digit alphabet for plus codes. Excludes vowels and easily-confused glyphs.
extern const char kAlphabet[21];

// Lat/lon bounding box of a decoded cell, degrees.
struct CellBounds {
  double lat_lo = 0.0;
  double lon_lo = 0.0;
  double lat_hi = 0.0;
  double lon_hi = 0.0;

  double center_lat() const { return (lat_lo + lat_hi) / 2.0; }
  double center_lon() const { return (lon_lo + lon_hi) / 2.0; }
};

// Encodes a coordinate as a plus code with `precision` significant digits.
// Supported precisions: 2, 4, 6, 8, 10. Codes shorter than 8 digits are
// zero-padded to 8; the '+' separator always follows the 8th position.
// Latitude is clamped to [-90, 90] (90 falls in the topmost cell), longitude
// is wrapped into [-180, 180).
std::string encode(double lat, double lon, int precision);

// Decodes a full plus code back to its cell bounds. Throws
// std::invalid_argument on malformed input (bad characters, bad length,
// digits after padding, missing separator).
CellBounds decode_cell(const std::string& code);

// Number of significant digits in a code (padding zeros excluded).
int code_precision(const std::string& code);

// Assigns each distinct cell code a dense integer id, ordered lexically.
class RegionVocab {
 public:
  // Returns the id for `code`, inserting it if new.
  int add(const std::string& code);
  // Returns the id or -1 if absent.
  int lookup(const std::string& code) const;
  const std::string& code_of(int id) const;
  int size() const { return static_cast<int>(codes_.size()); }

  // Rebuilds ids so codes are numbered in lexical order.
  void finalize();

  const std::vector<std::string>& codes() const { return codes_; }

 private:
  std::map<std::string, int> ids_;
  std::vector<std::string> codes_;
};

}  // namespace sidkit::geo
