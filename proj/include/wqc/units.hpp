#pragma once

// Every unit conversion in the library goes through these constants. Input
// files carry flows in GPM and tank volumes in ft^3; everything is stored in
// SI (m^3/s, m^3, s) after ingestion. Reaction constants stay per hour.

namespace wqc::units {

inline constexpr double cubic_meters_per_us_gallon = 3.785411784e-3;
inline constexpr double liters_per_us_gallon = 3.785411784;
inline constexpr double cubic_meters_per_cubic_foot = 0.028316846592;
inline constexpr double seconds_per_minute = 60.0;
inline constexpr double seconds_per_hour = 3600.0;
inline constexpr double liters_per_cubic_meter = 1000.0;

constexpr double gpm_to_cms(double gpm) {
  return gpm * cubic_meters_per_us_gallon / seconds_per_minute;
}
constexpr double cms_to_gpm(double cms) {
  return cms * seconds_per_minute / cubic_meters_per_us_gallon;
}
constexpr double cms_to_liters_per_minute(double cms) {
  return cms * liters_per_cubic_meter * seconds_per_minute;
}
constexpr double cubic_feet_to_cubic_meters(double ft3) {
  return ft3 * cubic_meters_per_cubic_foot;
}
constexpr double seconds_to_hours(double s) { return s / seconds_per_hour; }

}  // namespace wqc::units
