#pragma once

#include <filesystem>
#include <vector>

namespace retort {

/// Piecewise-linear series in SI time (s). Held constant outside the sampled
/// range.
struct TimeSeries {
  std::vector<double> time;
  std::vector<double> value;

  bool empty() const { return time.empty(); }
  double at(double t) const;
  /// Exact integral of the interpolant over [t0, t1].
  double integral(double t0, double t1) const;
  bool operator==(const TimeSeries&) const = default;
};

/// Reads column `column` (0-based, column 0 is time) of a whitespace or comma
/// separated text file. Lines starting with '#' and a non-numeric header line are
/// skipped. `time_scale` converts the file's time unit to seconds. Throws
/// IoError if the file cannot be read and DeckError on malformed content.
TimeSeries load_series(const std::filesystem::path& path, std::size_t column,
                       double time_scale);

/// Throws DeckError unless times are strictly increasing and values finite.
void validate_series(const TimeSeries& series);

}  // namespace retort
