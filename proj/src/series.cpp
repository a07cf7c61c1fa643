#include "retort/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "retort/error.hpp"

namespace retort {

namespace {

// Integral of the linear segment through (t0,v0)-(t1,v1) over [a,b] within it.
double segment_integral(double t0, double v0, double t1, double v1, double a, double b) {
  const double slope = (v1 - v0) / (t1 - t0);
  const double va = v0 + slope * (a - t0);
  const double vb = v0 + slope * (b - t0);
  return 0.5 * (va + vb) * (b - a);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ',' ||
                               line[i] == '\r'))
      ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != ',' &&
           line[j] != '\r')
      ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool to_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

double TimeSeries::at(double t) const {
  if (time.empty()) return 0.0;
  if (t <= time.front()) return value.front();
  if (t >= time.back()) return value.back();
  const auto it = std::upper_bound(time.begin(), time.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - time.begin());
  const double w = (t - time[i - 1]) / (time[i] - time[i - 1]);
  return value[i - 1] + w * (value[i] - value[i - 1]);
}

double TimeSeries::integral(double t0, double t1) const {
  if (time.empty() || t1 <= t0) return 0.0;
  double sum = 0.0;
  // Leading constant extrapolation.
  if (t0 < time.front()) {
    sum += value.front() * (std::min(t1, time.front()) - t0);
  }
  for (std::size_t i = 0; i + 1 < time.size(); ++i) {
    const double a = std::max(t0, time[i]);
    const double b = std::min(t1, time[i + 1]);
    if (b > a) sum += segment_integral(time[i], value[i], time[i + 1], value[i + 1], a, b);
  }
  if (t1 > time.back()) {
    sum += value.back() * (t1 - std::max(t0, time.back()));
  }
  return sum;
}

void validate_series(const TimeSeries& series) {
  if (series.time.size() != series.value.size())
    throw DeckError("time series has mismatched column lengths");
  if (series.time.empty()) throw DeckError("time series is empty");
  for (std::size_t i = 0; i < series.time.size(); ++i) {
    if (!std::isfinite(series.time[i]) || !std::isfinite(series.value[i]))
      throw DeckError(fmt::format("time series sample {} is not finite", i));
    if (i > 0 && !(series.time[i] > series.time[i - 1]))
      throw DeckError(fmt::format("time series not strictly increasing at sample {}", i));
  }
}

TimeSeries load_series(const std::filesystem::path& path, std::size_t column,
                       double time_scale) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open series file {}", path.string()));
  TimeSeries series;
  std::string line;
  int lineno = 0;
  bool seen_data = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto fields = split_fields(view);
    if (fields.empty()) continue;
    double t = 0.0;
    if (!to_double(fields[0], t)) {
      if (!seen_data) continue;  // header row
      throw DeckError(fmt::format("{}:{}: non-numeric time '{}'", path.string(), lineno,
                                  std::string(fields[0])));
    }
    if (column >= fields.size())
      throw DeckError(fmt::format("{}:{}: missing column {}", path.string(), lineno, column));
    double v = 0.0;
    if (!to_double(fields[column], v))
      throw DeckError(fmt::format("{}:{}: non-numeric value '{}'", path.string(), lineno,
                                  std::string(fields[column])));
    seen_data = true;
    series.time.push_back(t * time_scale);
    series.value.push_back(v);
  }
  try {
    validate_series(series);
  } catch (const DeckError& e) {
    throw DeckError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return series;
}

}  // namespace retort
