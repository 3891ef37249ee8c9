#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fftrack::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct Panel {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Series> series;
  /// Same scale on both axes (for planar paths).
  bool equal_aspect = false;
};

/// Static line plot: panels stacked vertically, each with its own axes,
/// ticks and legend. Non-finite points are skipped.
void write(std::ostream& os, const std::string& title, const std::vector<Panel>& panels);

}  // namespace fftrack::svg
