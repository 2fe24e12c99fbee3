#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "iblab/matrix.hpp"

namespace iblab {

// Tiny SVG emitter for 2-D scatter/polyline plots. Data coordinates are
// mapped into a square canvas; y axis flipped so plots read math-style.
class SvgPlot {
  public:
    SvgPlot(double xmin, double xmax, double ymin, double ymax, int size_px = 640);

    void polyline(const std::vector<Vec>& pts, const std::string& color,
                  double width = 1.5, const std::string& dash = "");
    void circle(double x, double y, double r_px, const std::string& color,
                double opacity = 1.0);
    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double width = 1.0, const std::string& dash = "");
    void text(double x, double y, const std::string& s, int font_px = 12);

    void write(const std::string& path) const;

  private:
    double px(double x) const;
    double py(double y) const;

    double xmin_, xmax_, ymin_, ymax_;
    int size_;
    std::string body_;
};

}  // namespace iblab
