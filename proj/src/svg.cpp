#include "iblab/svg.hpp"

#include <cstdio>
#include <stdexcept>

namespace iblab {

namespace {
std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}
}  // namespace

SvgPlot::SvgPlot(double xmin, double xmax, double ymin, double ymax, int size_px)
    : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax), size_(size_px) {}

double SvgPlot::px(double x) const {
    return (x - xmin_) / (xmax_ - xmin_) * size_;
}

double SvgPlot::py(double y) const {
    return (ymax_ - y) / (ymax_ - ymin_) * size_;
}

void SvgPlot::polyline(const std::vector<Vec>& pts, const std::string& color,
                       double width, const std::string& dash) {
    if (pts.size() < 2) return;
    body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
             num(width) + "\"";
    if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
    body_ += " points=\"";
    for (const auto& p : pts) body_ += num(px(p[0])) + "," + num(py(p[1])) + " ";
    body_ += "\"/>\n";
}

void SvgPlot::circle(double x, double y, double r_px, const std::string& color,
                     double opacity) {
    body_ += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"" +
             num(r_px) + "\" fill=\"" + color + "\" fill-opacity=\"" + num(opacity) +
             "\"/>\n";
}

void SvgPlot::line(double x1, double y1, double x2, double y2, const std::string& color,
                   double width, const std::string& dash) {
    body_ += "<line x1=\"" + num(px(x1)) + "\" y1=\"" + num(py(y1)) + "\" x2=\"" +
             num(px(x2)) + "\" y2=\"" + num(py(y2)) + "\" stroke=\"" + color +
             "\" stroke-width=\"" + num(width) + "\"";
    if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
    body_ += "/>\n";
}

void SvgPlot::text(double x, double y, const std::string& s, int font_px) {
    body_ += "<text x=\"" + num(px(x)) + "\" y=\"" + num(py(y)) + "\" font-size=\"" +
             std::to_string(font_px) + "\" font-family=\"sans-serif\">" + s +
             "</text>\n";
}

void SvgPlot::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size_
        << "\" height=\"" << size_ << "\" viewBox=\"0 0 " << size_ << " " << size_
        << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << body_;
    out << "</svg>\n";
}

}  // namespace iblab
