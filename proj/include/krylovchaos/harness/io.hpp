#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "../core.hpp"
#include "config.hpp"
#include "sweep.hpp"

namespace krylovchaos::harness {

/// Per-family columns of the sweep CSV, in order.
inline const std::vector<std::string>& family_column_suffixes() {
  static const std::vector<std::string> s = {"_cbar_norm", "_inv_sigma_a", "_inv_sigma_b",
                                             "_inv_sigma_a_norm", "_inv_sigma_b_norm"};
  return s;
}

/// 12 significant digits, '.' decimal separator, no grouping.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string csv_header(const std::vector<std::string>& families) {
  std::string h = "param,eta";
  for (const auto& f : families)
    for (const auto& s : family_column_suffixes()) h += "," + f + s;
  return h;
}

inline std::string to_csv(const SweepResult& res) {
  std::string out = csv_header(res.family_names) + "\n";
  for (const auto& r : res.records) {
    out += format_number(r.param) + "," + format_number(r.eta);
    for (const auto& f : r.families)
      for (double v : {f.c_bar_norm, f.inv_sigma_a, f.inv_sigma_b, f.inv_sigma_a_norm, f.inv_sigma_b_norm})
        out += "," + format_number(v);
    out += "\n";
  }
  return out;
}

/// Raw dispersions (sigma about the moving average, and the log-ratio
/// measure) plus the smallest Krylov dimension seen per family.
inline std::string to_dispersion_csv(const SweepResult& res) {
  std::string out = "param,eta";
  for (const auto& f : res.family_names)
    out += "," + f + "_sigma_a," + f + "_sigma_b," + f + "_sigma_log_b," + f + "_min_krylov_dim";
  out += "\n";
  for (const auto& r : res.records) {
    out += format_number(r.param) + "," + format_number(r.eta);
    for (const auto& f : r.families)
      out += "," + format_number(f.sigma_a) + "," + format_number(f.sigma_b) + "," +
             format_number(f.sigma_log_b) + "," + std::to_string(f.min_krylov_dim);
    out += "\n";
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw ArgumentError("failed writing '" + path + "'");
}

inline void write_csv(const SweepResult& res, const std::string& path) { write_text(path, to_csv(res)); }

namespace detail {

inline double parse_cell(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return parse_double("csv", s);
}

}  // namespace detail

inline SweepResult parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ArgumentError("CSV is empty");
  const auto header = detail::split(line, ',');
  const auto& suffixes = family_column_suffixes();
  if (header.size() < 2 || header[0] != "param" || header[1] != "eta" || (header.size() - 2) % suffixes.size())
    throw ArgumentError("CSV header does not match the sweep layout");
  SweepResult res;
  for (std::size_t c = 2; c < header.size(); c += suffixes.size()) {
    const auto& col = header[c];
    const auto& suf = suffixes.front();
    if (col.size() <= suf.size() || col.compare(col.size() - suf.size(), suf.size(), suf) != 0)
      throw ArgumentError("unexpected CSV column '" + col + "'");
    const auto name = col.substr(0, col.size() - suf.size());
    for (std::size_t s = 1; s < suffixes.size(); ++s)
      if (header[c + s] != name + suffixes[s]) throw ArgumentError("unexpected CSV column '" + header[c + s] + "'");
    res.family_names.push_back(name);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != header.size()) throw ArgumentError("CSV row has the wrong number of cells");
    SweepRecord r;
    r.param = detail::parse_cell(cells[0]);
    r.eta = detail::parse_cell(cells[1]);
    for (std::size_t f = 0; f < res.family_names.size(); ++f) {
      const std::size_t c = 2 + f * suffixes.size();
      FamilyValues v;
      v.c_bar_norm = detail::parse_cell(cells[c]);
      v.inv_sigma_a = detail::parse_cell(cells[c + 1]);
      v.inv_sigma_b = detail::parse_cell(cells[c + 2]);
      v.inv_sigma_a_norm = detail::parse_cell(cells[c + 3]);
      v.inv_sigma_b_norm = detail::parse_cell(cells[c + 4]);
      r.families.push_back(v);
    }
    res.records.push_back(std::move(r));
  }
  return res;
}

inline SweepResult read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

/// Values of a named CSV column ("eta", "param" or "<family><suffix>").
inline std::vector<double> column(const SweepResult& res, const std::string& name) {
  std::vector<double> out;
  if (name == "param" || name == "eta") {
    for (const auto& r : res.records) out.push_back(name == "param" ? r.param : r.eta);
    return out;
  }
  for (std::size_t f = 0; f < res.family_names.size(); ++f) {
    const auto& fam = res.family_names[f];
    if (name.rfind(fam, 0) != 0) continue;
    const auto suffix = name.substr(fam.size());
    const auto& sufs = family_column_suffixes();
    const auto it = std::find(sufs.begin(), sufs.end(), suffix);
    if (it == sufs.end()) continue;
    const auto idx = it - sufs.begin();
    for (const auto& r : res.records) {
      const auto& v = r.families[f];
      const double vals[] = {v.c_bar_norm, v.inv_sigma_a, v.inv_sigma_b, v.inv_sigma_a_norm, v.inv_sigma_b_norm};
      out.push_back(vals[idx]);
    }
    return out;
  }
  throw ArgumentError("unknown column '" + name + "'");
}

/// Multi-series line chart of the selected columns against param. The x axis
/// is logarithmic when every param is positive and they span a decade.
inline std::string svg_chart(const SweepResult& res, const std::vector<std::string>& columns,
                             const std::string& x_label = "param") {
  constexpr double W = 720, H = 440, L = 70, R = 190, T = 30, B = 60;
  const auto xs = column(res, "param");
  std::vector<std::vector<double>> ys;
  for (const auto& c : columns) ys.push_back(column(res, c));

  const bool log_x = !xs.empty() && *std::min_element(xs.begin(), xs.end()) > 0 &&
                     *std::max_element(xs.begin(), xs.end()) / *std::min_element(xs.begin(), xs.end()) >= 10;
  const auto xt = [&](double x) { return log_x ? std::log10(x) : x; };
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!xs.empty()) {
    x0 = xt(*std::min_element(xs.begin(), xs.end()));
    x1 = xt(*std::max_element(xs.begin(), xs.end()));
  }
  bool first = true;
  for (const auto& s : ys)
    for (double v : s) {
      if (!std::isfinite(v)) continue;
      y0 = first ? v : std::min(y0, v);
      y1 = first ? v : std::max(y1, v);
      first = false;
    }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const auto px = [&](double x) { return L + (xt(x) - x0) / (x1 - x0) * (W - L - R); };
  const auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  static const char* palette[] = {"#000000", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22"};
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = y0 + (y1 - y0) * i / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" font-size=\"11\" text-anchor=\"end\">"
       << format_number(std::round(yv * 1000) / 1000) << "</text>\n";
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double xdata = log_x ? std::pow(10.0, xv) : xv;
    os << "<text x=\"" << px(xdata) << "\" y=\"" << H - B + 16
       << "\" font-size=\"11\" text-anchor=\"middle\">" << format_number(std::round(xdata * 1000) / 1000)
       << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18 << "\" font-size=\"13\" text-anchor=\"middle\">"
     << x_label << (log_x ? " (log)" : "") << "</text>\n";
  for (std::size_t s = 0; s < ys.size(); ++s) {
    const char* color = palette[s % std::size(palette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (std::isfinite(ys[s][i])) os << px(xs[i]) << ',' << py(ys[s][i]) << ' ';
    os << "\"/>\n";
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (std::isfinite(ys[s][i]))
        os << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(ys[s][i]) << "\" r=\"2.5\" fill=\"" << color
           << "\"/>\n";
    const double ly = T + 14 + 18.0 * static_cast<double>(s);
    os << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 32 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << W - R + 38 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << columns[s] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline void render_svg(const SweepResult& res, const std::vector<std::string>& columns, const std::string& path,
                       const std::string& x_label = "param") {
  write_text(path, svg_chart(res, columns, x_label));
}

}  // namespace krylovchaos::harness
