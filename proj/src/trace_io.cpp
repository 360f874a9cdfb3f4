#include "microgan/trace_io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <sstream>

namespace microgan {

namespace {

// shortest representation that round-trips a double
std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  for (int prec = 1; prec < 17; ++prec) {
    char probe[64];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    std::sscanf(probe, "%lf", &back);
    if (back == v) return probe;
  }
  return buf;
}

std::string fmt_svg(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string trace_row_csv(const LossTraceRow& row) {
  std::string s = std::to_string(row.iteration);
  s += ",";
  s += fmt_double(row.d_loss);
  s += ",";
  s += fmt_double(row.g_loss);
  s += ",";
  s += fmt_double(row.d_acc_real);
  s += ",";
  s += fmt_double(row.d_acc_fake);
  return s;
}

TraceCsvWriter::TraceCsvWriter(const std::string& path)
    : out_(path, std::ios::trunc), path_(path) {
  if (!out_) fail(ErrorKind::Io, "cannot open " + path + " for writing");
  out_ << kTraceCsvHeader << "\n";
  out_.flush();
  if (!out_) fail(ErrorKind::Io, "write failed on " + path);
}

void TraceCsvWriter::append(const LossTraceRow& row) {
  out_ << trace_row_csv(row) << "\n";
  out_.flush();
  if (!out_) fail(ErrorKind::Io, "write failed on " + path_);
}

void write_trace_csv(const LossTrace& trace, const std::string& path) {
  TraceCsvWriter w(path);
  for (const LossTraceRow& row : trace) w.append(row);
}

LossTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);

  std::string line;
  if (!std::getline(in, line))
    fail(ErrorKind::Config, path + ": empty file, expected header line 1");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceCsvHeader)
    fail(ErrorKind::Config, path + " line 1: header must be \"" +
                                std::string(kTraceCsvHeader) + "\", got \"" +
                                line + "\"");

  LossTrace trace;
  int64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty())
      fail(ErrorKind::Config,
           path + " line " + std::to_string(lineno) + ": blank line");

    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5)
      fail(ErrorKind::Config, path + " line " + std::to_string(lineno) +
                                  ": expected 5 fields, got " +
                                  std::to_string(fields.size()));

    LossTraceRow row;
    try {
      size_t used = 0;
      row.iteration = std::stoll(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument(fields[0]);
      auto num = [&](const std::string& s) {
        size_t n = 0;
        double v = std::stod(s, &n);
        if (n != s.size()) throw std::invalid_argument(s);
        return v;
      };
      row.d_loss = num(fields[1]);
      row.g_loss = num(fields[2]);
      row.d_acc_real = num(fields[3]);
      row.d_acc_fake = num(fields[4]);
    } catch (const std::exception&) {
      fail(ErrorKind::Config, path + " line " + std::to_string(lineno) +
                                  ": malformed number in \"" + line + "\"");
    }
    trace.push_back(row);
  }
  return trace;
}

std::string render_loss_svg(const LossTrace& trace) {
  if (trace.empty())
    fail(ErrorKind::Config, "cannot plot an empty trace");

  double lo = trace[0].d_loss, hi = trace[0].d_loss;
  for (const LossTraceRow& r : trace) {
    lo = std::min({lo, r.d_loss, r.g_loss});
    hi = std::max({hi, r.d_loss, r.g_loss});
  }
  double span = hi - lo;
  double pad = span > 0 ? 0.05 * span : 1.0;
  const double y_lo = lo - pad, y_hi = hi + pad;

  const int64_t x_lo = trace.front().iteration;
  const int64_t x_hi = trace.back().iteration;
  const double x_span = x_hi > x_lo ? static_cast<double>(x_hi - x_lo) : 1.0;

  const double width = 860, height = 480;
  const double ml = 70, mr = 20, mt = 20, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;

  auto px = [&](int64_t it) {
    return ml + pw * static_cast<double>(it - x_lo) / x_span;
  };
  auto py = [&](double v) {
    return mt + ph * (1.0 - (v - y_lo) / (y_hi - y_lo));
  };

  auto polyline = [&](const char* color, double LossTraceRow::*field) {
    std::string pts;
    for (const LossTraceRow& r : trace) {
      pts += fmt_svg(px(r.iteration));
      pts += ",";
      pts += fmt_svg(py(r.*field));
      pts += " ";
    }
    return "  <polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" "
         "height=\"480\" viewBox=\"0 0 860 480\">\n";
  svg += "  <rect x=\"0\" y=\"0\" width=\"860\" height=\"480\" "
         "fill=\"white\"/>\n";
  svg += "  <rect x=\"" + fmt_svg(ml) + "\" y=\"" + fmt_svg(mt) +
         "\" width=\"" + fmt_svg(pw) + "\" height=\"" + fmt_svg(ph) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";
  svg += polyline("#c0392b", &LossTraceRow::d_loss);
  svg += polyline("#2980b9", &LossTraceRow::g_loss);

  // axis bound labels: y shows the padded range, x the iteration range
  svg += "  <text x=\"" + fmt_svg(ml - 8) + "\" y=\"" + fmt_svg(mt + ph) +
         "\" text-anchor=\"end\" font-size=\"12\">" + fmt_svg(y_lo) +
         "</text>\n";
  svg += "  <text x=\"" + fmt_svg(ml - 8) + "\" y=\"" + fmt_svg(mt + 10) +
         "\" text-anchor=\"end\" font-size=\"12\">" + fmt_svg(y_hi) +
         "</text>\n";
  svg += "  <text x=\"" + fmt_svg(ml) + "\" y=\"" + fmt_svg(height - mb + 16) +
         "\" font-size=\"12\">" + std::to_string(x_lo) + "</text>\n";
  svg += "  <text x=\"" + fmt_svg(ml + pw) + "\" y=\"" +
         fmt_svg(height - mb + 16) +
         "\" text-anchor=\"end\" font-size=\"12\">" + std::to_string(x_hi) +
         "</text>\n";
  svg += "  <text x=\"" + fmt_svg(ml + pw / 2) + "\" y=\"" +
         fmt_svg(height - 12) +
         "\" text-anchor=\"middle\" font-size=\"14\">iteration</text>\n";
  svg += "  <text x=\"16\" y=\"" + fmt_svg(mt + ph / 2) +
         "\" font-size=\"14\" transform=\"rotate(-90 16 " +
         fmt_svg(mt + ph / 2) + ")\" text-anchor=\"middle\">loss</text>\n";

  svg += "  <rect x=\"" + fmt_svg(ml + pw - 130) + "\" y=\"" +
         fmt_svg(mt + 8) + "\" width=\"14\" height=\"3\" fill=\"#c0392b\"/>\n";
  svg += "  <text x=\"" + fmt_svg(ml + pw - 110) + "\" y=\"" +
         fmt_svg(mt + 14) + "\" font-size=\"12\">d_loss</text>\n";
  svg += "  <rect x=\"" + fmt_svg(ml + pw - 130) + "\" y=\"" +
         fmt_svg(mt + 26) + "\" width=\"14\" height=\"3\" fill=\"#2980b9\"/>\n";
  svg += "  <text x=\"" + fmt_svg(ml + pw - 110) + "\" y=\"" +
         fmt_svg(mt + 32) + "\" font-size=\"12\">g_loss</text>\n";
  svg += "</svg>\n";
  return svg;
}

void write_loss_svg(const LossTrace& trace, const std::string& path) {
  const std::string svg = render_loss_svg(trace);
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path + " for writing");
  out << svg;
  out.flush();
  if (!out) fail(ErrorKind::Io, "write failed on " + path);
}

}  // namespace microgan
