#pragma once

#include <fstream>
#include <string>

#include "microgan/trainer.hpp"

namespace microgan {

// The exact column set downstream tooling keys on.
inline constexpr const char* kTraceCsvHeader =
    "iteration,d_loss,g_loss,d_acc_real,d_acc_fake";

std::string trace_row_csv(const LossTraceRow& row);

// Incremental writer used during training: header on open, one line per
// row, flushed after each append so an abort still leaves a usable trace.
class TraceCsvWriter {
 public:
  explicit TraceCsvWriter(const std::string& path);
  void append(const LossTraceRow& row);

 private:
  std::ofstream out_;
  std::string path_;
};

void write_trace_csv(const LossTrace& trace, const std::string& path);

// Strict reader: exact header, five numeric fields per line; errors name
// the 1-based line.
LossTrace read_trace_csv(const std::string& path);

// Self-contained SVG with the d_loss and g_loss polylines, axis labels and
// a legend. The y range is the data min/max padded by 5 percent on each
// side and printed as the axis bound labels.
std::string render_loss_svg(const LossTrace& trace);

void write_loss_svg(const LossTrace& trace, const std::string& path);

}  // namespace microgan
