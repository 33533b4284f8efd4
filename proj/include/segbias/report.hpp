#pragma once

#include <optional>
#include <string>
#include <vector>

#include "segbias/counting.hpp"

namespace segbias {

/// Metrics of one (composition, weighting) arm in a report row.
struct ArmResult {
  /// Column suffix; empty for single-arm tables.
  std::string tag;
  AggregatedMetrics counting;
  /// Blank when not applicable (no class-positive image scored).
  std::optional<double> hd;
  std::optional<double> assd;
  std::optional<ConfusionCounts> pooled;
};

struct ReportRow {
  std::string label;
  /// Foreground fraction in [0, 1].
  std::optional<double> organ_size;
  std::vector<ArmResult> arms;
};

enum class TableFormat { kPercentCsv, kRawCsv, kMarkdown };

struct TableOptions {
  TableFormat format = TableFormat::kPercentCsv;
  /// Stable ascending sort on organ_size; rows without a size go last.
  bool sort_by_size = true;
};

/// Renders rows with columns label, organ_size, accuracy, precision, recall,
/// iou, f1, specificity, hd, assd (one column per arm for each metric),
/// followed by bookkeeping columns.
///
/// Percent CSV and Markdown scale organ_size and counting metrics by 100 and
/// print two decimals; hd/assd stay in pixels with two decimals. UNDEFINED
/// values become empty cells, counted in `undefined_cells` (CSV) or a
/// footnote (Markdown). The raw CSV keeps full precision ("%.17g") and adds
/// per-metric excluded-image counts and pooled confusion counts.
///
/// Throws std::invalid_argument if rows carry different arm tags.
std::string emit_table(std::vector<ReportRow> rows, const TableOptions& options = {});

}  // namespace segbias
