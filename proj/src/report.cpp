#include "segbias/report.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace segbias {

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string column(std::string_view name, const std::string& tag) {
  return tag.empty() ? std::string(name) : std::string(name) + "_" + tag;
}

struct Grid {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> cells;
  std::size_t undefined_total = 0;
};

Grid build_grid(const std::vector<ReportRow>& rows, bool raw) {
  const auto& arms = rows.front().arms;
  Grid g;
  g.header = {"label", "organ_size"};
  for (Metric m : kCountingMetrics) {
    for (const auto& arm : arms) g.header.push_back(column(metric_name(m), arm.tag));
  }
  for (const char* name : {"hd", "assd"}) {
    for (const auto& arm : arms) g.header.push_back(column(name, arm.tag));
  }
  if (raw) {
    for (Metric m : kCountingMetrics) {
      for (const auto& arm : arms) g.header.push_back(column("excluded_" + std::string(metric_name(m)), arm.tag));
    }
    for (const char* name : {"tp", "fp", "tn", "fn"}) {
      for (const auto& arm : arms) g.header.push_back(column(name, arm.tag));
    }
  } else {
    g.header.push_back("undefined_cells");
  }

  for (const auto& row : rows) {
    std::vector<std::string> cells = {row.label};
    std::size_t undefined = 0;
    auto emit = [&](std::optional<double> v, double scale) {
      if (!v) {
        ++undefined;
        cells.emplace_back();
      } else {
        cells.push_back(raw ? full(*v) : fixed2(*v * scale));
      }
    };
    if (row.organ_size) {
      cells.push_back(raw ? full(*row.organ_size) : fixed2(*row.organ_size * 100.0));
    } else {
      cells.emplace_back();
    }
    for (Metric m : kCountingMetrics) {
      for (const auto& arm : row.arms) emit(arm.counting.metrics[m], 100.0);
    }
    for (const auto& arm : row.arms) emit(arm.hd, 1.0);
    for (const auto& arm : row.arms) emit(arm.assd, 1.0);
    if (raw) {
      for (Metric m : kCountingMetrics) {
        for (const auto& arm : row.arms) cells.push_back(std::to_string(arm.counting.excluded_for(m)));
      }
      auto count_cell = [](const ArmResult& arm, std::uint64_t ConfusionCounts::*field) {
        return arm.pooled ? std::to_string((*arm.pooled).*field) : std::string();
      };
      for (auto field : {&ConfusionCounts::tp, &ConfusionCounts::fp, &ConfusionCounts::tn, &ConfusionCounts::fn}) {
        for (const auto& arm : row.arms) cells.push_back(count_cell(arm, field));
      }
    } else {
      cells.push_back(std::to_string(undefined));
    }
    g.undefined_total += undefined;
    g.cells.push_back(std::move(cells));
  }
  return g;
}

std::string render_csv(const Grid& g) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(cells[i]);
    }
    out += '\n';
  };
  line(g.header);
  for (const auto& row : g.cells) line(row);
  return out;
}

std::string render_markdown(const Grid& g) {
  // The undefined_cells bookkeeping column becomes a footnote.
  const std::size_t shown = g.header.size() - 1;
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    out += '|';
    for (std::size_t i = 0; i < shown; ++i) out += ' ' + cells[i] + " |";
    out += '\n';
  };
  line(g.header);
  out += '|';
  for (std::size_t i = 0; i < shown; ++i) out += i < 1 ? " --- |" : " ---: |";
  out += '\n';
  for (const auto& row : g.cells) line(row);
  if (g.undefined_total > 0) {
    out += "\nEmpty cells: " + std::to_string(g.undefined_total) +
           " undefined value(s) (zero denominator or no applicable image).\n";
  }
  return out;
}

}  // namespace

std::string emit_table(std::vector<ReportRow> rows, const TableOptions& options) {
  if (rows.empty()) throw std::invalid_argument("emit_table: no rows");
  for (const auto& row : rows) {
    if (row.arms.empty() || row.arms.size() != rows.front().arms.size()) {
      throw std::invalid_argument("emit_table: rows have different arms");
    }
    for (std::size_t a = 0; a < row.arms.size(); ++a) {
      if (row.arms[a].tag != rows.front().arms[a].tag) {
        throw std::invalid_argument("emit_table: rows have different arm tags");
      }
    }
  }
  if (options.sort_by_size) {
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
      if (!a.organ_size || !b.organ_size) return a.organ_size.has_value() && !b.organ_size.has_value();
      return *a.organ_size < *b.organ_size;
    });
  }
  const bool raw = options.format == TableFormat::kRawCsv;
  const Grid grid = build_grid(rows, raw);
  return options.format == TableFormat::kMarkdown ? render_markdown(grid) : render_csv(grid);
}

}  // namespace segbias
