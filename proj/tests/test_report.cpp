#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "segbias/report.hpp"

using namespace segbias;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

ArmResult arm(std::string tag, std::array<std::optional<double>, 6> values, std::optional<double> hd = 1.5) {
  ArmResult a;
  a.tag = std::move(tag);
  a.counting.metrics.values = values;
  a.hd = hd;
  a.assd = hd ? std::optional<double>(*hd / 2) : std::nullopt;
  a.pooled = ConfusionCounts{3, 1, 10, 2};
  return a;
}

ReportRow row(std::string label, std::optional<double> size, std::vector<ArmResult> arms) {
  return {std::move(label), size, std::move(arms)};
}

const std::array<std::optional<double>, 6> kExample = {0.8125, 0.75, 0.6, 0.5, 2.0 / 3.0, 10.0 / 11.0};

}  // namespace

TEST_CASE("percent csv layout") {
  const std::string csv = emit_table({row("colon", 0.118, {arm("", kExample)})});
  const auto grid = parse_csv(csv);
  REQUIRE(grid.size() == 2);
  CHECK(grid[0] == std::vector<std::string>{"label", "organ_size", "accuracy", "precision", "recall", "iou", "f1",
                                            "specificity", "hd", "assd", "undefined_cells"});
  CHECK(grid[1] == std::vector<std::string>{"colon", "11.80", "81.25", "75.00", "60.00", "50.00", "66.67", "90.91",
                                            "1.50", "0.75", "0"});
}

TEST_CASE("undefined values become empty cells with a count") {
  auto values = kExample;
  values[1] = std::nullopt;
  const auto grid = parse_csv(emit_table({row("x", 0.1, {arm("", values, std::nullopt)})}));
  CHECK(grid[1][3].empty());
  CHECK(grid[1][8].empty());
  CHECK(grid[1][9].empty());
  CHECK(grid[1].back() == "3");

  const std::string md = emit_table({row("x", 0.1, {arm("", values, std::nullopt)})}, {.format = TableFormat::kMarkdown});
  CHECK(md.find("Empty cells: 3") != std::string::npos);
  CHECK(md.find("undefined_cells") == std::string::npos);
}

TEST_CASE("rows are ordered by ascending size") {
  const std::string csv = emit_table({row("abdominal wall", 0.262, {arm("", kExample)}),
                                      row("ureter", 0.012, {arm("", kExample)}),
                                      row("none", std::nullopt, {arm("", kExample)}),
                                      row("colon", 0.118, {arm("", kExample)})});
  const auto grid = parse_csv(csv);
  CHECK(grid[1][0] == "ureter");
  CHECK(grid[2][0] == "colon");
  CHECK(grid[3][0] == "abdominal wall");
  CHECK(grid[4][0] == "none");

  const auto unsorted = parse_csv(emit_table({row("b", 0.5, {arm("", kExample)}), row("a", 0.1, {arm("", kExample)})},
                                             {.sort_by_size = false}));
  CHECK(unsorted[1][0] == "b");
}

TEST_CASE("two arms get suffixed columns") {
  const auto grid = parse_csv(emit_table({row("colon", 0.1, {arm("O", kExample), arm("S", kExample)})}));
  CHECK(grid[0][2] == "accuracy_O");
  CHECK(grid[0][3] == "accuracy_S");
  CHECK(grid[0][14] == "hd_O");
  CHECK(grid[0][17] == "assd_S");
}

TEST_CASE("raw csv keeps full precision and bookkeeping") {
  auto a = arm("", kExample);
  a.counting.excluded[1] = 4;
  const auto grid = parse_csv(emit_table({row("c", 0.118, {a})}, {.format = TableFormat::kRawCsv}));
  CHECK(grid[0][10] == "excluded_accuracy");
  CHECK(grid[1][6] == "0.66666666666666663");
  CHECK(grid[1][11] == "4");
  CHECK(grid[0][16] == "tp");
  CHECK(grid[1][17] == "1");
}

TEST_CASE("rows with different arms are rejected") {
  CHECK_THROWS_AS(emit_table({row("a", 0.1, {arm("O", kExample)}), row("b", 0.2, {arm("S", kExample)})}),
                  std::invalid_argument);
  CHECK_THROWS_AS(emit_table({}), std::invalid_argument);
}

TEST_CASE("markdown renders the same grid") {
  const std::string md = emit_table({row("colon", 0.118, {arm("", kExample)})}, {.format = TableFormat::kMarkdown});
  CHECK(md.rfind("| label | organ_size | accuracy |", 0) == 0);
  CHECK(md.find("| colon | 11.80 | 81.25 | 75.00 | 60.00 | 50.00 | 66.67 | 90.91 | 1.50 | 0.75 |") != std::string::npos);
}

TEST_SUITE("properties") {
  TEST_CASE("raw and percent tables agree after scaling") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ReportRow> rows;
    for (int i = 0; i < 200; ++i) {
      std::array<std::optional<double>, 6> v;
      for (auto& x : v) x = (rng() % 7 == 0) ? std::nullopt : std::optional<double>(u(rng));
      rows.push_back(row("r" + std::to_string(i), u(rng) * 0.5, {arm("", v, u(rng) * 40)}));
    }
    const auto pct = parse_csv(emit_table(rows));
    const auto raw = parse_csv(emit_table(rows, {.format = TableFormat::kRawCsv}));
    REQUIRE(pct.size() == raw.size());
    for (std::size_t r = 1; r < pct.size(); ++r) {
      CHECK(pct[r][0] == raw[r][0]);
      for (std::size_t c = 1; c <= 9; ++c) {
        REQUIRE(pct[r][c].empty() == raw[r][c].empty());
        if (pct[r][c].empty()) continue;
        const double scale = c <= 7 ? 100.0 : 1.0;
        const double expected = std::round(std::stod(raw[r][c]) * scale * 100.0) / 100.0;
        CHECK(std::abs(std::stod(pct[r][c]) - expected) <= 1e-10);
      }
    }
  }
}
