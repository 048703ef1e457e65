#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace keyminer {

enum class ColumnKind { kNumeric, kSymbolic };

enum class Role { kIndependent, kMaximize, kMinimize, kSkipped };

// Marker for a missing cell in CSV text.
inline constexpr std::string_view kMissingToken = "?";

// One column of a table. The role and kind come only from the header text:
//   trailing '+'  goal to maximize
//   trailing '-'  goal to minimize
//   trailing 'X'  ignored
//   leading uppercase letter  numeric, otherwise symbolic
struct Column {
  std::string name;
  std::size_t index = 0;
  ColumnKind kind = ColumnKind::kNumeric;
  Role role = Role::kIndependent;

  // Observed bounds of a numeric column. lo > hi until a value is seen.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  // Symbolic columns: code -> text in first-seen order, and value counts.
  std::vector<std::string> symbols;
  std::map<std::string, std::size_t> counts;

  // Number of non-missing cells.
  std::size_t observed = 0;

  bool numeric() const { return kind == ColumnKind::kNumeric; }
  bool goal() const { return role == Role::kMaximize || role == Role::kMinimize; }
  bool independent() const { return role == Role::kIndependent; }

  std::optional<std::size_t> code_of(std::string_view symbol) const;
};

// Derives kind and role from a header cell.
Column column_from_header(std::string_view header, std::size_t index);

// Cells are stored as doubles: the value for numeric columns, the symbol code
// for symbolic columns, NaN when missing.
inline bool is_missing(double cell) { return std::isnan(cell); }
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct Row {
  std::size_t id = 0;
  std::vector<double> cells;
};

// Immutable rectangular dataset.
class Table {
 public:
  Table(std::vector<Column> columns, std::vector<Row> rows,
        std::string content_hash);

  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t i) const { return columns_.at(i); }
  const std::vector<Row>& rows() const { return rows_; }
  const Row& row(std::size_t id) const { return rows_.at(id); }
  std::size_t size() const { return rows_.size(); }

  // Column indices by role, in header order.
  const std::vector<std::size_t>& independents() const { return independents_; }
  const std::vector<std::size_t>& goals() const { return goals_; }

  // Hex digest of the bytes the table was parsed from.
  const std::string& content_hash() const { return content_hash_; }

  std::optional<std::size_t> find_column(std::string_view name) const;

  // Text of one cell as it would appear in CSV ("?" when missing).
  std::string cell_text(std::size_t row, std::size_t col) const;

  // All row ids, 0..n-1.
  std::vector<std::size_t> all_ids() const;

 private:
  std::vector<Column> columns_;
  std::vector<Row> rows_;
  std::vector<std::size_t> independents_;
  std::vector<std::size_t> goals_;
  std::string content_hash_;
};

// Parses RFC-4180 style CSV text (comma separator, optional double quotes,
// first record is the header). Throws ParseError naming the line.
Table parse_csv(std::string_view text);

// Reads and parses a file. Throws Error if the file cannot be read.
Table load_csv(const std::filesystem::path& path);

// Serializes back to CSV using the shortest round-trip form for numbers.
std::string to_csv(const Table& table);

// Shortest decimal string that parses back to exactly `v`.
std::string format_number(double v);

// Six significant digits, for human-readable text only.
std::string display_number(double v);

// SHA-256 of `bytes` as lowercase hex.
std::string sha256_hex(std::string_view bytes);

// (v - lo) / (hi - lo + 1e-32), clamped to [0, 1].
double normalize(const Column& col, double v);

// Euclidean-style distance over the independent columns, scaled to [0, 1].
// Numeric differences use normalized values; symbols differ by 0 or 1.
// Missing cells assume the worst case. `p` is the Minkowski exponent.
double distance(const Row& a, const Row& b, const Table& table, double p = 2.0);

}  // namespace keyminer
