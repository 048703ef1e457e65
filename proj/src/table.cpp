#include "keyminer/table.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "keyminer/error.hpp"

namespace keyminer {

namespace {

constexpr double kTiny = 1e-32;

struct Record {
  std::vector<std::string> fields;
  std::vector<bool> quoted;
  std::size_t line = 0;  // physical line where the record starts
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::vector<Record> split_records(std::string_view text) {
  std::vector<Record> out;
  Record rec;
  std::string field;
  bool in_quotes = false;
  bool was_quoted = false;
  bool record_has_content = false;
  std::size_t line = 1;
  rec.line = 1;

  auto end_field = [&] {
    if (was_quoted) {
      rec.fields.push_back(field);
    } else {
      rec.fields.emplace_back(trim(field));
    }
    rec.quoted.push_back(was_quoted);
    field.clear();
    was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    // Blank lines carry no record.
    if (record_has_content) out.push_back(std::move(rec));
    rec = Record{};
    record_has_content = false;
  };

  std::size_t i = 0;
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!trim(field).empty()) {
          throw ParseError("unexpected quote inside unquoted field", line);
        }
        field.clear();
        in_quotes = true;
        was_quoted = true;
        record_has_content = true;
        break;
      case ',':
        record_has_content = true;
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        rec.line = line;
        break;
      default:
        if (c != ' ' && c != '\t') record_has_content = true;
        field.push_back(c);
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", line);
  end_record();
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::string quote_if_needed(const std::string& s) {
  const bool needs = s.find_first_of(",\"\n\r") != std::string::npos ||
                     (!s.empty() && (s.front() == ' ' || s.back() == ' '));
  if (!needs) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::optional<std::size_t> Column::code_of(std::string_view symbol) const {
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] == symbol) return i;
  }
  return std::nullopt;
}

Column column_from_header(std::string_view header, std::size_t index) {
  Column col;
  col.name = std::string(header);
  col.index = index;
  if (header.empty()) throw ParseError("empty column name", 1);
  switch (header.back()) {
    case '+': col.role = Role::kMaximize; break;
    case '-': col.role = Role::kMinimize; break;
    case 'X': col.role = Role::kSkipped; break;
    default: col.role = Role::kIndependent;
  }
  const auto first = static_cast<unsigned char>(header.front());
  col.kind = std::isupper(first) ? ColumnKind::kNumeric : ColumnKind::kSymbolic;
  if (col.goal() && !col.numeric()) {
    throw ParseError("goal column '" + col.name +
                         "' must be numeric (start with an uppercase letter)",
                     1);
  }
  return col;
}

Table::Table(std::vector<Column> columns, std::vector<Row> rows,
             std::string content_hash)
    : columns_(std::move(columns)),
      rows_(std::move(rows)),
      content_hash_(std::move(content_hash)) {
  for (const auto& c : columns_) {
    if (c.independent()) independents_.push_back(c.index);
    if (c.goal()) goals_.push_back(c.index);
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].id != i || rows_[i].cells.size() != columns_.size()) {
      throw ContractViolation("table rows must be dense and rectangular");
    }
  }
}

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return c.index;
  }
  return std::nullopt;
}

std::string Table::cell_text(std::size_t row, std::size_t col) const {
  const double v = rows_.at(row).cells.at(col);
  if (is_missing(v)) return std::string(kMissingToken);
  const auto& c = columns_[col];
  if (c.numeric()) return format_number(v);
  return c.symbols.at(static_cast<std::size_t>(v));
}

std::vector<std::size_t> Table::all_ids() const {
  std::vector<std::size_t> ids(rows_.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return ids;
}

Table parse_csv(std::string_view text) {
  auto records = split_records(text);
  if (records.empty()) throw ParseError("empty file: no header line");

  std::vector<Column> columns;
  const auto& header = records.front();
  for (std::size_t i = 0; i < header.fields.size(); ++i) {
    columns.push_back(column_from_header(header.fields[i], i));
  }

  std::vector<Row> rows;
  rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != columns.size()) {
      throw ParseError("expected " + std::to_string(columns.size()) +
                           " cells, found " + std::to_string(rec.fields.size()),
                       rec.line);
    }
    Row row;
    row.id = rows.size();
    row.cells.reserve(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
      auto& col = columns[c];
      const auto& token = rec.fields[c];
      if (!rec.quoted[c] && token == kMissingToken) {
        row.cells.push_back(kMissing);
        continue;
      }
      ++col.observed;
      if (col.numeric()) {
        double v = 0;
        if (!parse_double(token, v)) {
          throw ParseError("column '" + col.name + "': cannot parse '" +
                               token + "' as a number",
                           rec.line);
        }
        col.lo = std::min(col.lo, v);
        col.hi = std::max(col.hi, v);
        row.cells.push_back(v);
      } else {
        auto code = col.code_of(token);
        if (!code) {
          col.symbols.push_back(token);
          code = col.symbols.size() - 1;
        }
        ++col.counts[token];
        row.cells.push_back(static_cast<double>(*code));
      }
    }
    rows.push_back(std::move(row));
  }
  return Table(std::move(columns), std::move(rows), sha256_hex(text));
}

Table load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string to_csv(const Table& table) {
  std::string out;
  const auto& cols = table.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) out.push_back(',');
    out += quote_if_needed(cols[c].name);
  }
  out.push_back('\n');
  for (const auto& row : table.rows()) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) out.push_back(',');
      const double v = row.cells[c];
      if (is_missing(v)) {
        out += kMissingToken;
      } else {
        out += quote_if_needed(table.cell_text(row.id, c));
      }
    }
    out.push_back('\n');
  }
  return out;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string display_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 6);
  return std::string(buf, ptr);
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

double normalize(const Column& col, double v) {
  const double x = (v - col.lo) / (col.hi - col.lo + kTiny);
  return std::clamp(x, 0.0, 1.0);
}

double distance(const Row& a, const Row& b, const Table& table, double p) {
  const auto& ind = table.independents();
  if (ind.empty()) return 0.0;
  double sum = 0;
  for (const std::size_t c : ind) {
    const auto& col = table.column(c);
    const double x = a.cells[c];
    const double y = b.cells[c];
    double delta = 0;
    if (is_missing(x) && is_missing(y)) {
      delta = 1;
    } else if (!col.numeric()) {
      delta = (is_missing(x) || is_missing(y) || x != y) ? 1 : 0;
    } else if (is_missing(x) || is_missing(y)) {
      const double known = normalize(col, is_missing(x) ? y : x);
      delta = std::max(known, 1 - known);
    } else {
      delta = std::abs(normalize(col, x) - normalize(col, y));
    }
    sum += std::pow(delta, p);
  }
  return std::pow(sum / static_cast<double>(ind.size()), 1.0 / p);
}

}  // namespace keyminer
