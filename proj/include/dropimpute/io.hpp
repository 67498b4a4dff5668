/*
 * Copyright 2026 The dropimpute Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// CSV formats.
//
// Dataset:  user_id,arm[,segment],x_1..x_p,z   (empty z = missing)
// Truth:    user_id,y_true,z_true,masked
// Imputed:  dataset columns + y_imputed,z_imputed,provenance
//
// Numbers are written in the shortest form that parses back to the same
// double.

#ifndef DROPIMPUTE_IO_HPP
#define DROPIMPUTE_IO_HPP

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "dropimpute/core.hpp"
#include "dropimpute/error.hpp"
#include "dropimpute/imputers.hpp"
#include "dropimpute/simgen.hpp"

namespace dropimpute {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<std::uint64_t> parse_unsigned(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return j;
    }
    return std::nullopt;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) fail(ErrorCode::Schema, "line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

[[noreturn]] inline void row_error(std::size_t line, const std::string& what) {
  fail(ErrorCode::Schema, "line " + std::to_string(line) + ": " + what);
}

}  // namespace detail

inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (t.header.empty()) {
      if (line.empty()) continue;
      t.header = detail::split_csv_line(line, line_no);
      continue;
    }
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line, line_no);
    if (fields.size() != t.header.size()) {
      detail::row_error(line_no, "expected " + std::to_string(t.header.size()) + " fields, found " +
                                     std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lines.push_back(line_no);
  }
  if (t.header.empty()) fail(ErrorCode::Schema, "empty file: no header row");
  return t;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  return out;
}

inline Dataset dataset_from_table(const CsvTable& t) {
  const auto id_col = t.column("user_id");
  const auto arm_col = t.column("arm");
  const auto z_col = t.column("z");
  const auto seg_col = t.column("segment");
  if (!id_col) fail(ErrorCode::Schema, "missing column 'user_id'");
  if (!arm_col) fail(ErrorCode::Schema, "missing column 'arm'");
  if (!z_col) fail(ErrorCode::Schema, "missing column 'z'");
  std::vector<std::size_t> x_cols;
  std::vector<std::string> x_names;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (t.header[j].rfind("x_", 0) == 0) {
      x_cols.push_back(j);
      x_names.push_back(t.header[j]);
    }
  }
  if (x_cols.empty()) fail(ErrorCode::Schema, "no covariate columns (x_1..x_p)");

  std::vector<UserRecord> records(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.lines[r];
    UserRecord& rec = records[r];
    rec.user_id = row[*id_col];
    const auto arm = parse_unsigned(row[*arm_col]);
    if (!arm || *arm > 0xffffffffu) detail::row_error(line, "arm '" + row[*arm_col] + "' is not a non-negative integer");
    rec.arm = TreatmentArm{static_cast<std::uint32_t>(*arm)};
    if (seg_col) {
      const auto seg = parse_unsigned(row[*seg_col]);
      if (!seg || *seg > 0xffffffffu) {
        detail::row_error(line, "segment '" + row[*seg_col] + "' is not a non-negative integer");
      }
      rec.segment = static_cast<std::uint32_t>(*seg);
    }
    rec.x.resize(x_cols.size());
    for (std::size_t a = 0; a < x_cols.size(); ++a) {
      const auto v = parse_double(row[x_cols[a]]);
      if (!v || !std::isfinite(*v)) {
        detail::row_error(line, t.header[x_cols[a]] + " '" + row[x_cols[a]] + "' is not a finite number");
      }
      rec.x[a] = *v;
    }
    const std::string& zs = row[*z_col];
    if (zs.empty()) {
      rec.outcome = Outcome::missing();
    } else {
      const auto v = parse_double(zs);
      if (!v) detail::row_error(line, "z '" + zs + "' is not a number");
      rec.outcome = Outcome::observed(*v);
    }
  }
  std::vector<std::string> segment_names;
  if (seg_col) {
    std::uint32_t top = 0;
    for (const UserRecord& r : records) top = std::max(top, r.segment);
    for (std::uint32_t u = 0; u <= top; ++u) segment_names.push_back(std::to_string(u));
  }
  return Dataset(std::move(records), std::move(x_names), std::move(segment_names));
}

inline Dataset read_dataset(std::istream& in) { return dataset_from_table(read_csv(in)); }

inline Dataset read_dataset(const std::string& path) {
  auto in = open_input(path);
  return read_dataset(in);
}

namespace detail {

inline void write_dataset_header(std::ostream& os, const Dataset& d) {
  // the segment column is echoed only when the source carried one
  os << "user_id,arm";
  if (!d.segment_names().empty()) os << ",segment";
  for (const auto& name : d.covariate_names()) os << ',' << csv_escape(name);
  os << ",z";
}

inline void write_dataset_fields(std::ostream& os, const Dataset& d, std::size_t i) {
  const UserRecord& r = d[i];
  os << csv_escape(r.user_id) << ',' << r.arm.id;
  if (!d.segment_names().empty()) os << ',' << r.segment;
  for (double v : r.x) os << ',' << format_double(v);
  os << ',';
  if (r.outcome.is_observed()) os << format_double(r.outcome.z());
}

}  // namespace detail

inline void write_dataset(std::ostream& os, const Dataset& d) {
  detail::write_dataset_header(os, d);
  os << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    detail::write_dataset_fields(os, d, i);
    os << '\n';
  }
}

inline void write_truth(std::ostream& os, const Dataset& d, const SimTruth& truth) {
  os << "user_id,y_true,z_true,masked\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    os << csv_escape(d[i].user_id) << ',' << int{truth.y[i]} << ',' << format_double(truth.z[i]) << ','
       << int{truth.mask[i]} << '\n';
  }
}

/// Complete amounts from a truth sidecar, checked row by row against the
/// dataset's user ids.
inline std::vector<double> read_truth(std::istream& in, const Dataset& d) {
  const CsvTable t = read_csv(in);
  const auto id_col = t.column("user_id");
  const auto z_col = t.column("z_true");
  if (!id_col || !z_col) fail(ErrorCode::Schema, "truth file needs columns user_id and z_true");
  if (t.rows.size() != d.size()) {
    fail(ErrorCode::TruthUnavailable, "truth file has " + std::to_string(t.rows.size()) +
                                          " rows, dataset has " + std::to_string(d.size()));
  }
  std::vector<double> z(d.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r][*id_col] != d[r].user_id) detail::row_error(t.lines[r], "user_id does not match the dataset");
    const auto v = parse_double(t.rows[r][*z_col]);
    if (!v) detail::row_error(t.lines[r], "z_true is not a number");
    z[r] = *v;
  }
  return z;
}

inline std::string provenance_field(const ImputedDataset& imp, std::size_t i) {
  std::string s(to_string(imp.provenance[i]));
  if (imp.pooled[i]) s += ":pooled";
  return s;
}

inline void write_imputed(std::ostream& os, const Dataset& d, const ImputedDataset& imp) {
  detail::write_dataset_header(os, d);
  os << ",y_imputed,z_imputed,provenance\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    detail::write_dataset_fields(os, d, i);
    os << ',';
    if (!imp.dropped(i)) os << int{imp.y[i]} << ',' << format_double(imp.z[i]);
    else os << ',';
    os << ',' << provenance_field(imp, i) << '\n';
  }
}

struct ImputedFile {
  Dataset dataset;
  ImputedDataset imputed;
};

inline ImputedFile read_imputed(std::istream& in, ImputationMethod method = ImputationMethod::Proposed) {
  const CsvTable t = read_csv(in);
  const auto y_col = t.column("y_imputed");
  const auto z_col = t.column("z_imputed");
  const auto p_col = t.column("provenance");
  if (!y_col || !z_col || !p_col) {
    fail(ErrorCode::Schema, "imputed file needs columns y_imputed, z_imputed and provenance");
  }
  ImputedFile f{dataset_from_table(t), {}};
  ImputedDataset& imp = f.imputed;
  const std::size_t n = t.rows.size();
  imp.method = method;
  imp.arm.resize(n);
  imp.segment.resize(n);
  imp.z.resize(n);
  imp.y.resize(n);
  imp.provenance.resize(n);
  imp.pooled.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = t.rows[r];
    imp.arm[r] = f.dataset[r].arm.id;
    imp.segment[r] = f.dataset[r].segment;
    std::string_view prov = row[*p_col];
    if (const auto colon = prov.find(':'); colon != std::string_view::npos) {
      if (prov.substr(colon + 1) != "pooled") detail::row_error(t.lines[r], "bad provenance flag");
      imp.pooled[r] = 1;
      prov = prov.substr(0, colon);
    }
    try {
      imp.provenance[r] = parse_provenance(prov);
    } catch (const Error&) {
      detail::row_error(t.lines[r], "unknown provenance '" + std::string(prov) + "'");
    }
    if (imp.provenance[r] == Provenance::Dropped) {
      imp.z[r] = std::numeric_limits<double>::quiet_NaN();
      imp.y[r] = 0;
      continue;
    }
    const auto z = parse_double(row[*z_col]);
    const auto y = parse_unsigned(row[*y_col]);
    if (!z) detail::row_error(t.lines[r], "z_imputed is not a number");
    if (!y || *y > 1) detail::row_error(t.lines[r], "y_imputed must be 0 or 1");
    imp.z[r] = *z;
    imp.y[r] = static_cast<std::uint8_t>(*y);
  }
  return f;
}

}  // namespace dropimpute

#endif  // DROPIMPUTE_IO_HPP
