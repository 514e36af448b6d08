#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "entshap/error.hpp"
#include "entshap/io.hpp"
#include "entshap/rng.hpp"

namespace entshap {

// Tabular dataset, row-major. Missing cells carry NaN in values plus a mask bit;
// the mask is authoritative, the NaN is a tripwire against unmasked reads.
struct Dataset {
  std::int64_t n = 0;
  int d = 0;
  std::vector<std::string> feature_names;
  std::vector<double> values;    // n * d
  std::vector<std::uint8_t> missing;  // n * d, 1 = missing
  std::optional<std::vector<double>> target;
  std::string target_name = "y";

  static Dataset make(std::int64_t n, int d) {
    require_data(n >= 1, "dataset: need at least one row");
    require_data(d >= 1, "dataset: need at least one feature");
    Dataset ds;
    ds.n = n;
    ds.d = d;
    ds.feature_names.resize(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) ds.feature_names[static_cast<std::size_t>(j)] = "x" + std::to_string(j + 1);
    ds.values.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(d), 0.0);
    ds.missing.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(d), 0);
    return ds;
  }

  std::size_t idx(std::int64_t i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(d) + static_cast<std::size_t>(j);
  }
  double at(std::int64_t i, int j) const { return values[idx(i, j)]; }
  bool is_missing(std::int64_t i, int j) const { return missing[idx(i, j)] != 0; }

  void set(std::int64_t i, int j, double v) {
    values[idx(i, j)] = v;
    missing[idx(i, j)] = 0;
  }
  void set_missing(std::int64_t i, int j) {
    values[idx(i, j)] = std::numeric_limits<double>::quiet_NaN();
    missing[idx(i, j)] = 1;
  }

  std::span<const double> row(std::int64_t i) const {
    return std::span<const double>(values.data() + idx(i, 0), static_cast<std::size_t>(d));
  }
  std::span<const std::uint8_t> row_missing(std::int64_t i) const {
    return std::span<const std::uint8_t>(missing.data() + idx(i, 0), static_cast<std::size_t>(d));
  }

  bool row_complete(std::int64_t i) const {
    for (int j = 0; j < d; ++j)
      if (is_missing(i, j)) return false;
    return true;
  }

  std::int64_t missing_count() const {
    std::int64_t c = 0;
    for (const auto m : missing) c += m;
    return c;
  }

  void validate() const {
    require_data(n >= 1 && d >= 1, "dataset: empty");
    require_data(feature_names.size() == static_cast<std::size_t>(d), "dataset: feature name count mismatch");
    require_data(values.size() == static_cast<std::size_t>(n) * static_cast<std::size_t>(d),
                 "dataset: value buffer size mismatch");
    require_data(missing.size() == values.size(), "dataset: missing mask size mismatch");
    std::set<std::string> seen;
    for (const auto& name : feature_names) {
      require_data(!name.empty(), "dataset: empty feature name");
      require_data(seen.insert(name).second, "dataset: duplicate feature name '" + name + "'");
    }
    if (target) {
      require_data(target->size() == static_cast<std::size_t>(n), "dataset: target length mismatch");
      for (const auto y : *target) require_data(std::isfinite(y), "dataset: non-finite target value");
    }
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (missing[k]) continue;
      require_data(std::isfinite(values[k]), "dataset: non-finite feature value");
    }
  }

  Dataset subset(const std::vector<std::int64_t>& rows) const {
    require_data(!rows.empty(), "dataset: empty row selection");
    Dataset out = make(static_cast<std::int64_t>(rows.size()), d);
    out.feature_names = feature_names;
    out.target_name = target_name;
    if (target) out.target.emplace(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::int64_t i = rows[r];
      require_data(i >= 0 && i < n, "dataset: row index out of range");
      for (int j = 0; j < d; ++j) {
        out.values[out.idx(static_cast<std::int64_t>(r), j)] = values[idx(i, j)];
        out.missing[out.idx(static_cast<std::int64_t>(r), j)] = missing[idx(i, j)];
      }
      if (target) (*out.target)[r] = (*target)[static_cast<std::size_t>(i)];
    }
    return out;
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

inline bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

inline std::string csv_quote(const std::string& s) {
  if (!needs_quoting(s)) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// RFC-4180 style: quoted fields may contain commas, doubled quotes, newlines.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  const std::size_t len = text.size();
  auto end_field = [&]() {
    row.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&]() {
    end_field();
    rows.push_back(row);
    row.clear();
  };
  while (i < len) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < len && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field.push_back(c);
        ++i;
      }
    } else if (c == '"' && !field_started && field.empty()) {
      in_quotes = true;
      field_started = true;
      ++i;
    } else if (c == ',') {
      end_field();
      ++i;
    } else if (c == '\r') {
      if (i + 1 < len && text[i + 1] == '\n') ++i;
      end_row();
      ++i;
    } else if (c == '\n') {
      end_row();
      ++i;
    } else {
      field.push_back(c);
      field_started = true;
      ++i;
    }
  }
  if (in_quotes) throw_data("csv: unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

}  // namespace detail

// Loads a headered CSV. Cells equal to missing_token become missing; everything
// else must parse as a finite double. If target_column is given, that column is
// split out as the target and must be fully observed.
inline Dataset load_csv(const std::string& path,
                        const std::optional<std::string>& target_column = std::nullopt,
                        const std::string& missing_token = "NA") {
  const std::string text = read_text_file(path);
  const auto rows = detail::parse_csv(text);
  require_data(rows.size() >= 2, "csv " + path + ": need a header row and at least one data row");
  const auto& header = rows[0];
  require_data(!header.empty(), "csv " + path + ": empty header");

  int target_idx = -1;
  if (target_column) {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == *target_column) target_idx = static_cast<int>(j);
    require_data(target_idx >= 0, "csv " + path + ": target column '" + *target_column + "' not found");
  }

  const int n_cols = static_cast<int>(header.size());
  const int d = target_idx >= 0 ? n_cols - 1 : n_cols;
  require_data(d >= 1, "csv " + path + ": no feature columns");

  Dataset ds = Dataset::make(static_cast<std::int64_t>(rows.size() - 1), d);
  ds.feature_names.clear();
  for (int j = 0; j < n_cols; ++j)
    if (j != target_idx) ds.feature_names.push_back(header[static_cast<std::size_t>(j)]);
  if (target_idx >= 0) {
    ds.target.emplace(ds.n, 0.0);
    ds.target_name = header[static_cast<std::size_t>(target_idx)];
  }

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    require_data(cells.size() == static_cast<std::size_t>(n_cols),
                 "csv " + path + ": row " + std::to_string(r) + " has " + std::to_string(cells.size()) +
                     " cells, expected " + std::to_string(n_cols));
    int jf = 0;
    for (int j = 0; j < n_cols; ++j) {
      const std::string& cell = cells[static_cast<std::size_t>(j)];
      const std::int64_t i = static_cast<std::int64_t>(r) - 1;
      if (j == target_idx) {
        require_data(cell != missing_token,
                     "csv " + path + ": missing target value at row " + std::to_string(r));
        double v = 0.0;
        require_data(detail::parse_double(cell, v) && std::isfinite(v),
                     "csv " + path + ": cannot parse target '" + cell + "' at row " + std::to_string(r));
        (*ds.target)[static_cast<std::size_t>(i)] = v;
        continue;
      }
      if (cell == missing_token) {
        ds.set_missing(i, jf);
      } else {
        double v = 0.0;
        require_data(detail::parse_double(cell, v) && std::isfinite(v),
                     "csv " + path + ": cannot parse value '" + cell + "' at row " + std::to_string(r) +
                         ", column '" + header[static_cast<std::size_t>(j)] + "'");
        ds.set(i, jf, v);
      }
      ++jf;
    }
  }
  ds.validate();
  return ds;
}

// Shortest round-trip formatting: reloading reproduces every double bit-exactly.
inline void write_csv(const Dataset& ds, const std::string& path, const std::string& missing_token = "NA") {
  ds.validate();
  std::string out;
  for (int j = 0; j < ds.d; ++j) {
    if (j) out.push_back(',');
    out += detail::csv_quote(ds.feature_names[static_cast<std::size_t>(j)]);
  }
  if (ds.target) {
    out.push_back(',');
    out += detail::csv_quote(ds.target_name);
  }
  out.push_back('\n');
  for (std::int64_t i = 0; i < ds.n; ++i) {
    for (int j = 0; j < ds.d; ++j) {
      if (j) out.push_back(',');
      out += ds.is_missing(i, j) ? missing_token : detail::format_double(ds.at(i, j));
    }
    if (ds.target) {
      out.push_back(',');
      out += detail::format_double((*ds.target)[static_cast<std::size_t>(i)]);
    }
    out.push_back('\n');
  }
  write_text_file(path, out);
}

struct SplitHalf {
  std::vector<std::int64_t> first;   // floor(n/2) rows
  std::vector<std::int64_t> second;  // the rest
};

// Disjoint exhaustive random halves; |first| = floor(n/2).
inline SplitHalf split_half(std::int64_t n, std::uint64_t seed) {
  require_data(n >= 2, "split_half: need at least two rows");
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  RngStream rng(seed, 0x5711ULL);
  shuffle_in_place(order, rng);
  SplitHalf s;
  const std::int64_t n1 = n / 2;
  s.first.assign(order.begin(), order.begin() + n1);
  s.second.assign(order.begin() + n1, order.end());
  return s;
}

// Fractional split used by harnesses: |test| = round(n * test_frac), both parts nonempty.
inline SplitHalf split_fraction(std::int64_t n, double test_frac, std::uint64_t seed) {
  require_config(test_frac > 0.0 && test_frac < 1.0, "split_fraction: fraction must be in (0,1)");
  require_data(n >= 2, "split_fraction: need at least two rows");
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  RngStream rng(seed, 0x5712ULL);
  shuffle_in_place(order, rng);
  std::int64_t n_test = static_cast<std::int64_t>(std::llround(static_cast<double>(n) * test_frac));
  n_test = std::clamp<std::int64_t>(n_test, 1, n - 1);
  SplitHalf s;
  s.second.assign(order.begin(), order.begin() + n_test);            // test
  s.first.assign(order.begin() + n_test, order.end());               // train
  return s;
}

// Masks an exact count of feature cells: round(fraction * n * d), sampled
// uniformly without replacement. fraction 0 returns the input unchanged.
inline Dataset mask_missing(const Dataset& ds, double fraction, std::uint64_t seed) {
  require_config(fraction >= 0.0 && fraction <= 1.0, "mask_missing: fraction must be in [0,1]");
  Dataset out = ds;
  if (fraction == 0.0) return out;
  const std::int64_t cells = ds.n * static_cast<std::int64_t>(ds.d);
  const std::int64_t k = static_cast<std::int64_t>(std::llround(fraction * static_cast<double>(cells)));
  if (k == 0) return out;
  RngStream rng(seed, 0x3A5CULL);
  std::vector<std::int64_t> scratch, chosen;
  rng.sample_without_replacement<std::int64_t>(cells, k, scratch, chosen);
  for (const auto c : chosen) {
    const std::int64_t i = c / ds.d;
    const int j = static_cast<int>(c % ds.d);
    out.set_missing(i, j);
  }
  return out;
}

// Content hash covering shape, names, mask, cell bits, and target bits.
inline std::uint64_t content_hash(const Dataset& ds) {
  std::uint64_t h = kFnvOffset;
  h = fnv1a64_u64(static_cast<std::uint64_t>(ds.n), h);
  h = fnv1a64_u64(static_cast<std::uint64_t>(ds.d), h);
  for (const auto& name : ds.feature_names) h = fnv1a64(name, fnv1a64_u64(name.size(), h));
  for (std::size_t k = 0; k < ds.values.size(); ++k) {
    h = fnv1a64(&ds.missing[k], 1, h);
    if (!ds.missing[k]) h = fnv1a64_double(ds.values[k], h);
  }
  h = fnv1a64_u64(ds.target.has_value() ? 1 : 0, h);
  if (ds.target) {
    h = fnv1a64(ds.target_name, h);
    for (const auto y : *ds.target) h = fnv1a64_double(y, h);
  }
  return h;
}

}  // namespace entshap
