#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cutsurv/errors.hpp"
#include "cutsurv/random.hpp"

namespace cutsurv {

struct SurvivalRecord {
  std::vector<double> features;
  double observed_time = 0.0;
  int event = 0;  // 1 = event observed, 0 = right-censored
};

/// Immutable, validated collection of records sharing one feature dimension
/// and a horizon t_max >= every observed time.
class SurvivalDataset {
 public:
  SurvivalDataset(std::vector<SurvivalRecord> records, std::optional<double> t_max = std::nullopt)
      : records_(std::move(records)) {
    if (records_.empty()) throw std::invalid_argument("dataset must not be empty");
    feature_dim_ = records_.front().features.size();
    double max_time = 0.0;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      if (r.features.size() != feature_dim_) {
        throw std::invalid_argument("record " + std::to_string(i) + " has feature dimension " +
                                    std::to_string(r.features.size()) + ", expected " +
                                    std::to_string(feature_dim_));
      }
      if (!(r.observed_time > 0.0) || !std::isfinite(r.observed_time)) {
        throw std::invalid_argument("record " + std::to_string(i) + " has non-positive time");
      }
      if (r.event != 0 && r.event != 1) {
        throw std::invalid_argument("record " + std::to_string(i) + " has event flag not in {0,1}");
      }
      max_time = std::max(max_time, r.observed_time);
    }
    t_max_ = t_max.value_or(max_time);
    if (t_max_ < max_time) {
      throw std::invalid_argument("t_max is smaller than the largest observed time");
    }
  }

  [[nodiscard]] const std::vector<SurvivalRecord>& records() const { return records_; }
  [[nodiscard]] const SurvivalRecord& operator[](std::size_t i) const { return records_[i]; }
  [[nodiscard]] std::size_t size() const { return records_.size(); }
  [[nodiscard]] std::size_t feature_dim() const { return feature_dim_; }
  [[nodiscard]] double t_max() const { return t_max_; }

  [[nodiscard]] std::size_t event_count() const {
    return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(),
                                                  [](const auto& r) { return r.event == 1; }));
  }

  [[nodiscard]] SurvivalDataset subset(std::span<const std::size_t> indices) const {
    std::vector<SurvivalRecord> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(records_.at(i));
    return SurvivalDataset(std::move(out), t_max_);
  }

 private:
  std::vector<SurvivalRecord> records_;
  std::size_t feature_dim_ = 0;
  double t_max_ = 0.0;
};

/// Order-sensitive FNV-1a hash over the bit patterns of every record; used
/// to recognise when a model is evaluated on the data it was trained on.
inline std::uint64_t fingerprint(const SurvivalDataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& r : data.records()) {
    mix(&r.observed_time, sizeof(double));
    mix(&r.event, sizeof(int));
    for (double x : r.features) mix(&x, sizeof(double));
  }
  return h;
}

struct SplitFractions {
  double train = 0.75;
  double val = 0.15;
  double test = 0.10;
};

struct DataSplit {
  SurvivalDataset train;
  SurvivalDataset val;
  SurvivalDataset test;
};

/// Index-level partition behind split(); exposed so callers can check disjointness.
struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

inline SplitIndices split_indices(std::size_t n, SplitFractions f, std::uint64_t seed) {
  if (!(f.train > 0 && f.val > 0 && f.test > 0)) {
    throw std::invalid_argument("split fractions must be positive");
  }
  if (std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
  const auto n_val = static_cast<std::size_t>(std::floor(f.val * static_cast<double>(n) + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(f.test * static_cast<double>(n) + 1e-9));
  if (n_val == 0 || n_test == 0 || n_val + n_test >= n) {
    throw std::invalid_argument("split of " + std::to_string(n) + " records leaves an empty part");
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);

  SplitIndices out;
  const std::size_t n_train = n - n_val - n_test;
  out.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                 idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  return out;
}

/// Seeded shuffle then floor-rounded val/test sizes; the remainder goes to train.
inline DataSplit split(const SurvivalDataset& data, SplitFractions f, std::uint64_t seed) {
  const auto idx = split_indices(data.size(), f, seed);
  return {data.subset(idx.train), data.subset(idx.val), data.subset(idx.test)};
}

// ---------------------------------------------------------------------------
// CSV

struct CsvSchema {
  std::string time_column = "time";
  std::string event_column = "event";
  std::vector<std::string> feature_columns;  // empty = every other column
  std::optional<double> t_max;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline SurvivalDataset parse_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header row");
  const auto header_view = detail::split_fields(line);
  std::vector<std::string> header(header_view.begin(), header_view.end());

  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t time_col = column(schema.time_column);
  const std::size_t event_col = column(schema.event_column);
  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != time_col && c != event_col) feature_cols.push_back(c);
    }
  } else {
    for (const auto& name : schema.feature_columns) feature_cols.push_back(column(name));
  }

  std::vector<SurvivalRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto fields = detail::split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       row);
    }
    auto numeric = [&](std::size_t c) {
      const auto v = detail::parse_double(fields[c]);
      if (!v) {
        throw ParseError("non-numeric value '" + std::string(fields[c]) + "' in column '" + header[c] + "'",
                         row);
      }
      return *v;
    };
    SurvivalRecord r;
    r.observed_time = numeric(time_col);
    if (!(r.observed_time > 0.0)) throw ParseError("non-positive time", row);
    const double ev = numeric(event_col);
    if (ev != 0.0 && ev != 1.0) throw ParseError("event must be 0 or 1", row);
    r.event = static_cast<int>(ev);
    r.features.reserve(feature_cols.size());
    for (auto c : feature_cols) r.features.push_back(numeric(c));
    records.push_back(std::move(r));
  }
  if (records.empty()) throw ParseError("no data rows");
  try {
    return SurvivalDataset(std::move(records), schema.t_max);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

inline SurvivalDataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_csv(in, schema);
}

/// Writes `time,event,x1..xp` with shortest round-trip decimals.
inline void write_csv(std::ostream& out, const SurvivalDataset& data) {
  out << "time,event";
  for (std::size_t k = 0; k < data.feature_dim(); ++k) out << ",x" << (k + 1);
  out << '\n';
  for (const auto& r : data.records()) {
    out << detail::format_double(r.observed_time) << ',' << r.event;
    for (double x : r.features) out << ',' << detail::format_double(x);
    out << '\n';
  }
}

}  // namespace cutsurv
