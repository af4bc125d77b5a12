#pragma once

// Tensor text format:
//
//   # dims I J K
//   i,j,k,value        one line per entry, 0-based indices, any order
//
// `value` may be the token NA for an unobserved cell. Every (i, j, k) must
// appear exactly once. Labels sidecar: sections [individuals], [variables]
// and [days], one label per line.

#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "lifetensor/dataset.hpp"
#include "lifetensor/text_io.hpp"

namespace lifetensor::io {

inline std::string format_tensor(const Tensor3& x) {
  const Dims& d = x.dims();
  std::string out = "# dims " + std::to_string(d[0]) + " " + std::to_string(d[1]) + " " +
                    std::to_string(d[2]) + "\n";
  for (std::size_t i = 0; i < d[0]; ++i)
    for (std::size_t j = 0; j < d[1]; ++j)
      for (std::size_t k = 0; k < d[2]; ++k) {
        out += std::to_string(i) + ',' + std::to_string(j) + ',' + std::to_string(k) + ',';
        out += x.observed(i, j, k) ? format_double(x(i, j, k)) : std::string("NA");
        out += '\n';
      }
  return out;
}

inline Tensor3 parse_tensor(std::string_view text, const std::string& source = "<tensor>") {
  LineReader reader(text, source);
  std::string line;
  std::optional<Dims> dims;
  while (reader.next(line)) {
    const auto t = tokens(line);
    if (t.empty()) continue;
    if (t.size() == 5 && t[0] == "#" && t[1] == "dims") {
      Dims d{};
      for (std::size_t m = 0; m < 3; ++m) {
        auto v = parse_int<std::size_t>(t[m + 2]);
        if (!v || *v == 0) throw DataError(reader.where() + "invalid dimension '" + t[m + 2] + "'");
        d[m] = *v;
      }
      dims = d;
      break;
    }
    throw DataError(reader.where() + "expected header '# dims I J K'");
  }
  if (!dims) throw DataError(source + ": missing header '# dims I J K'");

  Tensor3 x(*dims);
  std::vector<unsigned char> seen(x.size(), 0);
  while (reader.next(line)) {
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto f = split(line, ',');
    if (f.size() != 4) throw DataError(reader.where() + "expected 'i,j,k,value'");
    std::size_t idx[3];
    for (std::size_t m = 0; m < 3; ++m) {
      auto v = parse_int<std::size_t>(f[m]);
      if (!v || *v >= (*dims)[m])
        throw DataError(reader.where() + "index '" + f[m] + "' out of range for mode " +
                        std::to_string(m + 1));
      idx[m] = *v;
    }
    const std::size_t off = x.offset(idx[0], idx[1], idx[2]);
    if (seen[off]) throw DataError(reader.where() + "duplicate entry");
    seen[off] = 1;
    if (f[3] == "NA") {
      x.values()[off] = std::numeric_limits<double>::quiet_NaN();
      x.mask()[off] = 0;
    } else {
      auto v = parse_double(f[3]);
      if (!v) throw DataError(reader.where() + "invalid value '" + f[3] + "'");
      x.values()[off] = *v;
    }
  }
  for (std::size_t n = 0; n < seen.size(); ++n)
    if (!seen[n]) {
      const Dims& d = *dims;
      throw DataError(source + ": missing entry (" + std::to_string(n % d[0]) + "," +
                      std::to_string((n / d[0]) % d[1]) + "," + std::to_string(n / (d[0] * d[1])) +
                      ")");
    }
  return x;
}

inline Tensor3 read_tensor(const std::filesystem::path& path) {
  return parse_tensor(read_file(path), path.string());
}

inline void write_tensor(const std::filesystem::path& path, const Tensor3& x) {
  write_file_atomic(path, format_tensor(x));
}

inline std::string format_labels(const AxisLabels& labels) {
  std::string out = "[individuals]\n";
  for (const auto& s : labels.individuals) out += s + "\n";
  out += "[variables]\n";
  for (const auto& s : labels.variables) out += s + "\n";
  out += "[days]\n";
  for (long d : labels.days) out += std::to_string(d) + "\n";
  return out;
}

inline AxisLabels parse_labels(std::string_view text, const std::string& source = "<labels>") {
  LineReader reader(text, source);
  AxisLabels labels;
  std::string line;
  std::string section;
  while (reader.next(line)) {
    const std::string t(trim(line));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t != "[individuals]" && t != "[variables]" && t != "[days]")
        throw DataError(reader.where() + "unknown section " + t);
      section = t;
      continue;
    }
    if (section == "[individuals]") labels.individuals.push_back(t);
    else if (section == "[variables]") labels.variables.push_back(t);
    else if (section == "[days]") {
      auto d = parse_int<long>(t);
      if (!d) throw DataError(reader.where() + "invalid day index '" + t + "'");
      labels.days.push_back(*d);
    } else {
      throw DataError(reader.where() + "label outside of a section");
    }
  }
  return labels;
}

inline AxisLabels read_labels(const std::filesystem::path& path) {
  return parse_labels(read_file(path), path.string());
}

/// Sidecar path for a tensor file: "<tensor>.labels".
inline std::filesystem::path labels_path_for(const std::filesystem::path& tensor_path) {
  std::filesystem::path p = tensor_path;
  p += ".labels";
  return p;
}

}  // namespace lifetensor::io
