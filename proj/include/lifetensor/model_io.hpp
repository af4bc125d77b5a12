#pragma once

// CP model file. Key/value header lines followed by one CSV block per
// factor matrix, so plotting tools can read factor columns directly:
//
//   # lifetensor cp-model
//   rank 3
//   dims 48 85 66
//   lambda 12.1,7.4,3.3          (descending)
//   seed 7                        (optional fit metadata, free-form keys)
//   [U]
//   label,c1,c2,c3
//   u00,0.12,0.03,0.2
//   ...
//   [V] ... [T] ...

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lifetensor/cp_model.hpp"
#include "lifetensor/dataset.hpp"
#include "lifetensor/text_io.hpp"

namespace lifetensor::io {

struct ModelFile {
  CPModel model;
  AxisLabels labels;
  /// Extra key/value fields in file order (seed, sweeps, relative_error, ...).
  std::vector<std::pair<std::string, std::string>> metadata;

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : metadata)
      if (k == key) return &v;
    return nullptr;
  }
};

inline std::string format_model(const ModelFile& file) {
  const CPModel& m = file.model;
  m.validate();
  const Dims d = m.dims();
  if (!file.labels.matches(d)) throw UsageError("model labels do not match model dimensions");
  std::string out = "# lifetensor cp-model\n";
  out += "rank " + std::to_string(m.rank()) + "\n";
  out += "dims " + std::to_string(d[0]) + " " + std::to_string(d[1]) + " " + std::to_string(d[2]) + "\n";
  out += "lambda ";
  for (Eigen::Index r = 0; r < m.lambda.size(); ++r)
    out += (r ? "," : "") + format_double(m.lambda(r));
  out += "\n";
  for (const auto& [k, v] : file.metadata) out += k + " " + v + "\n";

  auto block = [&](const char* name, const Matrix& f, auto label_of) {
    out += std::string("[") + name + "]\nlabel";
    for (Eigen::Index r = 0; r < f.cols(); ++r) out += ",c" + std::to_string(r + 1);
    out += "\n";
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      out += label_of(static_cast<std::size_t>(i));
      for (Eigen::Index r = 0; r < f.cols(); ++r) out += "," + format_double(f(i, r));
      out += "\n";
    }
  };
  block("U", m.u, [&](std::size_t i) { return file.labels.individuals[i]; });
  block("V", m.v, [&](std::size_t j) { return file.labels.variables[j]; });
  block("T", m.t, [&](std::size_t k) { return std::to_string(file.labels.days[k]); });
  return out;
}

inline ModelFile parse_model(std::string_view text, const std::string& source = "<model>") {
  LineReader reader(text, source);
  ModelFile file;
  std::string line;
  std::optional<std::size_t> rank;
  std::optional<Dims> dims;
  std::vector<double> lambda;
  std::string section;
  Matrix* target = nullptr;
  Eigen::Index row = 0;

  auto start_blocks = [&]() {
    if (!rank || !dims || lambda.size() != *rank)
      throw DataError(reader.where() + "rank, dims and lambda must precede the factor blocks");
    const auto r = static_cast<Eigen::Index>(*rank);
    file.model.lambda = Eigen::Map<Vector>(lambda.data(), r);
    file.model.u.resize(static_cast<Eigen::Index>((*dims)[0]), r);
    file.model.v.resize(static_cast<Eigen::Index>((*dims)[1]), r);
    file.model.t.resize(static_cast<Eigen::Index>((*dims)[2]), r);
  };

  while (reader.next(line)) {
    const std::string t(trim(line));
    if (t.empty() || (t.front() == '#' && section.empty())) continue;
    if (t == "[U]" || t == "[V]" || t == "[T]") {
      if (section.empty()) start_blocks();
      if (target && row != target->rows())
        throw DataError(reader.where() + "factor block " + section + " has too few rows");
      section = t;
      target = t == "[U]" ? &file.model.u : (t == "[V]" ? &file.model.v : &file.model.t);
      row = -1;  // expect the column header next
      continue;
    }
    if (section.empty()) {
      const auto sp = t.find(' ');
      const std::string key = t.substr(0, sp);
      const std::string value = sp == std::string::npos ? "" : std::string(trim(t.substr(sp + 1)));
      if (key == "rank") {
        rank = parse_int<std::size_t>(value);
        if (!rank || *rank == 0) throw DataError(reader.where() + "invalid rank");
      } else if (key == "dims") {
        const auto tk = tokens(value);
        if (tk.size() != 3) throw DataError(reader.where() + "dims needs three values");
        Dims d{};
        for (std::size_t m = 0; m < 3; ++m) {
          auto v = parse_int<std::size_t>(tk[m]);
          if (!v || *v == 0) throw DataError(reader.where() + "invalid dimension");
          d[m] = *v;
        }
        dims = d;
      } else if (key == "lambda") {
        for (const auto& f : split(value, ',')) {
          auto v = parse_double(f);
          if (!v) throw DataError(reader.where() + "invalid lambda value '" + f + "'");
          lambda.push_back(*v);
        }
      } else {
        file.metadata.emplace_back(key, value);
      }
      continue;
    }
    if (row < 0) {
      row = 0;
      continue;  // column header
    }
    const auto f = split(t, ',');
    if (f.size() != static_cast<std::size_t>(target->cols()) + 1)
      throw DataError(reader.where() + "expected label plus " + std::to_string(target->cols()) + " values");
    if (row >= target->rows()) throw DataError(reader.where() + "factor block " + section + " has too many rows");
    for (Eigen::Index r = 0; r < target->cols(); ++r) {
      auto v = parse_double(f[static_cast<std::size_t>(r) + 1]);
      if (!v) throw DataError(reader.where() + "invalid factor value '" + f[static_cast<std::size_t>(r) + 1] + "'");
      (*target)(row, r) = *v;
    }
    if (section == "[U]") file.labels.individuals.push_back(f[0]);
    else if (section == "[V]") file.labels.variables.push_back(f[0]);
    else {
      auto d = parse_int<long>(f[0]);
      if (!d) throw DataError(reader.where() + "invalid day label '" + f[0] + "'");
      file.labels.days.push_back(*d);
    }
    ++row;
  }
  if (section.empty()) throw DataError(source + ": no factor blocks");
  if (target && row != target->rows()) throw DataError(source + ": factor block " + section + " has too few rows");
  if (!file.labels.matches(file.model.dims()))
    throw DataError(source + ": factor blocks [U], [V] and [T] must all be present");
  return file;
}

inline ModelFile read_model(const std::filesystem::path& path) {
  return parse_model(read_file(path), path.string());
}

inline void write_model(const std::filesystem::path& path, const ModelFile& file) {
  write_file_atomic(path, format_model(file));
}

}  // namespace lifetensor::io
