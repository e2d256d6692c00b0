#include "gpsel/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gpsel/errors.hpp"

namespace gpsel {

namespace {

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trimmed(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trimmed(s);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

}  // namespace

CsvRecipe load_recipe(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open recipe file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("cannot parse recipe file " + path + ": " + e.what());
  }
  CsvRecipe r;
  r.target = j.at("target").get<std::string>();
  if (j.contains("drop_columns")) r.drop_columns = j["drop_columns"].get<std::vector<std::string>>();
  if (j.contains("categorical_columns")) {
    r.categorical_columns = j["categorical_columns"].get<std::vector<std::string>>();
  }
  if (j.contains("categorical_policy")) {
    const std::string p = j["categorical_policy"].get<std::string>();
    if (p == "one_hot_drop_first") {
      r.categorical_policy = CategoricalPolicy::kOneHotDropFirst;
    } else if (p == "reject") {
      r.categorical_policy = CategoricalPolicy::kReject;
    } else {
      throw SchemaError("unknown categorical_policy '" + p + "' in " + path);
    }
  }
  if (j.contains("drop_columns_with_missing")) {
    r.drop_columns_with_missing = j["drop_columns_with_missing"].get<bool>();
  }
  if (j.contains("na_values")) r.na_values = j["na_values"].get<std::vector<std::string>>();
  return r;
}

LoadedCsv load_csv(const std::string& path, const CsvRecipe& recipe) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file: " + path);
  std::vector<std::string> header = parse_csv_line(line);
  for (auto& h : header) h = trimmed(h);

  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (trimmed(line).empty()) continue;
    auto fields = parse_csv_line(line);
    if (fields.size() != header.size()) {
      throw IoError("row " + std::to_string(rows.size() + 2) + " has " +
                    std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(header.size()));
    }
    rows.push_back(std::move(fields));
  }

  LoadedCsv out;
  out.n_rows_file = static_cast<int>(rows.size());

  const std::set<std::string> na(recipe.na_values.begin(), recipe.na_values.end());
  auto is_missing = [&](const std::string& s) { return na.count(trimmed(s)) > 0; };

  std::vector<int> keep_cols;
  int target_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == recipe.target) {
      target_col = static_cast<int>(c);
      continue;
    }
    if (std::find(recipe.drop_columns.begin(), recipe.drop_columns.end(), header[c]) !=
        recipe.drop_columns.end()) {
      out.dropped_columns.push_back(header[c]);
      continue;
    }
    keep_cols.push_back(static_cast<int>(c));
  }
  if (target_col < 0) throw InvalidArgument("target column '" + recipe.target + "' not found");

  if (recipe.drop_columns_with_missing) {
    std::vector<int> complete;
    for (int c : keep_cols) {
      const bool has_missing = std::any_of(rows.begin(), rows.end(), [&](const auto& r) {
        return is_missing(r[static_cast<std::size_t>(c)]);
      });
      if (has_missing) {
        out.dropped_columns.push_back(header[static_cast<std::size_t>(c)]);
      } else {
        complete.push_back(c);
      }
    }
    keep_cols = std::move(complete);
  }

  // Rows with any remaining missing value (including the target) are dropped.
  std::vector<int> keep_rows;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    bool complete = !is_missing(rows[r][static_cast<std::size_t>(target_col)]);
    for (int c : keep_cols) {
      if (!complete) break;
      if (is_missing(rows[r][static_cast<std::size_t>(c)])) complete = false;
    }
    if (complete) keep_rows.push_back(static_cast<int>(r));
  }
  out.n_rows_dropped = static_cast<int>(rows.size()) - static_cast<int>(keep_rows.size());
  if (keep_rows.size() < 10) {
    throw InvalidArgument("fewer than 10 complete rows after missing-value drops");
  }

  const auto forced_cat = [&](const std::string& name) {
    return std::find(recipe.categorical_columns.begin(), recipe.categorical_columns.end(),
                     name) != recipe.categorical_columns.end();
  };

  std::vector<std::vector<double>> columns;
  std::vector<std::string> names;
  for (int c : keep_cols) {
    const std::string& name = header[static_cast<std::size_t>(c)];
    bool numeric = !forced_cat(name);
    std::vector<double> values(keep_rows.size());
    if (numeric) {
      for (std::size_t i = 0; i < keep_rows.size(); ++i) {
        if (!parse_double(rows[static_cast<std::size_t>(keep_rows[i])][static_cast<std::size_t>(c)],
                          values[i])) {
          numeric = false;
          break;
        }
      }
    }
    if (numeric) {
      columns.push_back(std::move(values));
      names.push_back(name);
      continue;
    }
    if (recipe.categorical_policy == CategoricalPolicy::kReject) {
      throw InvalidArgument("column '" + name + "' is not numeric");
    }
    // One-hot with the lexicographically first level dropped.
    std::set<std::string> levels;
    for (int r : keep_rows) {
      levels.insert(trimmed(rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]));
    }
    bool first = true;
    for (const auto& level : levels) {
      if (first) {
        first = false;
        continue;
      }
      std::vector<double> indicator(keep_rows.size());
      for (std::size_t i = 0; i < keep_rows.size(); ++i) {
        indicator[i] = trimmed(rows[static_cast<std::size_t>(keep_rows[i])]
                                   [static_cast<std::size_t>(c)]) == level
                           ? 1.0
                           : 0.0;
      }
      columns.push_back(std::move(indicator));
      names.push_back(name + "=" + level);
    }
  }
  if (columns.empty()) throw InvalidArgument("no usable input columns");

  Eigen::VectorXd y(static_cast<Eigen::Index>(keep_rows.size()));
  for (std::size_t i = 0; i < keep_rows.size(); ++i) {
    double v = 0.0;
    if (!parse_double(rows[static_cast<std::size_t>(keep_rows[i])][static_cast<std::size_t>(target_col)],
                      v)) {
      throw InvalidArgument("target column '" + recipe.target + "' is not numeric");
    }
    y[static_cast<Eigen::Index>(i)] = v;
  }

  Eigen::MatrixXd x(static_cast<Eigen::Index>(keep_rows.size()),
                    static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    for (std::size_t i = 0; i < keep_rows.size(); ++i) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = columns[j][i];
    }
  }

  out.dataset = Dataset::from_raw(std::move(x), std::move(y), std::move(names));
  return out;
}

LoadedCsv load_csv(const std::string& path, const std::string& target_column,
                   CategoricalPolicy policy) {
  CsvRecipe recipe;
  recipe.target = target_column;
  recipe.categorical_policy = policy;
  return load_csv(path, recipe);
}

}  // namespace gpsel
