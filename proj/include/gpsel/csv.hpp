#pragma once

#include <string>
#include <vector>

#include "gpsel/dataset.hpp"

namespace gpsel {

enum class CategoricalPolicy { kOneHotDropFirst, kReject };

// Declarative preprocessing for one CSV dataset. Kept in a committed JSON
// file per dataset so the choices are explicit and repeatable.
struct CsvRecipe {
  std::string target;
  std::vector<std::string> drop_columns;
  std::vector<std::string> categorical_columns;  // force non-numeric treatment
  CategoricalPolicy categorical_policy = CategoricalPolicy::kOneHotDropFirst;
  bool drop_columns_with_missing = false;  // otherwise rows with missing values are dropped
  std::vector<std::string> na_values = {"", "NA", "?"};
};

CsvRecipe load_recipe(const std::string& path);

struct LoadedCsv {
  Dataset dataset;
  int n_rows_file = 0;
  int n_rows_dropped = 0;
  std::vector<std::string> dropped_columns;
};

// Header row required; comma separation with double-quote escaping. Numeric
// columns are standardized, categoricals one-hot encoded (first level
// dropped) or rejected per policy, and the target extracted and centered.
LoadedCsv load_csv(const std::string& path, const CsvRecipe& recipe);
LoadedCsv load_csv(const std::string& path, const std::string& target_column,
                   CategoricalPolicy policy = CategoricalPolicy::kOneHotDropFirst);

}  // namespace gpsel
