#ifndef PRICELAB_AFD_FIT_HPP
#define PRICELAB_AFD_FIT_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pricelab/common.hpp"

namespace pricelab {

// Attribute/price table schema: which columns carry categorical
// attributes, which carries the price, and (optionally) which carries a
// stable record id. With no id column, ids are row numbers.
struct TableSchema {
  std::vector<std::string> attribute_columns;
  std::string price_column = "price";
  std::string id_column;  // empty -> synthesized "row<k>"
};

struct ProductRecord {
  std::string id;
  std::vector<std::string> levels;  // aligned with schema.attribute_columns
  double price = 0.0;
};

struct IngestResult {
  TableSchema schema;
  std::vector<ProductRecord> records;
  long skipped = 0;  // rows with unparseable or nonpositive price
};

// CSV with a header row. Missing/empty attribute cells become the
// reserved level "unknown". Rows whose price fails to parse (or is
// nonpositive) are skipped and counted.
IngestResult ingest_table(const std::string& path, const TableSchema& schema);

// One binary column per observed (attribute, level) pair; each row has
// exactly one 1 per attribute block. Column order: attributes in schema
// order, levels lexicographic within an attribute.
struct EncodedDesign {
  Eigen::MatrixXd x;  // n_records x n_columns
  std::vector<std::string> attributes;        // schema order
  std::vector<std::string> column_attribute;  // per column
  std::vector<std::string> column_level;      // per column
};

EncodedDesign one_hot_encode(const std::vector<ProductRecord>& records,
                             const std::vector<std::string>& attribute_columns);

struct FitResult {
  Eigen::VectorXd coefficients;  // one per encoded column
  std::vector<std::string> attributes;
  std::vector<std::string> column_attribute;
  std::vector<std::string> column_level;
  double intercept = 0.0;
  double r_squared_train = 0.0;
  double r_squared_test = 0.0;
  int n_features = 0;
  int n_records = 0;
  int n_train = 0;
  int n_test = 0;
  double lambda = 0.0;      // the value actually used
  bool lambda_fallback = false;
  bool constant_y = false;  // degenerate target variance; R^2 forced to 0
};

// Ridge (X'X + lambda I) beta = X'y with the intercept fitted via column
// centering and excluded from the penalty. 80/20 train/test split keyed by
// a hash of (split_seed, record id), so membership survives record
// reordering. lambda = 0 on a rank-deficient gram falls back to 1e-8 with
// a logged warning (one-hot blocks are always collinear, so this always
// triggers at lambda = 0).
FitResult ridge_fit(const EncodedDesign& design, const Eigen::VectorXd& y,
                    double lambda, std::uint64_t split_seed,
                    const std::vector<std::string>& record_ids);

struct Contribution {
  std::string attribute;
  std::string level;
  double value = 0.0;
  bool unknown = false;  // level unseen at fit time; zero contribution
};

struct Decomposition {
  std::vector<Contribution> items;  // one per attribute, schema order
  double intercept = 0.0;
  double predicted = 0.0;  // intercept + sum of contributions, exactly
};

// Itemized additive price decomposition for one record.
Decomposition export_contributions(const FitResult& fit,
                                   const ProductRecord& record);

// --- result files ----------------------------------------------------

// CSV: attribute,level,coefficient.
void write_coefficients_csv(const std::string& path, const FitResult& fit);
// JSON: R^2 train/test, lambda, record/feature counts, skip count, flags.
void write_fit_summary_json(const std::string& path, const FitResult& fit,
                            long skipped);
// CSV: id,predicted,price,intercept,<attr>=<level>:<value>... flattened as
// one row per (record, attribute).
void write_decompositions_csv(const std::string& path, const FitResult& fit,
                              const std::vector<ProductRecord>& records);

}  // namespace pricelab

#endif
