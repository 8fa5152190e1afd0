#include "pricelab/afd_fit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace pricelab {

namespace {

// One CSV line into fields; handles quoted fields with doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line) {
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

bool parse_price(const std::string& text, double* out) {
  if (text.empty()) return false;
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    return false;
  }
  // Trailing junk ("12abc") disqualifies the cell.
  while (used < text.size() && std::isspace(static_cast<unsigned char>(
                                   text[used])))
    ++used;
  if (used != text.size()) return false;
  if (!std::isfinite(value) || value <= 0.0) return false;
  *out = value;
  return true;
}

}  // namespace

IngestResult ingest_table(const std::string& path, const TableSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("afdfit: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("afdfit: " + path + " is empty");
  const std::vector<std::string> header = split_csv_line(line);

  auto find_column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };

  std::vector<std::string> missing;
  std::vector<int> attr_idx;
  for (const auto& name : schema.attribute_columns) {
    const int idx = find_column(name);
    if (idx < 0) missing.push_back(name);
    attr_idx.push_back(idx);
  }
  const int price_idx = find_column(schema.price_column);
  if (price_idx < 0) missing.push_back(schema.price_column);
  int id_idx = -1;
  if (!schema.id_column.empty()) {
    id_idx = find_column(schema.id_column);
    if (id_idx < 0) missing.push_back(schema.id_column);
  }
  if (!missing.empty()) {
    std::string msg = "afdfit: " + path + " is missing columns:";
    for (const auto& name : missing) msg += " " + name;
    throw ConfigError(msg);
  }

  IngestResult result;
  result.schema = schema;
  long row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = split_csv_line(line);
    ProductRecord rec;
    double price = 0.0;
    if (price_idx >= static_cast<int>(fields.size()) ||
        !parse_price(fields[price_idx], &price)) {
      ++result.skipped;
      continue;
    }
    rec.price = price;
    rec.id = id_idx >= 0 && id_idx < static_cast<int>(fields.size())
                 ? fields[id_idx]
                 : "row" + std::to_string(row);
    for (int idx : attr_idx) {
      const bool present =
          idx < static_cast<int>(fields.size()) && !fields[idx].empty();
      rec.levels.push_back(present ? fields[idx] : "unknown");
    }
    result.records.push_back(std::move(rec));
  }
  if (result.records.empty())
    throw ConfigError("afdfit: " + path + " has no usable rows (" +
                      std::to_string(result.skipped) + " skipped)");
  return result;
}

EncodedDesign one_hot_encode(
    const std::vector<ProductRecord>& records,
    const std::vector<std::string>& attribute_columns) {
  if (records.empty()) throw ConfigError("one_hot_encode: no records");
  const std::size_t n_attr = attribute_columns.size();
  for (const auto& rec : records)
    if (rec.levels.size() != n_attr)
      throw ConfigError("one_hot_encode: record '" + rec.id +
                        "' has the wrong number of attribute values");

  // Observed levels per attribute; std::map gives the lexicographic order.
  std::vector<std::map<std::string, int>> levels(n_attr);
  for (const auto& rec : records)
    for (std::size_t a = 0; a < n_attr; ++a) levels[a][rec.levels[a]] = 0;

  EncodedDesign design;
  design.attributes = attribute_columns;
  int col = 0;
  for (std::size_t a = 0; a < n_attr; ++a)
    for (auto& [level, idx] : levels[a]) {
      idx = col++;
      design.column_attribute.push_back(attribute_columns[a]);
      design.column_level.push_back(level);
    }
  design.x = Eigen::MatrixXd::Zero(static_cast<int>(records.size()), col);
  for (std::size_t r = 0; r < records.size(); ++r)
    for (std::size_t a = 0; a < n_attr; ++a)
      design.x(static_cast<int>(r), levels[a].at(records[r].levels[a])) = 1.0;
  return design;
}

namespace {

double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& pred,
                 bool* constant_y) {
  const double mean = y.mean();
  const double ss_tot = (y.array() - mean).square().sum();
  if (ss_tot <= 1e-12 * std::max(1.0, mean * mean) *
                    static_cast<double>(y.size())) {
    if (constant_y) *constant_y = true;
    return 0.0;
  }
  const double ss_res = (y - pred).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

}  // namespace

FitResult ridge_fit(const EncodedDesign& design, const Eigen::VectorXd& y,
                    double lambda, std::uint64_t split_seed,
                    const std::vector<std::string>& record_ids) {
  const int n = static_cast<int>(design.x.rows());
  const int k = static_cast<int>(design.x.cols());
  if (n < 2) throw ConfigError("ridge_fit: need at least 2 records");
  if (y.size() != n || static_cast<int>(record_ids.size()) != n)
    throw ConfigError("ridge_fit: record count mismatch");
  if (lambda < 0) throw ConfigError("ridge_fit: lambda must be >= 0");

  // 80/20 split keyed by a hash of (seed, id): membership is a property
  // of the record, not its position.
  std::vector<bool> is_test(n);
  int n_test = 0;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t h =
        fnv1a(record_ids[i], fnv1a(std::to_string(split_seed) + "|"));
    is_test[i] = (h % 5) == 0;
    n_test += is_test[i];
  }
  if (n_test == 0) {
    // Force a nonempty test set deterministically: largest hash goes to it.
    int pick = 0;
    std::uint64_t best = 0;
    for (int i = 0; i < n; ++i) {
      const std::uint64_t h =
          fnv1a(record_ids[i], fnv1a(std::to_string(split_seed) + "|"));
      if (h >= best) { best = h; pick = i; }
    }
    is_test[pick] = true;
    n_test = 1;
  } else if (n_test == n) {
    int pick = 0;
    std::uint64_t best = UINT64_MAX;
    for (int i = 0; i < n; ++i) {
      const std::uint64_t h =
          fnv1a(record_ids[i], fnv1a(std::to_string(split_seed) + "|"));
      if (h <= best) { best = h; pick = i; }
    }
    is_test[pick] = false;
    n_test = n - 1;
  }
  const int n_train = n - n_test;

  Eigen::MatrixXd x_train(n_train, k), x_test(n_test, k);
  Eigen::VectorXd y_train(n_train), y_test(n_test);
  for (int i = 0, tr = 0, te = 0; i < n; ++i) {
    if (is_test[i]) {
      x_test.row(te) = design.x.row(i);
      y_test[te++] = y[i];
    } else {
      x_train.row(tr) = design.x.row(i);
      y_train[tr++] = y[i];
    }
  }

  const Eigen::RowVectorXd x_mean = x_train.colwise().mean();
  const double y_mean = y_train.mean();
  const Eigen::MatrixXd xc = x_train.rowwise() - x_mean;
  const Eigen::VectorXd yc = y_train.array() - y_mean;

  Eigen::MatrixXd gram = xc.transpose() * xc;
  double lambda_used = lambda;
  bool fallback = false;
  if (lambda == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram,
                                                      Eigen::EigenvaluesOnly);
    const double top = std::max(es.eigenvalues().maxCoeff(), 1e-30);
    if (es.eigenvalues().minCoeff() < 1e-10 * top) {
      lambda_used = 1e-8;
      fallback = true;
      std::cerr << "[afdfit] lambda = 0 with a rank-deficient gram matrix; "
                   "falling back to lambda = 1e-8\n";
    }
  }
  gram.diagonal().array() += lambda_used;
  const Eigen::VectorXd beta = gram.ldlt().solve(xc.transpose() * yc);

  FitResult fit;
  fit.coefficients = beta;
  fit.attributes = design.attributes;
  fit.column_attribute = design.column_attribute;
  fit.column_level = design.column_level;
  fit.intercept = y_mean - x_mean.dot(beta);
  fit.n_features = k;
  fit.n_records = n;
  fit.n_train = n_train;
  fit.n_test = n_test;
  fit.lambda = lambda_used;
  fit.lambda_fallback = fallback;

  const Eigen::VectorXd pred_train =
      (x_train * beta).array() + fit.intercept;
  const Eigen::VectorXd pred_test = (x_test * beta).array() + fit.intercept;
  fit.r_squared_train = r_squared(y_train, pred_train, &fit.constant_y);
  fit.r_squared_test = r_squared(y_test, pred_test, &fit.constant_y);
  return fit;
}

Decomposition export_contributions(const FitResult& fit,
                                   const ProductRecord& record) {
  if (record.levels.size() != fit.attributes.size())
    throw ConfigError("export_contributions: record '" + record.id +
                      "' does not match the fitted schema");
  Decomposition dec;
  dec.intercept = fit.intercept;
  double total = fit.intercept;
  for (std::size_t a = 0; a < fit.attributes.size(); ++a) {
    Contribution c;
    c.attribute = fit.attributes[a];
    c.level = record.levels[a];
    c.unknown = true;
    for (std::size_t col = 0; col < fit.column_level.size(); ++col)
      if (fit.column_attribute[col] == c.attribute &&
          fit.column_level[col] == c.level) {
        c.value = fit.coefficients[static_cast<int>(col)];
        c.unknown = false;
        break;
      }
    total += c.value;
    dec.items.push_back(std::move(c));
  }
  dec.predicted = total;
  return dec;
}

void write_coefficients_csv(const std::string& path, const FitResult& fit) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("cannot open " + path + " for writing");
  out << "attribute,level,coefficient\n";
  for (std::size_t col = 0; col < fit.column_level.size(); ++col)
    out << fit.column_attribute[col] << ',' << fit.column_level[col] << ','
        << format_g9(fit.coefficients[static_cast<int>(col)]) << '\n';
}

void write_fit_summary_json(const std::string& path, const FitResult& fit,
                            long skipped) {
  nlohmann::json j;
  j["r_squared_train"] = fit.r_squared_train;
  j["r_squared_test"] = fit.r_squared_test;
  j["lambda"] = fit.lambda;
  j["lambda_fallback"] = fit.lambda_fallback;
  j["constant_y"] = fit.constant_y;
  j["intercept"] = fit.intercept;
  j["n_features"] = fit.n_features;
  j["n_records"] = fit.n_records;
  j["n_train"] = fit.n_train;
  j["n_test"] = fit.n_test;
  j["skipped_rows"] = skipped;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

void write_decompositions_csv(const std::string& path, const FitResult& fit,
                              const std::vector<ProductRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("cannot open " + path + " for writing");
  out << "id,attribute,level,contribution,intercept,predicted,price\n";
  for (const auto& rec : records) {
    const Decomposition dec = export_contributions(fit, rec);
    for (const auto& item : dec.items)
      out << rec.id << ',' << item.attribute << ',' << item.level << ','
          << format_g9(item.value) << ',' << format_g9(dec.intercept) << ','
          << format_g9(dec.predicted) << ',' << format_g9(rec.price) << '\n';
  }
}

}  // namespace pricelab
