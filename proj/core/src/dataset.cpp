#include "pals/dataset.hpp"

#include "pals/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace pals {

Dataset::Dataset(Eigen::MatrixXd x, Eigen::VectorXd y) : X(std::move(x)), Y(std::move(y)) {
    if (X.rows() != Y.size())
        throw DataError("dataset: X has " + std::to_string(X.rows()) + " rows but Y has " +
                        std::to_string(Y.size()) + " entries");
    if (X.rows() < 2) throw DataError("dataset: need at least 2 observations, got " + std::to_string(X.rows()));
    if (X.cols() < 1) throw DataError("dataset: need at least 1 predictor");
    if (!X.allFinite() || !Y.allFinite()) throw DataError("dataset: non-finite entries present");
}

Eigen::MatrixXd covariance(const Dataset& data) {
    const auto n = static_cast<double>(data.n());
    const Eigen::VectorXd mean = data.X.colwise().mean();
    const Eigen::MatrixXd centered = data.X.rowwise() - mean.transpose();
    return (centered.transpose() * centered) / n;
}

Eigen::MatrixXd Standardizer::whiten(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean.transpose()) * whitener;
}

Eigen::VectorXd Standardizer::coef_to_original(const Eigen::VectorXd& theta) const {
    return whitener * theta;
}

std::pair<Standardizer, Eigen::MatrixXd> standardize(const Dataset& data) {
    Standardizer s;
    s.mean = data.X.colwise().mean();
    s.cov = covariance(data);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.cov);
    if (eig.info() != Eigen::Success) throw NumericalError("standardize: eigendecomposition of covariance failed");
    const Eigen::VectorXd& values = eig.eigenvalues();
    const Eigen::MatrixXd& vectors = eig.eigenvectors();

    const double largest = values.maxCoeff();
    s.eigenvalue_floor = largest > 0.0 ? 1e-10 * largest : 1e-10;
    Eigen::VectorXd clamped = values;
    for (Eigen::Index i = 0; i < clamped.size(); ++i) {
        if (clamped(i) < s.eigenvalue_floor) {
            clamped(i) = s.eigenvalue_floor;
            s.clamped = true;
        }
    }
    const Eigen::ArrayXd root = clamped.array().sqrt();
    s.whitener = vectors * root.inverse().matrix().asDiagonal() * vectors.transpose();
    s.sqrt_cov = vectors * root.matrix().asDiagonal() * vectors.transpose();

    Eigen::MatrixXd z = s.whiten(data.X);
    return {std::move(s), std::move(z)};
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (std::isspace(static_cast<unsigned char>(s[b])) != 0)) ++b;
    while (e > b && (std::isspace(static_cast<unsigned char>(s[e - 1])) != 0)) --e;
    return s.substr(b, e - b);
}

// One CSV record; handles quoted fields with doubled-quote escapes.
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
            fields.push_back(trim(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(trim(field));
    return fields;
}

bool is_missing(const std::string& cell) {
    if (cell.empty()) return true;
    std::string lower(cell);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return lower == "na" || lower == "nan";
}

bool parse_number(const std::string& cell, double& out) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::size_t resolve_column(const std::vector<std::string>& header, const std::string& spec, const char* what) {
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == spec) return j;
    // Fall back to a 0-based index when the spec is all digits.
    if (!spec.empty() && std::all_of(spec.begin(), spec.end(), [](unsigned char c) { return std::isdigit(c) != 0; })) {
        const std::size_t idx = std::stoul(spec);
        if (idx < header.size()) return idx;
        throw DataError(std::string(what) + " column index " + spec + " out of range (file has " +
                        std::to_string(header.size()) + " columns)");
    }
    throw DataError(std::string(what) + " column '" + spec + "' not found in header");
}

} // namespace

CsvResult load_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file '" + path + "'");
    if (options.response.empty()) throw DataError("no response column specified");

    std::string line;
    if (!std::getline(in, line)) throw DataError("file '" + path + "' is empty");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF && static_cast<unsigned char>(line[1]) == 0xBB &&
        static_cast<unsigned char>(line[2]) == 0xBF)
        line.erase(0, 3); // UTF-8 BOM
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_csv_line(line);

    const std::size_t response_idx = resolve_column(header, options.response, "response");
    std::vector<std::size_t> filter_idx;
    filter_idx.reserve(options.keep_where.size());
    for (const auto& [col, value] : options.keep_where) {
        (void)value;
        filter_idx.push_back(resolve_column(header, col, "filter"));
    }
    std::vector<bool> dropped(header.size(), false);
    for (const auto& col : options.drop_columns) dropped[resolve_column(header, col, "drop")] = true;
    if (dropped[response_idx]) throw DataError("response column '" + header[response_idx] + "' is also dropped");

    std::vector<std::size_t> keep_idx; // predictor columns, in file order
    for (std::size_t j = 0; j < header.size(); ++j)
        if (j != response_idx && !dropped[j]) keep_idx.push_back(j);
    if (keep_idx.empty()) throw DataError("no predictor columns left after drops");

    std::vector<std::vector<double>> rows;
    std::vector<double> responses;
    std::size_t dropped_missing = 0, dropped_filtered = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(cells.size()));

        auto cell_value = [&](std::size_t j, bool& missing) {
            const std::string& cell = cells[j];
            if (is_missing(cell)) {
                missing = true;
                return 0.0;
            }
            double v = 0.0;
            if (!parse_number(cell, v))
                throw DataError("line " + std::to_string(line_no) + ", column '" + header[j] + "': cannot parse '" +
                                cell + "' as a number");
            return v;
        };

        bool missing = false;
        bool filtered = false;
        for (std::size_t k = 0; k < filter_idx.size() && !missing; ++k) {
            const double v = cell_value(filter_idx[k], missing);
            if (!missing && v != options.keep_where[k].second) filtered = true;
        }
        if (missing) {
            ++dropped_missing;
            continue;
        }
        if (filtered) {
            ++dropped_filtered;
            continue;
        }

        std::vector<double> row(keep_idx.size());
        for (std::size_t k = 0; k < keep_idx.size() && !missing; ++k) row[k] = cell_value(keep_idx[k], missing);
        double y = 0.0;
        if (!missing) y = cell_value(response_idx, missing);
        if (missing) {
            ++dropped_missing;
            continue;
        }
        rows.push_back(std::move(row));
        responses.push_back(y);
    }

    if (rows.size() < 2)
        throw DataError("file '" + path + "': only " + std::to_string(rows.size()) + " usable rows (" +
                        std::to_string(dropped_missing) + " dropped for missing values)");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(keep_idx.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < keep_idx.size(); ++k) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        y(static_cast<Eigen::Index>(i)) = responses[i];
    }

    CsvResult result{Dataset(std::move(x), std::move(y)), {}, header[response_idx], dropped_missing, dropped_filtered};
    for (const std::size_t j : keep_idx) result.predictor_names.push_back(header[j]);
    return result;
}

} // namespace pals
