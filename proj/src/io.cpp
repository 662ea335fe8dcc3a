#include "rosenblatt/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rosenblatt {

std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_text(const std::vector<std::string>& header, const Eigen::MatrixXd& rows)
{
  if (!header.empty() && rows.size() > 0 && static_cast<Eigen::Index>(header.size()) != rows.cols())
    throw std::invalid_argument("csv_text: header width does not match the table");
  std::string out;
  for (std::size_t k = 0; k < header.size(); ++k) {
    out += header[k];
    out += k + 1 < header.size() ? ',' : '\n';
  }
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (Eigen::Index k = 0; k < rows.cols(); ++k) {
      out += format_double(rows(i, k));
      out += k + 1 < rows.cols() ? ',' : '\n';
    }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f)
    throw std::runtime_error("write failed for " + path.string());
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header, const Eigen::MatrixXd& rows)
{
  write_text(path, csv_text(header, rows));
}

void write_json(const std::filesystem::path& path, const Json& j)
{
  write_text(path, j.dump(2) + "\n");
}

Json vector_json(const Eigen::VectorXd& v)
{
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::MatrixXd spectrum_table(const Spectrum& s)
{
  Eigen::MatrixXd t(s.size(), 3);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    acc += s.eigenvalues(k) * s.eigenvalues(k);
    t(k, 0) = static_cast<double>(k + 1);
    t(k, 1) = s.eigenvalues(k);
    t(k, 2) = s.total_sq > 0.0 ? acc / s.total_sq : 1.0;
  }
  return t;
}

Json spectrum_json(const Spectrum& s)
{
  Json j;
  j["order"] = s.order == Spectrum::Order::value ? "value" : "magnitude";
  j["retained"] = s.size();
  j["full_size"] = s.full_size;
  j["coverage"] = s.coverage;
  j["sum_sq"] = s.total_sq;
  j["trace"] = s.total_sum;
  j["eigenvalues"] = vector_json(s.eigenvalues);
  if (s.extrapolated()) {
    j["tail"] = {{"start", s.tail_start},
                 {"head_sq", s.head_sq},
                 {"tail_sq", s.tail_sq},
                 {"extrapolated_variance", s.extrapolated_variance()}};
  }
  return j;
}

void write_spectrum(const std::filesystem::path& stem, const Spectrum& s)
{
  auto csv = stem;
  csv += ".csv";
  auto js = stem;
  js += ".json";
  write_csv(csv, {"index", "eigenvalue", "coverage"}, spectrum_table(s));
  write_json(js, spectrum_json(s));
}

} // namespace rosenblatt
