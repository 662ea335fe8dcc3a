#pragma once

#include "rosenblatt/spectral.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace rosenblatt {

using Json = nlohmann::json;

//! Round-trip exact decimal form ("%.17g").
std::string format_double(double v);

std::string csv_text(const std::vector<std::string>& header, const Eigen::MatrixXd& rows);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header, const Eigen::MatrixXd& rows);
void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

Json vector_json(const Eigen::VectorXd& v);

//! Spectrum as (index, eigenvalue, cumulative coverage) rows.
Eigen::MatrixXd spectrum_table(const Spectrum& s);
Json spectrum_json(const Spectrum& s);
//! Writes `<stem>.csv` and `<stem>.json`.
void write_spectrum(const std::filesystem::path& stem, const Spectrum& s);

} // namespace rosenblatt
