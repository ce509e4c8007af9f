#pragma once

#include "fpreg/fem.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace fpreg {

/// Raw coefficients read back from disk, before binding to a space.
struct StoredField {
  int degree = 1;
  std::string mesh_path;
  Eigen::VectorXd coeffs;
};

/// `{"space":{"degree":k,"mesh":"<path>"},"coeffs":[...]}`
nlohmann::json field_to_json(const FeField& field, const std::string& mesh_path);
StoredField field_from_json(const nlohmann::json& doc);

/// Flat binary layout: magic "FPFLD1", two zero pad bytes, u32 degree,
/// u32 length (all little-endian), then `length` float64 values.
void write_field_binary(const FeField& field, const std::filesystem::path& path);
StoredField read_field_binary(const std::filesystem::path& path);

/// Binds stored coefficients to a space; throws SpaceMismatch on a degree or
/// length mismatch.
FeField bind_field(std::shared_ptr<const FeSpace> space, StoredField stored);

}  // namespace fpreg
