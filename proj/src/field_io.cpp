#include "fpreg/field_io.hpp"

#include "fpreg/error.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace fpreg {

namespace {

constexpr std::array<char, 8> kMagic{'F', 'P', 'F', 'L', 'D', '1', '\0', '\0'};

static_assert(std::endian::native == std::endian::little, "binary field format assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<unsigned char, 4> b{static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                 static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

}  // namespace

nlohmann::json field_to_json(const FeField& field, const std::string& mesh_path) {
  nlohmann::json doc;
  doc["space"] = {{"degree", field.fe().degree()}, {"mesh", mesh_path}};
  doc["coeffs"] = std::vector<double>(field.coeffs.data(), field.coeffs.data() + field.coeffs.size());
  return doc;
}

StoredField field_from_json(const nlohmann::json& doc) {
  try {
    StoredField out;
    out.degree = doc.at("space").at("degree").get<int>();
    out.mesh_path = doc.at("space").value("mesh", std::string());
    const auto values = doc.at("coeffs").get<std::vector<double>>();
    out.coeffs = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("field JSON: ") + e.what());
  }
}

void write_field_binary(const FeField& field, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, static_cast<std::uint32_t>(field.fe().degree()));
  put_u32(out, static_cast<std::uint32_t>(field.coeffs.size()));
  out.write(reinterpret_cast<const char*>(field.coeffs.data()),
            static_cast<std::streamsize>(field.coeffs.size() * sizeof(double)));
  if (!out) throw FormatError("failed writing " + path.string());
}

StoredField read_field_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::array<unsigned char, 16> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != 16 || std::memcmp(header.data(), kMagic.data(), 6) != 0)
    throw FormatError(path.string() + ": not an FPFLD1 file");
  StoredField out;
  out.degree = static_cast<int>(get_u32(header.data() + 8));
  const std::uint32_t n = get_u32(header.data() + 12);
  out.coeffs.resize(n);
  in.read(reinterpret_cast<char*>(out.coeffs.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(double))
    throw FormatError(path.string() + ": truncated coefficient block");
  return out;
}

FeField bind_field(std::shared_ptr<const FeSpace> space, StoredField stored) {
  if (stored.degree != space->degree())
    throw SpaceMismatch("stored field has degree " + std::to_string(stored.degree) + ", space has " +
                        std::to_string(space->degree()));
  return FeField(std::move(space), std::move(stored.coeffs));
}

}  // namespace fpreg
