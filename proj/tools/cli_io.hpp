#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace rdphase::cli {

using Json = nlohmann::ordered_json;

// Shortest round-trip decimal form, independent of the locale; "inf", "-inf", "nan" for non-finite values.
std::string format_double(double x);

using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  explicit Table(std::vector<std::string> cols) : columns(std::move(cols)) {}
  void add(std::vector<Cell> row);
  std::string to_csv() const;
  std::string to_json() const;
};

std::string sha256_hex(const std::string& bytes);

// Writes to a temporary file in the same directory, then renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& bytes);

// Output directory of one run. Opening removes a previous manifest and leaves a sentinel;
// finish writes the manifest and removes the sentinel.
class RunDir {
 public:
  static constexpr const char* manifest_name = "manifest.json";
  static constexpr const char* sentinel_name = "RUN_INCOMPLETE";

  explicit RunDir(std::filesystem::path dir);
  const std::filesystem::path& path() const { return dir_; }

  void write(const std::string& name, const std::string& bytes);
  void write_table(const std::string& stem, const Table& t, const std::string& format);
  void finish(Json manifest);

 private:
  std::filesystem::path dir_;
  Json outputs_ = Json::array();
};

}  // namespace rdphase::cli
