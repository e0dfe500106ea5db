#pragma once

// Output bundle: CSV series, JSON reports and a manifest with a SHA-256 of
// every file written.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "kldobs/synthesis.hpp"

namespace kldobs::bench {

using Json = nlohmann::ordered_json;

/// Columns of equal length; the step index column is prepended on write.
struct Series {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  void add(std::string name, std::vector<double> values);
  std::size_t length() const;
};

/// 17 significant digits ("%.17g"); "nan", "inf" and "-inf" for
/// non-finite values.
std::string format_double(double v);

/// Header row, then one row per kept step (multiples of `stride` and the
/// last step): step, values...
std::string render_csv(const Series& s, int stride = 1);

std::string sha256_hex(const std::string& bytes);

class Bundle {
 public:
  explicit Bundle(std::filesystem::path root);
  ~Bundle();

  Bundle(const Bundle&) = delete;
  Bundle& operator=(const Bundle&) = delete;

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Writes `<name>.csv` decimated by `stride` and, when stride > 1,
  /// `<name>_full.csv` at full resolution.
  void write_series(const std::string& name, const Series& s, int stride);
  void write_json(const std::string& name, const Json& j);
  void write_text(const std::string& name, const std::string& text);

  /// Writes manifest.json: `meta` plus the file list with hashes.
  void finalize(Json meta);

  /// Removes every file written so far and any directories this bundle
  /// created. Called by the destructor unless finalize succeeded.
  void discard() noexcept;

 private:
  struct Entry {
    std::string name;
    std::string sha256;
    std::size_t bytes = 0;
  };

  std::filesystem::path root_;
  std::vector<std::filesystem::path> created_dirs_;
  std::vector<Entry> files_;
  bool finalized_ = false;
};

Json to_json(const Matrix& m);
Json to_json(const Vector& v);
Json to_json(double v);  ///< null for NaN/Inf

/// Wall time is included only when `timings` is set.
Json report_to_json(const DesignReport& r, bool timings);

}  // namespace kldobs::bench
