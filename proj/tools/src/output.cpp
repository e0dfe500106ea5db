#include "kldobs/bench/output.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "kldobs/error.hpp"

namespace kldobs::bench {

namespace fs = std::filesystem;

void Series::add(std::string name, std::vector<double> values) {
  if (!columns.empty() && values.size() != columns.front().size()) {
    raise(ErrorKind::kDimension, "series column '" + name + "' has a different length");
  }
  names.push_back(std::move(name));
  columns.push_back(std::move(values));
}

std::size_t Series::length() const { return columns.empty() ? 0 : columns.front().size(); }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string render_csv(const Series& s, int stride) {
  if (stride < 1) stride = 1;
  std::string out = "step";
  for (const auto& n : s.names) out += "," + n;
  out += "\n";
  const std::size_t n = s.length();
  for (std::size_t k = 0; k < n; ++k) {
    if (k % static_cast<std::size_t>(stride) != 0 && k + 1 != n) continue;
    out += std::to_string(k);
    for (const auto& col : s.columns) out += "," + format_double(col[k]);
    out += "\n";
  }
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    raise(ErrorKind::kNumericalFailure, "SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

Bundle::Bundle(fs::path root) : root_(std::move(root)) {}

Bundle::~Bundle() {
  if (!finalized_) discard();
}

void Bundle::write_text(const std::string& name, const std::string& text) {
  const fs::path path = root_ / name;
  // Record each missing ancestor so discard() can remove exactly those.
  std::vector<fs::path> missing;
  for (fs::path p = path.parent_path(); !p.empty() && !fs::exists(p); p = p.parent_path()) missing.push_back(p);
  fs::create_directories(path.parent_path());
  created_dirs_.insert(created_dirs_.end(), missing.begin(), missing.end());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::kConfig, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) raise(ErrorKind::kConfig, "failed writing " + path.string());
  files_.push_back({name, sha256_hex(text), text.size()});
}

void Bundle::write_series(const std::string& name, const Series& s, int stride) {
  write_text(name + ".csv", render_csv(s, stride));
  if (stride > 1) write_text(name + "_full.csv", render_csv(s, 1));
}

void Bundle::write_json(const std::string& name, const Json& j) { write_text(name, j.dump(2) + "\n"); }

void Bundle::finalize(Json meta) {
  Json files = Json::array();
  for (const auto& f : files_) files.push_back({{"path", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  meta["files"] = std::move(files);
  write_json("manifest.json", meta);
  finalized_ = true;
}

void Bundle::discard() noexcept {
  std::error_code ec;
  for (const auto& f : files_) fs::remove(root_ / f.name, ec);
  files_.clear();
  std::sort(created_dirs_.begin(), created_dirs_.end(),
            [](const fs::path& a, const fs::path& b) { return a.native().size() > b.native().size(); });
  for (const auto& d : created_dirs_) fs::remove(d, ec);
  created_dirs_.clear();
}

Json to_json(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
  return out;
}

Json report_to_json(const DesignReport& r, bool timings) {
  Json j;
  j["method"] = std::string(to_string(r.method));
  j["instant"] = r.instant;
  j["status"] = r.status;
  j["termination"] = r.termination;
  j["gain"] = to_json(r.gain.l);
  j["closed_loop_radius"] = to_json(r.gain.closed_loop_radius);
  j["certified_lambda"] = to_json(r.certified_lambda);
  j["exact_j"] = to_json(r.exact_j);
  j["exact_j_per_instant"] = {
      {"onset", to_json(r.j_onset)}, {"one-step", to_json(r.j_one_step)}, {"steady", to_json(r.j_steady)}};
  Json trace = Json::array();
  for (double v : r.lambda_trace) trace.push_back(to_json(v));
  j["lambda_trace"] = std::move(trace);
  j["iterations"] = r.iterations;
  j["gamma"] = to_json(r.gamma);
  Json outcomes = Json::array();
  for (const auto& g : r.gamma_outcomes) {
    outcomes.push_back({{"gamma", to_json(g.gamma)}, {"status", g.status}, {"lambda", to_json(g.lambda)}});
  }
  j["gamma_outcomes"] = std::move(outcomes);
  j["alpha"] = to_json(r.alpha);
  j["certified_lambda_one_step"] = to_json(r.certified_lambda_one_step);
  j["certified_lambda_steady"] = to_json(r.certified_lambda_steady);
  j["final_step_lambda"] = to_json(r.final_step_lambda);
  j["coupling_residual"] = to_json(r.coupling_residual);
  j["fallback"] = r.fallback;
  j["warnings"] = r.warnings;
  if (timings) j["wall_time_s"] = r.wall_time_s;
  return j;
}

}  // namespace kldobs::bench
