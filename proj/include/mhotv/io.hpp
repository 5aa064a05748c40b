#pragma once

// File formats: CSV tables, flat binary + JSON sidecar, PGM images and the
// stencil / filter dumps.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mhotv/errors.hpp"
#include "mhotv/filters.hpp"
#include "mhotv/image.hpp"
#include "mhotv/stencil.hpp"
#include "mhotv/wavelet.hpp"

namespace mhotv::io {

namespace fs = std::filesystem;

/// Shortest round-trip decimal representation.
inline std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) detail::fail<Error>("cannot open " + path.string() + " for writing");
  return out;
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(open_out(path)) {
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

inline void write_text(const fs::path& path, const std::string& text) { open_out(path) << text; }

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  open_out(path) << j.dump(2) << '\n';
}

inline std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) detail::fail<Error>("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

/// (index, value) CSV of a real sequence.
inline void write_signal_csv(const fs::path& path, const Signal& s,
                             const std::string& value_name = "value") {
  CsvWriter w(path, {"index", value_name});
  for (Eigen::Index i = 0; i < s.size(); ++i) w.row({std::to_string(i), num(s[i])});
}

/// Image as rows x cols CSV matrix (no header).
inline void write_image_csv(const fs::path& path, const Image& img) {
  auto out = open_out(path);
  for (Eigen::Index r = 0; r < img.rows; ++r) {
    for (Eigen::Index c = 0; c < img.cols; ++c) out << (c ? "," : "") << num(img(r, c));
    out << '\n';
  }
}

/// Little-endian float64 payload plus `<path>.json` describing it.
inline void write_binary(const fs::path& path, const Signal& data, nlohmann::json sidecar) {
  {
    auto out = open_out(path);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  sidecar["dtype"] = "float64";
  sidecar["byte_order"] = "little";
  sidecar["count"] = data.size();
  write_json(fs::path(path.string() + ".json"), sidecar);
}

inline Signal read_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) detail::fail<Error>("cannot open " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  Signal out(static_cast<Eigen::Index>(bytes / sizeof(double)));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(bytes));
  return out;
}

/// 8-bit binary PGM; values are mapped linearly from [lo, hi] and clipped.
inline void write_pgm(const fs::path& path, const Image& img, double lo = 0.0, double hi = 1.0) {
  auto out = open_out(path);
  out << "P5\n" << img.cols << ' ' << img.rows << "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) {
    const double t = std::clamp((img.pixels[i] - lo) / span, 0.0, 1.0);
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
  }
}

inline void dump_stencil(const fs::path& path, const Stencil& s) {
  write_signal_csv(path, s.values);
}

inline void dump_filter(const fs::path& path, const FilterSpectrum& h) {
  CsvWriter w(path, {"xi", "re", "im"});
  for (Eigen::Index xi = 0; xi < h.size(); ++xi)
    w.row({std::to_string(xi), num(h.values[xi].real()), num(h.values[xi].imag())});
}

/// Daubechies h and g taps: (index, h, g).
inline void dump_wavelet(const fs::path& path, const WaveletFilters& w) {
  CsvWriter csv(path, {"index", "h", "g"});
  for (std::size_t i = 0; i < w.h.size(); ++i)
    csv.row({std::to_string(i), num(w.h[i]), num(w.g[i])});
}

}  // namespace mhotv::io
