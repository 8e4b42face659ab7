#pragma once

#include <bit>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "radfp/error.hpp"
#include "radfp/volume.hpp"

// Minimal NRRD support: "NRRD000x" magic, 3-D scalar images, raw
// little-endian encoding, attached or detached headers. Axis order in the
// file is fastest-first (width, height, depth), matching the row-major
// depth-major layout of Volume.

namespace radfp::nrrd {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(c));
  return s;
}

struct TypeInfo {
  int bytes;
  bool integral;
  bool is_signed;
  bool is_float;
};

inline TypeInfo type_info(const std::string& t) {
  static const std::map<std::string, TypeInfo> known = {
      {"signed char", {1, true, true, false}},
      {"int8", {1, true, true, false}},
      {"uchar", {1, true, false, false}},
      {"unsigned char", {1, true, false, false}},
      {"uint8", {1, true, false, false}},
      {"short", {2, true, true, false}},
      {"int16", {2, true, true, false}},
      {"unsigned short", {2, true, false, false}},
      {"uint16", {2, true, false, false}},
      {"int", {4, true, true, false}},
      {"int32", {4, true, true, false}},
      {"unsigned int", {4, true, false, false}},
      {"uint32", {4, true, false, false}},
      {"float", {4, false, true, true}},
      {"double", {8, false, true, true}},
  };
  auto it = known.find(t);
  if (it == known.end())
    throw parse_error("nrrd: unsupported type field: \"" + t + "\"");
  return it->second;
}

template <typename T>
double decode_one(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (sizeof(T) > 1) {
    if constexpr (std::endian::native == std::endian::big) {
      unsigned char* b = reinterpret_cast<unsigned char*>(&v);
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
        std::swap(b[i], b[sizeof(T) - 1 - i]);
    }
  }
  return static_cast<double>(v);
}

inline double decode(const std::string& type, const unsigned char* p) {
  if (type == "double") return decode_one<double>(p);
  if (type == "float") return decode_one<float>(p);
  if (type == "signed char" || type == "int8") return decode_one<signed char>(p);
  if (type == "uchar" || type == "unsigned char" || type == "uint8")
    return decode_one<unsigned char>(p);
  if (type == "short" || type == "int16") return decode_one<std::int16_t>(p);
  if (type == "unsigned short" || type == "uint16")
    return decode_one<std::uint16_t>(p);
  if (type == "int" || type == "int32") return decode_one<std::int32_t>(p);
  return decode_one<std::uint32_t>(p);  // unsigned int / uint32
}

}  // namespace detail

/// Load a 3-D scalar NRRD file; intensities are widened to double.
inline Volume load_volume(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open file: " + path.string());

  std::string magic;
  std::getline(in, magic);
  magic = detail::trim(magic);
  if (magic.size() < 8 || magic.substr(0, 7) != "NRRD000" ||
      !std::isdigit(static_cast<unsigned char>(magic[7])))
    throw parse_error("nrrd: bad magic line: \"" + magic + "\"");

  std::map<std::string, std::string> fields;
  std::string line;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty()) break;  // attached payload follows
    if (line[0] == '#') continue;
    if (line.find(":=") != std::string::npos) continue;  // key-value pairs
    std::size_t colon = line.find(": ");
    if (colon == std::string::npos) {
      // "field:" with empty value is still malformed for our subset
      throw parse_error("nrrd: malformed header line: \"" + line + "\"");
    }
    fields[detail::lower(line.substr(0, colon))] =
        detail::trim(line.substr(colon + 2));
  }

  auto require = [&](const std::string& key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end())
      throw parse_error("nrrd: missing required field: \"" + key + "\"");
    return it->second;
  };

  if (require("dimension") != "3")
    throw parse_error("nrrd: unsupported dimension field: \"" +
                      fields["dimension"] + "\" (expected 3)");
  if (detail::lower(require("encoding")) != "raw")
    throw parse_error("nrrd: unsupported encoding field: \"" +
                      fields["encoding"] + "\" (expected raw)");

  const std::string type = detail::lower(require("type"));
  detail::TypeInfo ti = detail::type_info(type);
  if (ti.bytes > 1) {
    auto it = fields.find("endian");
    if (it == fields.end() || detail::lower(it->second) != "little")
      throw parse_error("nrrd: endian field must be \"little\" for type " +
                        type);
  }

  std::istringstream szs(require("sizes"));
  long long sw = 0, sh = 0, sd = 0;
  if (!(szs >> sw >> sh >> sd) || sw <= 0 || sh <= 0 || sd <= 0)
    throw parse_error("nrrd: malformed sizes field: \"" + fields["sizes"] +
                      "\"");

  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  if (auto it = fields.find("spacings"); it != fields.end()) {
    std::istringstream sps(it->second);
    double a = 0, b = 0, c = 0;
    if (!(sps >> a >> b >> c) || a <= 0 || b <= 0 || c <= 0)
      throw parse_error("nrrd: malformed spacings field: \"" + it->second +
                        "\"");
    spacing = {c, b, a};  // file order is fastest-first
  }

  std::vector<unsigned char> payload;
  if (auto it = fields.find("data file"); it != fields.end()) {
    std::filesystem::path data_path = it->second;
    if (data_path.is_relative()) data_path = path.parent_path() / data_path;
    std::ifstream data(data_path, std::ios::binary);
    if (!data)
      throw error("nrrd: cannot open data file: " + data_path.string());
    payload.assign(std::istreambuf_iterator<char>(data),
                   std::istreambuf_iterator<char>());
  } else {
    payload.assign(std::istreambuf_iterator<char>(in),
                   std::istreambuf_iterator<char>());
  }

  const std::int64_t count = sd * sh * sw;
  const std::int64_t expected = count * ti.bytes;
  if (static_cast<std::int64_t>(payload.size()) != expected)
    throw parse_error("nrrd: payload size mismatch: expected " +
                      std::to_string(expected) + " bytes for sizes " +
                      fields["sizes"] + ", got " +
                      std::to_string(payload.size()));

  Volume v(Dims{static_cast<int>(sd), static_cast<int>(sh),
                static_cast<int>(sw)});
  v.spacing = spacing;
  const unsigned char* p = payload.data();
  for (std::int64_t i = 0; i < count; ++i, p += ti.bytes)
    v.voxels[static_cast<std::size_t>(i)] = detail::decode(type, p);
  if (!v.all_finite())
    throw parse_error("nrrd: non-finite intensity in payload of " +
                      path.string());
  return v;
}

/// Save as attached-header NRRD, type double, raw little-endian payload.
/// load_volume round-trips the result bitwise.
inline void save_volume(const Volume& v, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot open file for writing: " + path.string());

  char spacings[128];
  std::snprintf(spacings, sizeof(spacings), "%.17g %.17g %.17g",
                v.spacing[2], v.spacing[1], v.spacing[0]);

  out << "NRRD0004\n";
  out << "type: double\n";
  out << "dimension: 3\n";
  out << "sizes: " << v.dims.w << " " << v.dims.h << " " << v.dims.d << "\n";
  out << "spacings: " << spacings << "\n";
  out << "encoding: raw\n";
  out << "endian: little\n";
  out << "\n";

  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(v.voxels.data()),
              static_cast<std::streamsize>(v.voxels.size() * sizeof(double)));
  } else {
    for (double d : v.voxels) {
      unsigned char b[8];
      std::memcpy(b, &d, 8);
      std::swap(b[0], b[7]);
      std::swap(b[1], b[6]);
      std::swap(b[2], b[5]);
      std::swap(b[3], b[4]);
      out.write(reinterpret_cast<const char*>(b), 8);
    }
  }
  if (!out) throw error("write failed: " + path.string());
}

}  // namespace radfp::nrrd
