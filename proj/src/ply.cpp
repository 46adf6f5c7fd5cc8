#include "mumar/ply.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "mumar/error.hpp"

namespace mumar {

static_assert(std::endian::native == std::endian::little, "binary PLY support assumes a little-endian host");

namespace {

enum class Scalar { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

std::optional<Scalar> parse_scalar(const std::string& s) {
  if (s == "char" || s == "int8") return Scalar::kInt8;
  if (s == "uchar" || s == "uint8") return Scalar::kUint8;
  if (s == "short" || s == "int16") return Scalar::kInt16;
  if (s == "ushort" || s == "uint16") return Scalar::kUint16;
  if (s == "int" || s == "int32") return Scalar::kInt32;
  if (s == "uint" || s == "uint32") return Scalar::kUint32;
  if (s == "float" || s == "float32") return Scalar::kFloat32;
  if (s == "double" || s == "float64") return Scalar::kFloat64;
  return std::nullopt;
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::kInt8:
    case Scalar::kUint8:
      return 1;
    case Scalar::kInt16:
    case Scalar::kUint16:
      return 2;
    case Scalar::kInt32:
    case Scalar::kUint32:
    case Scalar::kFloat32:
      return 4;
    case Scalar::kFloat64:
      return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::kFloat64;
  bool is_list = false;
  Scalar count_type = Scalar::kUint8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  bool binary = false;
  std::vector<Element> elements;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
    parse_header();
  }

  const Header& header() const { return header_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kParse, "'" + path_.string() + "': " + what);
  }

  double value(Scalar type) {
    if (!header_.binary) {
      std::string token;
      if (!(in_ >> token)) fail("unexpected end of data");
      try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) fail("bad number '" + token + "'");
        return v;
      } catch (const std::logic_error&) {
        fail("bad number '" + token + "'");
      }
    }
    unsigned char buf[8];
    const std::size_t n = scalar_size(type);
    if (!in_.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n))) fail("unexpected end of data");
    switch (type) {
      case Scalar::kInt8:
        return static_cast<double>(static_cast<std::int8_t>(buf[0]));
      case Scalar::kUint8:
        return static_cast<double>(buf[0]);
      case Scalar::kInt16:
        return static_cast<double>(load<std::int16_t>(buf));
      case Scalar::kUint16:
        return static_cast<double>(load<std::uint16_t>(buf));
      case Scalar::kInt32:
        return static_cast<double>(load<std::int32_t>(buf));
      case Scalar::kUint32:
        return static_cast<double>(load<std::uint32_t>(buf));
      case Scalar::kFloat32:
        return static_cast<double>(load<float>(buf));
      case Scalar::kFloat64:
        return load<double>(buf);
    }
    fail("unknown scalar type");
  }

  void expect_end() {
    if (header_.binary) {
      if (in_.peek() != std::char_traits<char>::eof()) fail("trailing bytes after the last element");
    } else {
      std::string token;
      if (in_ >> token) fail("more data than the header declares");
    }
  }

 private:
  template <typename T>
  static T load(const unsigned char* buf) {
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }

  void parse_header() {
    std::string line;
    if (!std::getline(in_, line) || strip(line) != "ply") fail("missing 'ply' magic");
    bool have_format = false;
    while (std::getline(in_, line)) {
      std::istringstream words(strip(line));
      std::string key;
      words >> key;
      if (key.empty() || key == "comment" || key == "obj_info") continue;
      if (key == "end_header") {
        if (!have_format) fail("missing format line");
        return;
      }
      if (key == "format") {
        std::string fmt, version;
        words >> fmt >> version;
        if (fmt == "ascii") {
          header_.binary = false;
        } else if (fmt == "binary_little_endian") {
          header_.binary = true;
        } else {
          fail("unsupported format '" + fmt + "'");
        }
        have_format = true;
      } else if (key == "element") {
        Element e;
        long long count = -1;
        words >> e.name >> count;
        if (e.name.empty() || count < 0) fail("malformed element line");
        e.count = static_cast<std::size_t>(count);
        header_.elements.push_back(std::move(e));
      } else if (key == "property") {
        if (header_.elements.empty()) fail("property before any element");
        Property p;
        std::string type;
        words >> type;
        if (type == "list") {
          std::string count_type, item_type;
          words >> count_type >> item_type >> p.name;
          const auto ct = parse_scalar(count_type);
          const auto it = parse_scalar(item_type);
          if (!ct || !it) fail("bad list property types");
          p.is_list = true;
          p.count_type = *ct;
          p.type = *it;
        } else {
          const auto t = parse_scalar(type);
          if (!t) fail("unknown property type '" + type + "'");
          p.type = *t;
          words >> p.name;
        }
        if (p.name.empty()) fail("property without a name");
        header_.elements.back().properties.push_back(p);
      } else {
        fail("unknown header keyword '" + key + "'");
      }
    }
    fail("missing end_header");
  }

  static std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

  std::filesystem::path path_;
  std::ifstream in_;
  Header header_;
};

int find_property(const Element& e, const std::string& name) {
  for (std::size_t i = 0; i < e.properties.size(); ++i) {
    if (e.properties[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

struct RawData {
  PointCloud cloud;
  std::vector<std::vector<int>> faces;
  std::vector<int> face_labels;
};

RawData read_all(const std::filesystem::path& path, bool want_faces) {
  Reader reader(path);
  RawData out;
  bool have_vertex = false;
  for (const Element& e : reader.header().elements) {
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face" && want_faces;
    int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, ilabel = -1, ilist = -1;
    if (is_vertex) {
      have_vertex = true;
      ix = find_property(e, "x");
      iy = find_property(e, "y");
      iz = find_property(e, "z");
      if (ix < 0 || iy < 0 || iz < 0) reader.fail("vertex element lacks x, y or z");
      inx = find_property(e, "nx");
      iny = find_property(e, "ny");
      inz = find_property(e, "nz");
      ilabel = find_property(e, "face_label");
      if ((inx < 0) != (iny < 0) || (iny < 0) != (inz < 0)) reader.fail("partial normal properties");
      out.cloud.points.reserve(e.count);
    }
    if (is_face) {
      ilist = find_property(e, "vertex_indices");
      if (ilist < 0) ilist = find_property(e, "vertex_index");
      if (ilist < 0 || !e.properties[ilist].is_list) reader.fail("face element lacks a vertex index list");
      ilabel = find_property(e, "face_label");
    }

    std::vector<double> row(e.properties.size());
    std::vector<int> list;
    for (std::size_t r = 0; r < e.count; ++r) {
      for (std::size_t p = 0; p < e.properties.size(); ++p) {
        const Property& prop = e.properties[p];
        if (prop.is_list) {
          const double n = reader.value(prop.count_type);
          if (n < 0 || n != std::floor(n)) reader.fail("bad list length");
          list.clear();
          for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
            list.push_back(static_cast<int>(reader.value(prop.type)));
          }
          if (is_face && static_cast<int>(p) == ilist) out.faces.push_back(list);
        } else {
          row[p] = reader.value(prop.type);
        }
      }
      if (is_vertex) {
        out.cloud.points.emplace_back(row[ix], row[iy], row[iz]);
        if (inx >= 0) out.cloud.normals.emplace_back(row[inx], row[iny], row[inz]);
        if (ilabel >= 0) out.cloud.labels.push_back(static_cast<int>(row[ilabel]));
      }
      if (is_face) out.face_labels.push_back(ilabel >= 0 ? static_cast<int>(row[ilabel]) : static_cast<int>(r));
    }
  }
  reader.expect_end();
  if (!have_vertex) reader.fail("no vertex element");
  for (const auto& p : out.cloud.points) {
    if (!p.allFinite()) reader.fail("non-finite vertex coordinate");
  }
  return out;
}

class Writer {
 public:
  Writer(const std::filesystem::path& path, PlyFormat format) : path_(path), format_(format) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
    out_.precision(17);
  }

  void header(const std::string& body) {
    out_ << "ply\nformat " << (format_ == PlyFormat::kAscii ? "ascii" : "binary_little_endian") << " 1.0\n"
         << body << "end_header\n";
  }

  template <typename T>
  void put(T v, bool last) {
    if (format_ == PlyFormat::kAscii) {
      out_ << v << (last ? '\n' : ' ');
    } else {
      out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
  }

  void finish() {
    out_.flush();
    if (!out_) throw Error(ErrorCode::kIo, "write failed for '" + path_.string() + "'");
  }

 private:
  std::filesystem::path path_;
  PlyFormat format_;
  std::ofstream out_;
};

}  // namespace

PointCloud read_ply(const std::filesystem::path& path) {
  RawData raw = read_all(path, false);
  try {
    raw.cloud.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, "'" + path.string() + "': " + e.what());
  }
  return std::move(raw.cloud);
}

TriangleMesh read_ply_mesh(const std::filesystem::path& path) {
  RawData raw = read_all(path, true);
  TriangleMesh mesh;
  mesh.vertices = std::move(raw.cloud.points);
  const int nv = static_cast<int>(mesh.vertices.size());
  for (std::size_t f = 0; f < raw.faces.size(); ++f) {
    const auto& poly = raw.faces[f];
    if (poly.size() < 3) throw Error(ErrorCode::kParse, "'" + path.string() + "': face with fewer than 3 vertices");
    for (int v : poly) {
      if (v < 0 || v >= nv) throw Error(ErrorCode::kParse, "'" + path.string() + "': face index out of range");
    }
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
      mesh.triangles.push_back({poly[0], poly[k], poly[k + 1]});
      mesh.face_ids.push_back(raw.face_labels[f]);
    }
  }
  return mesh;
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyFormat format,
               std::span<const double> scalar, const std::string& scalar_name) {
  cloud.validate();
  if (!scalar.empty() && scalar.size() != cloud.size()) {
    throw Error(ErrorCode::kLengthMismatch, "scalar property length differs from point count");
  }
  std::ostringstream h;
  h << "element vertex " << cloud.size() << "\nproperty double x\nproperty double y\nproperty double z\n";
  if (cloud.has_normals()) h << "property double nx\nproperty double ny\nproperty double nz\n";
  if (cloud.has_labels()) h << "property int face_label\n";
  if (!scalar.empty()) h << "property double " << scalar_name << "\n";

  Writer w(path, format);
  w.header(h.str());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const bool more_n = cloud.has_normals(), more_l = cloud.has_labels(), more_s = !scalar.empty();
    const auto& p = cloud.points[i];
    w.put(p.x(), false);
    w.put(p.y(), false);
    w.put(p.z(), !(more_n || more_l || more_s));
    if (more_n) {
      const auto& n = cloud.normals[i];
      w.put(n.x(), false);
      w.put(n.y(), false);
      w.put(n.z(), !(more_l || more_s));
    }
    if (more_l) w.put(static_cast<std::int32_t>(cloud.labels[i]), !more_s);
    if (more_s) w.put(scalar[i], true);
  }
  w.finish();
}

void write_ply_mesh(const TriangleMesh& mesh, const std::filesystem::path& path, PlyFormat format) {
  std::ostringstream h;
  h << "element vertex " << mesh.vertices.size() << "\nproperty double x\nproperty double y\nproperty double z\n"
    << "element face " << mesh.triangles.size() << "\nproperty list uchar int vertex_indices\n"
    << "property int face_label\n";
  Writer w(path, format);
  w.header(h.str());
  for (const auto& v : mesh.vertices) {
    w.put(v.x(), false);
    w.put(v.y(), false);
    w.put(v.z(), true);
  }
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (format == PlyFormat::kAscii) {
      w.put(3, false);
    } else {
      w.put(static_cast<std::uint8_t>(3), false);
    }
    for (int k = 0; k < 3; ++k) w.put(static_cast<std::int32_t>(mesh.triangles[t][k]), false);
    w.put(static_cast<std::int32_t>(mesh.face_ids[t]), true);
  }
  w.finish();
}

}  // namespace mumar
