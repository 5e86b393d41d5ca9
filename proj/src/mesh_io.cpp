#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "snk/error.hpp"
#include "snk/mesh.hpp"

namespace snk {
namespace {

struct LineReader {
  std::ifstream in;
  std::string path;
  int line_no = 0;

  explicit LineReader(const std::filesystem::path& p) : in(p), path(p.string()) {
    if (!in) throw InputError(path + ": cannot open file");
  }

  [[noreturn]] void fail(const std::string& reason) const {
    throw InputError(path + ":" + std::to_string(line_no) + ": " + reason);
  }

  // Next line that is neither blank nor a comment, with comments stripped.
  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (std::any_of(line.begin(), line.end(), [](unsigned char ch) { return !std::isspace(ch); }))
        return true;
    }
    return false;
  }
};

std::vector<std::string> split(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> tokens;
  for (std::string t; ss >> t;) tokens.push_back(t);
  return tokens;
}

double parse_real(const LineReader& r, const std::string& token) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) r.fail("invalid number '" + token + "'");
    return v;
  } catch (const std::logic_error&) {
    r.fail("invalid number '" + token + "'");
  }
}

long parse_int(const LineReader& r, const std::string& token) {
  try {
    std::size_t used = 0;
    const long v = std::stol(token, &used);
    if (used != token.size()) r.fail("invalid integer '" + token + "'");
    return v;
  } catch (const std::logic_error&) {
    r.fail("invalid integer '" + token + "'");
  }
}

TriMesh build(const LineReader& r, const std::vector<Eigen::Vector3d>& verts,
              const std::vector<Eigen::Vector3i>& faces) {
  if (verts.empty() || faces.empty()) r.fail("empty mesh");
  Vertices v(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) v.row(static_cast<Eigen::Index>(i)) = verts[i];
  Faces f(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i) f.row(static_cast<Eigen::Index>(i)) = faces[i];
  try {
    return TriMesh(std::move(v), std::move(f));
  } catch (const InputError& e) {
    throw InputError(r.path + ": " + e.what());
  }
}

TriMesh read_off(const std::filesystem::path& path) {
  LineReader r(path);
  std::string line;
  if (!r.next(line)) r.fail("empty mesh");
  auto tokens = split(line);
  std::size_t pos = 0;
  if (tokens[0] == "OFF" || tokens[0] == "COFF" || tokens[0] == "NOFF") {
    pos = 1;
  } else if (tokens[0].find("OFF") != std::string::npos) {
    r.fail("unsupported OFF variant '" + tokens[0] + "'");
  }
  if (pos == tokens.size()) {
    if (!r.next(line)) r.fail("missing element counts");
    tokens = split(line);
    pos = 0;
  }
  if (tokens.size() - pos < 2) r.fail("missing element counts");
  const long nv = parse_int(r, tokens[pos]);
  const long nf = parse_int(r, tokens[pos + 1]);
  if (nv <= 0 || nf <= 0) r.fail("empty mesh");

  std::vector<Eigen::Vector3d> verts;
  verts.reserve(static_cast<std::size_t>(nv));
  for (long i = 0; i < nv; ++i) {
    if (!r.next(line)) r.fail("unexpected end of file in vertex list");
    const auto t = split(line);
    if (t.size() < 3) r.fail("vertex needs 3 coordinates");
    verts.emplace_back(parse_real(r, t[0]), parse_real(r, t[1]), parse_real(r, t[2]));
  }
  std::vector<Eigen::Vector3i> faces;
  faces.reserve(static_cast<std::size_t>(nf));
  for (long i = 0; i < nf; ++i) {
    if (!r.next(line)) r.fail("unexpected end of file in face list");
    const auto t = split(line);
    const long count = parse_int(r, t[0]);
    if (count != 3) r.fail("non-triangular face (" + std::to_string(count) + " vertices)");
    if (t.size() < 4) r.fail("face lists fewer than 3 indices");
    Eigen::Vector3i f;
    for (int c = 0; c < 3; ++c) {
      const long idx = parse_int(r, t[1 + c]);
      if (idx < 0 || idx >= nv) r.fail("face index " + std::to_string(idx) + " out of range");
      f(c) = static_cast<int>(idx);
    }
    faces.push_back(f);
  }
  return build(r, verts, faces);
}

TriMesh read_obj(const std::filesystem::path& path) {
  LineReader r(path);
  std::vector<Eigen::Vector3d> verts;
  std::vector<Eigen::Vector3i> faces;
  std::string line;
  while (r.next(line)) {
    const auto t = split(line);
    if (t[0] == "v") {
      if (t.size() < 4) r.fail("vertex needs 3 coordinates");
      verts.emplace_back(parse_real(r, t[1]), parse_real(r, t[2]), parse_real(r, t[3]));
    } else if (t[0] == "f") {
      if (t.size() != 4) {
        r.fail("non-triangular face (" + std::to_string(t.size() - 1) + " vertices)");
      }
      Eigen::Vector3i f;
      for (int c = 0; c < 3; ++c) {
        // "v", "v/vt", "v//vn", "v/vt/vn"
        const std::string& tok = t[1 + c];
        long idx = parse_int(r, tok.substr(0, tok.find('/')));
        const long n = static_cast<long>(verts.size());
        idx = idx < 0 ? n + idx : idx - 1;
        if (idx < 0 || idx >= n) r.fail("face index out of range");
        f(c) = static_cast<int>(idx);
      }
      faces.push_back(f);
    }
  }
  return build(r, verts, faces);
}

TriMesh read_ply(const std::filesystem::path& path) {
  LineReader r(path);
  std::string line;
  if (!r.next(line) || split(line)[0] != "ply") r.fail("missing 'ply' magic");

  struct Element {
    std::string name;
    long count = 0;
    std::vector<std::string> properties;
    bool has_list = false;
  };
  std::vector<Element> elements;
  bool ascii = false;
  while (true) {
    if (!r.next(line)) r.fail("unterminated PLY header");
    const auto t = split(line);
    if (t[0] == "end_header") break;
    if (t[0] == "format") {
      if (t.size() < 2 || t[1] != "ascii") r.fail("only ASCII PLY is supported");
      ascii = true;
    } else if (t[0] == "element") {
      if (t.size() < 3) r.fail("malformed element line");
      elements.push_back({t[1], parse_int(r, t[2]), {}, false});
    } else if (t[0] == "property") {
      if (elements.empty()) r.fail("property before element");
      if (t.size() >= 2 && t[1] == "list") elements.back().has_list = true;
      elements.back().properties.push_back(t.back());
    }
  }
  if (!ascii) r.fail("missing format line");

  std::vector<Eigen::Vector3d> verts;
  std::vector<Eigen::Vector3i> faces;
  for (const Element& el : elements) {
    int ix = -1, iy = -1, iz = -1;
    for (int p = 0; p < static_cast<int>(el.properties.size()); ++p) {
      if (el.properties[p] == "x") ix = p;
      if (el.properties[p] == "y") iy = p;
      if (el.properties[p] == "z") iz = p;
    }
    for (long i = 0; i < el.count; ++i) {
      if (!r.next(line)) r.fail("unexpected end of file in element '" + el.name + "'");
      const auto t = split(line);
      if (el.name == "vertex") {
        if (ix < 0 || iy < 0 || iz < 0) r.fail("vertex element lacks x/y/z");
        const int need = std::max({ix, iy, iz});
        if (static_cast<int>(t.size()) <= need) r.fail("vertex line too short");
        verts.emplace_back(parse_real(r, t[ix]), parse_real(r, t[iy]), parse_real(r, t[iz]));
      } else if (el.name == "face") {
        const long count = parse_int(r, t[0]);
        if (count != 3) r.fail("non-triangular face (" + std::to_string(count) + " vertices)");
        if (t.size() < 4) r.fail("face lists fewer than 3 indices");
        Eigen::Vector3i f;
        for (int c = 0; c < 3; ++c) {
          const long idx = parse_int(r, t[1 + c]);
          if (idx < 0) r.fail("negative face index");
          f(c) = static_cast<int>(idx);
        }
        faces.push_back(f);
      }
    }
  }
  for (const auto& f : faces) {
    if (f.maxCoeff() >= static_cast<int>(verts.size())) r.fail("face index out of range");
  }
  return build(r, verts, faces);
}

}  // namespace

MeshFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".off") return MeshFormat::Off;
  if (ext == ".obj") return MeshFormat::Obj;
  if (ext == ".ply") return MeshFormat::Ply;
  throw InputError(path.string() + ": unknown mesh extension '" + ext + "'");
}

TriMesh load_mesh(const std::filesystem::path& path) {
  return load_mesh(path, format_from_path(path));
}

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  switch (format) {
    case MeshFormat::Off: return read_off(path);
    case MeshFormat::Obj: return read_obj(path);
    case MeshFormat::Ply: return read_ply(path);
  }
  throw InputError("unknown mesh format");
}

void save_off(const std::filesystem::path& path, const Vertices& vertices, const Faces& faces,
              const std::optional<Colors>& colors) {
  std::FILE* out = std::fopen(path.string().c_str(), "w");
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  std::fprintf(out, "%s\n%ld %ld 0\n", colors ? "COFF" : "OFF", static_cast<long>(vertices.rows()),
               static_cast<long>(faces.rows()));
  for (Eigen::Index i = 0; i < vertices.rows(); ++i) {
    std::fprintf(out, "%.17g %.17g %.17g", vertices(i, 0), vertices(i, 1), vertices(i, 2));
    if (colors) {
      std::fprintf(out, " %d %d %d 255", (*colors)(i, 0), (*colors)(i, 1), (*colors)(i, 2));
    }
    std::fputc('\n', out);
  }
  for (Eigen::Index i = 0; i < faces.rows(); ++i) {
    std::fprintf(out, "3 %d %d %d\n", faces(i, 0), faces(i, 1), faces(i, 2));
  }
  if (std::fclose(out) != 0) throw InputError(path.string() + ": write failed");
}

void save_off(const std::filesystem::path& path, const TriMesh& mesh) {
  save_off(path, mesh.vertices(), mesh.faces());
}

}  // namespace snk
