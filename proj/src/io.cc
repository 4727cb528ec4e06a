#include "dpcd/io.h"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

namespace dpcd {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::optional<double> to_double(const std::string& tok) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> properties;
  bool has_list = false;
};

void set_normals(Frame& frame, Points normals, const std::string& source,
                 std::size_t line_base) {
  for (Index i = 0; i < normals.rows(); ++i) {
    const double len = normals.row(i).norm();
    if (!(len > 0.0) || !std::isfinite(len)) {
      throw ParseError(source, line_base + static_cast<std::size_t>(i), "zero-length normal");
    }
    normals.row(i) /= len;
  }
  frame.normals = std::move(normals);
}

}  // namespace

Frame read_ply(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line() || trim(line) != "ply") throw ParseError(source, 1, "missing 'ply' magic");
  std::vector<PlyElement> elements;
  bool saw_format = false;
  bool ended = false;
  while (next_line()) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() != 3 || tok[1] != "ascii") {
        throw ParseError(source, lineno, "only 'format ascii 1.0' is supported");
      }
      saw_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError(source, lineno, "malformed element line");
      const auto n = to_double(tok[2]);
      if (!n || *n < 0 || *n != std::floor(*n)) {
        throw ParseError(source, lineno, "bad element count '" + tok[2] + "'");
      }
      elements.push_back({tok[1], static_cast<std::size_t>(*n), {}, false});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw ParseError(source, lineno, "property before element");
      if (tok.size() >= 2 && tok[1] == "list") {
        if (tok.size() != 5) throw ParseError(source, lineno, "malformed list property");
        elements.back().has_list = true;
        elements.back().properties.push_back(tok[4]);
      } else {
        if (tok.size() != 3) throw ParseError(source, lineno, "malformed property line");
        elements.back().properties.push_back(tok[2]);
      }
    } else if (tok[0] == "end_header") {
      ended = true;
      break;
    } else {
      throw ParseError(source, lineno, "unexpected header line '" + line + "'");
    }
  }
  if (!ended) throw ParseError(source, lineno, "missing end_header");
  if (!saw_format) throw ParseError(source, lineno, "missing format line");

  Frame frame;
  bool found_vertex = false;
  for (const PlyElement& el : elements) {
    if (el.name != "vertex") {
      for (std::size_t k = 0; k < el.count; ++k) {
        if (!next_line()) throw ParseError(source, lineno, "unexpected end of file");
      }
      continue;
    }
    if (el.has_list) throw ParseError(source, lineno, "list properties on vertex");
    found_vertex = true;
    auto column = [&](const char* name) -> int {
      for (std::size_t p = 0; p < el.properties.size(); ++p) {
        if (el.properties[p] == name) return static_cast<int>(p);
      }
      return -1;
    };
    const std::array<int, 3> pos{column("x"), column("y"), column("z")};
    const std::array<int, 3> nrm{column("nx"), column("ny"), column("nz")};
    if (pos[0] < 0 || pos[1] < 0 || pos[2] < 0) {
      throw ParseError(source, lineno, "vertex element lacks x, y or z");
    }
    const bool has_normals = nrm[0] >= 0 && nrm[1] >= 0 && nrm[2] >= 0;
    const auto n = static_cast<Index>(el.count);
    frame.positions.resize(n, 3);
    Points normals(has_normals ? n : 0, 3);
    const std::size_t first_line = lineno + 1;
    for (Index i = 0; i < n; ++i) {
      if (!next_line()) throw ParseError(source, lineno, "unexpected end of file");
      const auto tok = split_ws(line);
      if (tok.size() != el.properties.size()) {
        throw ParseError(source, lineno,
                         "expected " + std::to_string(el.properties.size()) +
                             " values, found " + std::to_string(tok.size()));
      }
      std::vector<double> vals(tok.size());
      for (std::size_t t = 0; t < tok.size(); ++t) {
        const auto v = to_double(tok[t]);
        if (!v) throw ParseError(source, lineno, "non-numeric token '" + tok[t] + "'");
        vals[t] = *v;
      }
      for (int d = 0; d < 3; ++d) {
        frame.positions(i, d) = vals[pos[d]];
        if (has_normals) normals(i, d) = vals[nrm[d]];
      }
    }
    if (has_normals) set_normals(frame, std::move(normals), source, first_line);
  }
  if (!found_vertex) throw ParseError(source, lineno, "no vertex element");
  return frame;
}

Frame read_xyz(std::istream& in, const std::string& source) {
  std::vector<std::array<double, 6>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  std::size_t first_line = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 3 && tok.size() != 6) {
      throw ParseError(source, lineno, "expected 3 or 6 columns, found " +
                                           std::to_string(tok.size()));
    }
    if (width == 0) {
      width = tok.size();
      first_line = lineno;
    } else if (tok.size() != width) {
      throw ParseError(source, lineno, "column count changed from " + std::to_string(width));
    }
    std::array<double, 6> row{};
    for (std::size_t t = 0; t < tok.size(); ++t) {
      const auto v = to_double(tok[t]);
      if (!v) throw ParseError(source, lineno, "non-numeric token '" + tok[t] + "'");
      row[t] = *v;
    }
    rows.push_back(row);
  }
  if (rows.empty()) throw ParseError(source, lineno, "no points");
  Frame frame;
  const auto n = static_cast<Index>(rows.size());
  frame.positions.resize(n, 3);
  Points normals(width == 6 ? n : 0, 3);
  for (Index i = 0; i < n; ++i) {
    for (int d = 0; d < 3; ++d) {
      frame.positions(i, d) = rows[i][d];
      if (width == 6) normals(i, d) = rows[i][3 + d];
    }
  }
  if (width == 6) set_normals(frame, std::move(normals), source, first_line);
  return frame;
}

Frame read_point_cloud(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  if (path.extension() == ".ply") return read_ply(in, path.string());
  return read_xyz(in, path.string());
}

void write_ply(const Frame& frame, std::ostream& out) {
  if (frame.size() == 0) throw PreconditionError("cannot write an empty frame");
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << frame.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (frame.normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
  out << "end_header\n";
  char buf[32];
  for (Index i = 0; i < frame.size(); ++i) {
    for (int d = 0; d < 3; ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", frame.positions(i, d));
      out << (d ? " " : "") << buf;
    }
    if (frame.normals) {
      for (int d = 0; d < 3; ++d) {
        std::snprintf(buf, sizeof(buf), "%.17g", (*frame.normals)(i, d));
        out << ' ' << buf;
      }
    }
    out << '\n';
  }
}

void write_point_cloud(const Frame& frame, const std::filesystem::path& path) {
  if (frame.size() == 0) throw PreconditionError("cannot write an empty frame");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_ply(frame, out);
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

namespace {

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw PreconditionError("config key '" + key + "' expects an integer, got '" + value + "'");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& value) {
  const auto v = to_double(value);
  if (!v) throw PreconditionError("config key '" + key + "' expects a number, got '" + value + "'");
  return *v;
}

}  // namespace

void apply_config_value(DenoiseConfig& c, const std::string& key,
                        const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "K") c.K = parse_integer<Index>(key, value);
  else if (key == "M") c.M = CountRule::parse(value, 'N');
  else if (key == "K_s") c.K_s = parse_integer<Index>(key, value);
  else if (key == "xi") c.xi = parse_integer<Index>(key, value);
  else if (key == "c") c.c = parse_real(key, value);
  else if (key == "alpha") c.alpha = parse_real(key, value);
  else if (key == "lambda1") c.lambda1 = parse_real(key, value);
  else if (key == "lambda2") c.lambda2 = parse_real(key, value);
  else if (key == "M_prime") c.M_prime = CountRule::parse(value, 'M');
  else if (key == "C") c.C = parse_real(key, value);
  else if (key == "cg_tol") c.cg_tol = parse_real(key, value);
  else if (key == "cg_max_iters") c.cg_max_iters = parse_integer<int>(key, value);
  else if (key == "pg_step") c.pg_step = parse_real(key, value);
  else if (key == "pg_max_iters") c.pg_max_iters = parse_integer<int>(key, value);
  else if (key == "pg_tol") c.pg_tol = parse_real(key, value);
  else if (key == "outer_max_iters") c.outer_max_iters = parse_integer<int>(key, value);
  else if (key == "outer_tol") c.outer_tol = parse_real(key, value);
  else if (key == "seed") c.seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "k_normal") c.k_normal = parse_integer<int>(key, value);
  else if (key == "threads") c.threads = parse_integer<int>(key, value);
  else throw PreconditionError("unknown config key '" + key + "'");
}

DenoiseConfig parse_config(std::istream& in, DenoiseConfig base,
                           const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    try {
      apply_config_value(base, key, line.substr(eq + 1));
    } catch (const PreconditionError& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return base;
}

DenoiseConfig read_config(const std::filesystem::path& path, DenoiseConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return parse_config(in, std::move(base), path.string());
}

void write_config(const DenoiseConfig& c, std::ostream& out) {
  const auto shortest = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  };
  std::ostringstream os;
  os << "K = " << c.K << '\n'
     << "M = " << c.M.to_string('N') << '\n'
     << "K_s = " << c.K_s << '\n'
     << "xi = " << c.xi << '\n'
     << "c = " << shortest(c.c) << '\n'
     << "alpha = " << shortest(c.alpha) << '\n'
     << "lambda1 = " << shortest(c.lambda1) << '\n'
     << "lambda2 = " << shortest(c.lambda2) << '\n'
     << "M_prime = " << c.M_prime.to_string('M') << '\n'
     << "C = " << shortest(c.C) << '\n'
     << "cg_tol = " << shortest(c.cg_tol) << '\n'
     << "cg_max_iters = " << c.cg_max_iters << '\n'
     << "pg_step = " << shortest(c.pg_step) << '\n'
     << "pg_max_iters = " << c.pg_max_iters << '\n'
     << "pg_tol = " << shortest(c.pg_tol) << '\n'
     << "outer_max_iters = " << c.outer_max_iters << '\n'
     << "outer_tol = " << shortest(c.outer_tol) << '\n'
     << "seed = " << c.seed << '\n'
     << "k_normal = " << c.k_normal << '\n'
     << "threads = " << c.threads << '\n';
  out << os.str();
}

}  // namespace dpcd
