#include "acflab/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace acflab {

namespace {

void write_header(std::ostream& os, const GridSpec& g) {
  os << "SFLD v1\n";
  os << "dim " << g.dim << "\n";
  os << "shape";
  for (int k = 0; k < g.dim; ++k) os << ' ' << g.shape[k];
  os << "\nspacing " << format_double(g.spacing) << "\n";
  os << "origin";
  for (int k = 0; k < g.dim; ++k) os << ' ' << format_double(g.origin[k]);
  os << "\n";
}

std::string next_line(std::istream& is, const char* what) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError(std::string("SFLD: missing ") + what);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::istringstream keyed(std::istream& is, const std::string& key) {
  const std::string line = next_line(is, key.c_str());
  std::istringstream ls(line);
  std::string k;
  ls >> k;
  if (k != key) throw FormatError("SFLD: expected '" + key + "' line, got '" + line + "'");
  return ls;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw FormatError("SFLD: bad number '" + s + "'");
  return v;
}

GridSpec read_header(std::istream& is) {
  if (next_line(is, "magic") != "SFLD v1") throw FormatError("SFLD: missing 'SFLD v1' magic line");
  int dim = 0;
  if (!(keyed(is, "dim") >> dim) || (dim != 2 && dim != 3)) throw FormatError("SFLD: dim must be 2 or 3");
  MultiIndex shape{1, 1, 1};
  {
    auto ls = keyed(is, "shape");
    for (int k = 0; k < dim; ++k)
      if (!(ls >> shape[k])) throw FormatError("SFLD: short shape line");
  }
  std::string tok;
  if (!(keyed(is, "spacing") >> tok)) throw FormatError("SFLD: missing spacing value");
  const double h = parse_double(tok);
  Point origin(dim);
  {
    auto ls = keyed(is, "origin");
    for (int k = 0; k < dim; ++k) {
      if (!(ls >> tok)) throw FormatError("SFLD: short origin line");
      origin[k] = parse_double(tok);
    }
  }
  try {
    return GridSpec(dim, shape, h, origin);
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("SFLD: invalid grid: ") + e.what());
  }
}

template <typename Store>
void read_values(std::istream& is, Index n, Store store) {
  std::string line;
  for (Index i = 0; i < n; ++i) {
    line = next_line(is, "node value");
    store(i, parse_double(line));
  }
  while (std::getline(is, line))
    if (!line.empty() && line != "\r") throw FormatError("SFLD: trailing data after node values");
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_sfld(std::ostream& os, const ScalarField& f) {
  write_header(os, f.grid());
  for (Index i = 0; i < f.size(); ++i) os << format_double(f[i]) << '\n';
}

void write_sfld(std::ostream& os, const DomainMask& m) {
  write_header(os, m.grid());
  for (Index i = 0; i < m.size(); ++i) os << (m[i] ? "1\n" : "0\n");
}

ScalarField read_sfld(std::istream& is) {
  const GridSpec g = read_header(is);
  ScalarField f(g);
  read_values(is, g.size(), [&](Index i, double v) {
    if (!std::isfinite(v)) throw FormatError("SFLD: non-finite node value");
    f[i] = v;
  });
  return f;
}

DomainMask read_sfld_mask(std::istream& is) {
  const GridSpec g = read_header(is);
  DomainMask m(g);
  read_values(is, g.size(), [&](Index i, double v) {
    if (v != 0.0 && v != 1.0) throw FormatError("SFLD: mask values must be 0 or 1");
    m.set(i, v == 1.0);
  });
  return m;
}

namespace {
std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}
std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return is;
}
}  // namespace

void save_sfld(const std::string& path, const ScalarField& f) {
  auto os = open_out(path);
  write_sfld(os, f);
}
void save_sfld(const std::string& path, const DomainMask& m) {
  auto os = open_out(path);
  write_sfld(os, m);
}
ScalarField load_sfld(const std::string& path) {
  auto is = open_in(path);
  return read_sfld(is);
}
DomainMask load_sfld_mask(const std::string& path) {
  auto is = open_in(path);
  return read_sfld_mask(is);
}

void write_csv(std::ostream& os, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
}

}  // namespace acflab
