#ifndef SIGMIN_IO_HPP
#define SIGMIN_IO_HPP

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sigmin/dense_matrix.hpp"
#include "sigmin/signal.hpp"

namespace sigmin {

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest text form that round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

namespace detail {

inline double parse_double(const std::string& tok, const std::string& path, std::size_t line) {
  const char* s = tok.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw io_error(path + ": line " + std::to_string(line) + ": not a number: '" + tok + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline bool looks_numeric(const std::string& tok) {
  const char* s = tok.c_str();
  char* end = nullptr;
  std::strtod(s, &end);
  return end != s && *end == '\0';
}

}  // namespace detail

inline void save_signal_csv(const std::string& path, const Signal& sig) {
  sig.check();
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  out << "x,y,value\n";
  for (std::size_t i = 0; i < sig.size(); ++i)
    out << format_double(sig.xs[i]) << ',' << format_double(sig.ys[i]) << ','
        << format_double(sig.values[i]) << '\n';
  if (!out) throw io_error(path + ": write failed");
}

inline Signal load_signal_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open");
  Signal sig;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto toks = detail::split_csv_line(line);
    if (lineno == 1 && !toks.empty() && !detail::looks_numeric(toks[0])) continue;
    if (toks.size() != 3)
      throw io_error(path + ": line " + std::to_string(lineno) + ": expected 3 columns, got " +
                     std::to_string(toks.size()));
    sig.xs.push_back(detail::parse_double(toks[0], path, lineno));
    sig.ys.push_back(detail::parse_double(toks[1], path, lineno));
    sig.values.push_back(detail::parse_double(toks[2], path, lineno));
  }
  return sig;
}

inline void save_curve_csv(const std::string& path, const CurvePoints& curve) {
  std::ofstream out(path);
  if (!out) throw io_error(path + ": cannot open for writing");
  out << "x,y\n";
  for (std::size_t i = 0; i < curve.size(); ++i)
    out << format_double(curve.xs[i]) << ',' << format_double(curve.ys[i]) << '\n';
  if (!out) throw io_error(path + ": write failed");
}

inline CurvePoints load_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error(path + ": cannot open");
  CurvePoints curve;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto toks = detail::split_csv_line(line);
    if (lineno == 1 && !toks.empty() && !detail::looks_numeric(toks[0])) continue;
    if (toks.size() != 2)
      throw io_error(path + ": line " + std::to_string(lineno) + ": expected 2 columns, got " +
                     std::to_string(toks.size()));
    curve.xs.push_back(detail::parse_double(toks[0], path, lineno));
    curve.ys.push_back(detail::parse_double(toks[1], path, lineno));
  }
  return curve;
}

namespace detail {

// Reads the next header token, skipping whitespace and # comments.
inline std::string next_pgm_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
    } else if (!std::isspace(c)) {
      tok += static_cast<char>(c);
      while ((c = in.get()) != EOF && !std::isspace(c) && c != '#') tok += static_cast<char>(c);
      if (c == '#') in.unget();
      return tok;
    }
  }
  throw io_error(path + ": unexpected end of file in PGM header");
}

inline unsigned long parse_pgm_uint(const std::string& tok, const std::string& path,
                                    const char* what) {
  for (char c : tok)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw io_error(path + ": bad PGM " + what + ": '" + tok + "'");
  return std::stoul(tok);
}

}  // namespace detail

// Loads a PGM image (P2 ascii or P5 binary) as a matrix with entries in [0, 1].
inline DenseMatrix load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path + ": cannot open");
  std::string magic = detail::next_pgm_token(in, path);
  if (magic != "P2" && magic != "P5")
    throw io_error(path + ": unsupported PGM magic '" + magic + "'");
  unsigned long w = detail::parse_pgm_uint(detail::next_pgm_token(in, path), path, "width");
  unsigned long h = detail::parse_pgm_uint(detail::next_pgm_token(in, path), path, "height");
  unsigned long maxval = detail::parse_pgm_uint(detail::next_pgm_token(in, path), path, "maxval");
  if (w == 0 || h == 0) throw io_error(path + ": zero PGM dimensions");
  if (maxval == 0 || maxval > 65535)
    throw io_error(path + ": PGM maxval must be in [1, 65535], got " + std::to_string(maxval));
  DenseMatrix img(h, w);
  if (magic == "P2") {
    for (std::size_t i = 0; i < h * w; ++i) {
      std::string tok = detail::next_pgm_token(in, path);
      unsigned long v = detail::parse_pgm_uint(tok, path, "sample");
      if (v > maxval) throw io_error(path + ": PGM sample exceeds maxval");
      img.data[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
  } else {
    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t bytes_per = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(h * w * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
      throw io_error(path + ": truncated PGM raster");
    for (std::size_t i = 0; i < h * w; ++i) {
      unsigned long v = bytes_per == 1
                            ? raw[i]
                            : (static_cast<unsigned long>(raw[2 * i]) << 8) | raw[2 * i + 1];
      if (v > maxval) throw io_error(path + ": PGM sample exceeds maxval");
      img.data[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
  }
  return img;
}

// Saves a matrix with entries in [0, 1] as PGM. Out-of-range entries are
// clamped. Binary rasters with maxval > 255 use big-endian 16-bit samples.
inline void save_pgm(const std::string& path, const DenseMatrix& img, unsigned maxval = 65535,
                     bool binary = true) {
  if (maxval == 0 || maxval > 65535)
    throw std::invalid_argument("save_pgm: maxval must be in [1, 65535]");
  if (img.rows == 0 || img.cols == 0) throw std::invalid_argument("save_pgm: empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error(path + ": cannot open for writing");
  out << (binary ? "P5" : "P2") << '\n' << img.cols << ' ' << img.rows << '\n' << maxval << '\n';
  auto quantise = [maxval](double v) -> unsigned long {
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    return static_cast<unsigned long>(std::lround(v * static_cast<double>(maxval)));
  };
  if (binary) {
    std::vector<unsigned char> raw;
    raw.reserve(img.data.size() * (maxval > 255 ? 2 : 1));
    for (double v : img.data) {
      unsigned long q = quantise(v);
      if (maxval > 255) raw.push_back(static_cast<unsigned char>((q >> 8) & 0xff));
      raw.push_back(static_cast<unsigned char>(q & 0xff));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  } else {
    for (std::size_t i = 0; i < img.rows; ++i) {
      for (std::size_t j = 0; j < img.cols; ++j) {
        if (j) out << ' ';
        out << quantise(img.at(i, j));
      }
      out << '\n';
    }
  }
  if (!out) throw io_error(path + ": write failed");
}

}  // namespace sigmin

#endif
