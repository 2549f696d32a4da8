#include "bflow/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace bflow {

namespace {

// Reads one PNM header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
      continue;
    }
    if (!std::isspace(ch)) {
      tok.push_back(static_cast<char>(ch));
      while ((ch = in.peek()) != EOF && !std::isspace(ch)) tok.push_back(static_cast<char>(in.get()));
      return tok;
    }
  }
  fail("pnm: truncated header");
}

int pnm_int(std::istream& in) {
  const std::string tok = pnm_token(in);
  try {
    return std::stoi(tok);
  } catch (...) {
    fail("pnm: bad header token '", tok, "'");
  }
}

}  // namespace

void write_ppm(const std::string& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  BFLOW_CHECK(out.good(), "write_ppm: cannot open ", path);
  out << "P6\n" << img.w << " " << img.h << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
  BFLOW_CHECK(out.good(), "write_ppm: write failed for ", path);
}

RgbImage read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  BFLOW_CHECK(in.good(), "read_ppm: cannot open ", path);
  BFLOW_CHECK(pnm_token(in) == "P6", "read_ppm: not a binary PPM: ", path);
  const int w = pnm_int(in), h = pnm_int(in), maxval = pnm_int(in);
  BFLOW_CHECK(maxval == 255, "read_ppm: unsupported maxval ", maxval, " in ", path);
  in.get();  // single whitespace after maxval
  RgbImage img(w, h);
  in.read(reinterpret_cast<char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
  BFLOW_CHECK(in.gcount() == static_cast<std::streamsize>(img.px.size()),
              "read_ppm: truncated pixel data in ", path);
  return img;
}

void write_pgm(const std::string& path, const Planef& plane, int maxval) {
  BFLOW_CHECK(maxval == 255 || maxval == 65535, "write_pgm: maxval must be 255 or 65535");
  std::ofstream out(path, std::ios::binary);
  BFLOW_CHECK(out.good(), "write_pgm: cannot open ", path);
  out << "P5\n" << plane.w << " " << plane.h << "\n" << maxval << "\n";
  for (float raw : plane.v) {
    const float c = std::min(1.0f, std::max(0.0f, raw));
    const int q = static_cast<int>(std::lround(c * maxval));
    if (maxval == 255) {
      out.put(static_cast<char>(q));
    } else {
      out.put(static_cast<char>(q >> 8));  // big-endian per PNM spec
      out.put(static_cast<char>(q & 0xff));
    }
  }
  BFLOW_CHECK(out.good(), "write_pgm: write failed for ", path);
}

Planef read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  BFLOW_CHECK(in.good(), "read_pgm: cannot open ", path);
  BFLOW_CHECK(pnm_token(in) == "P5", "read_pgm: not a binary PGM: ", path);
  const int w = pnm_int(in), h = pnm_int(in), maxval = pnm_int(in);
  BFLOW_CHECK(maxval == 255 || maxval == 65535, "read_pgm: unsupported maxval ", maxval);
  in.get();
  Planef plane(w, h);
  const size_t n = plane.v.size();
  if (maxval == 255) {
    std::vector<uint8_t> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    BFLOW_CHECK(in.gcount() == static_cast<std::streamsize>(n), "read_pgm: truncated ", path);
    for (size_t i = 0; i < n; ++i) plane.v[i] = buf[i] / 255.0f;
  } else {
    std::vector<uint8_t> buf(n * 2);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    BFLOW_CHECK(in.gcount() == static_cast<std::streamsize>(buf.size()), "read_pgm: truncated ",
                path);
    for (size_t i = 0; i < n; ++i)
      plane.v[i] = ((buf[2 * i] << 8) | buf[2 * i + 1]) / 65535.0f;
  }
  return plane;
}

float bilinear(const Planef& p, float x, float y) {
  x = std::min(static_cast<float>(p.w - 1), std::max(0.0f, x));
  y = std::min(static_cast<float>(p.h - 1), std::max(0.0f, y));
  const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, p.w - 1), y1 = std::min(y0 + 1, p.h - 1);
  const float fx = x - x0, fy = y - y0;
  return p.at(x0, y0) * (1 - fx) * (1 - fy) + p.at(x1, y0) * fx * (1 - fy) +
         p.at(x0, y1) * (1 - fx) * fy + p.at(x1, y1) * fx * fy;
}

}  // namespace bflow
