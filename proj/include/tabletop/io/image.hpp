#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "tabletop/data/episode_io.hpp"  // crc32

namespace tabletop {

// Tiny 8-bit RGB raster with just enough drawing for the report plots, saved
// as a standard PNG (zlib stream with stored deflate blocks — valid
// everywhere, no compression dependency).
struct Image {
  int w = 0, h = 0;
  std::vector<uint8_t> px;  // h*w*3

  Image(int width, int height, uint8_t r = 255, uint8_t g = 255, uint8_t b = 255)
      : w(width), h(height), px(static_cast<size_t>(width) * height * 3) {
    for (size_t i = 0; i < px.size(); i += 3) {
      px[i] = r;
      px[i + 1] = g;
      px[i + 2] = b;
    }
  }

  void set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
    if (x < 0 || x >= w || y < 0 || y >= h) return;
    size_t i = (static_cast<size_t>(y) * w + x) * 3;
    px[i] = r;
    px[i + 1] = g;
    px[i + 2] = b;
  }

  void rect(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
      for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, r, g, b);
  }

  void line(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b) {
    int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1, err = dx + dy;
    while (true) {
      set(x0, y0, r, g, b);
      if (x0 == x1 && y0 == y1) break;
      int e2 = 2 * err;
      if (e2 >= dy) { err += dy; x0 += sx; }
      if (e2 <= dx) { err += dx; y0 += sy; }
    }
  }

  // 5x7 bitmap glyphs for the few characters the plots label with.
  void text(int x, int y, const std::string& s, uint8_t r, uint8_t g, uint8_t b) {
    for (char ch : s) {
      draw_glyph(x, y, ch, r, g, b);
      x += 6;
    }
  }

  void save_png(const std::string& path) const {
    std::vector<uint8_t> raw;  // filter byte 0 + scanline, per row
    raw.reserve(static_cast<size_t>(h) * (1 + static_cast<size_t>(w) * 3));
    for (int y = 0; y < h; ++y) {
      raw.push_back(0);
      const uint8_t* row = px.data() + static_cast<size_t>(y) * w * 3;
      raw.insert(raw.end(), row, row + static_cast<size_t>(w) * 3);
    }

    // zlib wrapper around stored (uncompressed) deflate blocks
    std::vector<uint8_t> z = {0x78, 0x01};
    uint32_t a = 1, bsum = 0;
    for (uint8_t v : raw) {
      a = (a + v) % 65521;
      bsum = (bsum + a) % 65521;
    }
    size_t pos = 0;
    while (pos < raw.size() || raw.empty()) {
      size_t n = std::min<size_t>(65535, raw.size() - pos);
      bool last = pos + n == raw.size();
      z.push_back(last ? 1 : 0);
      z.push_back(static_cast<uint8_t>(n & 0xFF));
      z.push_back(static_cast<uint8_t>(n >> 8));
      z.push_back(static_cast<uint8_t>(~n & 0xFF));
      z.push_back(static_cast<uint8_t>((~n >> 8) & 0xFF));
      z.insert(z.end(), raw.begin() + static_cast<long>(pos),
               raw.begin() + static_cast<long>(pos + n));
      pos += n;
      if (last) break;
    }
    uint32_t adler = (bsum << 16) | a;
    for (int i = 3; i >= 0; --i) z.push_back(static_cast<uint8_t>(adler >> (8 * i)));

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    f.write(reinterpret_cast<const char*>(sig), 8);
    auto chunk = [&](const char* type, const std::vector<uint8_t>& data) {
      uint32_t len = static_cast<uint32_t>(data.size());
      uint8_t hdr[8];
      for (int i = 0; i < 4; ++i) hdr[i] = static_cast<uint8_t>(len >> (8 * (3 - i)));
      std::memcpy(hdr + 4, type, 4);
      f.write(reinterpret_cast<const char*>(hdr), 8);
      f.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
      uint32_t crc = detail::crc32(hdr + 4, 4);
      crc = detail::crc32(data.data(), data.size(), crc);
      uint8_t tail[4];
      for (int i = 0; i < 4; ++i) tail[i] = static_cast<uint8_t>(crc >> (8 * (3 - i)));
      f.write(reinterpret_cast<const char*>(tail), 4);
    };
    std::vector<uint8_t> ihdr(13, 0);
    auto be = [&](size_t off, uint32_t v) {
      for (int i = 0; i < 4; ++i) ihdr[off + i] = static_cast<uint8_t>(v >> (8 * (3 - i)));
    };
    be(0, static_cast<uint32_t>(w));
    be(4, static_cast<uint32_t>(h));
    ihdr[8] = 8;   // bit depth
    ihdr[9] = 2;   // truecolor
    chunk("IHDR", ihdr);
    chunk("IDAT", z);
    chunk("IEND", {});
    if (!f) throw std::runtime_error("write failed: " + path);
  }

 private:
  void draw_glyph(int x, int y, char ch, uint8_t r, uint8_t g, uint8_t b) {
    // columns of a 5x7 cell, bit 0 = top row
    static const struct { char c; uint8_t col[5]; } font[] = {
        {'0', {62, 81, 73, 69, 62}},  {'1', {0, 66, 127, 64, 0}},
        {'2', {66, 97, 81, 73, 70}},  {'3', {33, 65, 69, 75, 49}},
        {'4', {24, 20, 18, 127, 16}}, {'5', {39, 69, 69, 69, 57}},
        {'6', {60, 74, 73, 73, 48}},  {'7', {1, 113, 9, 5, 3}},
        {'8', {54, 73, 73, 73, 54}},  {'9', {6, 73, 73, 41, 30}},
        {'.', {0, 96, 96, 0, 0}},     {'-', {8, 8, 8, 8, 8}},
        {'_', {64, 64, 64, 64, 64}},  {'/', {32, 16, 8, 4, 2}},
        {'%', {35, 19, 8, 100, 98}},  {' ', {0, 0, 0, 0, 0}},
        {'a', {32, 84, 84, 84, 120}}, {'b', {127, 68, 68, 68, 56}},
        {'c', {56, 68, 68, 68, 32}},  {'d', {56, 68, 68, 68, 127}},
        {'e', {56, 84, 84, 84, 24}},  {'f', {8, 126, 9, 1, 2}},
        {'g', {12, 82, 82, 82, 62}},  {'h', {127, 8, 4, 4, 120}},
        {'i', {0, 68, 125, 64, 0}},   {'j', {32, 64, 68, 61, 0}},
        {'k', {127, 16, 40, 68, 0}},  {'l', {0, 65, 127, 64, 0}},
        {'m', {124, 4, 24, 4, 120}},  {'n', {124, 8, 4, 4, 120}},
        {'o', {56, 68, 68, 68, 56}},  {'p', {124, 20, 20, 20, 8}},
        {'q', {8, 20, 20, 20, 124}},  {'r', {124, 8, 4, 4, 8}},
        {'s', {72, 84, 84, 84, 32}},  {'t', {4, 63, 68, 64, 32}},
        {'u', {60, 64, 64, 32, 124}}, {'v', {28, 32, 64, 32, 28}},
        {'w', {60, 64, 48, 64, 60}},  {'x', {68, 40, 16, 40, 68}},
        {'y', {12, 80, 80, 80, 60}},  {'z', {68, 100, 84, 76, 68}},
        {'R', {127, 9, 25, 41, 70}},  {'O', {62, 65, 65, 65, 62}},
        {'H', {127, 8, 8, 8, 127}},   {'E', {127, 73, 73, 73, 65}},
    };
    char cc = ch;
    bool found = false;
    for (const auto& gl : font)
      if (gl.c == cc) {
        for (int cx = 0; cx < 5; ++cx)
          for (int cy = 0; cy < 7; ++cy)
            if (gl.col[cx] & (1 << cy)) set(x + cx, y + cy, r, g, b);
        found = true;
        break;
      }
    if (!found)  // unknown glyph: small box placeholder
      rect(x, y + 2, x + 4, y + 6, r, g, b);
  }
};

// Line plot of (iteration, loss) pairs on log-friendly linear axes.
inline void render_loss_curve(const std::vector<std::pair<int64_t, double>>& points,
                              const std::string& path, int width = 480,
                              int height = 320) {
  Image im(width, height);
  const int ml = 48, mr = 12, mt = 12, mb = 28;  // margins
  im.line(ml, height - mb, width - mr, height - mb, 0, 0, 0);
  im.line(ml, mt, ml, height - mb, 0, 0, 0);
  im.text(8, mt, "loss", 0, 0, 0);
  im.text(width - 80, height - 18, "iteration", 0, 0, 0);
  if (!points.empty()) {
    double xmin = static_cast<double>(points.front().first);
    double xmax = static_cast<double>(points.back().first);
    double ymin = points[0].second, ymax = points[0].second;
    for (const auto& [it, v] : points) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;
    auto X = [&](double x) {
      return ml + static_cast<int>((x - xmin) / (xmax - xmin) * (width - ml - mr));
    };
    auto Y = [&](double y) {
      return height - mb -
             static_cast<int>((y - ymin) / (ymax - ymin) * (height - mt - mb));
    };
    for (size_t i = 1; i < points.size(); ++i)
      im.line(X(static_cast<double>(points[i - 1].first)), Y(points[i - 1].second),
              X(static_cast<double>(points[i].first)), Y(points[i].second), 180, 40, 40);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", ymax);
    im.text(4, mt + 10, buf, 90, 90, 90);
    std::snprintf(buf, sizeof(buf), "%.3f", ymin);
    im.text(4, height - mb - 8, buf, 90, 90, 90);
  }
  im.save_png(path);
}

// Grouped success-rate bars (seen red, unseen blue), one group per label.
inline void render_success_bars(
    const std::vector<std::tuple<std::string, double, double>>& rows,
    const std::string& path, int width = 560, int height = 320) {
  Image im(width, height);
  const int ml = 40, mr = 12, mt = 12, mb = 40;
  im.line(ml, height - mb, width - mr, height - mb, 0, 0, 0);
  im.line(ml, mt, ml, height - mb, 0, 0, 0);
  im.text(4, mt, "100%", 90, 90, 90);
  im.text(4, height - mb - 8, "0%", 90, 90, 90);
  if (!rows.empty()) {
    int span = (width - ml - mr) / static_cast<int>(rows.size());
    int bw = std::max(4, span / 3);
    auto Y = [&](double v) {
      return height - mb - static_cast<int>(v * (height - mt - mb));
    };
    for (size_t i = 0; i < rows.size(); ++i) {
      const auto& [label, seen, unseen] = rows[i];
      int x0 = ml + static_cast<int>(i) * span + span / 6;
      im.rect(x0, Y(seen), x0 + bw - 1, height - mb - 1, 190, 60, 60);
      im.rect(x0 + bw + 2, Y(unseen), x0 + 2 * bw + 1, height - mb - 1, 60, 60, 190);
      im.text(x0, height - mb + 6, label.substr(0, 8), 0, 0, 0);
    }
  }
  im.save_png(path);
}

}  // namespace tabletop
