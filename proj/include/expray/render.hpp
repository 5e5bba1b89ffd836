#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "expray/common.hpp"
#include "expray/dynamics.hpp"

namespace expray {

struct GridSpec {
  Cx center{};
  double width = 4.0;
  double height = 3.0;
  int px_w = 400;
  int px_h = 300;
  int budget = 256;
  double r_esc = 50.0;
};

/// Escape indices per pixel, row-major from the top row; -1 = not escaped.
struct EscapeImage {
  GridSpec grid;
  std::vector<int> counts;

  int at(int i, int j) const { return counts[(std::size_t)j * grid.px_w + i]; }
};

/// Center of pixel (i, j); row 0 is the top of the rectangle.
inline Cx grid_point(const GridSpec& g, int i, int j) {
  double re = g.center.real() - g.width / 2.0 + (i + 0.5) * g.width / g.px_w;
  double im = g.center.imag() + g.height / 2.0 - (j + 0.5) * g.height / g.px_h;
  return Cx(re, im);
}

/// Number of worker threads: the explicit request, else EXPRAY_THREADS,
/// else hardware concurrency. Output never depends on this.
inline int render_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EXPRAY_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return std::min(v, 256);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : (int)std::min(hc, 64u);
}

namespace detail {

template <typename PixelFn>
inline EscapeImage render_grid(const GridSpec& g, int threads, PixelFn&& fn) {
  if (g.px_w < 1 || g.px_h < 1 || !(g.width > 0.0) || !(g.height > 0.0))
    fail(Errc::domain_error, "render: invalid grid");
  EscapeImage img;
  img.grid = g;
  img.counts.assign((std::size_t)g.px_w * g.px_h, -1);
  int nthreads = std::min(render_threads(threads), g.px_h);
  auto rows = [&](int t0) {
    for (int j = t0; j < g.px_h; j += nthreads)
      for (int i = 0; i < g.px_w; ++i)
        img.counts[(std::size_t)j * g.px_w + i] = fn(grid_point(g, i, j));
  };
  if (nthreads <= 1) {
    rows(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(rows, t);
    for (auto& th : pool) th.join();
  }
  return img;
}

inline int escape_count(Cx kappa, Cx z0, const GridSpec& g) {
  EscapeParams p;
  p.budget = g.budget;
  p.r_esc = g.r_esc;
  OrbitRecord rec = escape_orbit(kappa, z0, p);
  return rec.verdict == OrbitRecord::Verdict::escaping ? rec.detected_at : -1;
}

}  // namespace detail

/// Escape image of the parameter plane (singular orbit per pixel kappa).
inline EscapeImage render_parameter_plane(const GridSpec& g, int threads = 0) {
  return detail::render_grid(g, threads,
                             [&](Cx kappa) { return detail::escape_count(kappa, kappa, g); });
}

/// Escape image of the dynamical plane of E_kappa (orbit of the pixel z0).
inline EscapeImage render_dynamic_plane(Cx kappa, const GridSpec& g, int threads = 0) {
  return detail::render_grid(g, threads,
                             [&](Cx z0) { return detail::escape_count(kappa, z0, g); });
}

struct RgbImage {
  int w = 0, h = 0;
  std::vector<std::uint8_t> px;  // 3 bytes per pixel, row-major
};

/// Fixed palette: not-escaped pixels are black, escape index n gets
/// palette entry n mod 16.
inline constexpr std::array<std::array<std::uint8_t, 3>, 16> kEscapePalette{{
    {66, 30, 15},
    {25, 7, 26},
    {9, 1, 47},
    {4, 4, 73},
    {0, 7, 100},
    {12, 44, 138},
    {24, 82, 177},
    {57, 125, 209},
    {134, 181, 229},
    {211, 236, 248},
    {241, 233, 191},
    {248, 201, 95},
    {255, 170, 0},
    {204, 128, 0},
    {153, 87, 0},
    {106, 52, 3},
}};

inline RgbImage colorize(const EscapeImage& img) {
  RgbImage out;
  out.w = img.grid.px_w;
  out.h = img.grid.px_h;
  out.px.assign((std::size_t)out.w * out.h * 3, 0);
  for (std::size_t k = 0; k < img.counts.size(); ++k) {
    int n = img.counts[k];
    if (n < 0) continue;
    const auto& c = kEscapePalette[(std::size_t)n % kEscapePalette.size()];
    out.px[3 * k] = c[0];
    out.px[3 * k + 1] = c[1];
    out.px[3 * k + 2] = c[2];
  }
  return out;
}

/// Rasterize a polyline over the image (pixel-deterministic DDA; points
/// outside the grid are clipped per plotted pixel).
inline void overlay_polyline(RgbImage& img, const GridSpec& g, const std::vector<Cx>& pts,
                             std::array<std::uint8_t, 3> color = {255, 255, 255}) {
  auto to_px = [&](Cx z, double& x, double& y) {
    x = (z.real() - (g.center.real() - g.width / 2.0)) / g.width * g.px_w - 0.5;
    y = ((g.center.imag() + g.height / 2.0) - z.imag()) / g.height * g.px_h - 0.5;
  };
  auto plot = [&](long xi, long yi) {
    if (xi < 0 || yi < 0 || xi >= img.w || yi >= img.h) return;
    std::size_t k = ((std::size_t)yi * img.w + xi) * 3;
    img.px[k] = color[0];
    img.px[k + 1] = color[1];
    img.px[k + 2] = color[2];
  };
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double x0, y0, x1, y1;
    to_px(pts[i], x0, y0);
    to_px(pts[i + 1], x1, y1);
    double steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
    long n = steps > 1e7 ? 10000000L : (long)steps + 1;
    for (long k = 0; k <= n; ++k) {
      double f = n == 0 ? 0.0 : (double)k / n;
      plot(std::lround(x0 + f * (x1 - x0)), std::lround(y0 + f * (y1 - y0)));
    }
  }
}

/// Escape image plus ray polylines, as a ready-to-write RGB raster.
inline RgbImage overlay_rays(const EscapeImage& img,
                             const std::vector<std::vector<Cx>>& polylines) {
  RgbImage out = colorize(img);
  for (const auto& line : polylines) overlay_polyline(out, img.grid, line);
  return out;
}

/// Binary PPM (P6), 8-bit RGB, row-major.
inline std::string to_ppm(const RgbImage& img) {
  std::string out = "P6\n" + std::to_string(img.w) + " " + std::to_string(img.h) + "\n255\n";
  out.append((const char*)img.px.data(), img.px.size());
  return out;
}

inline void write_ppm(const RgbImage& img, std::ostream& os) {
  std::string s = to_ppm(img);
  os.write(s.data(), (std::streamsize)s.size());
}

/// Counts matrix as CSV: one row per pixel row, -1 for not-escaped.
inline std::string counts_csv(const EscapeImage& img) {
  std::string out;
  for (int j = 0; j < img.grid.px_h; ++j) {
    for (int i = 0; i < img.grid.px_w; ++i) {
      if (i) out += ',';
      out += std::to_string(img.at(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace expray
