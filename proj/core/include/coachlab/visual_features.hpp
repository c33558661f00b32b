#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "coachlab/gridworld.hpp"
#include "coachlab/policy.hpp"

namespace coachlab {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Row-major single-channel float map.
struct Channel {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  Channel() = default;
  Channel(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), values(w * h, fill) {}
  double& at(std::size_t x, std::size_t y) { return values[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return values[y * width + x]; }
};

struct Ball {
  double cx;
  double cy;
  double radius;
};

/// Upright cylinder seen side-on: an orange cap over a grey body.
struct Cylinder {
  double cx;
  double top;
  double width;
  double height;
};

class SceneImage {
 public:
  /// Dimensions must be positive multiples of 8.
  SceneImage(std::size_t width = 64, std::size_t height = 64, Rgb background = {40, 40, 40});

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  Rgb pixel(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
  void set_pixel(std::size_t x, std::size_t y, Rgb c) { pixels_[y * width_ + x] = c; }
  const std::vector<Rgb>& pixels() const { return pixels_; }

  bool operator==(const SceneImage&) const = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<Rgb> pixels_;
};

struct FeatureConfig {
  Rgb ball_color{255, 64, 255};
  Rgb cylinder_color{255, 128, 0};
  /// Saturation scales of the threshold units, strictly increasing.
  std::array<double, 3> phi{4.0, 16.0, 48.0};
  std::size_t pooled_size = 8;
  std::size_t max_pool_rows = 2;
  std::size_t max_pool_cols = 8;

  void validate() const;
  std::size_t feature_count() const;
};

/// Rasterises a ball and/or a cylinder over the background. Deterministic:
/// a pixel belongs to a shape when its centre lies inside it.
SceneImage render_scene(const std::vector<Ball>& balls, const std::vector<Cylinder>& cylinders,
                        const FeatureConfig& config = {}, std::size_t width = 64, std::size_t height = 64);

/// Chromatic similarity to the ball and cylinder colours: each pixel and
/// reference has its grey component removed, both are normalised, and the
/// dot product is clamped at 0. Achromatic pixels respond 0.
std::array<Channel, 2> color_channels(const SceneImage& img, const FeatureConfig& config = {});

/// Block sums onto an out_size x out_size grid.
Channel sum_pool(const Channel& channel, std::size_t out_size = 8);

/// T_i(x) = min(x / phi_i, 1), one grid per scale.
std::array<Channel, 3> threshold_units(const Channel& grid, const std::array<double, 3>& phi);

/// Max over windows of rows x cols with stride 1, row-major output.
std::vector<double> max_pool(const Channel& grid, std::size_t rows = 2, std::size_t cols = 8);

/// Full pipeline. Order: colour channel, then saturation scale, then window
/// row. 42 values in [0, 1] with the default config.
std::vector<double> extract_features(const SceneImage& img, const FeatureConfig& config = {});

/// Binary PPM (P6), maxval 255.
void write_ppm(const SceneImage& img, const std::string& path);
SceneImage read_ppm(const std::string& path);

/// Egocentric render of a dog-grid cell: the goal shows as the ball and the
/// nearest penalty cell as the cylinder, each drawn larger when closer.
SceneImage render_grid_view(const GridWorld& world, Cell agent, const FeatureConfig& config = {});

/// x(s) = extract_features(render_grid_view(s)), rendered on every call.
class VisualGridFeatures final : public FeatureMap {
 public:
  explicit VisualGridFeatures(const GridWorld& world, FeatureConfig config = {});
  std::size_t dimension() const override { return config_.feature_count(); }
  void features(StateId s, std::span<double> out) const override;

 private:
  GridWorld world_;
  FeatureConfig config_;
};

}  // namespace coachlab
