#include "coachlab/visual_features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace coachlab {

namespace {

struct Chroma {
  double r, g, b, norm;
};

Chroma chroma_of(Rgb c) {
  const double mean = (double(c.r) + double(c.g) + double(c.b)) / 3.0;
  Chroma out{c.r - mean, c.g - mean, c.b - mean, 0.0};
  out.norm = std::sqrt(out.r * out.r + out.g * out.g + out.b * out.b);
  return out;
}

double similarity(const Chroma& pixel, const Chroma& ref) {
  if (pixel.norm == 0.0 || ref.norm == 0.0) return 0.0;
  const double cosine = (pixel.r * ref.r + pixel.g * ref.g + pixel.b * ref.b) / (pixel.norm * ref.norm);
  return std::clamp(cosine, 0.0, 1.0);
}

}  // namespace

SceneImage::SceneImage(std::size_t width, std::size_t height, Rgb background)
    : width_(width), height_(height), pixels_(width * height, background) {
  if (width == 0 || height == 0 || width % 8 != 0 || height % 8 != 0) {
    throw std::invalid_argument("scene dimensions must be positive multiples of 8");
  }
}

void FeatureConfig::validate() const {
  if (!(phi[0] > 0.0 && phi[0] < phi[1] && phi[1] < phi[2])) {
    throw std::invalid_argument("saturation scales must be positive and strictly increasing");
  }
  if (pooled_size == 0 || max_pool_rows == 0 || max_pool_cols == 0 || max_pool_rows > pooled_size ||
      max_pool_cols > pooled_size) {
    throw std::invalid_argument("pooling shapes do not fit the pooled grid");
  }
}

std::size_t FeatureConfig::feature_count() const {
  const std::size_t windows = (pooled_size - max_pool_rows + 1) * (pooled_size - max_pool_cols + 1);
  return 2 * phi.size() * windows;
}

SceneImage render_scene(const std::vector<Ball>& balls, const std::vector<Cylinder>& cylinders,
                        const FeatureConfig& config, std::size_t width, std::size_t height) {
  SceneImage img(width, height);
  const Rgb body{128, 128, 128};
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double px = double(x) + 0.5;
      const double py = double(y) + 0.5;
      for (const Cylinder& c : cylinders) {
        if (std::abs(px - c.cx) <= c.width / 2.0 && py >= c.top && py <= c.top + c.height) {
          const double cap = std::max(1.0, c.height / 4.0);
          img.set_pixel(x, y, py <= c.top + cap ? config.cylinder_color : body);
        }
      }
      for (const Ball& b : balls) {
        const double dx = px - b.cx;
        const double dy = py - b.cy;
        if (dx * dx + dy * dy <= b.radius * b.radius) img.set_pixel(x, y, config.ball_color);
      }
    }
  }
  return img;
}

std::array<Channel, 2> color_channels(const SceneImage& img, const FeatureConfig& config) {
  const Chroma ball = chroma_of(config.ball_color);
  const Chroma cylinder = chroma_of(config.cylinder_color);
  std::array<Channel, 2> out{Channel(img.width(), img.height()), Channel(img.width(), img.height())};
  const auto& pixels = img.pixels();
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const Chroma c = chroma_of(pixels[i]);
    out[0].values[i] = similarity(c, ball);
    out[1].values[i] = similarity(c, cylinder);
  }
  return out;
}

Channel sum_pool(const Channel& channel, std::size_t out_size) {
  if (out_size == 0 || channel.width % out_size != 0 || channel.height % out_size != 0 || channel.width == 0 ||
      channel.height == 0) {
    throw std::invalid_argument("channel dimensions must be divisible by the pooled size");
  }
  const std::size_t bw = channel.width / out_size;
  const std::size_t bh = channel.height / out_size;
  Channel out(out_size, out_size);
  for (std::size_t oy = 0; oy < out_size; ++oy) {
    for (std::size_t ox = 0; ox < out_size; ++ox) {
      double sum = 0.0;
      for (std::size_t y = oy * bh; y < (oy + 1) * bh; ++y) {
        for (std::size_t x = ox * bw; x < (ox + 1) * bw; ++x) sum += channel.at(x, y);
      }
      out.at(ox, oy) = sum;
    }
  }
  return out;
}

std::array<Channel, 3> threshold_units(const Channel& grid, const std::array<double, 3>& phi) {
  std::array<Channel, 3> out;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (!(phi[i] > 0.0)) throw std::invalid_argument("saturation scale must be positive");
    out[i] = Channel(grid.width, grid.height);
    for (std::size_t k = 0; k < grid.values.size(); ++k) out[i].values[k] = std::min(grid.values[k] / phi[i], 1.0);
  }
  return out;
}

std::vector<double> max_pool(const Channel& grid, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0 || rows > grid.height || cols > grid.width) {
    throw std::invalid_argument("max-pool window does not fit the grid");
  }
  std::vector<double> out;
  out.reserve((grid.height - rows + 1) * (grid.width - cols + 1));
  for (std::size_t r = 0; r + rows <= grid.height; ++r) {
    for (std::size_t c = 0; c + cols <= grid.width; ++c) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t y = r; y < r + rows; ++y) {
        for (std::size_t x = c; x < c + cols; ++x) m = std::max(m, grid.at(x, y));
      }
      out.push_back(m);
    }
  }
  return out;
}

std::vector<double> extract_features(const SceneImage& img, const FeatureConfig& config) {
  config.validate();
  std::vector<double> features;
  features.reserve(config.feature_count());
  for (const Channel& channel : color_channels(img, config)) {
    const Channel pooled = sum_pool(channel, config.pooled_size);
    for (const Channel& scale : threshold_units(pooled, config.phi)) {
      const std::vector<double> windows = max_pool(scale, config.max_pool_rows, config.max_pool_cols);
      features.insert(features.end(), windows.begin(), windows.end());
    }
  }
  return features;
}

void write_ppm(const SceneImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  for (const Rgb& p : img.pixels()) {
    const char bytes[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
    out.write(bytes, 3);
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

SceneImage read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  auto next_token = [&in]() {
    std::string token;
    while (in) {
      const int ch = in.get();
      if (ch == '#') {
        in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
      } else if (std::isspace(ch)) {
        if (!token.empty()) return token;
      } else if (ch != EOF) {
        token.push_back(static_cast<char>(ch));
      }
    }
    return token;
  };
  if (next_token() != "P6") throw std::runtime_error(path + " is not a binary PPM");
  const std::size_t width = std::stoul(next_token());
  const std::size_t height = std::stoul(next_token());
  if (std::stoul(next_token()) != 255) throw std::runtime_error(path + ": only maxval 255 is supported");
  SceneImage img(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      char bytes[3];
      if (!in.read(bytes, 3)) throw std::runtime_error(path + ": truncated pixel data");
      img.set_pixel(x, y, {static_cast<std::uint8_t>(bytes[0]), static_cast<std::uint8_t>(bytes[1]),
                           static_cast<std::uint8_t>(bytes[2])});
    }
  }
  return img;
}

SceneImage render_grid_view(const GridWorld& world, Cell agent, const FeatureConfig& config) {
  const Cell goal = world.config().goal;
  const int gdx = goal.x - agent.x;
  const int gdy = goal.y - agent.y;
  const double goal_dist = std::hypot(double(gdx), double(gdy));
  std::vector<Ball> balls{{32.0 + 7.0 * gdx, 32.0 - 3.0 * gdy, 1.0 + 14.0 / (1.0 + goal_dist)}};

  std::vector<Cylinder> cylinders;
  double best = std::numeric_limits<double>::infinity();
  Cell nearest{};
  for (const Cell& p : world.config().penalty_cells) {
    const double d = std::hypot(double(p.x - agent.x), double(p.y - agent.y));
    if (d < best) {
      best = d;
      nearest = p;
    }
  }
  if (std::isfinite(best)) {
    const double h = 4.0 + 24.0 / (1.0 + best);
    cylinders.push_back({32.0 + 7.0 * (nearest.x - agent.x), 32.0 - h / 2.0 - 3.0 * (nearest.y - agent.y),
                         2.0 + 10.0 / (1.0 + best), h});
  }
  return render_scene(balls, cylinders, config);
}

VisualGridFeatures::VisualGridFeatures(const GridWorld& world, FeatureConfig config)
    : world_(world), config_(config) {
  config_.validate();
}

void VisualGridFeatures::features(StateId s, std::span<double> out) const {
  if (out.size() != dimension()) throw std::invalid_argument("feature output has wrong size");
  const std::vector<double> x = extract_features(render_grid_view(world_, world_.cell_of(s), config_), config_);
  std::copy(x.begin(), x.end(), out.begin());
}

}  // namespace coachlab
