#include "b2m/scene.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "b2m/error.hpp"

namespace b2m::scene {

namespace {

constexpr double kRoad = 0.12;
constexpr double kGround = 0.38;
constexpr double kObstacle = 0.95;
constexpr double kObstacleDepth = 0.6;
constexpr double kObstacleHalfDepth = 0.12;
constexpr double kFogGray = 0.5;
// Per-channel tint for colour renders (sky, ground/road, obstacle).
constexpr double kSkyTint[3] = {0.75, 0.85, 1.0};
constexpr double kGroundTint[3] = {0.9, 1.0, 0.8};
constexpr double kObstacleTint[3] = {1.0, 0.4, 0.3};

void check_range(const char* name, double v, double lo, double hi) {
  if (!(v >= lo && v <= hi)) {
    throw DomainError(std::string("scene factor ") + name + "=" + std::to_string(v) +
                      " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

nlohmann::json range_json(const Range& r) { return {r.lo, r.hi}; }

}  // namespace

void SceneFactors::validate() const {
  check_range("road_offset", road_offset, -1.0, 1.0);
  check_range("road_curvature", road_curvature, -1.0, 1.0);
  check_range("horizon_height", horizon_height, 0.3, 0.7);
  check_range("fog_opacity", fog_opacity, 0.0, 1.0);
  if (obstacle_position) check_range("obstacle_position", *obstacle_position, -1.0, 1.0);
}

std::vector<double> SceneFactors::as_vector() const {
  return {road_offset,
          road_curvature,
          horizon_height,
          fog_opacity,
          obstacle_position ? 1.0 : 0.0,
          obstacle_position.value_or(0.0)};
}

void ImageDims::validate() const {
  if (width == 0 || height == 0) throw ShapeError("image dims must be positive");
  if (channels != 1 && channels != 3) throw ShapeError("image channels must be 1 or 3");
}

SceneImage render_scene(const SceneFactors& factors, const ImageDims& dims) {
  factors.validate();
  dims.validate();
  SceneImage img{dims, std::vector<double>(dims.pixels())};
  const double w = static_cast<double>(dims.width);
  const double h = static_cast<double>(dims.height);
  const double horizon = factors.horizon_height * h;
  const double fog = factors.fog_opacity;
  for (std::size_t y = 0; y < dims.height; ++y) {
    const double yc = static_cast<double>(y) + 0.5;
    const bool sky = yc < horizon;
    const double depth = sky ? 0.0 : (yc - horizon) / (h - horizon);  // 0 at horizon, 1 at bottom
    const double bend = 1.0 - depth;
    const double centre =
        factors.road_offset * 0.25 * w * depth + factors.road_curvature * 0.3 * w * bend * bend;
    const double half_width = w * (0.04 + 0.3 * depth);
    const bool obstacle_row = factors.obstacle_position.has_value() && !sky &&
                              std::abs(depth - kObstacleDepth) <= kObstacleHalfDepth;
    for (std::size_t x = 0; x < dims.width; ++x) {
      // Centred coordinate; exact for half-integers so mirrored scenes match bitwise.
      const double u = static_cast<double>(x) + 0.5 - 0.5 * w;
      double value;
      const double* tint = kGroundTint;
      if (sky) {
        value = 0.85 - 0.2 * (yc / horizon);
        tint = kSkyTint;
      } else if (std::abs(u - centre) <= half_width) {
        value = kRoad;
        if (obstacle_row) {
          const double obstacle_u = centre + *factors.obstacle_position * 0.7 * half_width;
          if (std::abs(u - obstacle_u) <= 0.15 * half_width + 0.5) {
            value = kObstacle;
            tint = kObstacleTint;
          }
        }
      } else {
        value = kGround;
      }
      for (std::size_t c = 0; c < dims.channels; ++c) {
        const double base = dims.channels == 1 ? value : value * tint[c];
        const double blended = (1.0 - fog) * base + fog * kFogGray;
        img.pixels[(y * dims.width + x) * dims.channels + c] = std::clamp(blended, 0.0, 1.0);
      }
    }
  }
  return img;
}

std::string to_string(Split split) { return split == Split::artificial ? "artificial-A" : "human-H"; }

Split split_from_string(const std::string& name) {
  if (name == "artificial-A" || name == "A") return Split::artificial;
  if (name == "human-H" || name == "H") return Split::human;
  throw ConfigError("unknown scene split '" + name + "'");
}

FactorRanges FactorRanges::for_split(Split split) {
  FactorRanges r;
  if (split == Split::human) {
    r.fog = {0.2, 0.8};
    r.curvature = {-0.5, 0.5};
  }
  return r;
}

SceneDataset sample_dataset(Rng& rng, std::size_t n, Split split, const ImageDims& dims) {
  if (n < 1) throw DomainError("sample_dataset: n must be >= 1");
  dims.validate();
  const FactorRanges ranges = FactorRanges::for_split(split);
  SceneDataset ds;
  ds.dims = dims;
  ds.split = split;
  ds.seed = rng.next();
  ds.factors.reserve(n);
  ds.pixels.reserve(n * dims.pixels());
  for (std::size_t i = 0; i < n; ++i) {
    Rng frame = Rng::derive(ds.seed, i);
    SceneFactors f;
    f.road_offset = frame.uniform(ranges.offset.lo, ranges.offset.hi);
    f.road_curvature = frame.uniform(ranges.curvature.lo, ranges.curvature.hi);
    f.horizon_height = frame.uniform(ranges.horizon.lo, ranges.horizon.hi);
    f.fog_opacity = frame.uniform(ranges.fog.lo, ranges.fog.hi);
    const bool obstacle = frame.bernoulli(ranges.obstacle_probability);
    const double pos = frame.uniform(ranges.obstacle.lo, ranges.obstacle.hi);
    if (obstacle) f.obstacle_position = pos;
    const auto img = render_scene(f, dims);
    ds.pixels.insert(ds.pixels.end(), img.pixels.begin(), img.pixels.end());
    ds.factors.push_back(f);
  }
  return ds;
}

EegTeacher::EegTeacher(std::size_t dims, Rng& map_rng, double sigma, double ar_coefficient)
    : dims_(dims), sigma_(sigma), ar_(ar_coefficient), noise_(dims, 0.0) {
  if (dims < kFactorDims) {
    throw ConfigError("eeg teacher: dims " + std::to_string(dims) + " < " +
                      std::to_string(kFactorDims) + " scene factors");
  }
  if (sigma < 0.0) throw ConfigError("eeg teacher: sigma must be >= 0");
  if (!(std::abs(ar_coefficient) < 1.0)) throw ConfigError("eeg teacher: |ar| must be < 1");
  weights_.resize(dims * kFactorDims);
  for (auto& v : weights_) v = map_rng.normal();
  bias_.resize(dims);
  for (auto& v : bias_) v = map_rng.normal(0.0, 0.1);
}

std::vector<double> EegTeacher::clean(const SceneFactors& factors) const {
  const auto f = factors.as_vector();
  std::vector<double> out(dims_);
  for (std::size_t d = 0; d < dims_; ++d) {
    double acc = bias_[d];
    for (std::size_t k = 0; k < kFactorDims; ++k) acc += weights_[d * kFactorDims + k] * f[k];
    out[d] = acc;
  }
  return out;
}

std::vector<double> EegTeacher::operator()(const SceneFactors& factors, Rng& noise_rng) {
  auto out = clean(factors);
  if (sigma_ == 0.0) return out;
  const double innovation = sigma_ * std::sqrt(1.0 - ar_ * ar_);
  for (std::size_t d = 0; d < dims_; ++d) {
    noise_[d] = noise_started_ ? ar_ * noise_[d] + innovation * noise_rng.normal()
                               : sigma_ * noise_rng.normal();
    out[d] += noise_[d];
  }
  noise_started_ = true;
  return out;
}

void EegTeacher::reset_noise() {
  std::fill(noise_.begin(), noise_.end(), 0.0);
  noise_started_ = false;
}

std::vector<double> eeg_teacher_vectors(EegTeacher& teacher, const SceneDataset& dataset,
                                        Rng& noise_rng) {
  std::vector<double> out;
  out.reserve(dataset.size() * teacher.dims());
  for (const auto& f : dataset.factors) {
    const auto v = teacher(f, noise_rng);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

void save_dataset(const std::filesystem::path& stem, const SceneDataset& dataset) {
  static_assert(std::endian::native == std::endian::little, "binary format is little-endian");
  auto bin_path = stem;
  bin_path += ".bin";
  auto json_path = stem;
  json_path += ".json";
  {
    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw IoError("cannot write " + bin_path.string());
    bin.write(reinterpret_cast<const char*>(dataset.pixels.data()),
              static_cast<std::streamsize>(dataset.pixels.size() * sizeof(double)));
  }
  const FactorRanges ranges = FactorRanges::for_split(dataset.split);
  nlohmann::json factors = nlohmann::json::array();
  for (const auto& f : dataset.factors) {
    nlohmann::json jf{{"road_offset", f.road_offset},
                      {"road_curvature", f.road_curvature},
                      {"horizon_height", f.horizon_height},
                      {"fog_opacity", f.fog_opacity},
                      {"obstacle_position", nullptr}};
    if (f.obstacle_position) jf["obstacle_position"] = *f.obstacle_position;
    factors.push_back(std::move(jf));
  }
  nlohmann::json side{
      {"schema", "b2m.scene-dataset"},
      {"version", 1},
      {"split", to_string(dataset.split)},
      {"seed", dataset.seed},
      {"count", dataset.size()},
      {"dims", {{"width", dataset.dims.width}, {"height", dataset.dims.height}, {"channels", dataset.dims.channels}}},
      {"dtype", "float64-le"},
      {"layout", "image-major, row-major, channels interleaved"},
      {"factor_ranges",
       {{"road_offset", range_json(ranges.offset)},
        {"road_curvature", range_json(ranges.curvature)},
        {"horizon_height", range_json(ranges.horizon)},
        {"fog_opacity", range_json(ranges.fog)},
        {"obstacle_position", range_json(ranges.obstacle)},
        {"obstacle_probability", ranges.obstacle_probability}}},
      {"factors", std::move(factors)}};
  std::ofstream js(json_path);
  if (!js) throw IoError("cannot write " + json_path.string());
  js << side.dump(1) << '\n';
}

SceneDataset load_dataset(const std::filesystem::path& stem) {
  auto bin_path = stem;
  bin_path += ".bin";
  auto json_path = stem;
  json_path += ".json";
  std::ifstream js(json_path);
  if (!js) throw IoError("cannot read " + json_path.string());
  SceneDataset ds;
  try {
    const auto side = nlohmann::json::parse(js);
    if (side.at("schema") != "b2m.scene-dataset") throw ConfigError("scene dataset: wrong schema");
    ds.split = split_from_string(side.at("split").get<std::string>());
    ds.seed = side.at("seed").get<std::uint64_t>();
    ds.dims = {side.at("dims").at("width").get<std::size_t>(),
               side.at("dims").at("height").get<std::size_t>(),
               side.at("dims").at("channels").get<std::size_t>()};
    for (const auto& jf : side.at("factors")) {
      SceneFactors f;
      f.road_offset = jf.at("road_offset").get<double>();
      f.road_curvature = jf.at("road_curvature").get<double>();
      f.horizon_height = jf.at("horizon_height").get<double>();
      f.fog_opacity = jf.at("fog_opacity").get<double>();
      if (!jf.at("obstacle_position").is_null()) f.obstacle_position = jf["obstacle_position"].get<double>();
      ds.factors.push_back(f);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(json_path.string() + ": " + e.what());
  }
  ds.pixels.resize(ds.size() * ds.dims.pixels());
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot read " + bin_path.string());
  bin.read(reinterpret_cast<char*>(ds.pixels.data()),
           static_cast<std::streamsize>(ds.pixels.size() * sizeof(double)));
  if (bin.gcount() != static_cast<std::streamsize>(ds.pixels.size() * sizeof(double))) {
    throw IoError(bin_path.string() + ": truncated pixel data");
  }
  return ds;
}

void write_pnm(const std::filesystem::path& path, const SceneImage& image) {
  image.dims.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (image.dims.channels == 1 ? "P5" : "P6") << '\n'
      << image.dims.width << ' ' << image.dims.height << "\n255\n";
  std::vector<unsigned char> bytes(image.pixels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(image.pixels[i], 0.0, 1.0) * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

SceneImage tile_images(const std::vector<SceneImage>& images, std::size_t columns) {
  if (images.empty() || columns == 0) throw ShapeError("tile_images: nothing to tile");
  const ImageDims cell = images.front().dims;
  for (const auto& im : images) {
    if (!(im.dims == cell)) throw ShapeError("tile_images: images differ in size");
  }
  const std::size_t rows = (images.size() + columns - 1) / columns;
  ImageDims dims{columns * (cell.width + 1) - 1, rows * (cell.height + 1) - 1, cell.channels};
  SceneImage out{dims, std::vector<double>(dims.pixels(), 1.0)};
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::size_t oy = (i / columns) * (cell.height + 1);
    const std::size_t ox = (i % columns) * (cell.width + 1);
    for (std::size_t y = 0; y < cell.height; ++y)
      for (std::size_t x = 0; x < cell.width; ++x)
        for (std::size_t c = 0; c < cell.channels; ++c)
          out.pixels[((oy + y) * dims.width + ox + x) * cell.channels + c] = images[i].at(y, x, c);
  }
  return out;
}

}  // namespace b2m::scene
