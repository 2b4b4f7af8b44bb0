#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "b2m/rng.hpp"

namespace b2m::scene {

struct SceneFactors {
  double road_offset = 0.0;     // [-1, 1]
  double road_curvature = 0.0;  // [-1, 1]
  double horizon_height = 0.5;  // [0.3, 0.7], fraction of image height
  double fog_opacity = 0.0;     // [0, 1]
  std::optional<double> obstacle_position;  // [-1, 1] across the road

  void validate() const;
  /// offset, curvature, horizon, fog, obstacle present (0/1), obstacle position (0 if absent)
  std::vector<double> as_vector() const;
};

inline constexpr std::size_t kFactorDims = 6;

struct ImageDims {
  std::size_t width = 32;
  std::size_t height = 16;
  std::size_t channels = 1;

  std::size_t pixels() const { return width * height * channels; }
  void validate() const;
  bool operator==(const ImageDims&) const = default;
};

/// Row-major, channels interleaved, values in [0, 1].
struct SceneImage {
  ImageDims dims;
  std::vector<double> pixels;

  double at(std::size_t row, std::size_t col, std::size_t channel = 0) const {
    return pixels[(row * dims.width + col) * dims.channels + channel];
  }
};

/// Sky/ground split at the horizon, a trapezoidal road bent by offset and
/// curvature, an optional obstacle, then a fog blend toward 0.5.
SceneImage render_scene(const SceneFactors& factors, const ImageDims& dims = {});

enum class Split { artificial, human };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

struct FactorRanges {
  Range offset{-1.0, 1.0};
  Range curvature{-1.0, 1.0};
  Range horizon{0.3, 0.7};
  Range fog{0.0, 1.0};
  Range obstacle{-1.0, 1.0};
  double obstacle_probability = 0.5;

  /// Full ranges for the artificial train set; fog and curvature narrowed
  /// for the human-experienced set.
  static FactorRanges for_split(Split split);
};

struct SceneDataset {
  ImageDims dims;
  Split split = Split::artificial;
  std::uint64_t seed = 0;
  std::vector<SceneFactors> factors;
  std::vector<double> pixels;  // size() x dims.pixels()

  std::size_t size() const { return factors.size(); }
  std::span<const double> image(std::size_t i) const {
    return std::span<const double>(pixels).subspan(i * dims.pixels(), dims.pixels());
  }
};

/// Frame i draws its factors from substream (seed, i) where seed is the next
/// value of `rng`.
SceneDataset sample_dataset(Rng& rng, std::size_t n, Split split, const ImageDims& dims = {});

/// Stand-in for raw multi-channel EEG: a fixed random affine map of the scene
/// factors to R^D plus AR(1) noise (coefficient 0.9, stationary std sigma)
/// that carries over between consecutive calls.
class EegTeacher {
 public:
  EegTeacher(std::size_t dims, Rng& map_rng, double sigma = 0.1, double ar_coefficient = 0.9);

  std::size_t dims() const { return dims_; }
  double sigma() const { return sigma_; }

  /// Noise-free affine image of the factors.
  std::vector<double> clean(const SceneFactors& factors) const;
  std::vector<double> operator()(const SceneFactors& factors, Rng& noise_rng);
  void reset_noise();

 private:
  std::size_t dims_;
  double sigma_;
  double ar_;
  std::vector<double> weights_;  // dims x kFactorDims
  std::vector<double> bias_;
  std::vector<double> noise_;
  bool noise_started_ = false;
};

/// Teacher vectors for every frame of `dataset`, in dataset order.
std::vector<double> eeg_teacher_vectors(EegTeacher& teacher, const SceneDataset& dataset,
                                        Rng& noise_rng);

/// Writes `<stem>.bin` (little-endian float64 pixels) and `<stem>.json`.
void save_dataset(const std::filesystem::path& stem, const SceneDataset& dataset);
SceneDataset load_dataset(const std::filesystem::path& stem);

/// Binary PGM (1 channel) or PPM (3 channels), 8-bit.
void write_pnm(const std::filesystem::path& path, const SceneImage& image);
/// Lays images out on a grid, `columns` per row, 1 px separators.
SceneImage tile_images(const std::vector<SceneImage>& images, std::size_t columns);

}  // namespace b2m::scene
