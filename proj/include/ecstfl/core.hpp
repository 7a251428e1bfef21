#pragma once

// Shared vocabulary: error types, matrix aliases, emotion categories and
// seeded random streams.

#include <Eigen/Dense>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ecstfl {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr int kNumClasses = 7;
inline constexpr int kAlignedFrames = 16;

// Bad input, bad flags, bad files. Maps to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Something numerically impossible happened. Maps to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Emotion categories, numbered the way annotation files number them.
enum class Emotion : int {
  happy = 1,
  sad = 2,
  neutral = 3,
  angry = 4,
  surprise = 5,
  disgust = 6,
  fear = 7,
};

inline constexpr std::array<std::string_view, kNumClasses> kEmotionNames = {
    "happy", "sad", "neutral", "angry", "surprise", "disgust", "fear"};

// Zero-based class index used by the numeric code (0 = happy ... 6 = fear).
inline constexpr int class_index(Emotion e) { return static_cast<int>(e) - 1; }

inline Emotion emotion_from_index(int category) {
  if (category < 1 || category > kNumClasses) {
    throw ValidationError("emotion category " + std::to_string(category) +
                          " outside 1..7");
  }
  return static_cast<Emotion>(category);
}

inline std::string_view emotion_name(Emotion e) {
  return kEmotionNames[static_cast<std::size_t>(class_index(e))];
}

inline void require(bool cond, const std::string& message) {
  if (!cond) throw ValidationError(message);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

// Shortest text that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace detail

inline double parse_double(std::string_view text, const std::string& context) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ValidationError(context + ": not a number: '" + std::string(text) + "'");
  return v;
}

// Independent, named random streams derived from one user seed. Runs that
// share a seed but touch different streams never perturb each other.
enum class Stream : std::uint64_t {
  data = 1,
  init = 2,
  shuffle = 3,
  folds = 4,
  validation = 5,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stream,
                                std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

// 53-bit uniform in [0, 1); independent of the standard library's
// distribution implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Box-Muller; one draw per call keeps stream consumption trivially predictable.
inline double normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Fisher-Yates with our own index draw so shuffles match across standard
// libraries.
template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace ecstfl
