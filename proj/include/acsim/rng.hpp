#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace acsim {

using Rng = std::mt19937_64;

// Stream tags used when splitting a master seed into independent streams.
enum class Stream : std::uint64_t {
  kTtc = 1,
  kNoise = 2,
  kAttacker = 3,
  kDefender = 4,
  kTrain = 5,
  kEval = 6,
  kInit = 7,
  kShuffle = 8,
  kGraph = 9,
  kMixture = 10,
};

// Mixes a seed, a stream tag and an index path into a new 64-bit seed. The
// result depends only on the arguments, so streams derived in parallel agree
// with streams derived serially.
inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                                 std::initializer_list<std::uint64_t> path = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (path.size() + 2));
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  push(static_cast<std::uint64_t>(stream));
  for (auto v : path) push(v);
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

inline Rng make_rng(std::uint64_t seed, Stream stream,
                    std::initializer_list<std::uint64_t> path = {}) {
  return Rng(derive_seed(seed, stream, path));
}

// Uniform double in [0, 1); p=0 Bernoulli draws never fire, p=1 always fire.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace acsim
