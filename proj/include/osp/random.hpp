#pragma once

#include <array>
#include <cstdint>

namespace osp {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Maps a 128-bit counter and 64-bit key to 128 random bits; no internal state.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Identifies an independent random stream: a master seed plus a namespace tag.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// Sequential draws for one item (path, sample) of a stream.
///
/// The Philox key is the seed, the counter carries (block, item, stream), so the draws of
/// item i depend only on (seed, stream_id, i) and never on evaluation order.
class SubstreamRng {
 public:
  SubstreamRng(StreamKey stream, std::uint32_t item) noexcept
      : key_{static_cast<std::uint32_t>(stream.seed), static_cast<std::uint32_t>(stream.seed >> 32)},
        item_(item),
        stream_lo_(static_cast<std::uint32_t>(stream.stream_id)),
        stream_hi_(static_cast<std::uint32_t>(stream.stream_id >> 32)) {}

  /// Uniform on (0, 1] with 53 random bits.
  double uniform() noexcept {
    if (cursor_ == 4) refill();
    const std::uint64_t hi = words_[cursor_];
    const std::uint64_t lo = words_[cursor_ + 1];
    cursor_ += 2;
    const std::uint64_t bits = ((hi << 32) | lo) >> 11;
    return static_cast<double>(bits + 1) * 0x1.0p-53;
  }

  /// Standard normal by Box-Muller; the second variate of each pair is cached.
  double normal() noexcept;

 private:
  void refill() noexcept {
    words_ = Philox4x32::block({block_, item_, stream_lo_, stream_hi_}, key_);
    ++block_;
    cursor_ = 0;
  }

  Philox4x32::Key key_;
  std::uint32_t item_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint32_t block_ = 0;
  Philox4x32::Counter words_{};
  int cursor_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace osp
