#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scatterid/errors.hpp"

namespace scatterid {

using BitVector = std::vector<std::uint8_t>;

/// The known on/off pattern every tag reflects during its block.
///
/// A maximal-length LFSR sequence (x^6 + x^5 + 1, 63 chips) padded with one
/// trailing zero: 32 reflecting and 32 non-reflecting bits, and a sharp
/// autocorrelation so the correlation peak pins the block start. Lengths
/// other than 64 cycle the same sequence and are only approximately balanced.
inline BitVector default_tag_code(std::size_t bits = 64) {
  if (bits == 0) throw ParameterError("tag code length must be positive");
  BitVector mseq;
  mseq.reserve(63);
  std::uint8_t state = 0x3F;
  for (int i = 0; i < 63; ++i) {
    mseq.push_back(state & 1u);
    const std::uint8_t fb = static_cast<std::uint8_t>(((state >> 0) ^ (state >> 1)) & 1u);
    state = static_cast<std::uint8_t>((state >> 1) | (fb << 5));
  }
  mseq.push_back(0);
  BitVector code(bits);
  for (std::size_t i = 0; i < bits; ++i) code[i] = mseq[i % mseq.size()];
  return code;
}

/// Sample-domain mask: every bit held for `samples_per_bit` samples, the whole
/// pattern repeated once per tag block.
inline BitVector expand_code(std::span<const std::uint8_t> bits, std::size_t samples_per_bit,
                             std::size_t repeats = 1) {
  if (samples_per_bit == 0) throw ParameterError("samples per bit must be positive");
  BitVector out;
  out.reserve(bits.size() * samples_per_bit * repeats);
  for (std::size_t r = 0; r < repeats; ++r)
    for (auto b : bits) out.insert(out.end(), samples_per_bit, b ? 1 : 0);
  return out;
}

}  // namespace scatterid
