#pragma once

#include <cstdint>
#include <random>

namespace spicov {

// Deterministic seed derivation. Replicate streams are derived as
// mix(cell_seed ^ replicate_index) so that every replicate owns an
// independent generator regardless of which thread runs it.
std::uint64_t mix_seed(std::uint64_t seed);
std::uint64_t derive_stream_seed(std::uint64_t base, std::uint64_t index);

// Gaussian stream with a fully specified bit-level contract: mt19937_64
// (whose output sequence is fixed by the standard) feeding a Box-Muller
// transform on (x >> 11) * 2^-53 uniforms. std::normal_distribution is
// implementation-defined, so it is not used anywhere in the library.
class GaussianStream {
  public:
    explicit GaussianStream(std::uint64_t seed) : engine_(mix_seed(seed)) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double normal();

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace spicov
