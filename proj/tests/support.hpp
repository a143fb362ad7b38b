#pragma once

#include <string>

#include "gemmap/core.hpp"
#include "gemmap/verify.hpp"

namespace gemmap::test {

inline GemmInstance gemm(std::uint64_t x, std::uint64_t y, std::uint64_t z, std::uint64_t w = 1) {
    return GemmInstance{Extents{{x, y, z}}, w, "g"};
}

inline Mapping mapping(Extents sram, Extents array, Extents rf, Axis w01 = Axis::x, Axis w12 = Axis::x,
                       std::array<bool, 3> in_sram = {true, true, true}, std::array<bool, 3> in_rf = {true, true, true}) {
    Mapping m;
    m.tile(TileLevel::sram) = sram;
    m.tile(TileLevel::array) = array;
    m.tile(TileLevel::regfile) = rf;
    m.walk_01 = w01;
    m.walk_12 = w12;
    m.resident_sram = in_sram;
    m.resident_rf = in_rf;
    return m;
}

/// Unconstrained buffers and one PE: only the tiling matters.
inline HardwareSpec roomy(std::uint64_t num_pe = 1) {
    HardwareSpec hw = toy_hardware();
    hw.num_pe = num_pe;
    hw.cap_sram = 1u << 30;
    hw.cap_rf = 1u << 30;
    return hw;
}

inline std::string data(const std::string& rel) { return std::string(GEMMAP_DATA_DIR) + "/" + rel; }

}  // namespace gemmap::test
