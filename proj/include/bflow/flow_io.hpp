#pragma once

#include <array>
#include <string>

#include "bflow/bf_oracle.hpp"
#include "bflow/matching.hpp"

namespace bflow {

// Middlebury .flo: magic float 202021.25 ("PIEH"), width, height, then
// row-major interleaved (dx, dy) float32. Invalid pixels are stored as 1e10.
constexpr float kFloMagic = 202021.25f;
constexpr float kFloInvalid = 1e10f;

void write_flo(const std::string& path, const DenseFlow& flow);
DenseFlow read_flo(const std::string& path);

// Sparse field as text: "x y dx dy" per line.
void write_flow_field(const std::string& path, const BoundaryFlowField& field);
BoundaryFlowField read_flow_field(const std::string& path);

// Boundary pixel list as text: "x y" per line.
void write_boundary_pixels(const std::string& path, const BoundarySet& set);
BoundarySet read_boundary_pixels(const std::string& path);

// Standard flow color wheel (Middlebury convention).
std::array<uint8_t, 3> flow_wheel_color(double dx, double dy, double max_mag);

}  // namespace bflow
