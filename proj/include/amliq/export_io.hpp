#pragma once

#include <string>

#include "amliq/adi.hpp"

namespace amliq {

// Surface/boundary export. CSV columns (S, L, tau, V); 17-significant-digit
// decimals so a load/save cycle is bit-exact.
std::string surface_csv(const PriceSurface& v, const Grid& g, double tau);
PriceSurface surface_from_csv(const std::string& text, const Grid& g);

std::string surface_json(const PriceSurface& v, const Grid& g, double tau);

std::string boundary_csv(const ExerciseBoundary& b, const Grid& g);
std::string boundary_json(const ExerciseBoundary& b, const Grid& g);

// Shortest decimal that round-trips the double exactly (std::to_chars).
std::string format_double(double x);
// Fixed 17-significant-digit form used by the export schemas.
std::string format_double17(double x);

} // namespace amliq
