#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "modseg/guides.hpp"
#include "modseg/model.hpp"

namespace modseg {

// Rows of modulation parameters, one per guide, with class tags.
struct GammaMatrix {
  int d = 0;
  std::vector<std::string> tags;
  std::vector<std::vector<float>> rows;
  std::vector<LayerSlice> partition;
};

GammaMatrix collect_gammas(const ModelBundle& model, const std::vector<VisualGuide>& guides,
                           const std::vector<std::string>& tags);

// Pairwise Euclidean distances between rows.
std::vector<std::vector<double>> euclidean_distances(const GammaMatrix& gammas);

struct Embedding2D {
  std::vector<std::array<double, 2>> points;
  double stress = 0;  // Kruskal stress-1 residual of distance preservation
};

// Torgerson classical scaling: double-center -D^2/2, top eigenpairs via
// cyclic Jacobi, coordinates scaled by sqrt(eigenvalue) with negative
// eigenvalues clipped to zero.
Embedding2D classical_mds(const std::vector<std::vector<double>>& dist, int dim = 2);

struct JacobiResult {
  std::vector<double> values;                // descending
  std::vector<std::vector<double>> vectors;  // vectors[k] pairs with values[k]
};

// Cyclic Jacobi rotations; converges when the off-diagonal Frobenius norm
// drops below tol, capped at max_sweeps sweeps.
JacobiResult jacobi_eigen(std::vector<std::vector<double>> a, double tol = 1e-10,
                          int max_sweeps = 100);

struct Histogram {
  double lo = 0;
  double hi = 0;
  std::vector<std::int64_t> counts;  // fixed width over [lo, hi]
};

Histogram make_histogram(const std::vector<double>& values, int bins = 32);

struct LayerStdReport {
  int layer = 0;                // modulated-layer index
  std::vector<double> stds;     // per channel, population convention
  double mean_std = 0;
  Histogram hist;
};

// Per-column std across rows, grouped by modulation layer. Needs >= 2 rows.
std::vector<LayerStdReport> layer_std_profile(const GammaMatrix& gammas);

struct SpatialScaleReport {
  int layer = 0;
  std::vector<double> magnitudes;  // |gamma_tilde_c|
  double zero_fraction = 0;        // fraction below zero_eps
  Histogram hist;
};

std::vector<SpatialScaleReport> spatial_scale_stats(const ModelBundle& model,
                                                    double zero_eps = 1e-3);

}  // namespace modseg
