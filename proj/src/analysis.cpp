#include "modseg/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace modseg {

GammaMatrix collect_gammas(const ModelBundle& model, const std::vector<VisualGuide>& guides,
                           const std::vector<std::string>& tags) {
  if (guides.size() != tags.size()) {
    throw ContractError("collect_gammas needs one tag per guide");
  }
  GammaMatrix out;
  out.d = modulation_width(model.config);
  out.partition = modulation_partition(model.config);
  out.tags = tags;
  for (const VisualGuide& g : guides) {
    Tape tape(false);
    ModulationParams p = visual_modulate(tape, model, image_to_tensor(g.image));
    std::vector<float> row(static_cast<std::size_t>(out.d));
    for (int i = 0; i < out.d; ++i) row[static_cast<std::size_t>(i)] = static_cast<float>(p.gamma.data()[i]);
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<std::vector<double>> euclidean_distances(const GammaMatrix& gammas) {
  const std::size_t n = gammas.rows.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double acc = 0;
      for (int k = 0; k < gammas.d; ++k) {
        const double diff = static_cast<double>(gammas.rows[i][static_cast<std::size_t>(k)]) -
                            gammas.rows[j][static_cast<std::size_t>(k)];
        acc += diff * diff;
      }
      d[i][j] = d[j][i] = std::sqrt(acc);
    }
  }
  return d;
}

JacobiResult jacobi_eigen(std::vector<std::vector<double>> a, double tol, int max_sweeps) {
  const std::size_t n = a.size();
  for (const auto& row : a) {
    if (row.size() != n) throw ContractError("jacobi_eigen needs a square matrix");
  }
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

  auto off_norm = [&]() {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a[i][j] * a[i][j];
    }
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < max_sweeps && off_norm() >= tol; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });

  JacobiResult res;
  for (std::size_t k : order) {
    res.values.push_back(a[k][k]);
    std::vector<double> vec(n);
    for (std::size_t i = 0; i < n; ++i) vec[i] = v[i][k];
    // deterministic sign: largest-magnitude entry is positive
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (std::abs(vec[i]) > std::abs(vec[arg])) arg = i;
    }
    if (vec[arg] < 0) {
      for (double& x : vec) x = -x;
    }
    res.vectors.push_back(std::move(vec));
  }
  return res;
}

Embedding2D classical_mds(const std::vector<std::vector<double>>& dist, int dim) {
  const std::size_t n = dist.size();
  if (n == 0 || dim < 1) throw ContractError("classical_mds needs points and dim >= 1");
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i].size() != n) throw ContractError("distance matrix must be square");
    if (dist[i][i] != 0.0) throw ContractError("distance matrix diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      if (dist[i][j] < 0) throw ContractError("distances must be non-negative");
      if (std::abs(dist[i][j] - dist[j][i]) > 1e-9 * std::max(1.0, std::abs(dist[i][j]))) {
        throw ContractError("distance matrix must be symmetric");
      }
    }
  }

  // B = -1/2 J D^2 J
  std::vector<std::vector<double>> b(n, std::vector<double>(n, 0.0));
  std::vector<double> row_mean(n, 0.0);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d2 = dist[i][j] * dist[i][j];
      b[i][j] = d2;
      row_mean[i] += d2;
      total += d2;
    }
    row_mean[i] /= static_cast<double>(n);
  }
  total /= static_cast<double>(n) * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      b[i][j] = -0.5 * (b[i][j] - row_mean[i] - row_mean[j] + total);
    }
  }

  const JacobiResult eig = jacobi_eigen(std::move(b));
  Embedding2D out;
  out.points.assign(n, {0.0, 0.0});
  for (int k = 0; k < dim && k < static_cast<int>(n); ++k) {
    const double lam = std::max(0.0, eig.values[static_cast<std::size_t>(k)]);
    const double scale = std::sqrt(lam);
    for (std::size_t i = 0; i < n; ++i) {
      if (k < 2) out.points[i][static_cast<std::size_t>(k)] = scale * eig.vectors[static_cast<std::size_t>(k)][i];
    }
  }

  double num = 0, den = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = out.points[i][0] - out.points[j][0];
      const double dy = out.points[i][1] - out.points[j][1];
      const double d_hat = std::sqrt(dx * dx + dy * dy);
      num += (dist[i][j] - d_hat) * (dist[i][j] - d_hat);
      den += dist[i][j] * dist[i][j];
    }
  }
  out.stress = den > 0 ? std::sqrt(num / den) : 0.0;
  return out;
}

Histogram make_histogram(const std::vector<double>& values, int bins) {
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  if (values.empty()) return h;
  h.lo = *std::min_element(values.begin(), values.end());
  h.hi = *std::max_element(values.begin(), values.end());
  const double width = h.hi - h.lo;
  for (double v : values) {
    int b = width > 0 ? static_cast<int>((v - h.lo) / width * bins) : 0;
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

std::vector<LayerStdReport> layer_std_profile(const GammaMatrix& gammas) {
  if (gammas.rows.size() < 2) {
    throw ContractError("layer_std_profile needs at least two gamma rows");
  }
  const std::size_t n = gammas.rows.size();
  std::vector<double> stds(static_cast<std::size_t>(gammas.d), 0.0);
  for (int c = 0; c < gammas.d; ++c) {
    double mean = 0;
    for (const auto& row : gammas.rows) mean += row[static_cast<std::size_t>(c)];
    mean /= static_cast<double>(n);
    double var = 0;
    for (const auto& row : gammas.rows) {
      const double d = row[static_cast<std::size_t>(c)] - mean;
      var += d * d;
    }
    stds[static_cast<std::size_t>(c)] = std::sqrt(var / static_cast<double>(n));
  }
  std::vector<LayerStdReport> out;
  for (std::size_t l = 0; l < gammas.partition.size(); ++l) {
    const LayerSlice slc = gammas.partition[l];
    LayerStdReport rep;
    rep.layer = static_cast<int>(l);
    rep.stds.assign(stds.begin() + slc.offset, stds.begin() + slc.offset + slc.channels);
    double acc = 0;
    for (double s : rep.stds) acc += s;
    rep.mean_std = acc / static_cast<double>(rep.stds.size());
    rep.hist = make_histogram(rep.stds);
    out.push_back(std::move(rep));
  }
  return out;
}

std::vector<SpatialScaleReport> spatial_scale_stats(const ModelBundle& model, double zero_eps) {
  std::vector<SpatialScaleReport> out;
  for (std::size_t l = 0; l < model.sm_w.size(); ++l) {
    SpatialScaleReport rep;
    rep.layer = static_cast<int>(l);
    std::int64_t zero = 0;
    for (std::int64_t i = 0; i < model.sm_w[l].size(); ++i) {
      const double m = std::abs(static_cast<double>(model.sm_w[l].data()[i]));
      rep.magnitudes.push_back(m);
      if (m < zero_eps) ++zero;
    }
    rep.zero_fraction = static_cast<double>(zero) / static_cast<double>(rep.magnitudes.size());
    rep.hist = make_histogram(rep.magnitudes);
    out.push_back(std::move(rep));
  }
  return out;
}

}  // namespace modseg
