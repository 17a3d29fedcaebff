#include "linecal/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Dense>

#include "linecal/error_model.hpp"
#include "linecal/numerics.hpp"

namespace linecal {

CorrectionFactor FactorBox::clamp(CorrectionFactor k) const {
  return {std::clamp(k.real(), real_lo, real_hi), std::clamp(k.imag(), imag_lo, imag_hi)};
}

bool FactorBox::contains(CorrectionFactor k) const {
  return k.real() >= real_lo && k.real() <= real_hi && k.imag() >= imag_lo && k.imag() <= imag_hi;
}

bool FactorBox::at_bound(CorrectionFactor k, double tol) const {
  return std::abs(k.real() - real_lo) <= tol || std::abs(k.real() - real_hi) <= tol ||
         std::abs(k.imag() - imag_lo) <= tol || std::abs(k.imag() - imag_hi) <= tol;
}

CorrectionFactor propagate_voltage(CorrectionFactor kv_known, std::span<const Phasor> v_known,
                                   std::span<const Phasor> v_target, std::size_t portions) {
  if (v_known.size() != v_target.size()) {
    throw ValidationError("voltage series have different lengths", "propagate_voltage");
  }
  if (v_known.empty()) throw ValidationError("empty voltage series", "propagate_voltage");

  Complex sum{};
  const auto parts = partition_indices(v_known.size(), portions);
  for (const auto& idx : parts) {
    Complex num{};
    double energy = 0.0;
    for (auto t : idx) {
      num += std::conj(v_target[t]) * kv_known * v_known[t];
      energy += std::norm(v_target[t]);
    }
    if (!(energy > 0.0)) throw DegenerateModelError("target voltage series has zero energy");
    sum += num / energy;
  }
  return sum / static_cast<double>(parts.size());
}

std::vector<Phasor> sum_parallel_group(std::span<const CurrentChannel> group) {
  if (group.empty()) return {};
  std::vector<Phasor> total(group.front().measured.size());
  for (const auto& ch : group) {
    if (ch.measured.size() != total.size()) {
      throw ValidationError("parallel group series have different lengths", ch.key.to_string());
    }
    for (std::size_t t = 0; t < total.size(); ++t) total[t] += ch.measured[t];
  }
  return total;
}

std::vector<CorrectionFactor> split_parallel_group(CorrectionFactor k_sum,
                                                   std::span<const CurrentChannel> group) {
  if (group.size() < 2) {
    throw ValidationError("a parallel group needs at least two lines",
                          group.empty() ? "" : group.front().key.to_string());
  }
  const auto total = sum_parallel_group(group);
  const double n = static_cast<double>(group.size());
  std::vector<CorrectionFactor> out;
  for (const auto& ch : group) {
    Complex acc{};
    std::size_t used = 0;
    for (std::size_t t = 0; t < total.size(); ++t) {
      if (ch.measured[t] == Phasor{}) continue;
      acc += (k_sum * total[t] / n) / ch.measured[t];
      ++used;
    }
    if (used == 0) throw DegenerateModelError("parallel line " + ch.key.to_string() + " carries no current");
    out.push_back(acc / static_cast<double>(used));
  }
  return out;
}

namespace {

// One unknown in the bus equation: a single channel or a merged group.
struct Unknown {
  std::vector<std::size_t> members;  // indices into ctx.currents
  std::vector<Phasor> series;
};

// Real-valued system for the unknown factors over `frames`:
//   [I_reshape A1; I_reshape A2] k = [re(b); im(b)],
// where I_reshape interleaves real and imaginary parts of each unknown column
// and A1, A2 are block diagonals of [[1,0],[0,-1]] and [[0,1],[1,0]].
BoxQpProblem build_problem(const std::vector<Unknown>& unknowns, const std::vector<Phasor>& rhs,
                           const std::vector<std::size_t>& frames, const FactorBox& box) {
  const auto n = static_cast<Eigen::Index>(frames.size());
  const auto d = static_cast<Eigen::Index>(2 * unknowns.size());

  Eigen::MatrixXd reshape(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto t = frames[static_cast<std::size_t>(r)];
    for (std::size_t u = 0; u < unknowns.size(); ++u) {
      reshape(r, 2 * static_cast<Eigen::Index>(u)) = unknowns[u].series[t].real();
      reshape(r, 2 * static_cast<Eigen::Index>(u) + 1) = unknowns[u].series[t].imag();
    }
  }
  Eigen::MatrixXd a1 = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd a2 = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index u = 0; u < d; u += 2) {
    a1(u, u) = 1.0;
    a1(u + 1, u + 1) = -1.0;
    a2(u, u + 1) = 1.0;
    a2(u + 1, u) = 1.0;
  }

  BoxQpProblem p;
  p.g.resize(2 * n, d);
  p.g.topRows(n) = reshape * a1;
  p.g.bottomRows(n) = reshape * a2;
  p.h.resize(2 * n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto t = frames[static_cast<std::size_t>(r)];
    p.h(r) = rhs[t].real();
    p.h(n + r) = rhs[t].imag();
  }
  p.lower.resize(d);
  p.upper.resize(d);
  for (Eigen::Index u = 0; u < d; u += 2) {
    p.lower(u) = box.real_lo;
    p.upper(u) = box.real_hi;
    p.lower(u + 1) = box.imag_lo;
    p.upper(u + 1) = box.imag_hi;
  }
  return p;
}

}  // namespace

PropagationResult propagate_currents(const BusContext& ctx, const PropagationOptions& options) {
  if (ctx.currents.empty()) throw ValidationError("bus has no current channels", ctx.bus);
  const std::size_t n = ctx.currents.front().measured.size();
  if (n == 0) throw ValidationError("empty current series", ctx.bus);

  std::vector<Phasor> rhs(n);
  std::vector<std::size_t> unknown_idx;
  bool any_known = false;
  for (std::size_t c = 0; c < ctx.currents.size(); ++c) {
    const auto& ch = ctx.currents[c];
    if (ch.measured.size() != n) throw ValidationError("current series length mismatch", ch.key.to_string());
    if (ch.known) {
      any_known = true;
      for (std::size_t t = 0; t < n; ++t) rhs[t] -= *ch.known * ch.measured[t];
    } else {
      unknown_idx.push_back(c);
    }
  }
  if (unknown_idx.empty()) throw ValidationError("every current factor at the bus is already known", ctx.bus);
  if (!any_known) throw ValidationError("no known current factor at the bus", ctx.bus);

  // Group unknown parallel members.
  std::vector<Unknown> unknowns;
  std::map<std::string, std::size_t> group_slot;
  for (auto c : unknown_idx) {
    const auto& ch = ctx.currents[c];
    if (options.merge_parallel && !ch.parallel_group.empty()) {
      auto [it, inserted] = group_slot.emplace(ch.parallel_group, unknowns.size());
      if (!inserted) {
        unknowns[it->second].members.push_back(c);
        continue;
      }
    }
    unknowns.push_back({{c}, {}});
  }
  for (auto& u : unknowns) {
    if (u.members.size() == 1) {
      u.series = ctx.currents[u.members.front()].measured;
    } else {
      std::vector<CurrentChannel> group;
      for (auto c : u.members) group.push_back(ctx.currents[c]);
      u.series = sum_parallel_group(group);
    }
  }

  // Identifiability over the full record.
  std::vector<std::size_t> all(n);
  for (std::size_t t = 0; t < n; ++t) all[t] = t;
  {
    const auto full = build_problem(unknowns, rhs, all, options.box);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(full.g);
    const auto& sv = svd.singularValues();
    if (full.g.rows() < full.g.cols() || !(sv(sv.size() - 1) >= kRankTolerance * sv(0))) {
      std::vector<std::string> names;
      for (auto c : unknown_idx) names.push_back(ctx.currents[c].key.to_string());
      throw UnderdeterminedError("current factors at bus '" + ctx.bus +
                                     "' are not identifiable from the data",
                                 names);
    }
  }

  const auto parts = options.pooled ? std::vector<std::vector<std::size_t>>{all}
                                     : partition_indices(n, options.portions);
  Eigen::VectorXd k = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * unknowns.size()));
  std::vector<double> bound_hits(unknowns.size(), 0.0);
  for (const auto& idx : parts) {
    const Eigen::VectorXd kp = box_qp(build_problem(unknowns, rhs, idx, options.box)).k;
    for (std::size_t u = 0; u < unknowns.size(); ++u) {
      const auto ui = static_cast<Eigen::Index>(2 * u);
      if (options.box.at_bound({kp(ui), kp(ui + 1)}, kPortionBoundTolerance)) bound_hits[u] += 1.0;
    }
    k += kp;
  }
  k /= static_cast<double>(parts.size());

  PropagationResult out;
  std::vector<CorrectionFactor> factor_of(ctx.currents.size());
  std::vector<bool> merged(ctx.currents.size(), false);
  std::vector<double> hit_fraction(ctx.currents.size(), 0.0);
  for (std::size_t u = 0; u < unknowns.size(); ++u) {
    const auto ui = static_cast<Eigen::Index>(2 * u);
    const CorrectionFactor ku = options.box.clamp({k(ui), k(ui + 1)});
    for (auto c : unknowns[u].members) hit_fraction[c] = bound_hits[u] / static_cast<double>(parts.size());
    if (unknowns[u].members.size() == 1) {
      factor_of[unknowns[u].members.front()] = ku;
    } else {
      std::vector<CurrentChannel> group;
      for (auto c : unknowns[u].members) group.push_back(ctx.currents[c]);
      const auto split = split_parallel_group(ku, group);
      for (std::size_t m = 0; m < split.size(); ++m) {
        factor_of[unknowns[u].members[m]] = options.box.clamp(split[m]);
        merged[unknowns[u].members[m]] = true;
      }
    }
  }
  for (auto c : unknown_idx) {
    out.factors.push_back({ctx.currents[c].key, factor_of[c], options.box.at_bound(factor_of[c]), merged[c],
                           hit_fraction[c]});
  }

  double sq = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    Complex mismatch = -rhs[t];
    for (auto c : unknown_idx) mismatch += factor_of[c] * ctx.currents[c].measured[t];
    sq += std::norm(mismatch);
  }
  out.residual_norm = std::sqrt(sq / static_cast<double>(n));
  return out;
}

}  // namespace linecal
