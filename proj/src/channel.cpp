#include "mrmesh/channel.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mrmesh/format.hpp"

namespace mrmesh::channel {

namespace {

void require_positive_distance(double d_m) {
  if (!(d_m > 0.0)) {
    throw std::invalid_argument("distance must be positive, got " + std::to_string(d_m));
  }
}

}  // namespace

double los_distance(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("location percentage must lie in (0,1)");
  }
  const double lg = std::log10(p);
  return 212.0 * lg * lg - 64.0 * lg;
}

void ChannelParams::validate() const {
  if (!(transition_width_m > 0.0)) throw std::invalid_argument("transition width must be > 0");
  if (!(shadow_sigma_db > 0.0)) throw std::invalid_argument("shadowing sigma must be > 0");
  if (!(location_pct > 0.0 && location_pct < 1.0)) {
    throw std::invalid_argument("location percentage must lie in (0,1)");
  }
}

void RatParams::validate() const {
  if (id != RatId::kShortRange && id != RatId::kLongRange) {
    throw std::invalid_argument("unknown RAT id");
  }
  if (!(carrier_mhz > 0.0)) throw std::invalid_argument("carrier frequency must be > 0");
  if (!(time_cost >= 1.0)) throw std::invalid_argument("RAT time cost must be >= 1");
}

RatParams default_short_range() { return {RatId::kShortRange, 2400.0, 105.0, 1.0}; }

RatParams default_long_range(double rho) { return {RatId::kLongRange, 868.0, 154.0, rho}; }

double median_loss_los(double d_m, double f_mhz, const ChannelParams& params) {
  require_positive_distance(d_m);
  if (!(f_mhz > 0.0)) throw std::invalid_argument("frequency must be positive");
  return 32.45 + 20.0 * std::log10(f_mhz) + 20.0 * std::log10(d_m / 1000.0) +
         params.delta_los_db;
}

double median_loss_nlos(double d_m, double f_mhz, const ChannelParams& params) {
  require_positive_distance(d_m);
  if (!(f_mhz > 0.0)) throw std::invalid_argument("frequency must be positive");
  return 9.5 + 45.0 * std::log10(f_mhz) + 40.0 * std::log10(d_m / 1000.0) +
         params.l_urban_db + params.delta_nlos_db;
}

double mean_loss(double d_m, double f_mhz, const ChannelParams& params) {
  require_positive_distance(d_m);
  const double d_los = params.d_los();
  const double d_nlos = d_los + params.transition_width_m;
  if (d_m < d_los) return median_loss_los(d_m, f_mhz, params);
  if (d_m > d_nlos) return median_loss_nlos(d_m, f_mhz, params);
  const double lo = median_loss_los(d_los, f_mhz, params);
  const double hi = median_loss_nlos(d_nlos, f_mhz, params);
  const double t = (d_m - d_los) / params.transition_width_m;
  return lo + t * (hi - lo);
}

double q_function(double z) {
  if (std::isinf(z)) return z > 0 ? 0.0 : 1.0;
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

double outage_prob(double d_m, const RatParams& rat, const ChannelParams& params) {
  const double margin = rat.max_coupling_loss_db - mean_loss(d_m, rat.carrier_mhz, params);
  const double z = params.literal_outage_sign ? -margin : margin;
  return q_function(z / params.shadow_sigma_db);
}

double link_prob(double d_m, const RatParams& rat, const ChannelParams& params) {
  return 1.0 - outage_prob(d_m, rat, params);
}

std::vector<CurvePoint> channel_curve(const RatParams& rat, std::span<const double> d_grid,
                                      const ChannelParams& params) {
  if (d_grid.empty()) throw std::invalid_argument("distance grid is empty");
  double prev = 0.0;
  for (double d : d_grid) {
    if (!(d > prev)) {
      throw std::invalid_argument("distance grid must be positive and strictly increasing");
    }
    prev = d;
  }
  std::vector<CurvePoint> out;
  out.reserve(d_grid.size());
  for (double d : d_grid) out.push_back({d, outage_prob(d, rat, params)});
  return out;
}

std::string curve_to_csv(std::span<const CurvePoint> curve) {
  std::ostringstream os;
  os << "d_m,p_out\n";
  for (const auto& pt : curve) os << fmt6(pt.d_m) << ',' << fmt6(pt.p_out) << '\n';
  return os.str();
}

}  // namespace mrmesh::channel
