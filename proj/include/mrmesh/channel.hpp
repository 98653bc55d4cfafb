// Large-scale fading channel: site-general street-level path loss with a
// LoS/NLoS transition zone and log-normal shadowing.
//
// Frequencies are in MHz and distances in meters; the loss formulas convert
// distance to kilometers internally.
#pragma once

#include <span>
#include <string>
#include <vector>

namespace mrmesh::channel {

/// Distance below which the LoS median loss applies, for a location
/// correction percentage p in (0,1).
double los_distance(double p);

struct ChannelParams {
  double transition_width_m = 20.0;
  double shadow_sigma_db = 7.0;
  double location_pct = 0.1;
  double l_urban_db = 6.8;
  double delta_los_db = -7.9;
  double delta_nlos_db = -9.0;
  /// Literal sign of the outage Q-argument, (L - Lmax)/sigma. Off by default:
  /// with that sign outage falls with distance.
  bool literal_outage_sign = false;

  /// Validates the fields; throws std::invalid_argument.
  void validate() const;
  double d_los() const { return los_distance(location_pct); }
};

enum class RatId : int { kShortRange = 1, kLongRange = 2 };

struct RatParams {
  RatId id = RatId::kShortRange;
  double carrier_mhz = 2400.0;
  double max_coupling_loss_db = 105.0;
  /// Time units per hop (1 for the short-range RAT, rho for the long-range).
  double time_cost = 1.0;

  void validate() const;
  int index() const { return static_cast<int>(id) - 1; }
};

RatParams default_short_range();
RatParams default_long_range(double rho = 5.0);

double median_loss_los(double d_m, double f_mhz, const ChannelParams& params);
double median_loss_nlos(double d_m, double f_mhz, const ChannelParams& params);

/// Mean loss: LoS below d_LoS, NLoS beyond d_LoS + w, linear in between.
double mean_loss(double d_m, double f_mhz, const ChannelParams& params);

/// Upper tail of the standard normal distribution.
double q_function(double z);

double outage_prob(double d_m, const RatParams& rat, const ChannelParams& params);
double link_prob(double d_m, const RatParams& rat, const ChannelParams& params);

struct CurvePoint {
  double d_m;
  double p_out;
};

/// Outage probability sampled on a strictly increasing positive grid.
std::vector<CurvePoint> channel_curve(const RatParams& rat, std::span<const double> d_grid,
                                      const ChannelParams& params);

/// CSV with header `d_m,p_out`, 6 significant digits.
std::string curve_to_csv(std::span<const CurvePoint> curve);

}  // namespace mrmesh::channel
