#pragma once

#include <cstdint>
#include <span>

#include "pncmac/random.hpp"
#include "pncmac/types.hpp"

namespace pncmac::phy {

/// Radio and receiver constants of the 1 Mbps DSSS PHY.
struct PhyParams {
  double tx_power_dbm = 3.0;
  double noise_density_dbm_hz = -174.0;
  double noise_figure_db = 6.0;
  double path_loss_exp = 4.0;
  double chip_rate_hz = 11e6;
  double bit_rate_bps = 1e6;
  double cca_sensitivity_dbm = -100.0;

  double tx_power_w() const;
  /// Noise density after the receiver noise figure, in W/Hz.
  double effective_noise_density_w_hz() const;
  double chip_duration_s() const { return 1.0 / chip_rate_hz; }
  /// Throws std::invalid_argument when the chip/bit rate ratio is not 11.
  void validate() const;
};

struct ChannelGain {
  double magnitude_sq = 1.0;
  double phase = 0.0;  // radians in [0, 2*pi)
};

/// A constant-interference slice of a frame reception.
struct SignalSegment {
  SimTime start = 0;
  SimTime end = 0;
  double useful_energy_per_chip = 0.0;  // J
  double interference_power_w = 0.0;
  std::int64_t bit_count = 0;
};

/// Run of bits sharing one post-despreading bit error probability.
struct ErrorRun {
  std::int64_t bits = 0;
  double bit_error = 0.0;
};

enum class Reception { kOk, kCorrupted };

double dbm_to_w(double dbm);
double w_to_dbm(double watts);

/// |h|^2 = d^-alpha. Throws std::domain_error for non-positive distance.
ChannelGain pathloss_gain(double distance_m, double alpha, double phase = 0.0);
double rss_dbm(double tx_power_dbm, const ChannelGain& gain);

double q_function(double x);

/// Chip error of DBPSK with Gaussian interference, capped at 0.5.
double ber_dbpsk_chip(double es, double n0, double interference_energy);
/// Upper bound of the denoise-and-forward chip error: twice DBPSK, capped.
double ber_dnf_chip(double es_min, double n0, double interference_energy);
/// Probability that at least 6 of the 11 Barker chips are wrong.
double ber_despread(double p_chip);

/// 1 - prod (1 - p)^bits. Throws std::invalid_argument on an empty list.
double packet_error_prob(std::span<const ErrorRun> runs);

Reception sample_reception(double per, Rng& rng);

bool cca_busy(double total_rss_w, double sensitivity_dbm);

/// Packet error of an interference-free reception of `bits` bits at `rss`.
double interference_free_per(double rss, std::int64_t bits, const PhyParams& params);

/// Smallest RSS (dBm) whose interference-free PER is at most `target_per`.
double per_threshold_dbm(double target_per, std::int64_t bits, const PhyParams& params);

}  // namespace pncmac::phy
