#include "pncmac/phy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pncmac::phy {

namespace {

constexpr int kBarkerLength = 11;
constexpr int kMaxCorrectChipsForError = 5;

}  // namespace

double PhyParams::tx_power_w() const { return dbm_to_w(tx_power_dbm); }

double PhyParams::effective_noise_density_w_hz() const {
  return dbm_to_w(noise_density_dbm_hz + noise_figure_db);
}

void PhyParams::validate() const {
  if (std::abs(chip_rate_hz - kBarkerLength * bit_rate_bps) > 1e-6 * chip_rate_hz) {
    throw std::invalid_argument("chip_rate_hz must equal 11 * bit_rate_bps");
  }
  if (path_loss_exp <= 0.0) throw std::invalid_argument("path_loss_exp must be positive");
}

double dbm_to_w(double dbm) { return std::pow(10.0, dbm / 10.0) / 1000.0; }

double w_to_dbm(double watts) { return 10.0 * std::log10(watts * 1000.0); }

ChannelGain pathloss_gain(double distance_m, double alpha, double phase) {
  if (!(distance_m > 0.0)) throw std::domain_error("pathloss_gain: distance must be positive");
  return ChannelGain{std::pow(distance_m, -alpha), phase};
}

double rss_dbm(double tx_power_dbm, const ChannelGain& gain) {
  return tx_power_dbm + 10.0 * std::log10(gain.magnitude_sq);
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double ber_dbpsk_chip(double es, double n0, double interference_energy) {
  const double arg = std::sqrt(2.0 * es / (n0 + interference_energy));
  return std::min(0.5, 2.0 * q_function(arg));
}

double ber_dnf_chip(double es_min, double n0, double interference_energy) {
  return std::min(0.5, 2.0 * ber_dbpsk_chip(es_min, n0, interference_energy));
}

double ber_despread(double p_chip) {
  // Sum over m correct chips, m <= 5.
  double total = 0.0;
  double binom = 1.0;
  for (int m = 0; m <= kMaxCorrectChipsForError; ++m) {
    if (m > 0) binom = binom * (kBarkerLength - m + 1) / m;
    total += binom * std::pow(1.0 - p_chip, m) * std::pow(p_chip, kBarkerLength - m);
  }
  return total;
}

double packet_error_prob(std::span<const ErrorRun> runs) {
  if (runs.empty()) throw std::invalid_argument("packet_error_prob: no segments");
  // Accumulate log(1 - PER) so long frames at tiny BER keep precision.
  double log_ok = 0.0;
  for (const auto& run : runs) {
    if (run.bits <= 0 || run.bit_error <= 0.0) continue;
    if (run.bit_error >= 1.0) return 1.0;
    log_ok += static_cast<double>(run.bits) * std::log1p(-run.bit_error);
  }
  return -std::expm1(log_ok);
}

Reception sample_reception(double per, Rng& rng) {
  return uniform01(rng) < per ? Reception::kCorrupted : Reception::kOk;
}

bool cca_busy(double total_rss_w, double sensitivity_dbm) {
  if (total_rss_w <= 0.0) return false;
  return w_to_dbm(total_rss_w) >= sensitivity_dbm;
}

double interference_free_per(double rss, std::int64_t bits, const PhyParams& params) {
  const double tc = params.chip_duration_s();
  const double es = dbm_to_w(rss) * tc;
  const double p_chip = ber_dbpsk_chip(es, params.effective_noise_density_w_hz(), 0.0);
  const ErrorRun run{bits, ber_despread(p_chip)};
  return packet_error_prob(std::span(&run, 1));
}

double per_threshold_dbm(double target_per, std::int64_t bits, const PhyParams& params) {
  double lo = -140.0;
  double hi = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-9; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (interference_free_per(mid, bits, params) > target_per) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

}  // namespace pncmac::phy
