#pragma once

#include <cmath>
#include <numbers>

#include "mmtrack/core.hpp"

namespace mmtrack {

// FMCW chirp description. The slope/bandwidth/duration triple is redundant on
// purpose: B = S * Tc is enforced so a config cannot describe an impossible chirp.
struct ChirpParams {
    double slope = 70.0e12;        // Hz/s (70 MHz/us)
    double bandwidth = 4.0e9;      // Hz
    double duration = 4.0e9 / 70.0e12;  // s, = bandwidth / slope
    double wavelength = kSpeedOfLight / 77.0e9;  // m, 77 GHz carrier
    double rx_spacing = 0.5 * kSpeedOfLight / 77.0e9;  // m, half wavelength

    static ChirpParams fromSlopeAndBandwidth(double slope_hz_per_s, double bandwidth_hz) {
        ChirpParams p;
        p.slope = slope_hz_per_s;
        p.bandwidth = bandwidth_hz;
        p.duration = bandwidth_hz / slope_hz_per_s;
        return p;
    }

    bool isValid() const {
        if (!(slope > 0.0) || !(bandwidth > 0.0) || !(duration > 0.0)) return false;
        if (!(wavelength > 0.0) || !(rx_spacing > 0.0)) return false;
        return std::abs(bandwidth - slope * duration) <= 1e-6 * bandwidth;
    }
};

// IF tone frequency for a reflector at distance d: round trip delay times slope.
inline double ifFrequencyForDistance(const ChirpParams& p, double distance_m) {
    if (distance_m < 0.0) throw DomainError("distance must be non-negative");
    return p.slope * 2.0 * distance_m / kSpeedOfLight;
}

inline double distanceForIfFrequency(const ChirpParams& p, double if_hz) {
    if (if_hz < 0.0) throw DomainError("IF frequency must be non-negative");
    return if_hz * kSpeedOfLight / (2.0 * p.slope);
}

// Smallest resolvable range separation, c / (2B).
inline double rangeResolution(const ChirpParams& p) {
    return kSpeedOfLight / (2.0 * p.bandwidth);
}

// Radial velocity from the phase shift between two chirps Tc apart.
// Unambiguous only for |dphi| <= pi.
inline double velocityFromPhase(const ChirpParams& p, double delta_phi_rad) {
    if (std::abs(delta_phi_rad) > std::numbers::pi)
        throw AmbiguityError("phase shift outside [-pi, pi] is ambiguous");
    return p.wavelength * delta_phi_rad / (4.0 * std::numbers::pi * p.duration);
}

// Angle of arrival from the phase difference between two RX antennas.
inline double aoaFromPhase(const ChirpParams& p, double delta_phi_rad) {
    const double s = p.wavelength * delta_phi_rad / (2.0 * std::numbers::pi * p.rx_spacing);
    if (s < -1.0 || s > 1.0)
        throw DomainError("phase difference maps outside the asin domain");
    return std::asin(s);
}

// Probability that at least one of n radars sharing the band interferes,
// assuming each needs an interference-free slice of width b_inter. The i-th
// radar picks from what the previous i-1 left available.
inline double interferenceProbability(int n_radars, double b_total_hz, double b_inter_hz) {
    if (n_radars < 1) throw DomainError("radar count must be >= 1");
    if (!(b_total_hz > 0.0) || b_inter_hz < 0.0)
        throw DomainError("bandwidths must be positive");
    if (b_inter_hz * (n_radars - 1) >= b_total_hz)
        throw DomainError("interference band exceeds total bandwidth");
    double clear = 1.0;
    for (int i = 1; i <= n_radars; ++i)
        clear *= (b_total_hz - b_inter_hz * (i - 1)) / b_total_hz;
    return 1.0 - clear;
}

}  // namespace mmtrack
