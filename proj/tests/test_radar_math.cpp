#include <gtest/gtest.h>

#include <cmath>

#include "mmtrack/radar_math.hpp"

namespace {

using namespace mmtrack;

// Long-double reference computations, written independently of the library
// formulas so a transcription slip on either side shows up as a mismatch.
long double refIfFreq(long double slope, long double dist) {
  return slope * (2.0L * dist / 299792458.0L);
}

long double refRangeRes(long double bandwidth) {
  return 299792458.0L / (2.0L * bandwidth);
}

long double refInterference(int n, long double band, long double occupied) {
  long double survive = 1.0L;
  for (int i = 1; i <= n; ++i) {
    survive *= (band - occupied * (long double)(i - 1)) / band;
  }
  return 1.0L - survive;
}

TEST(RadarMath, SpeedOfLight) {
  EXPECT_DOUBLE_EQ(kSpeedOfLight, 299792458.0);
}

TEST(RadarMath, DefaultChirpShape) {
  ChirpParams chirp;
  EXPECT_DOUBLE_EQ(chirp.slope, 70.0e12);
  EXPECT_DOUBLE_EQ(chirp.bandwidth, 4.0e9);
  EXPECT_DOUBLE_EQ(chirp.duration, 4.0e9 / 70.0e12);
  EXPECT_DOUBLE_EQ(chirp.wavelength, 299792458.0 / 77.0e9);
  EXPECT_DOUBLE_EQ(chirp.rx_spacing, chirp.wavelength / 2.0);
  EXPECT_TRUE(chirp.isValid());
}

TEST(RadarMath, IfFrequencyAtFourMeters) {
  ChirpParams chirp;
  double f = ifFrequencyForDistance(chirp, 4.0);
  EXPECT_NEAR(f, (double)refIfFreq(70.0e12L, 4.0L), 1e-3);
  // Published figure for this operating point is 1.87 MHz.
  EXPECT_NEAR(f, 1.87e6, 5e3);

  EXPECT_NEAR(ifFrequencyForDistance(chirp, 0.0), 0.0, 0.0);
  EXPECT_THROW(ifFrequencyForDistance(chirp, -0.1), DomainError);
}

TEST(RadarMath, DistanceInvertsIfFrequency) {
  ChirpParams chirp;
  for (double d : {0.25, 1.0, 4.0, 7.5}) {
    double f = ifFrequencyForDistance(chirp, d);
    EXPECT_NEAR(distanceForIfFrequency(chirp, f), d, 1e-12);
  }
  EXPECT_THROW(distanceForIfFrequency(chirp, -1.0), DomainError);
}

TEST(RadarMath, RangeResolution) {
  ChirpParams chirp;
  double d = rangeResolution(chirp);
  EXPECT_NEAR(d, (double)refRangeRes(4.0e9L), 1e-12);
  // Published figure: 3.75 cm.
  EXPECT_NEAR(d, 0.0375, 5e-5);
}

TEST(RadarMath, FromSlopeAndBandwidthConsistency) {
  ChirpParams chirp = ChirpParams::fromSlopeAndBandwidth(60.0e12, 3.0e9);
  EXPECT_DOUBLE_EQ(chirp.duration, 3.0e9 / 60.0e12);
  EXPECT_TRUE(chirp.isValid());

  ChirpParams bent = chirp;
  bent.duration *= 1.1;
  EXPECT_FALSE(bent.isValid());
  bent = chirp;
  bent.slope = -chirp.slope;
  EXPECT_FALSE(bent.isValid());
}

TEST(RadarMath, VelocityFromPhase) {
  ChirpParams chirp;
  // v = lambda * dphi / (4 pi Tc); at dphi = pi/2 this is lambda / (8 Tc).
  double v = velocityFromPhase(chirp, M_PI / 2.0);
  EXPECT_NEAR(v, chirp.wavelength / (8.0 * chirp.duration), 1e-9);

  EXPECT_NEAR(velocityFromPhase(chirp, 0.0), 0.0, 0.0);
  EXPECT_NEAR(velocityFromPhase(chirp, -M_PI / 2.0), -v, 1e-12);
  // Phase differences beyond +/- pi alias to a different velocity and must
  // be rejected rather than silently wrapped.
  EXPECT_NO_THROW(velocityFromPhase(chirp, M_PI));
  EXPECT_THROW(velocityFromPhase(chirp, 3.15), AmbiguityError);
  EXPECT_THROW(velocityFromPhase(chirp, -3.15), AmbiguityError);
}

TEST(RadarMath, AngleFromPhase) {
  ChirpParams chirp;
  // Half-wavelength element spacing turns the phase ratio into dphi / pi.
  double a = aoaFromPhase(chirp, M_PI / 2.0);
  EXPECT_NEAR(a, std::asin(0.5), 1e-12);
  EXPECT_NEAR(a, M_PI / 6.0, 1e-12);

  EXPECT_NEAR(aoaFromPhase(chirp, 0.0), 0.0, 0.0);
  EXPECT_NEAR(aoaFromPhase(chirp, M_PI), M_PI / 2.0, 1e-9);
  EXPECT_THROW(aoaFromPhase(chirp, 4.0), DomainError);
  EXPECT_THROW(aoaFromPhase(chirp, -4.0), DomainError);
}

TEST(RadarMath, InterferenceProbability) {
  double p = interferenceProbability(3, 4.0e9, 5.6e6);
  EXPECT_NEAR(p, (double)refInterference(3, 4.0e9L, 5.6e6L), 1e-12);
  // Published figure: 0.0042 for three radars in a 4 GHz band.
  EXPECT_NEAR(p, 0.0042, 5e-6);
  EXPECT_NEAR(p, 0.00419608, 1e-8);

  // One radar can never collide with itself.
  EXPECT_DOUBLE_EQ(interferenceProbability(1, 4.0e9, 5.6e6), 0.0);

  // Monotone in population size.
  double p2 = interferenceProbability(2, 4.0e9, 5.6e6);
  double p4 = interferenceProbability(4, 4.0e9, 5.6e6);
  EXPECT_LT(p2, p);
  EXPECT_LT(p, p4);

  EXPECT_THROW(interferenceProbability(0, 4.0e9, 5.6e6), DomainError);
  EXPECT_THROW(interferenceProbability(3, 0.0, 5.6e6), DomainError);
  EXPECT_THROW(interferenceProbability(3, 4.0e9, -1.0), DomainError);
  // Occupied spectrum reaching the band edge leaves no room for the last
  // radar: the model stops being meaningful there.
  EXPECT_THROW(interferenceProbability(3, 4.0e9, 2.0e9), DomainError);
}

}  // namespace
