#ifndef NPHEAT_VERIFY_HPP
#define NPHEAT_VERIFY_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace npheat {

// One judged metric of a verification case. Every metric is normalised to
// "value <= threshold passes" so the report reads uniformly.
struct VerifyResult {
    std::string case_name;
    std::string metric;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

// Manufactured heat solution T* = T_b + sin(pi x/L) sin(pi y/L) (1 - e^{-t/tau})
// with the matching forcing, marched with convection and perfusion sink active.
// Spatial sweep refines the mesh with dt ~ h^2, so the combined error is
// second order; temporal sweep fixes the mesh and measures against a small-dt
// reference run, isolating the first-order time error. A zero-amplitude run
// must stay at body temperature.
std::vector<VerifyResult> verify_mms_heat_space(const std::vector<int>& mesh_sizes = {8, 16,
                                                                                      32});
std::vector<VerifyResult> verify_mms_heat_time(const std::vector<double>& dts = {10.0, 5.0,
                                                                                 2.5});

// Manufactured interstitial-fraction solution omega* = A (2 + cos(pi x/L)
// cos(pi y/L)) (1 - e^{-t/tau}) with matching forcing, marched with advection
// and wall leakage active. The positive offset keeps the permeation gate
// closed so the operator stays linear, and the cosine profile has zero normal
// derivative on every side, matching the natural boundary. Sweeps mirror the
// heat benchmarks: dt ~ h^2 for the spatial one, fixed mesh against a small-dt
// reference for the temporal one.
std::vector<VerifyResult> verify_mms_transport_space(
    const std::vector<int>& mesh_sizes = {8, 16, 32});
std::vector<VerifyResult> verify_mms_transport_time(
    const std::vector<double>& dts = {10.0, 5.0, 2.5});

// Uniform heating against the perfusion drain: the simulated plateau must sit
// within 0.1% of Q_p/(rho^v c_p^v w), a zero source must stay at body
// temperature, and doubling w must halve the rise. Throws for w = 0. The full
// suite runs three (source, w) pairings.
std::vector<VerifyResult> verify_pennes_uniform_steady(double w = 0.018, double sar = 2.0e6);

// Steady conduction around a short centred source segment with the outer
// boundary held at body temperature: away from the segment the profile is the
// 2D logarithmic field, so the local slope of T vs ln(1/r) must match
// strength/(2 pi kappa_eff) and the field must scale linearly with strength.
std::vector<VerifyResult> verify_line_source_steady(double strength = 1.0e4); // W/m

std::vector<VerifyResult> run_all_verifications();

bool all_pass(const std::vector<VerifyResult>& results);

// CSV rows "case,metric,value,threshold,pass".
void write_verification_report(std::ostream& out, const std::vector<VerifyResult>& results);

} // namespace npheat

#endif
