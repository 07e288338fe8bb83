#ifndef NPHEAT_UNITS_HPP
#define NPHEAT_UNITS_HPP

#include <string>

namespace npheat::units {

// Exponents over the SI base quantities this project needs (m, kg, s, K).
// Watts, pascals etc. are derived: W = kg m^2 s^-3, Pa = kg m^-1 s^-2.
struct Dimension {
    int length = 0;
    int mass = 0;
    int time = 0;
    int temperature = 0;
    bool operator==(const Dimension&) const = default;
};

inline constexpr Dimension kDimensionless{};
inline constexpr Dimension kLength{1, 0, 0, 0};
inline constexpr Dimension kArea{2, 0, 0, 0};
inline constexpr Dimension kTime{0, 0, 1, 0};
inline constexpr Dimension kPerTime{0, 0, -1, 0};
inline constexpr Dimension kPerLength{-1, 0, 0, 0};
inline constexpr Dimension kTemperature{0, 0, 0, 1};
inline constexpr Dimension kPressure{-1, 1, -2, 0};
inline constexpr Dimension kDensity{-3, 1, 0, 0};
inline constexpr Dimension kVelocity{1, 0, -1, 0};
inline constexpr Dimension kDiffusivity{2, 0, -1, 0};               // m^2/s
inline constexpr Dimension kSpecificPower{2, 0, -3, 0};             // W/kg
inline constexpr Dimension kConductivity{1, 1, -3, -1};             // W/(m K)
inline constexpr Dimension kSpecificHeat{2, 0, -2, -1};             // J/(kg K)
inline constexpr Dimension kHeatTransferCoeff{0, 1, -3, -1};        // W/(m^2 K)
inline constexpr Dimension kHydraulicConductivity{2, -1, 1, 0};     // m^2 s/kg = m/(Pa s)
inline constexpr Dimension kPerPressureTime{1, -1, 1, 0};           // 1/(Pa s)
inline constexpr Dimension kDarcyMobility{3, -1, 1, 0};             // m^2/(Pa s)
inline constexpr Dimension kViscosity{-1, 1, -1, 0};                // Pa s

// Multiplicative factor and dimension of a unit expression such as
// "MW/kg", "mm^2*s/g", "W/m^2/K". Grammar: factors separated by '*' or '/',
// each "sym" or "sym^int", no parentheses, no spaces.
struct UnitFactor {
    double factor = 1.0;
    Dimension dim;
};
UnitFactor parse_unit(const std::string& expr, const std::string& context);

// Parse "<number>[ <unit>]". A bare number is taken as SI. A unit suffix is
// converted and dimension-checked against `expected`. Absolute temperatures
// additionally accept "degC"/"C" (offset 273.15), only when `expected` is
// temperature. `context` names the config key for error messages.
double parse_quantity(const std::string& text, Dimension expected, const std::string& context);

std::string dimension_name(Dimension dim);

} // namespace npheat::units

#endif
