#include "npheat/units.hpp"

#include <cstdlib>
#include <map>
#include <sstream>

#include "npheat/errors.hpp"

namespace npheat::units {
namespace {

Dimension dim_pow(Dimension d, int e) {
    return {d.length * e, d.mass * e, d.time * e, d.temperature * e};
}

Dimension dim_mul(Dimension a, Dimension b) {
    return {a.length + b.length, a.mass + b.mass, a.time + b.time,
            a.temperature + b.temperature};
}

const std::map<std::string, UnitFactor>& symbol_table() {
    static const std::map<std::string, UnitFactor> table = {
        {"1", {1.0, kDimensionless}},
        // length
        {"m", {1.0, kLength}},
        {"cm", {1e-2, kLength}},
        {"mm", {1e-3, kLength}},
        {"um", {1e-6, kLength}},
        {"\xc2\xb5m", {1e-6, kLength}}, // µm
        {"nm", {1e-9, kLength}},
        // time
        {"s", {1.0, kTime}},
        {"min", {60.0, kTime}},
        {"h", {3600.0, kTime}},
        // mass
        {"kg", {1.0, {0, 1, 0, 0}}},
        {"g", {1e-3, {0, 1, 0, 0}}},
        {"mg", {1e-6, {0, 1, 0, 0}}},
        {"ug", {1e-9, {0, 1, 0, 0}}},
        // temperature (absolute degC handled in parse_quantity)
        {"K", {1.0, kTemperature}},
        // pressure
        {"Pa", {1.0, kPressure}},
        {"kPa", {1e3, kPressure}},
        {"MPa", {1e6, kPressure}},
        {"mmHg", {133.322387415, kPressure}},
        // power
        {"W", {1.0, {2, 1, -3, 0}}},
        {"mW", {1e-3, {2, 1, -3, 0}}},
        {"kW", {1e3, {2, 1, -3, 0}}},
        {"MW", {1e6, {2, 1, -3, 0}}},
        // energy
        {"J", {1.0, {2, 1, -2, 0}}},
        {"kJ", {1e3, {2, 1, -2, 0}}},
        {"MJ", {1e6, {2, 1, -2, 0}}},
    };
    return table;
}

} // namespace

UnitFactor parse_unit(const std::string& expr, const std::string& context) {
    if (expr.empty())
        throw ConfigError(context + ": empty unit expression");
    UnitFactor out;
    std::size_t pos = 0;
    bool divide = false;
    while (pos < expr.size()) {
        std::size_t end = expr.find_first_of("*/", pos);
        std::string token = expr.substr(pos, end == std::string::npos ? end : end - pos);
        int exponent = 1;
        if (auto caret = token.find('^'); caret != std::string::npos) {
            const std::string expstr = token.substr(caret + 1);
            char* tail = nullptr;
            exponent = static_cast<int>(std::strtol(expstr.c_str(), &tail, 10));
            if (tail == expstr.c_str() || *tail != '\0')
                throw ConfigError(context + ": bad exponent in unit '" + expr + "'");
            token = token.substr(0, caret);
        }
        auto it = symbol_table().find(token);
        if (it == symbol_table().end())
            throw ConfigError(context + ": unknown unit symbol '" + token + "' in '" + expr + "'");
        const int signed_exp = divide ? -exponent : exponent;
        double factor = 1.0;
        for (int i = 0; i < std::abs(signed_exp); ++i)
            factor *= it->second.factor;
        if (signed_exp < 0)
            factor = 1.0 / factor;
        out.factor *= factor;
        out.dim = dim_mul(out.dim, dim_pow(it->second.dim, signed_exp));
        if (end == std::string::npos)
            break;
        divide = (expr[end] == '/');
        pos = end + 1;
    }
    return out;
}

double parse_quantity(const std::string& text, Dimension expected, const std::string& context) {
    const std::size_t first = text.find_first_not_of(" \t");
    if (first == std::string::npos)
        throw ConfigError(context + ": empty value");
    const std::size_t last = text.find_last_not_of(" \t");
    const std::string body = text.substr(first, last - first + 1);

    char* tail = nullptr;
    const double value = std::strtod(body.c_str(), &tail);
    if (tail == body.c_str())
        throw ConfigError(context + ": expected a number, got '" + body + "'");
    std::string unit(tail);
    if (auto u = unit.find_first_not_of(" \t"); u != std::string::npos)
        unit = unit.substr(u, unit.find_last_not_of(" \t") - u + 1);
    else
        unit.clear();

    if (unit.empty())
        return value; // bare number: already SI

    if (unit == "degC" || unit == "C") {
        if (!(expected == kTemperature))
            throw ConfigError(context + ": unit '" + unit + "' only valid for temperatures");
        return value + 273.15;
    }

    const UnitFactor parsed = parse_unit(unit, context);
    if (!(parsed.dim == expected))
        throw ConfigError(context + ": unit '" + unit + "' has dimension " +
                          dimension_name(parsed.dim) + ", expected " + dimension_name(expected));
    return value * parsed.factor;
}

std::string dimension_name(Dimension dim) {
    std::ostringstream os;
    os << "m^" << dim.length << " kg^" << dim.mass << " s^" << dim.time << " K^"
       << dim.temperature;
    return os.str();
}

} // namespace npheat::units
