#include "npheat/io_cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <semaphore>
#include <sstream>
#include <string_view>

#include "npheat/errors.hpp"
#include "npheat/output.hpp"
#include "npheat/verify.hpp"

namespace npheat {

namespace {

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Unit tokens may carry internal spaces ("W/(m K)"); runs of whitespace
// compare as one space.
std::string collapse_ws(const std::string& s) {
    std::string out;
    bool in_ws = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out += ' ';
        in_ws = false;
        out += c;
    }
    return out;
}

enum class Dim {
    none,
    length,
    area,
    time,
    temperature,
    pressure,
    sar,
    per_time,
    diffusivity,
    velocity,
    conductivity,
    heat_capacity,
    density,
    htc,
    hydraulic,
    lymph,
    inv_length,
    viscosity,
};

struct UnitDef {
    const char* name;
    double scale;
    double offset;
};

const std::vector<UnitDef>& units_for(Dim dim) {
    static const std::vector<UnitDef> kNone{};
    static const std::vector<UnitDef> kLength{
        {"m", 1.0, 0.0}, {"cm", 1e-2, 0.0}, {"mm", 1e-3, 0.0}, {"um", 1e-6, 0.0}};
    static const std::vector<UnitDef> kArea{
        {"m^2", 1.0, 0.0}, {"mm^2", 1e-6, 0.0}, {"um^2", 1e-12, 0.0}};
    static const std::vector<UnitDef> kTime{
        {"s", 1.0, 0.0}, {"ms", 1e-3, 0.0}, {"min", 60.0, 0.0}, {"h", 3600.0, 0.0}};
    static const std::vector<UnitDef> kTemperature{
        {"K", 1.0, 0.0}, {"degC", 1.0, 273.15}, {"C", 1.0, 273.15}};
    static const std::vector<UnitDef> kPressure{{"Pa", 1.0, 0.0},
                                                {"kPa", 1e3, 0.0},
                                                {"MPa", 1e6, 0.0},
                                                {"mmHg", 133.322387415, 0.0}};
    static const std::vector<UnitDef> kSar{
        {"W/kg", 1.0, 0.0}, {"kW/kg", 1e3, 0.0}, {"MW/kg", 1e6, 0.0}};
    static const std::vector<UnitDef> kPerTime{{"1/s", 1.0, 0.0}, {"1/min", 1.0 / 60.0, 0.0}};
    static const std::vector<UnitDef> kDiffusivity{
        {"m^2/s", 1.0, 0.0}, {"mm^2/s", 1e-6, 0.0}, {"um^2/s", 1e-12, 0.0}};
    static const std::vector<UnitDef> kVelocity{
        {"m/s", 1.0, 0.0}, {"mm/s", 1e-3, 0.0}, {"um/s", 1e-6, 0.0}};
    static const std::vector<UnitDef> kConductivity{
        {"W/(m K)", 1.0, 0.0}, {"W/(mm K)", 1e3, 0.0}, {"mW/(mm K)", 1.0, 0.0}};
    static const std::vector<UnitDef> kHeatCapacity{{"J/(kg K)", 1.0, 0.0},
                                                    {"kJ/(kg K)", 1e3, 0.0}};
    static const std::vector<UnitDef> kDensity{
        {"kg/m^3", 1.0, 0.0}, {"g/cm^3", 1e3, 0.0}, {"g/ml", 1e3, 0.0}};
    static const std::vector<UnitDef> kHtc{{"W/(m^2 K)", 1.0, 0.0}, {"W/(mm^2 K)", 1e6, 0.0}};
    static const std::vector<UnitDef> kHydraulic{{"m^2 s/kg", 1.0, 0.0},
                                                 {"mm^2 s/g", 1e-3, 0.0}};
    static const std::vector<UnitDef> kLymph{{"1/(Pa s)", 1.0, 0.0}};
    static const std::vector<UnitDef> kInvLength{{"1/m", 1.0, 0.0}, {"1/mm", 1e3, 0.0}};
    static const std::vector<UnitDef> kViscosity{{"Pa s", 1.0, 0.0}, {"mPa s", 1e-3, 0.0}};
    switch (dim) {
        case Dim::none: return kNone;
        case Dim::length: return kLength;
        case Dim::area: return kArea;
        case Dim::time: return kTime;
        case Dim::temperature: return kTemperature;
        case Dim::pressure: return kPressure;
        case Dim::sar: return kSar;
        case Dim::per_time: return kPerTime;
        case Dim::diffusivity: return kDiffusivity;
        case Dim::velocity: return kVelocity;
        case Dim::conductivity: return kConductivity;
        case Dim::heat_capacity: return kHeatCapacity;
        case Dim::density: return kDensity;
        case Dim::htc: return kHtc;
        case Dim::hydraulic: return kHydraulic;
        case Dim::lymph: return kLymph;
        case Dim::inv_length: return kInvLength;
        case Dim::viscosity: return kViscosity;
    }
    return kNone;
}

// Location carried into every parse error: "<origin>:<line>: ...".
struct Ctx {
    const std::string* origin;
    int line;

    [[noreturn]] void fail(const std::string& message) const {
        throw ConfigError(*origin + ":" + std::to_string(line) + ": " + message);
    }
};

double parse_number(const std::string& text, Dim dim, const Ctx& ctx, const std::string& key) {
    const char* begin = text.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) ctx.fail("expected a number for key '" + key + "'");
    std::string unit = collapse_ws(trim(std::string_view(end)));
    if (!unit.empty()) {
        if (dim == Dim::none)
            ctx.fail("key '" + key + "' takes a plain number, got unit '" + unit + "'");
        const auto& table = units_for(dim);
        auto it = std::find_if(table.begin(), table.end(),
                               [&](const UnitDef& u) { return unit == u.name; });
        if (it == table.end()) {
            std::string allowed;
            for (const UnitDef& u : table) allowed += std::string(" ") + u.name;
            ctx.fail("unit '" + unit + "' is not valid for key '" + key + "' (allowed:" +
                     allowed + ")");
        }
        v = v * it->scale + it->offset;
    }
    if (!std::isfinite(v)) ctx.fail("value of key '" + key + "' is not finite");
    return v;
}

long long parse_integer(const std::string& text, const Ctx& ctx, const std::string& key) {
    const char* begin = text.c_str();
    char* end = nullptr;
    long long v = std::strtoll(begin, &end, 10);
    if (end == begin || !trim(std::string_view(end)).empty())
        ctx.fail("expected an integer for key '" + key + "'");
    return v;
}

bool parse_boolean(const std::string& text, const Ctx& ctx, const std::string& key) {
    std::string v = trim(text);
    for (char& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    ctx.fail("expected true/false for key '" + key + "'");
}

// One configurable key: how to parse its value into the target and how to
// echo the current value back out. Numbers travel as SI doubles; integers,
// booleans and enumeration indices ride the same channel.
enum class Kind { number, integer, boolean, enumeration, text };

template <typename T>
struct KeySpec {
    const char* section;
    const char* key;
    Kind kind;
    Dim dim = Dim::none;
    std::vector<std::string> options{};
    std::function<void(T&, double)> set_num{};
    std::function<double(const T&)> get_num{};
    std::function<void(T&, const std::string&)> set_text{};
    std::function<std::string(const T&)> get_text{};
};

template <typename T>
void apply_key(const KeySpec<T>& spec, T& target, const std::string& value, const Ctx& ctx) {
    switch (spec.kind) {
        case Kind::number:
            spec.set_num(target, parse_number(value, spec.dim, ctx, spec.key));
            return;
        case Kind::integer:
            spec.set_num(target, static_cast<double>(parse_integer(value, ctx, spec.key)));
            return;
        case Kind::boolean:
            spec.set_num(target, parse_boolean(value, ctx, spec.key) ? 1.0 : 0.0);
            return;
        case Kind::enumeration: {
            std::string v = trim(value);
            for (size_t i = 0; i < spec.options.size(); ++i) {
                if (v == spec.options[i]) {
                    spec.set_num(target, static_cast<double>(i));
                    return;
                }
            }
            std::string allowed;
            for (const auto& o : spec.options) allowed += " " + o;
            ctx.fail("key '" + std::string(spec.key) + "' must be one of:" + allowed);
        }
        case Kind::text:
            spec.set_text(target, trim(value));
            return;
    }
}

template <typename T>
std::string echo_key(const KeySpec<T>& spec, const T& target) {
    switch (spec.kind) {
        case Kind::number: return format_double(spec.get_num(target));
        case Kind::integer:
            return std::to_string(static_cast<long long>(spec.get_num(target)));
        case Kind::boolean: return spec.get_num(target) != 0.0 ? "true" : "false";
        case Kind::enumeration:
            return spec.options[static_cast<size_t>(spec.get_num(target))];
        case Kind::text: return spec.get_text(target);
    }
    return {};
}

using SKey = KeySpec<ScenarioConfig>;

// Shorthand builders keep the table below readable.
SKey num(const char* sec, const char* key, Dim dim, std::function<void(ScenarioConfig&, double)> set,
         std::function<double(const ScenarioConfig&)> get) {
    return {sec, key, Kind::number, dim, {}, std::move(set), std::move(get), {}, {}};
}

SKey integer(const char* sec, const char* key, std::function<void(ScenarioConfig&, double)> set,
             std::function<double(const ScenarioConfig&)> get) {
    return {sec, key, Kind::integer, Dim::none, {}, std::move(set), std::move(get), {}, {}};
}

SKey boolean(const char* sec, const char* key, std::function<void(ScenarioConfig&, double)> set,
             std::function<double(const ScenarioConfig&)> get) {
    return {sec, key, Kind::boolean, Dim::none, {}, std::move(set), std::move(get), {}, {}};
}

SKey enumeration(const char* sec, const char* key, std::vector<std::string> options,
                 std::function<void(ScenarioConfig&, double)> set,
                 std::function<double(const ScenarioConfig&)> get) {
    return {sec,  key, Kind::enumeration, Dim::none, std::move(options), std::move(set),
            std::move(get), {}, {}};
}

SKey text(const char* sec, const char* key, std::function<void(ScenarioConfig&, const std::string&)> set,
          std::function<std::string(const ScenarioConfig&)> get) {
    return {sec, key, Kind::text, Dim::none, {}, {}, {}, std::move(set), std::move(get)};
}

SKey side_kind(const char* key, HeatSideBc ScenarioConfig::* /*unused*/, HeatSideBc HeatBcs::*side) {
    return enumeration(
        "boundaries", key, {"insulated", "robin", "dirichlet"},
        [side](ScenarioConfig& c, double v) {
            (c.heat_bcs.*side).kind = static_cast<HeatBcKind>(static_cast<int>(v));
        },
        [side](const ScenarioConfig& c) {
            return static_cast<double>(static_cast<int>((c.heat_bcs.*side).kind));
        });
}

const std::vector<SKey>& scenario_keys() {
    static const std::vector<SKey> kKeys = [] {
        std::vector<SKey> k;
        k.push_back(text(
            "case", "name", [](ScenarioConfig& c, const std::string& v) { c.name = v; },
            [](const ScenarioConfig& c) { return c.name; }));

        k.push_back(integer(
            "mesh", "nx", [](ScenarioConfig& c, double v) { c.nx = static_cast<int>(v); },
            [](const ScenarioConfig& c) { return static_cast<double>(c.nx); }));
        k.push_back(integer(
            "mesh", "ny", [](ScenarioConfig& c, double v) { c.ny = static_cast<int>(v); },
            [](const ScenarioConfig& c) { return static_cast<double>(c.ny); }));
        k.push_back(num(
            "mesh", "lx", Dim::length, [](ScenarioConfig& c, double v) { c.lx = v; },
            [](const ScenarioConfig& c) { return c.lx; }));
        k.push_back(num(
            "mesh", "ly", Dim::length, [](ScenarioConfig& c, double v) { c.ly = v; },
            [](const ScenarioConfig& c) { return c.ly; }));

        k.push_back(enumeration(
            "fields", "source", {"idealised", "ellipse", "file"},
            [](ScenarioConfig& c, double v) {
                c.field_source = static_cast<FieldSource>(static_cast<int>(v));
            },
            [](const ScenarioConfig& c) { return static_cast<double>(c.field_source); }));
        k.push_back(text(
            "fields", "file",
            [](ScenarioConfig& c, const std::string& v) { c.fields_file = v; },
            [](const ScenarioConfig& c) { return c.fields_file; }));
        struct TumourField {
            const char* key;
            Dim dim;
            double IdealisedTumourParams::*member;
        };
        static const TumourField tumour_fields[] = {
            {"tumour_radius", Dim::length, &IdealisedTumourParams::tumour_radius},
            {"transition_width", Dim::length, &IdealisedTumourParams::transition_width},
            {"core_radius", Dim::length, &IdealisedTumourParams::core_radius},
            {"core_width", Dim::length, &IdealisedTumourParams::core_width},
            {"porosity", Dim::none, &IdealisedTumourParams::porosity},
            {"host_s_l", Dim::none, &IdealisedTumourParams::host_s_l},
            {"core_s_l", Dim::none, &IdealisedTumourParams::core_s_l},
            {"host_eps_v", Dim::none, &IdealisedTumourParams::host_eps_v},
            {"p_l_peak", Dim::pressure, &IdealisedTumourParams::p_l_peak},
            {"p_l_plateau", Dim::length, &IdealisedTumourParams::p_l_plateau},
            {"p_l_radius", Dim::length, &IdealisedTumourParams::p_l_radius},
            {"p_v", Dim::pressure, &IdealisedTumourParams::p_v},
            {"p_t_peak", Dim::pressure, &IdealisedTumourParams::p_t_peak},
        };
        k.push_back(num(
            "fields", "centre_x", Dim::length,
            [](ScenarioConfig& c, double v) { c.tumour.centre.x = v; },
            [](const ScenarioConfig& c) { return c.tumour.centre.x; }));
        k.push_back(num(
            "fields", "centre_y", Dim::length,
            [](ScenarioConfig& c, double v) { c.tumour.centre.y = v; },
            [](const ScenarioConfig& c) { return c.tumour.centre.y; }));
        for (const auto& f : tumour_fields) {
            auto member = f.member;
            k.push_back(num(
                "fields", f.key, f.dim,
                [member](ScenarioConfig& c, double v) { c.tumour.*member = v; },
                [member](const ScenarioConfig& c) { return c.tumour.*member; }));
        }
        k.push_back(num(
            "fields", "ellipse_centre_x", Dim::length,
            [](ScenarioConfig& c, double v) { c.ellipse.centre.x = v; },
            [](const ScenarioConfig& c) { return c.ellipse.centre.x; }));
        k.push_back(num(
            "fields", "ellipse_centre_y", Dim::length,
            [](ScenarioConfig& c, double v) { c.ellipse.centre.y = v; },
            [](const ScenarioConfig& c) { return c.ellipse.centre.y; }));
        struct EllipseField {
            const char* key;
            Dim dim;
            double EllipseTumourParams::*member;
        };
        static const EllipseField ellipse_fields[] = {
            {"ellipse_a", Dim::length, &EllipseTumourParams::a},
            {"ellipse_b", Dim::length, &EllipseTumourParams::b},
            {"ellipse_transition_width", Dim::length, &EllipseTumourParams::transition_width},
            {"ellipse_st_max", Dim::none, &EllipseTumourParams::st_max},
            {"ellipse_porosity", Dim::none, &EllipseTumourParams::porosity},
            {"ellipse_fluid_fraction", Dim::none, &EllipseTumourParams::fluid_fraction},
        };
        for (const auto& f : ellipse_fields) {
            auto member = f.member;
            k.push_back(num(
                "fields", f.key, f.dim,
                [member](ScenarioConfig& c, double v) { c.ellipse.*member = v; },
                [member](const ScenarioConfig& c) { return c.ellipse.*member; }));
        }

        k.push_back(enumeration(
            "vasculature", "mode", {"none", "lumped", "discrete"},
            [](ScenarioConfig& c, double v) {
                c.mode = static_cast<VasculatureMode>(static_cast<int>(v));
            },
            [](const ScenarioConfig& c) { return static_cast<double>(c.mode); }));
        k.push_back(text(
            "vasculature", "network_file",
            [](ScenarioConfig& c, const std::string& v) { c.network_file = v; },
            [](const ScenarioConfig& c) { return c.network_file; }));

        struct TransportField {
            const char* key;
            Dim dim;
            double TransportCoefficients::*member;
        };
        static const TransportField transport_fields[] = {
            {"d_np", Dim::diffusivity, &TransportCoefficients::d_np},
            {"k_l", Dim::area, &TransportCoefficients::k_l},
            {"mu_l", Dim::viscosity, &TransportCoefficients::mu_l},
            {"rho_l", Dim::density, &TransportCoefficients::rho_l},
            {"rho_v", Dim::density, &TransportCoefficients::rho_v},
            {"l_p_v", Dim::hydraulic, &TransportCoefficients::l_p_v},
            {"s_over_v", Dim::inv_length, &TransportCoefficients::s_over_v},
            {"p_wall", Dim::velocity, &TransportCoefficients::p_wall},
            {"sigma", Dim::none, &TransportCoefficients::sigma},
            {"pi_v", Dim::pressure, &TransportCoefficients::pi_v},
            {"pi_l", Dim::pressure, &TransportCoefficients::pi_l},
            {"lp_sv_ly", Dim::lymph, &TransportCoefficients::lp_sv_ly},
            {"p_ly", Dim::pressure, &TransportCoefficients::p_ly},
            {"p_coll", Dim::pressure, &TransportCoefficients::p_coll},
        };
        for (const auto& f : transport_fields) {
            auto member = f.member;
            k.push_back(num(
                "transport", f.key, f.dim,
                [member](ScenarioConfig& c, double v) { c.transport.*member = v; },
                [member](const ScenarioConfig& c) { return c.transport.*member; }));
        }
        k.push_back(num(
            "transport", "omega_init", Dim::none,
            [](ScenarioConfig& c, double v) { c.omega_init = v; },
            [](const ScenarioConfig& c) { return c.omega_init; }));
        k.push_back(enumeration(
            "transport", "omega_init_shape", {"uniform", "tumour"},
            [](ScenarioConfig& c, double v) {
                c.omega_init_shape = static_cast<OmegaInitShape>(static_cast<int>(v));
            },
            [](const ScenarioConfig& c) { return static_cast<double>(c.omega_init_shape); }));
        k.push_back(boolean(
            "transport", "frozen",
            [](ScenarioConfig& c, double v) { c.transport_frozen = v != 0.0; },
            [](const ScenarioConfig& c) { return c.transport_frozen ? 1.0 : 0.0; }));

        k.push_back(num(
            "thermal", "t_b", Dim::temperature,
            [](ScenarioConfig& c, double v) { c.thermal.t_b = v; },
            [](const ScenarioConfig& c) { return c.thermal.t_b; }));
        k.push_back(num(
            "thermal", "c_p", Dim::heat_capacity,
            [](ScenarioConfig& c, double v) { c.thermal.c_p.fill(v); },
            [](const ScenarioConfig& c) { return c.thermal.c_p[0]; }));
        k.push_back(num(
            "thermal", "rho", Dim::density,
            [](ScenarioConfig& c, double v) { c.thermal.rho.fill(v); },
            [](const ScenarioConfig& c) { return c.thermal.rho[0]; }));
        k.push_back(num(
            "thermal", "kappa", Dim::conductivity,
            [](ScenarioConfig& c, double v) { c.thermal.kappa.fill(v); },
            [](const ScenarioConfig& c) { return c.thermal.kappa[0]; }));
        k.push_back(num(
            "thermal", "w", Dim::per_time,
            [](ScenarioConfig& c, double v) { c.thermal.w = v; },
            [](const ScenarioConfig& c) { return c.thermal.w; }));
        k.push_back(num(
            "thermal", "beta_wall", Dim::htc,
            [](ScenarioConfig& c, double v) { c.thermal.beta_wall = v; },
            [](const ScenarioConfig& c) { return c.thermal.beta_wall; }));

        struct SideEntry {
            const char* name;
            HeatSideBc HeatBcs::*side;
        };
        static const SideEntry sides[] = {
            {"left", &HeatBcs::left},
            {"right", &HeatBcs::right},
            {"bottom", &HeatBcs::bottom},
            {"top", &HeatBcs::top},
        };
        for (const auto& s : sides) {
            auto side = s.side;
            k.push_back(enumeration(
                "boundaries", s.name, {"insulated", "robin", "dirichlet"},
                [side](ScenarioConfig& c, double v) {
                    (c.heat_bcs.*side).kind = static_cast<HeatBcKind>(static_cast<int>(v));
                },
                [side](const ScenarioConfig& c) {
                    return static_cast<double>((c.heat_bcs.*side).kind);
                }));
            k.push_back(num(
                "boundaries", (std::string(s.name) + "_beta").c_str(), Dim::htc,
                [side](ScenarioConfig& c, double v) { (c.heat_bcs.*side).beta = v; },
                [side](const ScenarioConfig& c) { return (c.heat_bcs.*side).beta; }));
            k.push_back(num(
                "boundaries", (std::string(s.name) + "_value").c_str(), Dim::temperature,
                [side](ScenarioConfig& c, double v) { (c.heat_bcs.*side).value = v; },
                [side](const ScenarioConfig& c) { return (c.heat_bcs.*side).value; }));
        }

        k.push_back(num(
            "protocol", "omega_d", Dim::none,
            [](ScenarioConfig& c, double v) { c.protocol.injection.omega_v_d = v; },
            [](const ScenarioConfig& c) { return c.protocol.injection.omega_v_d; }));
        k.push_back(num(
            "protocol", "injection_start", Dim::time,
            [](ScenarioConfig& c, double v) { c.protocol.injection.t_start = v; },
            [](const ScenarioConfig& c) { return c.protocol.injection.t_start; }));
        k.push_back(num(
            "protocol", "injection_end", Dim::time,
            [](ScenarioConfig& c, double v) { c.protocol.injection.t_end = v; },
            [](const ScenarioConfig& c) { return c.protocol.injection.t_end; }));
        k.push_back(num(
            "protocol", "sar", Dim::sar,
            [](ScenarioConfig& c, double v) { c.protocol.sar = v; },
            [](const ScenarioConfig& c) { return c.protocol.sar; }));
        k.push_back(num(
            "protocol", "heating_start", Dim::time,
            [](ScenarioConfig& c, double v) { c.protocol.heating.t_start = v; },
            [](const ScenarioConfig& c) { return c.protocol.heating.t_start; }));
        k.push_back(num(
            "protocol", "heating_end", Dim::time,
            [](ScenarioConfig& c, double v) { c.protocol.heating.t_end = v; },
            [](const ScenarioConfig& c) { return c.protocol.heating.t_end; }));

        k.push_back(num(
            "time", "dt", Dim::time, [](ScenarioConfig& c, double v) { c.dt = v; },
            [](const ScenarioConfig& c) { return c.dt; }));
        k.push_back(integer(
            "time", "steps", [](ScenarioConfig& c, double v) { c.steps = static_cast<int>(v); },
            [](const ScenarioConfig& c) { return static_cast<double>(c.steps); }));

        k.push_back(boolean(
            "numerics", "convection",
            [](ScenarioConfig& c, double v) { c.convection = v != 0.0; },
            [](const ScenarioConfig& c) { return c.convection ? 1.0 : 0.0; }));
        k.push_back(boolean(
            "numerics", "streamline_diffusion",
            [](ScenarioConfig& c, double v) { c.streamline_diffusion = v != 0.0; },
            [](const ScenarioConfig& c) { return c.streamline_diffusion ? 1.0 : 0.0; }));
        k.push_back(integer(
            "numerics", "max_picard_sweeps",
            [](ScenarioConfig& c, double v) { c.max_picard_sweeps = static_cast<int>(v); },
            [](const ScenarioConfig& c) { return static_cast<double>(c.max_picard_sweeps); }));

        k.push_back(integer(
            "output", "csv_every",
            [](ScenarioConfig& c, double v) { c.output.csv_every = static_cast<int>(v); },
            [](const ScenarioConfig& c) { return static_cast<double>(c.output.csv_every); }));
        k.push_back(integer(
            "output", "snapshot_every",
            [](ScenarioConfig& c, double v) { c.output.snapshot_every = static_cast<int>(v); },
            [](const ScenarioConfig& c) {
                return static_cast<double>(c.output.snapshot_every);
            }));
        return k;
    }();
    return kKeys;
}

using NKey = KeySpec<GridNetworkParams>;

const std::vector<NKey>& network_keys() {
    static const std::vector<NKey> kKeys = [] {
        std::vector<NKey> k;
        struct LengthField {
            const char* key;
            double GridNetworkParams::*member;
        };
        static const LengthField lengths[] = {
            {"width", &GridNetworkParams::width},
            {"height", &GridNetworkParams::height},
            {"spacing", &GridNetworkParams::spacing},
            {"radius_median", &GridNetworkParams::radius_median},
            {"radius_min", &GridNetworkParams::radius_min},
            {"radius_max", &GridNetworkParams::radius_max},
            {"collapse_radius", &GridNetworkParams::collapse_radius},
        };
        auto push_num = [&k](const char* key, Dim dim,
                             std::function<void(GridNetworkParams&, double)> set,
                             std::function<double(const GridNetworkParams&)> get) {
            k.push_back({"network", key, Kind::number, dim, {}, std::move(set), std::move(get),
                         {}, {}});
        };
        push_num(
            "origin_x", Dim::length, [](GridNetworkParams& p, double v) { p.origin.x = v; },
            [](const GridNetworkParams& p) { return p.origin.x; });
        push_num(
            "origin_y", Dim::length, [](GridNetworkParams& p, double v) { p.origin.y = v; },
            [](const GridNetworkParams& p) { return p.origin.y; });
        for (const auto& f : lengths) {
            auto member = f.member;
            push_num(
                f.key, Dim::length, [member](GridNetworkParams& p, double v) { p.*member = v; },
                [member](const GridNetworkParams& p) { return p.*member; });
        }
        push_num(
            "radius_sigma", Dim::none,
            [](GridNetworkParams& p, double v) { p.radius_sigma = v; },
            [](const GridNetworkParams& p) { return p.radius_sigma; });
        push_num(
            "inlet_pressure", Dim::pressure,
            [](GridNetworkParams& p, double v) { p.inlet_pressure = v; },
            [](const GridNetworkParams& p) { return p.inlet_pressure; });
        push_num(
            "outlet_pressure", Dim::pressure,
            [](GridNetworkParams& p, double v) { p.outlet_pressure = v; },
            [](const GridNetworkParams& p) { return p.outlet_pressure; });
        push_num(
            "inlet_omega", Dim::none,
            [](GridNetworkParams& p, double v) { p.inlet_omega = v; },
            [](const GridNetworkParams& p) { return p.inlet_omega; });
        k.push_back({"network", "seed", Kind::integer, Dim::none, {},
                     [](GridNetworkParams& p, double v) {
                         p.seed = static_cast<unsigned long long>(v);
                     },
                     [](const GridNetworkParams& p) { return static_cast<double>(p.seed); },
                     {}, {}});
        k.push_back({"network", "collapse_enabled", Kind::boolean, Dim::none, {},
                     [](GridNetworkParams& p, double v) { p.collapse_enabled = v != 0.0; },
                     [](const GridNetworkParams& p) { return p.collapse_enabled ? 1.0 : 0.0; },
                     {}, {}});
        push_num(
            "collapse_centre_x", Dim::length,
            [](GridNetworkParams& p, double v) { p.collapse_centre.x = v; },
            [](const GridNetworkParams& p) { return p.collapse_centre.x; });
        push_num(
            "collapse_centre_y", Dim::length,
            [](GridNetworkParams& p, double v) { p.collapse_centre.y = v; },
            [](const GridNetworkParams& p) { return p.collapse_centre.y; });
        return k;
    }();
    return kKeys;
}

bool valid_name_token(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
            return false;
    }
    return true;
}

// Walks the file once, dispatching each key line through `table`; keys in the
// `special` section (if any) go through `on_special` instead.
template <typename T>
void parse_key_values(const std::string& text, const std::string& origin, T& target,
                      const std::vector<KeySpec<T>>& table, const char* special_section,
                      const std::function<void(const std::string& key, const std::string& value,
                                               const Ctx& ctx)>& on_special) {
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::vector<std::string> seen;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        Ctx ctx{&origin, line_no};
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::string line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') ctx.fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            bool known = special_section && section == special_section;
            for (const auto& spec : table) known = known || section == spec.section;
            if (!known) ctx.fail("unknown section '" + section + "'");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) ctx.fail("expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!valid_name_token(key)) ctx.fail("malformed key '" + key + "'");
        if (section.empty()) ctx.fail("key '" + key + "' appears before any [section]");
        if (special_section && section == special_section) {
            on_special(key, value, ctx);
            continue;
        }
        const KeySpec<T>* spec = nullptr;
        for (const auto& s : table) {
            if (section == s.section && key == s.key) {
                spec = &s;
                break;
            }
        }
        if (!spec) ctx.fail("unknown key '" + key + "' in section [" + section + "]");
        std::string id = section + "." + key;
        if (std::find(seen.begin(), seen.end(), id) != seen.end())
            ctx.fail("duplicate key '" + key + "' in section [" + section + "]");
        seen.push_back(id);
        apply_key(*spec, target, value, ctx);
    }
}

std::string read_text_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(std::string("cannot open ") + what + ": " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

ScenarioConfig parse_config_text(const std::string& text, const std::string& origin) {
    ScenarioConfig config;
    auto on_probe = [&config](const std::string& key, const std::string& value, const Ctx& ctx) {
        for (const auto& probe : config.probes) {
            if (probe.name == key) ctx.fail("duplicate probe '" + key + "'");
        }
        auto comma = value.find(',');
        if (comma == std::string::npos)
            ctx.fail("probe '" + key + "' needs two coordinates '<x>, <y>'");
        ProbePoint probe;
        probe.name = key;
        probe.position.x = parse_number(trim(value.substr(0, comma)), Dim::length, ctx, key);
        probe.position.y = parse_number(trim(value.substr(comma + 1)), Dim::length, ctx, key);
        config.probes.push_back(std::move(probe));
    };
    parse_key_values(text, origin, config, scenario_keys(), "probes", on_probe);

    if (!valid_name_token(config.name))
        throw ConfigError(origin + ": case name '" + config.name +
                          "' must use only letters, digits, '.', '_' or '-'");
    if (config.field_source == FieldSource::file && config.fields_file.empty())
        throw ConfigError(origin + ": missing required key 'file' in section [fields]");
    if (config.mode == VasculatureMode::discrete && config.network_file.empty())
        throw ConfigError(origin + ": missing required key 'network_file' in section "
                                   "[vasculature]");
    config.validate();
    return config;
}

ScenarioConfig parse_config(const std::string& path) {
    return parse_config_text(read_text_file(path, "config file"), path);
}

GridNetworkParams parse_network_spec_text(const std::string& text, const std::string& origin) {
    GridNetworkParams params;
    parse_key_values<GridNetworkParams>(text, origin, params, network_keys(), nullptr, {});
    return params;
}

GridNetworkParams parse_network_spec(const std::string& path) {
    return parse_network_spec_text(read_text_file(path, "network spec"), path);
}

std::string format_resolved_config(const ScenarioConfig& config) {
    std::string out;
    std::string section;
    for (const auto& spec : scenario_keys()) {
        std::string value = echo_key(spec, config);
        if (spec.kind == Kind::text && value.empty()) continue;
        if (section != spec.section) {
            section = spec.section;
            if (!out.empty()) out += "\n";
            out += "[" + section + "]\n";
        }
        out += std::string(spec.key) + " = " + value + "\n";
    }
    if (!config.probes.empty()) {
        out += "\n[probes]\n";
        for (const auto& probe : config.probes) {
            out += probe.name + " = " + format_double(probe.position.x) + ", " +
                   format_double(probe.position.y) + "\n";
        }
    }
    return out;
}

std::string time_series_csv(const ScenarioConfig& config, const RunResult& result) {
    std::string out = "step,t,mean_T,max_T,min_T";
    for (const auto& probe : config.probes) out += ",probe_" + probe.name;
    out += ",np_mass_if,np_mass_vessel\n";
    const int every = std::max(1, config.output.csv_every);
    for (const auto& row : result.rows) {
        const bool last = &row == &result.rows.back();
        if (row.step % every != 0 && !last) continue;
        out += std::to_string(row.step);
        out += ',' + format_double(row.time);
        out += ',' + format_double(row.mean_t);
        out += ',' + format_double(row.max_t);
        out += ',' + format_double(row.min_t);
        for (double v : row.probe_t) out += ',' + format_double(v);
        out += ',' + format_double(row.np_mass_if);
        out += ',' + format_double(row.np_mass_vessel);
        out += '\n';
    }
    return out;
}

namespace {

namespace fs = std::filesystem;

struct CliOptions {
    std::string out_dir = "out";
    bool quiet = false;
    int threads = 1;
    std::vector<std::string> positional;
    std::string param;
    std::string values;
    std::string output_file;
};

const char* kUsage =
    "usage: npheat <command> [options]\n"
    "commands:\n"
    "  run <config.cfg>                         run one scenario\n"
    "  sweep <config.cfg> --param <path> --values <v1,v2,...>\n"
    "                                           rerun the scenario per value\n"
    "  gen-network <spec.cfg> -o <file>         generate a capillary grid network\n"
    "  verify <case>                            mms-heat | mms-transport | pennes |\n"
    "                                           line-source | all\n"
    "options:\n"
    "  --out-dir <dir>   output root (default: out)\n"
    "  --quiet           suppress progress output\n"
    "  --threads <n>     concurrent sweep runs (default: 1)\n";

CliOptions parse_cli(const std::vector<std::string>& args, size_t start) {
    CliOptions opt;
    for (size_t i = start; i < args.size(); ++i) {
        const std::string& a = args[i];
        auto take = [&](const char* flag) -> const std::string& {
            if (i + 1 >= args.size())
                throw ConfigError(std::string(flag) + " needs an argument");
            return args[++i];
        };
        if (a == "--out-dir") {
            opt.out_dir = take("--out-dir");
        } else if (a == "--quiet") {
            opt.quiet = true;
        } else if (a == "--threads") {
            const std::string& v = take("--threads");
            Ctx ctx{&a, 0};
            opt.threads = static_cast<int>(parse_integer(v, ctx, "threads"));
            if (opt.threads < 1) throw ConfigError("--threads must be at least 1");
        } else if (a == "--param") {
            opt.param = take("--param");
        } else if (a == "--values") {
            opt.values = take("--values");
        } else if (a == "-o") {
            opt.output_file = take("-o");
        } else if (!a.empty() && a.front() == '-') {
            throw ConfigError("unknown option '" + a + "'");
        } else {
            opt.positional.push_back(a);
        }
    }
    return opt;
}

// Snapshot writer shared by run and sweep: grid fields plus, in discrete
// mode, the vessel polylines next to them.
SnapshotSink make_snapshot_sink(const fs::path& dir) {
    return [dir](const SnapshotData& data) {
        char name[48];
        std::snprintf(name, sizeof name, "snapshot_%06d.vtk", data.step);
        const fs::path path = dir / name;
        write_snapshot(*data.mesh,
                       {{"T", &data.thermal->temperature},
                        {"omega_np_if", &data.transport->omega_l},
                        {"s_t", &data.fields->s_t},
                        {"eps_v", &data.fields->eps_v},
                        {"p_l", &data.fields->p_l}},
                       path.string());
        if (data.network) {
            std::snprintf(name, sizeof name, "network_%06d.vtk", data.step);
            write_network_snapshot(*data.network, *data.network_flow, *data.vessel_omega,
                                   (dir / name).string());
        }
        return path.string();
    };
}

// Runs one configured scenario and writes series.csv + run.log (+ snapshots)
// into `dir`.
RunResult run_into_directory(const ScenarioConfig& config, const fs::path& dir) {
    fs::create_directories(dir);
    const RunResult result = run_simulation(config, make_snapshot_sink(dir));

    if (config.output.csv_every > 0)
        atomic_write_text((dir / "series.csv").string(), time_series_csv(config, result));

    const SweepRow peak = summarise_sweep_run(0.0, result);
    std::string log = "# resolved configuration (SI units)\n";
    log += format_resolved_config(config);
    log += "\n# run summary\n";
    log += "# rows recorded = " + std::to_string(result.rows.size()) + "\n";
    log += "# peak mean T = " + format_double(peak.peak_mean_t) + " K at t = " +
           format_double(peak.time_of_peak_mean) + " s\n";
    log += "# peak max T = " + format_double(peak.peak_max_t) + " K\n";
    log += "# snapshots written = " + std::to_string(result.snapshot_paths.size()) + "\n";
    if (config.output.csv_every <= 0) log += "# series.csv disabled (csv_every = 0)\n";
    atomic_write_text((dir / "run.log").string(), log);
    return result;
}

int cmd_run(const CliOptions& opt) {
    if (opt.positional.size() != 1)
        throw ConfigError(std::string("run expects one config file\n") + kUsage);
    ScenarioConfig config = parse_config(opt.positional[0]);
    config.quiet = config.quiet || opt.quiet;
    const fs::path dir = fs::path(opt.out_dir) / config.name;
    const RunResult result = run_into_directory(config, dir);
    if (!opt.quiet) {
        const SweepRow peak = summarise_sweep_run(0.0, result);
        std::cout << config.name << ": " << result.rows.size() << " steps, peak mean T "
                  << peak.peak_mean_t << " K at t = " << peak.time_of_peak_mean
                  << " s, artifacts in " << dir.string() << "\n";
    }
    return 0;
}

std::vector<double> parse_value_list(const std::string& text) {
    std::vector<double> values;
    std::string token;
    std::istringstream in(text);
    while (std::getline(in, token, ',')) {
        token = trim(token);
        if (token.empty()) throw ConfigError("--values has an empty entry");
        const char* begin = token.c_str();
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin || !trim(std::string_view(end)).empty() || !std::isfinite(v))
            throw ConfigError("--values entry '" + token + "' is not a number");
        values.push_back(v);
    }
    if (values.empty()) throw ConfigError("--values needs at least one number");
    return values;
}

int cmd_sweep(const CliOptions& opt) {
    if (opt.positional.size() != 1 || opt.param.empty() || opt.values.empty())
        throw ConfigError(
            std::string("sweep expects a config file plus --param and --values\n") + kUsage);
    ScenarioConfig base = parse_config(opt.positional[0]);
    base.quiet = base.quiet || opt.quiet;
    const std::vector<double> values = parse_value_list(opt.values);
    {
        ScenarioConfig scratch = base;
        set_parameter(scratch, opt.param, values.front()); // rejects unknown paths early
    }

    const fs::path sweep_dir = fs::path(opt.out_dir) / base.name;
    fs::create_directories(sweep_dir);
    std::vector<fs::path> run_dirs;
    for (size_t i = 0; i < values.size(); ++i) {
        char label[96];
        std::snprintf(label, sizeof label, "%03zu_%s=%g", i, opt.param.c_str(), values[i]);
        run_dirs.push_back(sweep_dir / label);
    }

    struct Outcome {
        SweepRow row;
        std::string error;
        int code = 0;
    };
    std::counting_semaphore<> gate(opt.threads);
    std::vector<std::future<Outcome>> futures;
    futures.reserve(values.size());
    for (size_t i = 0; i < values.size(); ++i) {
        futures.push_back(std::async(std::launch::async, [&, i]() -> Outcome {
            gate.acquire();
            struct Release {
                std::counting_semaphore<>* g;
                ~Release() { g->release(); }
            } release{&gate};
            Outcome outcome;
            try {
                ScenarioConfig config = base;
                set_parameter(config, opt.param, values[i]);
                outcome.row = summarise_sweep_run(values[i],
                                                  run_into_directory(config, run_dirs[i]));
            } catch (const ConfigError& e) {
                outcome.error = e.what();
                outcome.code = 1;
            } catch (const NumericalError& e) {
                outcome.error = e.what();
                outcome.code = 2;
            }
            return outcome;
        }));
    }

    std::string summary =
        "value,peak_mean_T,time_of_peak_mean,peak_max_T,final_mean_T,peak_np_mass_if,dir\n";
    int exit_code = 0;
    for (size_t i = 0; i < futures.size(); ++i) {
        Outcome outcome = futures[i].get();
        if (outcome.code != 0) {
            std::cerr << base.name << " sweep " << opt.param << " = " << values[i]
                      << " failed: " << outcome.error << "\n";
            exit_code = std::max(exit_code, outcome.code);
            continue;
        }
        const SweepRow& row = outcome.row;
        summary += format_double(row.value);
        summary += ',' + format_double(row.peak_mean_t);
        summary += ',' + format_double(row.time_of_peak_mean);
        summary += ',' + format_double(row.peak_max_t);
        summary += ',' + format_double(row.final_mean_t);
        summary += ',' + format_double(row.peak_np_mass_if);
        summary += ',' + run_dirs[i].filename().string();
        summary += '\n';
        if (!opt.quiet)
            std::cout << base.name << " " << opt.param << " = " << row.value
                      << ": peak mean T " << row.peak_mean_t << " K\n";
    }
    atomic_write_text((sweep_dir / "summary.csv").string(), summary);
    return exit_code;
}

int cmd_gen_network(const CliOptions& opt) {
    if (opt.positional.size() != 1 || opt.output_file.empty())
        throw ConfigError(std::string("gen-network expects a spec file and -o <file>\n") +
                          kUsage);
    const GridNetworkParams params = parse_network_spec(opt.positional[0]);
    const VesselNetwork network = make_grid_network(params);
    network.validate();
    const fs::path out = opt.output_file;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_network(network, out.string());
    if (!opt.quiet)
        std::cout << "wrote " << network.nodes.size() << " nodes, " << network.segments.size()
                  << " segments to " << out.string() << "\n";
    return 0;
}

// Least-squares order against the sweep scale recovered from the metric
// names ("l2_error_n16" -> h ~ 1/16, "time_error_dt5.0" -> dt = 5).
double order_from_rows(const std::vector<VerifyResult>& rows, const std::string& prefix,
                       bool invert) {
    std::vector<double> xs, es;
    for (const auto& row : rows) {
        if (row.metric.rfind(prefix, 0) != 0) continue;
        const double raw = std::strtod(row.metric.c_str() + prefix.size(), nullptr);
        if (raw <= 0.0) continue;
        xs.push_back(std::log(invert ? 1.0 / raw : raw));
        es.push_back(std::log(row.value));
    }
    if (xs.size() < 2) return 0.0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const int n = static_cast<int>(xs.size());
    for (int i = 0; i < n; ++i) {
        sx += xs[i];
        sy += es[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * es[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

int cmd_verify(const CliOptions& opt) {
    if (opt.positional.size() != 1)
        throw ConfigError(std::string("verify expects one case name\n") + kUsage);
    const std::string& which = opt.positional[0];

    std::vector<VerifyResult> rows;
    std::vector<std::pair<std::string, std::pair<double, double>>> orders;
    auto run_mms = [&](const char* label, auto space, auto time) {
        auto s = space();
        auto t = time();
        orders.push_back({label,
                          {order_from_rows(s, "l2_error_n", true),
                           order_from_rows(t, "time_error_dt", false)}});
        rows.insert(rows.end(), s.begin(), s.end());
        rows.insert(rows.end(), t.begin(), t.end());
    };

    if (which == "mms-heat") {
        run_mms("mms-heat", [] { return verify_mms_heat_space(); },
                [] { return verify_mms_heat_time(); });
    } else if (which == "mms-transport") {
        run_mms("mms-transport", [] { return verify_mms_transport_space(); },
                [] { return verify_mms_transport_time(); });
    } else if (which == "pennes") {
        for (auto [w, sar] : {std::pair{0.018, 2.0e6}, std::pair{0.036, 1.0e6},
                              std::pair{0.009, 1.5e6}}) {
            auto r = verify_pennes_uniform_steady(w, sar);
            rows.insert(rows.end(), r.begin(), r.end());
        }
    } else if (which == "line-source") {
        rows = verify_line_source_steady();
    } else if (which == "all") {
        run_mms("mms-heat", [] { return verify_mms_heat_space(); },
                [] { return verify_mms_heat_time(); });
        run_mms("mms-transport", [] { return verify_mms_transport_space(); },
                [] { return verify_mms_transport_time(); });
        for (auto [w, sar] : {std::pair{0.018, 2.0e6}, std::pair{0.036, 1.0e6},
                              std::pair{0.009, 1.5e6}}) {
            auto r = verify_pennes_uniform_steady(w, sar);
            rows.insert(rows.end(), r.begin(), r.end());
        }
        auto r = verify_line_source_steady();
        rows.insert(rows.end(), r.begin(), r.end());
    } else {
        throw ConfigError("unknown verify case '" + which +
                          "'; cases: mms-heat mms-transport pennes line-source all");
    }

    std::ostringstream report;
    write_verification_report(report, rows);
    fs::create_directories(opt.out_dir);
    atomic_write_text((fs::path(opt.out_dir) / ("verify_" + which + ".csv")).string(),
                      report.str());
    if (!opt.quiet) {
        std::cout << report.str();
        for (const auto& [label, o] : orders)
            std::cout << label << ": observed spatial order " << o.first
                      << ", temporal order " << o.second << "\n";
        std::cout << (all_pass(rows) ? "all cases pass" : "verification FAILED") << "\n";
    }
    return all_pass(rows) ? 0 : 2;
}

} // namespace

int cli_main(const std::vector<std::string>& args) {
    try {
        if (args.empty()) {
            std::cerr << kUsage;
            return 1;
        }
        const std::string& command = args[0];
        const CliOptions opt = parse_cli(args, 1);
        if (command == "run") return cmd_run(opt);
        if (command == "sweep") return cmd_sweep(opt);
        if (command == "gen-network") return cmd_gen_network(opt);
        if (command == "verify") return cmd_verify(opt);
        std::cerr << "unknown command '" << command << "'\n" << kUsage;
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cli_main(int argc, const char* const* argv) {
    std::vector<std::string> args;
    args.reserve(argc > 0 ? static_cast<size_t>(argc - 1) : 0);
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return cli_main(args);
}

} // namespace npheat
