#include "npheat/fields.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "npheat/errors.hpp"
#include "npheat/output.hpp"

namespace npheat {
namespace {

bool fraction_ok(double v) { return std::isfinite(v) && v >= -1e-12 && v <= 1.0 + 1e-12; }

void require_positive(double v, const char* name) {
    if (!(v > 0.0))
        throw ConfigError(std::string("coefficients: ") + name + " must be strictly positive");
}

} // namespace

void PhaseFields::validate() const {
    const std::size_t n = eps.size();
    if (s_t.size() != n || s_h.size() != n || s_l.size() != n || eps_v.size() != n ||
        p_l.size() != n || p_v.size() != n || p_t.size() != n)
        throw ConfigError("fields: column lengths differ");
    for (std::size_t i = 0; i < n; ++i) {
        const int node = static_cast<int>(i);
        for (double f : {eps[i], s_t[i], s_h[i], s_l[i], eps_v[i]})
            if (!fraction_ok(f))
                throw ConfigError("fields: fraction out of [0,1] at node " + std::to_string(node));
        const double ssum = s_t[i] + s_h[i] + s_l[i];
        if (std::abs(ssum - 1.0) > 1e-10)
            throw ConfigError("fields: saturations at node " + std::to_string(node) + " sum to " +
                              std::to_string(ssum) + ", expected 1");
        if (!fraction_ok(eps_s(node)))
            throw ConfigError("fields: volume fractions at node " + std::to_string(node) +
                              " sum beyond 1 (eps + eps_v > 1)");
        if (!std::isfinite(p_l[i]) || !std::isfinite(p_v[i]) || !std::isfinite(p_t[i]))
            throw ConfigError("fields: non-finite pressure at node " + std::to_string(node));
    }
}

void TransportCoefficients::validate() const {
    require_positive(d_np, "d_np");
    require_positive(k_l, "k_l");
    require_positive(mu_l, "mu_l");
    require_positive(rho_l, "rho_l");
    require_positive(rho_v, "rho_v");
    require_positive(l_p_v, "l_p_v");
    require_positive(s_over_v, "s_over_v");
    require_positive(p_wall, "p_wall");
    require_positive(lp_sv_ly, "lp_sv_ly");
    require_positive(p_coll, "p_coll");
    if (!(sigma >= 0.0 && sigma <= 1.0))
        throw ConfigError("coefficients: sigma must lie in [0,1]");
    if (!(p_ly >= 0.0))
        throw ConfigError("coefficients: p_ly must be non-negative");
    if (!std::isfinite(pi_v) || !std::isfinite(pi_l))
        throw ConfigError("coefficients: oncotic pressures must be finite");
}

PhaseFields generate_idealised_tumour(const StructuredQuadMesh& mesh,
                                      const IdealisedTumourParams& p) {
    if (!(p.transition_width > 0.0) || !(p.core_width > 0.0))
        throw ConfigError("idealised tumour: profile widths must be positive");
    if (!(p.tumour_radius > 0.0) || p.tumour_radius >= std::min(mesh.lx(), mesh.ly()))
        throw ConfigError("idealised tumour: tumour radius must be positive and smaller than the domain");
    if (!(p.porosity > 0.0) || !(p.porosity + p.host_eps_v <= 1.0))
        throw ConfigError("idealised tumour: porosity and eps_v must leave room for the solid fraction");
    if (!(p.host_s_l >= 0.0 && p.host_s_l <= 1.0))
        throw ConfigError("idealised tumour: host_s_l must lie in [0,1]");
    if (!(p.core_s_l >= 0.0 && p.core_s_l <= p.host_s_l))
        throw ConfigError("idealised tumour: core_s_l must lie in [0, host_s_l]");
    if (!(p.p_l_radius > 0.0) || !(p.p_l_plateau >= 0.0))
        throw ConfigError("idealised tumour: p_l_radius must be positive");

    PhaseFields f;
    const int n = mesh.num_nodes();
    f.eps.resize(n);
    f.s_t.resize(n);
    f.s_h.resize(n);
    f.s_l.resize(n);
    f.eps_v.resize(n);
    f.p_l.resize(n);
    f.p_v.resize(n);
    f.p_t.resize(n);
    for (int i = 0; i < n; ++i) {
        const Vec2 x = mesh.node_coord(i);
        const double r = std::hypot(x.x - p.centre.x, x.y - p.centre.y);
        const double raw = 0.5 * (1.0 - std::tanh((r - p.tumour_radius) / p.transition_width));
        // Tumour cells crowd the pore space but a residual film of IF remains,
        // so the transport storage term rho*eps*S_l never degenerates.
        const double st = (1.0 - p.core_s_l) * raw;
        const double sl = p.host_s_l * (1.0 - raw) + p.core_s_l * raw;
        f.eps[i] = p.porosity;
        f.s_t[i] = st;
        f.s_l[i] = sl;
        f.s_h[i] = 1.0 - st - sl;
        f.eps_v[i] =
            p.host_eps_v * 0.5 * (1.0 + std::tanh((r - p.core_radius) / p.core_width));
        // IFP plateaus across the tumour and falls off at the rim, where the
        // fluid actually flows; a centre-peaked profile would push the
        // strongest Darcy flux through the fluid-starved core.
        const double rp = std::max(r - p.p_l_plateau, 0.0) / p.p_l_radius;
        f.p_l[i] = p.p_l_peak * std::exp(-rp * rp);
        f.p_v[i] = p.p_v;
        f.p_t[i] = p.p_t_peak * st;
    }
    f.validate();
    return f;
}

PhaseFields generate_ellipse_tumour(const StructuredQuadMesh& mesh,
                                    const EllipseTumourParams& p) {
    if (!(p.transition_width > 0.0))
        throw ConfigError("ellipse tumour: transition width must be positive");
    if (!(p.a > 0.0) || !(p.b > 0.0))
        throw ConfigError("ellipse tumour: semi-axes must be positive");
    if (!(p.st_max > 0.0 && p.st_max <= 1.0))
        throw ConfigError("ellipse tumour: st_max must lie in (0,1]");
    if (!(p.fluid_fraction >= 0.0 && p.fluid_fraction <= 1.0))
        throw ConfigError("ellipse tumour: fluid_fraction must lie in [0,1]");

    PhaseFields f;
    const int n = mesh.num_nodes();
    f.eps.assign(n, p.porosity);
    f.s_t.resize(n);
    f.s_h.resize(n);
    f.s_l.resize(n);
    f.eps_v.assign(n, 0.0);
    f.p_l.assign(n, 0.0);
    f.p_v.assign(n, 0.0);
    f.p_t.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const Vec2 x = mesh.node_coord(i);
        const double ex = (x.x - p.centre.x) / p.a;
        const double ey = (x.y - p.centre.y) / p.b;
        // Signed distance to the level set, measured in units of the minor
        // semi-axis: the S_t = st_max/2 contour is exactly the ellipse.
        const double d = (std::sqrt(ex * ex + ey * ey) - 1.0) * p.b;
        const double st = p.st_max * 0.5 * (1.0 - std::tanh(d / p.transition_width));
        const double sl = p.fluid_fraction * (1.0 - st);
        f.s_t[i] = st;
        f.s_l[i] = sl;
        f.s_h[i] = 1.0 - st - sl;
    }
    f.validate();
    return f;
}

std::vector<std::array<Vec2, 4>> darcy_velocity(const StructuredQuadMesh& mesh,
                                                const PhaseFields& fields,
                                                const TransportCoefficients& coeffs) {
    if (fields.size() != mesh.num_nodes())
        throw ConfigError("darcy_velocity: fields sized for a different mesh");
    const double mobility = coeffs.k_over_mu();
    const double sx = 2.0 / mesh.hx(), sy = 2.0 / mesh.hy();
    std::vector<std::array<Vec2, 4>> q(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto nodes = mesh.element_nodes(e);
        for (int g = 0; g < 4; ++g) {
            const auto& qp = gauss4()[g];
            const auto s = shape_eval(qp.xi, qp.eta);
            double gx = 0.0, gy = 0.0;
            for (int a = 0; a < 4; ++a) {
                gx += fields.p_l[nodes[a]] * s.dxi[a] * sx;
                gy += fields.p_l[nodes[a]] * s.deta[a] * sy;
            }
            q[e][g] = {-mobility * gx, -mobility * gy};
        }
    }
    return q;
}

void save_fields(const StructuredQuadMesh& mesh, const PhaseFields& fields,
                 const std::string& path) {
    if (fields.size() != mesh.num_nodes())
        throw ConfigError("save_fields: fields sized for a different mesh");
    std::string out;
    out.reserve(static_cast<std::size_t>(fields.size()) * 200 + 64);
    out += "x y eps S_t S_h S_l eps_v p_l p_v p_t\n";
    for (int i = 0; i < fields.size(); ++i) {
        const Vec2 p = mesh.node_coord(i);
        for (double v : {p.x, p.y, fields.eps[i], fields.s_t[i], fields.s_h[i], fields.s_l[i],
                         fields.eps_v[i], fields.p_l[i], fields.p_v[i], fields.p_t[i]}) {
            out += format_double(v);
            out += ' ';
        }
        out.back() = '\n';
    }
    atomic_write_text(path, out);
}

LoadedFields load_fields(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("field file not readable: " + path);
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    const char* expected[] = {"x",     "y",   "eps", "S_t", "S_h",
                              "S_l",   "eps_v", "p_l", "p_v", "p_t"};
    for (const char* name : expected) {
        std::string col;
        if (!(hs >> col) || col != name)
            throw ConfigError("field file " + path + ": expected column '" + name +
                              "' in header, got '" + col + "'");
    }
    std::string extra;
    if (hs >> extra)
        throw ConfigError("field file " + path + ": unexpected extra column '" + extra + "'");

    LoadedFields out;
    PhaseFields& f = out.fields;
    double v[10];
    int node = 0;
    while (in >> v[0]) {
        for (int c = 1; c < 10; ++c)
            if (!(in >> v[c]))
                throw ConfigError("field file " + path + ": truncated row at node " +
                                  std::to_string(node));
        for (int c = 0; c < 10; ++c)
            if (!std::isfinite(v[c]))
                throw ConfigError("field file " + path + ": non-finite value at node " +
                                  std::to_string(node));
        out.coords.push_back({v[0], v[1]});
        f.eps.push_back(v[2]);
        f.s_t.push_back(v[3]);
        f.s_h.push_back(v[4]);
        f.s_l.push_back(v[5]);
        f.eps_v.push_back(v[6]);
        f.p_l.push_back(v[7]);
        f.p_v.push_back(v[8]);
        f.p_t.push_back(v[9]);
        ++node;
    }
    if (node == 0)
        throw ConfigError("field file " + path + ": no data rows");
    f.validate();
    return out;
}

} // namespace npheat
