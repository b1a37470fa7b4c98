#include "sts/report_json.hpp"

#include <filesystem>
#include <fstream>

namespace sts {

using nlohmann::json;

namespace {

json complex_list(const Eigen::VectorXcd& values) {
    json out = json::array();
    for (long i = 0; i < values.size(); ++i)
        out.push_back({{"re", values(i).real()}, {"im", values(i).imag()}});
    return out;
}

}  // namespace

json spectrum_report_json(const SpectrumReport& report) {
    json degrees = json::array();
    for (const auto& deg : report.degrees) degrees.push_back(complex_list(deg.values));

    json pairing = json::array();
    for (const auto& p : report.pairings)
        pairing.push_back({{"degree", p.degree},
                           {"index", p.lower_index},
                           {"partner", p.upper_index},
                           {"eigenvalue", {{"re", p.eigenvalue.real()},
                                           {"im", p.eigenvalue.imag()}}},
                           {"residual", p.residual}});

    json witten = json::array();
    for (const auto& w : report.witten_samples)
        witten.push_back({{"t", w.t}, {"value", w.value}});

    return json{{"degrees", degrees},
                {"singlets", report.singlet_counts},
                {"pairing", pairing},
                {"delta", report.delta},
                {"type", std::string(1, report.type_label)},
                {"witten", witten},
                {"tolerance", report.tolerance}};
}

json morse_complex_json(const MorseComplexData& data, const PoincareHopfResult& ph) {
    json points = json::array();
    for (int k = 0; k <= data.dimension; ++k)
        for (const auto& cp : data.by_index[k]) {
            json pos = json::array();
            for (int a = 0; a < data.dimension; ++a) pos.push_back(cp.position(a));
            points.push_back({{"position", pos},
                              {"morse_index", cp.morse_index},
                              {"vf_index", cp.vf_index}});
        }

    json boundary = json::object();
    for (size_t k = 0; k < data.boundary.size(); ++k) {
        json rows = json::array();
        for (long r = 0; r < data.boundary[k].rows(); ++r) {
            json row = json::array();
            for (long c = 0; c < data.boundary[k].cols(); ++c)
                row.push_back(data.boundary[k](r, c));
            rows.push_back(row);
        }
        boundary["d" + std::to_string(k + 1)] = rows;
    }

    return json{{"points", points},
                {"boundary", boundary},
                {"ranks", data.homology_ranks},
                {"boundary_squares_to_zero", true},
                {"poincare_hopf", {{"sum", ph.sum}, {"reliable", ph.reliable}}}};
}

json density_json(const EmpiricalDensity& density) {
    json mass = json::array();
    for (long i = 0; i < density.mass.size(); ++i) mass.push_back(density.mass(i));
    return json{{"dimension", density.dimension},
                {"bins", density.bins},
                {"samples", density.samples},
                {"mass", mass}};
}

json system_config_json(const SystemSpec& system) {
    return json{{"name", system.name},
                {"D", system.dimension()},
                {"M", system.lattice.cutoff()},
                {"theta", system.noise.theta},
                {"noise_fields", system.noise.count()}};
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write \"" + tmp.string() + "\"");
        out << content;
    }
    std::filesystem::rename(tmp, target);
}

}  // namespace sts
