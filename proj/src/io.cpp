#include "sindy/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sindy/errors.hpp"

namespace sindy {

namespace {

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

std::string where(const std::string& source, std::size_t line, std::size_t col) {
    return source + ": row " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& names) {
    const auto n = traj.states.cols();
    if (!names.empty() && static_cast<Eigen::Index>(names.size()) != n)
        throw std::invalid_argument("expected " + std::to_string(n) + " column names");
    os << "t";
    for (Eigen::Index i = 0; i < n; ++i)
        os << ',' << (names.empty() ? "x" + std::to_string(i) : names[static_cast<std::size_t>(i)]);
    os << '\n';
    for (Eigen::Index r = 0; r < traj.states.rows(); ++r) {
        os << fmt17(traj.times(r));
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << fmt17(traj.states(r, i));
        os << '\n';
    }
}

void save_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                         const std::vector<std::string>& names) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    write_trajectory_csv(os, traj, names);
}

TrajectoryFile read_trajectory_csv(std::istream& is, const std::string& source) {
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> header;
    while (std::getline(is, line)) {
        ++lineno;
        if (!trim(line).empty()) {
            header = split(trim(line), ',');
            break;
        }
    }
    if (header.size() < 2) throw ParseError(source + ": expected a header with a time column and at least one state");
    for (auto& h : header) h = trim(h);

    const std::size_t width = header.size();
    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto cells = split(t, ',');
        if (cells.size() != width)
            throw ParseError(source + ": row " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                             " fields, header has " + std::to_string(width));
        for (std::size_t c = 0; c < width; ++c) {
            const std::string cell = trim(cells[c]);
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size())
                throw ParseError(where(source, lineno, c + 1) + ": '" + cell + "' is not a number");
            if (!std::isfinite(v)) throw ParseError(where(source, lineno, c + 1) + ": non-finite value");
            values.push_back(v);
        }
        ++rows;
    }

    TrajectoryFile out;
    out.names.assign(header.begin() + 1, header.end());
    const auto b = static_cast<Eigen::Index>(rows), n = static_cast<Eigen::Index>(width - 1);
    out.traj.times.resize(b);
    out.traj.states.resize(b, n);
    for (Eigen::Index r = 0; r < b; ++r) {
        out.traj.times(r) = values[static_cast<std::size_t>(r) * width];
        for (Eigen::Index i = 0; i < n; ++i)
            out.traj.states(r, i) = values[static_cast<std::size_t>(r) * width + 1 + static_cast<std::size_t>(i)];
    }
    if (b >= 2) {
        const double dt = (out.traj.times(b - 1) - out.traj.times(0)) / static_cast<double>(b - 1);
        for (Eigen::Index r = 1; r < b; ++r) {
            const double step = out.traj.times(r) - out.traj.times(r - 1);
            if (!(step > 0.0))
                throw ParseError(source + ": data row " + std::to_string(r + 1) + ": time is not increasing");
            if (std::abs(step - dt) > kTimeJitter * dt)
                throw ParseError(source + ": data row " + std::to_string(r + 1) +
                                 ": samples are not equidistant (step " + fmt17(step) + ", expected " + fmt17(dt) + ")");
        }
    }
    return out;
}

TrajectoryFile load_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open " + path.string());
    return read_trajectory_csv(is, path.string());
}

Json model_to_json(const CoefficientModel& model, const std::vector<std::string>& equation_names,
                   const std::optional<ScalingRecord>& scaling) {
    const auto q = model.xi.rows(), n = model.xi.cols();
    Json j;
    Json labels = Json::array();
    if (model.terms) {
        for (const auto& t : *model.terms) labels.push_back(t.label);
    }
    j["terms"] = labels;
    if (model.terms) {
        Json exps = Json::array();
        for (const auto& t : *model.terms) exps.push_back(t.exponents);
        j["exponents"] = exps;
    }
    Json eqs = Json::array();
    for (Eigen::Index i = 0; i < n; ++i) {
        Json e;
        e["name"] = equation_names.size() == static_cast<std::size_t>(n) ? equation_names[static_cast<std::size_t>(i)]
                                                                         : "x" + std::to_string(i);
        std::vector<double> coef(static_cast<std::size_t>(q));
        std::vector<bool> sup(static_cast<std::size_t>(q));
        for (Eigen::Index r = 0; r < q; ++r) {
            coef[static_cast<std::size_t>(r)] = model.xi(r, i);
            sup[static_cast<std::size_t>(r)] = model.support(r, i);
        }
        e["coefficients"] = coef;
        e["support"] = sup;
        if (model.cp) {
            std::vector<double> cp(static_cast<std::size_t>(q));
            for (Eigen::Index r = 0; r < q; ++r) cp[static_cast<std::size_t>(r)] = (*model.cp)(r, i);
            e["cp"] = cp;
        }
        eqs.push_back(e);
    }
    j["equations"] = eqs;
    Json meta;
    meta["regressor"] = model.meta.regressor;
    meta["hyperparameters"] = Json(model.meta.hyperparameters);
    meta["seed"] = model.meta.seed ? Json(*model.meta.seed) : Json(nullptr);
    meta["notes"] = model.meta.notes;
    j["fit_meta"] = meta;
    if (scaling) {
        Json s;
        s["applied"] = scaling->applied;
        s["scales"] = std::vector<double>(scaling->scales.data(), scaling->scales.data() + scaling->scales.size());
        j["scaling"] = s;
    }
    return j;
}

CoefficientModel model_from_json(const Json& j) {
    try {
        const auto& eqs = j.at("equations");
        const auto n = static_cast<Eigen::Index>(eqs.size());
        if (n == 0) throw ParseError("model has no equations");
        const auto q = static_cast<Eigen::Index>(eqs.at(0).at("coefficients").size());
        CoefficientModel m;
        m.xi = Matrix::Zero(q, n);
        m.support = Mask::Constant(q, n, false);
        bool has_cp = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& e = eqs.at(static_cast<std::size_t>(i));
            const auto coef = e.at("coefficients").get<std::vector<double>>();
            const auto sup = e.at("support").get<std::vector<bool>>();
            if (static_cast<Eigen::Index>(coef.size()) != q || static_cast<Eigen::Index>(sup.size()) != q)
                throw ParseError("equation " + std::to_string(i) + " has inconsistent length");
            for (Eigen::Index r = 0; r < q; ++r) {
                m.xi(r, i) = coef[static_cast<std::size_t>(r)];
                m.support(r, i) = sup[static_cast<std::size_t>(r)];
            }
            if (e.contains("cp")) {
                if (!has_cp) m.cp = Matrix::Zero(q, n);
                has_cp = true;
                const auto cp = e.at("cp").get<std::vector<double>>();
                for (Eigen::Index r = 0; r < q && r < static_cast<Eigen::Index>(cp.size()); ++r)
                    (*m.cp)(r, i) = cp[static_cast<std::size_t>(r)];
            }
        }
        if (j.contains("terms") && !j.at("terms").empty()) {
            const auto labels = j.at("terms").get<std::vector<std::string>>();
            if (static_cast<Eigen::Index>(labels.size()) != q) throw ParseError("term list does not match coefficients");
            std::vector<TermDescriptor> terms(labels.size());
            for (std::size_t r = 0; r < labels.size(); ++r) {
                terms[r].label = labels[r];
                if (j.contains("exponents")) terms[r].exponents = j.at("exponents").at(r).get<std::vector<int>>();
            }
            m.terms = std::make_shared<const std::vector<TermDescriptor>>(std::move(terms));
        }
        if (j.contains("fit_meta")) {
            const auto& meta = j.at("fit_meta");
            m.meta.regressor = meta.value("regressor", "");
            if (meta.contains("hyperparameters"))
                m.meta.hyperparameters = meta.at("hyperparameters").get<std::map<std::string, double>>();
            if (meta.contains("seed") && !meta.at("seed").is_null()) m.meta.seed = meta.at("seed").get<std::uint64_t>();
            if (meta.contains("notes")) m.meta.notes = meta.at("notes").get<std::vector<std::string>>();
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed model JSON: ") + e.what());
    }
}

std::string rename_label(const std::string& label, const std::vector<std::string>& names) {
    if (names.empty() || label == "1") return label;
    std::string out;
    for (std::size_t i = 0; i < label.size();) {
        if (label[i] == 'x' && i + 1 < label.size() && std::isdigit(static_cast<unsigned char>(label[i + 1]))) {
            std::size_t j = i + 1;
            while (j < label.size() && std::isdigit(static_cast<unsigned char>(label[j]))) ++j;
            const auto idx = static_cast<std::size_t>(std::stoul(label.substr(i + 1, j - i - 1)));
            out += idx < names.size() ? names[idx] : label.substr(i, j - i);
            i = j;
        } else {
            out += label[i++];
        }
    }
    return out;
}

std::string format_equations(const CoefficientModel& model, const std::vector<std::string>& names, int precision) {
    std::ostringstream os;
    const auto q = model.xi.rows(), n = model.xi.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::string lhs =
            names.size() == static_cast<std::size_t>(n) ? names[static_cast<std::size_t>(i)] : "x" + std::to_string(i);
        os << lhs << "' =";
        bool any = false;
        for (Eigen::Index r = 0; r < q; ++r) {
            if (!model.support(r, i)) continue;
            any = true;
            char buf[64];
            std::snprintf(buf, sizeof buf, " %+.*f", precision, model.xi(r, i));
            os << buf;
            const std::string label = model.terms ? (*model.terms)[static_cast<std::size_t>(r)].label
                                                  : "theta" + std::to_string(r);
            if (label != "1") os << ' ' << rename_label(label, names);
        }
        if (!any) os << " 0";
        os << '\n';
    }
    return os.str();
}

void collect_unknown_keys(const Json& obj, const std::vector<std::string>& allowed, const std::string& prefix,
                          std::vector<std::string>& errors) {
    if (!obj.is_object()) {
        errors.push_back((prefix.empty() ? std::string("<root>") : prefix) + ": expected an object");
        return;
    }
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            errors.push_back(prefix.empty() ? key : prefix + "." + key);
    }
}

}  // namespace sindy
