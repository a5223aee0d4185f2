#pragma once

// Line-oriented scenario files: "key: value" pairs, matrix blocks, and named
// events. Complex numbers are "re,im" decimal pairs. The serializer emits a
// canonical form that re-parses to the same scenario byte-for-byte.

#include "dynamics.hpp"
#include "homogeneous.hpp"
#include "util.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace qm {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> tokens(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
}

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

[[noreturn]] inline void parse_fail(int line, const std::string& msg) {
    throw UsageError("scenario line " + std::to_string(line) + ": " + msg);
}

inline double parse_double(const std::string& t, int line) {
    try {
        std::size_t used = 0;
        double v = std::stod(t, &used);
        if (used != t.size()) parse_fail(line, "bad number '" + t + "'");
        return v;
    } catch (const std::invalid_argument&) {
        parse_fail(line, "bad number '" + t + "'");
    } catch (const std::out_of_range&) {
        parse_fail(line, "number out of range '" + t + "'");
    }
}

inline long parse_int(const std::string& t, int line) {
    try {
        std::size_t used = 0;
        long v = std::stol(t, &used);
        if (used != t.size()) parse_fail(line, "bad integer '" + t + "'");
        return v;
    } catch (const std::exception&) {
        parse_fail(line, "bad integer '" + t + "'");
    }
}

inline Cx parse_complex(const std::string& t, int line) {
    std::size_t comma = t.find(',');
    if (comma == std::string::npos) return {parse_double(t, line), 0.0};
    return {parse_double(t.substr(0, comma), line), parse_double(t.substr(comma + 1), line)};
}

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string cnum(Cx z) { return num(z.real()) + "," + num(z.imag()); }

} // namespace detail

// --- finite side -----------------------------------------------------------

struct FiniteEventSpec {
    enum class Kind { Histories, Cylinder, All, Empty, Complement, Union, Intersect, Xor, Random };
    Kind kind = Kind::All;
    std::vector<std::vector<int>> histories; // Kind::Histories
    std::vector<int> cylinder;               // 0 = wildcard
    std::string lhs, rhs;                    // operand names
};

struct FiniteScenario {
    int n = 2;
    int num_times = 2;
    std::vector<double> times;

    enum class UKind { Explicit, Random, Identity, Hopping };
    UKind ukind = UKind::Identity;
    double hopping_theta = 0.9;
    std::vector<Matrix> unitaries;
    double perturb = 0.0; // optional non-unitary perturbation magnitude

    enum class IKind { State, Density, RandomState, Basis };
    IKind ikind = IKind::Basis;
    Eigen::VectorXcd state;
    Matrix density;
    int basis_index = 1;
    int density_rank = 0; // >0: random density of this rank

    std::vector<std::pair<std::string, FiniteEventSpec>> events;

    std::optional<int> expect_dim;
    int expect_onto = -1; // -1 unset, 0 expect NotOnto, 1 expect witness
};

// --- continuum side ---------------------------------------------------------

struct ContinuumEventSpec {
    std::vector<double> times;
    std::vector<Region> regions;
};

struct ContinuumScenario {
    PropagatorSpec propagator = PropagatorSpec::free_particle();
    double box_lo = -12.0, box_hi = 12.0;
    int order = 8;
    double max_panel_width = 0.25;
    double rad_per_panel = 5.0;
    std::vector<double> ladder{0.1, 0.05, 0.025, 0.0125, 0.00625};
    double ladder_tol = 1e-3;
    double truncation_time = 1.0;

    enum class IKind { Gaussian, TruncatedGaussian };
    IKind ikind = IKind::Gaussian;
    double x0 = 0.0, p0 = 0.0, sigma = 1.0;

    std::vector<std::pair<std::string, ContinuumEventSpec>> events;

    std::vector<double> esck_times;  // t1 t2 t3
    std::vector<double> esck_points; // endpoints grid for (x3, x1)

    std::optional<std::pair<double, double>> reconstruct_interval;
    double reconstruct_eps = 0.1;
    std::vector<std::pair<Cx, std::pair<double, double>>> step_terms;

    std::string interference_a, interference_b;
    double expect_interference_above = 0.0;
};

struct Scenario {
    std::uint64_t seed = 1;
    std::variant<FiniteScenario, ContinuumScenario> body;
    std::string raw; // bytes as read, for the digest

    bool finite() const { return std::holds_alternative<FiniteScenario>(body); }
    const FiniteScenario& fin() const { return std::get<FiniteScenario>(body); }
    const ContinuumScenario& cont() const { return std::get<ContinuumScenario>(body); }
    std::string digest() const { return hex64(fnv1a(raw)); }
};

// --- parser ------------------------------------------------------------------

inline Scenario parse_scenario_text(const std::string& text) {
    using namespace detail;
    std::vector<std::string> lines;
    {
        std::istringstream is(text);
        std::string l;
        while (std::getline(is, l)) lines.push_back(l);
    }

    Scenario sc;
    sc.raw = text;
    std::optional<FiniteScenario> fin;
    std::optional<ContinuumScenario> cont;
    bool kind_seen = false;

    auto need_cont = [&](int line) -> ContinuumScenario& {
        if (!cont) parse_fail(line, "key requires 'kind: continuum' first");
        return *cont;
    };

    std::size_t i = 0;
    while (i < lines.size()) {
        int line_no = static_cast<int>(i) + 1;
        std::string l = lines[i];
        std::size_t hash = l.find('#');
        if (hash != std::string::npos) l = l.substr(0, hash);
        l = trim(l);
        ++i;
        if (l.empty()) continue;

        std::size_t colon = l.find(':');
        if (colon == std::string::npos) parse_fail(line_no, "expected 'key: value'");
        std::string raw_key = trim(l.substr(0, colon));
        std::string key = lower(raw_key);
        std::string val = trim(l.substr(colon + 1));
        auto toks = tokens(val);

        if (key == "kind") {
            if (kind_seen) parse_fail(line_no, "duplicate kind");
            kind_seen = true;
            if (lower(val) == "finite")
                fin.emplace();
            else if (lower(val) == "continuum")
                cont.emplace();
            else
                parse_fail(line_no, "kind must be finite or continuum");
            continue;
        }
        if (key == "seed") {
            sc.seed = static_cast<std::uint64_t>(parse_int(val, line_no));
            continue;
        }
        if (!kind_seen) parse_fail(line_no, "scenario must declare kind before other keys");

        if (fin) {
            FiniteScenario& f = *fin;
            if (key == "n") {
                f.n = static_cast<int>(parse_int(val, line_no));
            } else if (key == "times") {
                f.times.clear();
                for (const auto& t : toks) f.times.push_back(parse_double(t, line_no));
                f.num_times = static_cast<int>(f.times.size());
            } else if (key == "unitaries") {
                std::string u = lower(toks.empty() ? "" : toks[0]);
                if (u == "explicit")
                    f.ukind = FiniteScenario::UKind::Explicit;
                else if (u == "random")
                    f.ukind = FiniteScenario::UKind::Random;
                else if (u == "identity")
                    f.ukind = FiniteScenario::UKind::Identity;
                else if (u == "hopping") {
                    f.ukind = FiniteScenario::UKind::Hopping;
                    if (toks.size() > 1) f.hopping_theta = parse_double(toks[1], line_no);
                } else
                    parse_fail(line_no, "unitaries must be explicit|random|identity|hopping");
            } else if (key.rfind("unitary ", 0) == 0) {
                long idx = parse_int(trim(key.substr(8)), line_no);
                Matrix m(f.n, f.n);
                for (int r = 0; r < f.n; ++r) {
                    if (i >= lines.size()) parse_fail(line_no, "unitary block truncated");
                    std::string rowline = lines[i];
                    std::size_t h2 = rowline.find('#');
                    if (h2 != std::string::npos) rowline = rowline.substr(0, h2);
                    auto row = tokens(trim(rowline));
                    int row_no = static_cast<int>(i) + 1;
                    ++i;
                    if (static_cast<int>(row.size()) != f.n)
                        parse_fail(row_no, "unitary row needs n entries");
                    for (int c5 = 0; c5 < f.n; ++c5)
                        m(r, c5) = parse_complex(row[static_cast<std::size_t>(c5)], row_no);
                }
                if (idx != static_cast<long>(f.unitaries.size()) + 1)
                    parse_fail(line_no, "unitary blocks must appear in order 1..N-1");
                f.unitaries.push_back(std::move(m));
            } else if (key == "perturb") {
                f.perturb = parse_double(val, line_no);
            } else if (key == "initial") {
                if (toks.empty()) parse_fail(line_no, "initial needs a kind");
                std::string k = lower(toks[0]);
                if (k == "state") {
                    f.ikind = FiniteScenario::IKind::State;
                    f.state.resize(static_cast<Eigen::Index>(toks.size()) - 1);
                    for (std::size_t t = 1; t < toks.size(); ++t)
                        f.state(static_cast<Eigen::Index>(t - 1)) =
                            parse_complex(toks[t], line_no);
                } else if (k == "basis") {
                    f.ikind = FiniteScenario::IKind::Basis;
                    if (toks.size() != 2) parse_fail(line_no, "initial basis needs an index");
                    f.basis_index = static_cast<int>(parse_int(toks[1], line_no));
                } else if (k == "random-state") {
                    f.ikind = FiniteScenario::IKind::RandomState;
                } else if (k == "random-density") {
                    f.ikind = FiniteScenario::IKind::Density;
                    if (toks.size() != 2) parse_fail(line_no, "random-density needs a rank");
                    f.density_rank = static_cast<int>(parse_int(toks[1], line_no));
                } else if (k == "density") {
                    f.ikind = FiniteScenario::IKind::Density;
                    f.density.resize(f.n, f.n);
                    for (int r = 0; r < f.n; ++r) {
                        if (i >= lines.size()) parse_fail(line_no, "density block truncated");
                        auto row = tokens(trim(lines[i]));
                        int row_no = static_cast<int>(i) + 1;
                        ++i;
                        if (static_cast<int>(row.size()) != f.n)
                            parse_fail(row_no, "density row needs n entries");
                        for (int c5 = 0; c5 < f.n; ++c5)
                            f.density(r, c5) = parse_complex(row[static_cast<std::size_t>(c5)], row_no);
                    }
                } else
                    parse_fail(line_no, "initial must be state|basis|random-state|density|random-density");
            } else if (key.rfind("event ", 0) == 0) {
                std::string name = trim(raw_key.substr(6));
                if (name.empty()) parse_fail(line_no, "event needs a name");
                FiniteEventSpec spec;
                if (toks.empty()) parse_fail(line_no, "event needs a definition");
                std::string k = lower(toks[0]);
                if (k == "histories") {
                    spec.kind = FiniteEventSpec::Kind::Histories;
                    std::vector<int> cur;
                    for (std::size_t t = 1; t < toks.size(); ++t) {
                        if (toks[t] == ";") {
                            if (!cur.empty()) spec.histories.push_back(cur);
                            cur.clear();
                        } else {
                            cur.push_back(static_cast<int>(parse_int(toks[t], line_no)));
                        }
                    }
                    if (!cur.empty()) spec.histories.push_back(cur);
                    if (spec.histories.empty()) parse_fail(line_no, "histories list is empty");
                } else if (k == "cylinder") {
                    spec.kind = FiniteEventSpec::Kind::Cylinder;
                    for (std::size_t t = 1; t < toks.size(); ++t)
                        spec.cylinder.push_back(
                            toks[t] == "*" ? 0 : static_cast<int>(parse_int(toks[t], line_no)));
                } else if (k == "all") {
                    spec.kind = FiniteEventSpec::Kind::All;
                } else if (k == "empty") {
                    spec.kind = FiniteEventSpec::Kind::Empty;
                } else if (k == "complement") {
                    spec.kind = FiniteEventSpec::Kind::Complement;
                    if (toks.size() != 2) parse_fail(line_no, "complement needs one operand");
                    spec.lhs = toks[1];
                } else if (k == "union" || k == "intersect" || k == "xor") {
                    spec.kind = k == "union" ? FiniteEventSpec::Kind::Union
                               : k == "intersect" ? FiniteEventSpec::Kind::Intersect
                                                  : FiniteEventSpec::Kind::Xor;
                    if (toks.size() != 3) parse_fail(line_no, "binary op needs two operands");
                    spec.lhs = toks[1];
                    spec.rhs = toks[2];
                } else if (k == "random") {
                    spec.kind = FiniteEventSpec::Kind::Random;
                } else
                    parse_fail(line_no, "unknown event definition '" + toks[0] + "'");
                f.events.emplace_back(name, std::move(spec));
            } else if (key == "expect dim") {
                f.expect_dim = static_cast<int>(parse_int(val, line_no));
            } else if (key == "expect onto") {
                std::string v = lower(val);
                if (v == "yes")
                    f.expect_onto = 1;
                else if (v == "no")
                    f.expect_onto = 0;
                else
                    parse_fail(line_no, "expect onto must be yes or no");
            } else {
                parse_fail(line_no, "unknown finite-scenario key '" + key + "'");
            }
            continue;
        }

        ContinuumScenario& c = need_cont(line_no);
        if (key == "propagator") {
            std::string k = lower(val);
            if (k == "free")
                c.propagator.kind = PropagatorKind::Free;
            else if (k == "vector-potential")
                c.propagator.kind = PropagatorKind::ConstantVectorPotential;
            else if (k == "sho")
                c.propagator.kind = PropagatorKind::SHO;
            else if (k == "half-line")
                c.propagator.kind = PropagatorKind::HalfLineFree;
            else
                parse_fail(line_no, "propagator must be free|vector-potential|sho|half-line");
        } else if (key == "mass") {
            c.propagator.mass = parse_double(val, line_no);
        } else if (key == "hbar") {
            c.propagator.hbar = parse_double(val, line_no);
        } else if (key == "omega") {
            c.propagator.omega = parse_double(val, line_no);
        } else if (key == "charge") {
            c.propagator.charge = parse_double(val, line_no);
        } else if (key == "potential") {
            c.propagator.potential.clear();
            for (const auto& t : toks) c.propagator.potential.push_back(parse_double(t, line_no));
            c.propagator.dim = static_cast<int>(c.propagator.potential.size());
        } else if (key == "box") {
            if (toks.size() != 2) parse_fail(line_no, "box needs lo hi");
            c.box_lo = parse_double(toks[0], line_no);
            c.box_hi = parse_double(toks[1], line_no);
        } else if (key == "order") {
            c.order = static_cast<int>(parse_int(val, line_no));
        } else if (key == "max panel width") {
            c.max_panel_width = parse_double(val, line_no);
        } else if (key == "rad per panel") {
            c.rad_per_panel = parse_double(val, line_no);
        } else if (key == "ladder") {
            c.ladder.clear();
            for (const auto& t : toks) c.ladder.push_back(parse_double(t, line_no));
        } else if (key == "ladder tol") {
            c.ladder_tol = parse_double(val, line_no);
        } else if (key == "truncation time") {
            c.truncation_time = parse_double(val, line_no);
        } else if (key == "initial") {
            if (toks.empty()) parse_fail(line_no, "initial needs a family");
            std::string k = lower(toks[0]);
            if ((k == "gaussian" || k == "gaussian+") && toks.size() == 4) {
                c.ikind = k == "gaussian" ? ContinuumScenario::IKind::Gaussian
                                          : ContinuumScenario::IKind::TruncatedGaussian;
                c.x0 = parse_double(toks[1], line_no);
                c.p0 = parse_double(toks[2], line_no);
                c.sigma = parse_double(toks[3], line_no);
            } else
                parse_fail(line_no, "initial must be 'gaussian x0 p0 sigma' or 'gaussian+ ...'");
        } else if (key.rfind("event ", 0) == 0) {
            std::string name = trim(raw_key.substr(6));
            // "times t1 .. tN regions R1 | R2 | ... | RN"
            std::size_t rpos = val.find("regions");
            if (lower(toks.empty() ? "" : toks[0]) != "times" || rpos == std::string::npos)
                parse_fail(line_no, "event needs 'times ... regions ...'");
            ContinuumEventSpec spec;
            for (const auto& t : tokens(trim(val.substr(5, rpos - 5))))
                spec.times.push_back(parse_double(t, line_no));
            std::string rest = trim(val.substr(rpos + 7));
            std::vector<std::string> parts;
            std::size_t start = 0;
            for (;;) {
                std::size_t bar = rest.find('|', start);
                parts.push_back(trim(rest.substr(start, bar - start)));
                if (bar == std::string::npos) break;
                start = bar + 1;
            }
            for (const auto& p : parts) {
                auto pt = tokens(p);
                if (pt.empty()) parse_fail(line_no, "empty region");
                std::string rk = lower(pt[0]);
                if (rk == "full") {
                    spec.regions.push_back(Region::full(1));
                } else if (rk == "box" || rk == "cobox") {
                    if (pt.size() < 3 || (pt.size() - 1) % 2 != 0)
                        parse_fail(line_no, "box region needs lo/hi pairs");
                    std::vector<Box> boxes;
                    for (std::size_t t = 1; t + 1 < pt.size(); t += 2)
                        boxes.push_back(Box::interval(parse_double(pt[t], line_no),
                                                      parse_double(pt[t + 1], line_no)));
                    spec.regions.push_back(rk == "box" ? Region::bounded_union(std::move(boxes))
                                                       : Region::complement_of(std::move(boxes)));
                } else
                    parse_fail(line_no, "region must be full|box|cobox");
            }
            c.events.emplace_back(name, std::move(spec));
        } else if (key == "esck times") {
            c.esck_times.clear();
            for (const auto& t : toks) c.esck_times.push_back(parse_double(t, line_no));
        } else if (key == "esck points") {
            c.esck_points.clear();
            for (const auto& t : toks) c.esck_points.push_back(parse_double(t, line_no));
        } else if (key == "reconstruct interval") {
            if (toks.size() != 2) parse_fail(line_no, "reconstruct interval needs lo hi");
            c.reconstruct_interval = {parse_double(toks[0], line_no),
                                      parse_double(toks[1], line_no)};
        } else if (key == "reconstruct eps") {
            c.reconstruct_eps = parse_double(val, line_no);
        } else if (key == "step term") {
            if (toks.size() != 3) parse_fail(line_no, "step term needs weight lo hi");
            c.step_terms.push_back({parse_complex(toks[0], line_no),
                                    {parse_double(toks[1], line_no),
                                     parse_double(toks[2], line_no)}});
        } else if (key == "interference") {
            if (toks.size() != 2) parse_fail(line_no, "interference needs two event names");
            c.interference_a = toks[0];
            c.interference_b = toks[1];
        } else if (key == "expect interference above") {
            c.expect_interference_above = parse_double(val, line_no);
        } else {
            parse_fail(line_no, "unknown continuum-scenario key '" + key + "'");
        }
    }

    if (!kind_seen) throw UsageError("scenario missing 'kind:'");
    if (fin) {
        if (fin->times.empty()) {
            fin->times.resize(static_cast<std::size_t>(fin->num_times));
            for (int k = 0; k < fin->num_times; ++k)
                fin->times[static_cast<std::size_t>(k)] = k;
        }
        sc.body = std::move(*fin);
    } else {
        sc.body = std::move(*cont);
    }
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open scenario file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str());
}

// --- canonical serializer ----------------------------------------------------

inline std::string serialize_scenario(const Scenario& sc) {
    using namespace detail;
    std::ostringstream o;
    if (sc.finite()) {
        const FiniteScenario& f = sc.fin();
        o << "kind: finite\n";
        o << "seed: " << sc.seed << "\n";
        o << "n: " << f.n << "\n";
        o << "times:";
        for (double t : f.times) o << " " << num(t);
        o << "\n";
        switch (f.ukind) {
        case FiniteScenario::UKind::Explicit:
            o << "unitaries: explicit\n";
            for (std::size_t k = 0; k < f.unitaries.size(); ++k) {
                o << "unitary " << (k + 1) << ":\n";
                for (int r = 0; r < f.n; ++r) {
                    for (int c5 = 0; c5 < f.n; ++c5)
                        o << (c5 ? " " : "") << cnum(f.unitaries[k](r, c5));
                    o << "\n";
                }
            }
            break;
        case FiniteScenario::UKind::Random:
            o << "unitaries: random\n";
            break;
        case FiniteScenario::UKind::Identity:
            o << "unitaries: identity\n";
            break;
        case FiniteScenario::UKind::Hopping:
            o << "unitaries: hopping " << num(f.hopping_theta) << "\n";
            break;
        }
        if (f.perturb != 0.0) o << "perturb: " << num(f.perturb) << "\n";
        switch (f.ikind) {
        case FiniteScenario::IKind::State:
            o << "initial: state";
            for (Eigen::Index k = 0; k < f.state.size(); ++k) o << " " << cnum(f.state(k));
            o << "\n";
            break;
        case FiniteScenario::IKind::Basis:
            o << "initial: basis " << f.basis_index << "\n";
            break;
        case FiniteScenario::IKind::RandomState:
            o << "initial: random-state\n";
            break;
        case FiniteScenario::IKind::Density:
            if (f.density_rank > 0) {
                o << "initial: random-density " << f.density_rank << "\n";
            } else {
                o << "initial: density\n";
                for (int r = 0; r < f.n; ++r) {
                    for (int c5 = 0; c5 < f.n; ++c5)
                        o << (c5 ? " " : "") << cnum(f.density(r, c5));
                    o << "\n";
                }
            }
            break;
        }
        for (const auto& [name, spec] : f.events) {
            o << "event " << name << ": ";
            switch (spec.kind) {
            case FiniteEventSpec::Kind::Histories: {
                o << "histories";
                for (std::size_t h = 0; h < spec.histories.size(); ++h) {
                    if (h) o << " ;";
                    for (int cgf : spec.histories[h]) o << " " << cgf;
                }
                break;
            }
            case FiniteEventSpec::Kind::Cylinder:
                o << "cylinder";
                for (int cgf : spec.cylinder) {
                    if (cgf == 0)
                        o << " *";
                    else
                        o << " " << cgf;
                }
                break;
            case FiniteEventSpec::Kind::All:
                o << "all";
                break;
            case FiniteEventSpec::Kind::Empty:
                o << "empty";
                break;
            case FiniteEventSpec::Kind::Complement:
                o << "complement " << spec.lhs;
                break;
            case FiniteEventSpec::Kind::Union:
                o << "union " << spec.lhs << " " << spec.rhs;
                break;
            case FiniteEventSpec::Kind::Intersect:
                o << "intersect " << spec.lhs << " " << spec.rhs;
                break;
            case FiniteEventSpec::Kind::Xor:
                o << "xor " << spec.lhs << " " << spec.rhs;
                break;
            case FiniteEventSpec::Kind::Random:
                o << "random";
                break;
            }
            o << "\n";
        }
        if (f.expect_dim) o << "expect dim: " << *f.expect_dim << "\n";
        if (f.expect_onto >= 0) o << "expect onto: " << (f.expect_onto ? "yes" : "no") << "\n";
        return o.str();
    }

    const ContinuumScenario& c = sc.cont();
    o << "kind: continuum\n";
    o << "seed: " << sc.seed << "\n";
    switch (c.propagator.kind) {
    case PropagatorKind::Free:
        o << "propagator: free\n";
        break;
    case PropagatorKind::ConstantVectorPotential:
        o << "propagator: vector-potential\n";
        break;
    case PropagatorKind::SHO:
        o << "propagator: sho\n";
        break;
    case PropagatorKind::HalfLineFree:
        o << "propagator: half-line\n";
        break;
    }
    o << "mass: " << num(c.propagator.mass) << "\n";
    o << "hbar: " << num(c.propagator.hbar) << "\n";
    if (c.propagator.kind == PropagatorKind::SHO)
        o << "omega: " << num(c.propagator.omega) << "\n";
    if (c.propagator.kind == PropagatorKind::ConstantVectorPotential) {
        o << "charge: " << num(c.propagator.charge) << "\n";
        o << "potential:";
        for (double a : c.propagator.potential) o << " " << num(a);
        o << "\n";
    }
    o << "box: " << num(c.box_lo) << " " << num(c.box_hi) << "\n";
    o << "order: " << c.order << "\n";
    o << "max panel width: " << num(c.max_panel_width) << "\n";
    o << "rad per panel: " << num(c.rad_per_panel) << "\n";
    o << "ladder:";
    for (double e : c.ladder) o << " " << num(e);
    o << "\n";
    o << "ladder tol: " << num(c.ladder_tol) << "\n";
    o << "truncation time: " << num(c.truncation_time) << "\n";
    o << "initial: " << (c.ikind == ContinuumScenario::IKind::Gaussian ? "gaussian" : "gaussian+")
      << " " << num(c.x0) << " " << num(c.p0) << " " << num(c.sigma) << "\n";
    for (const auto& [name, spec] : c.events) {
        o << "event " << name << ": times";
        for (double t : spec.times) o << " " << num(t);
        o << " regions";
        for (std::size_t r = 0; r < spec.regions.size(); ++r) {
            o << (r ? " | " : " ");
            const Region& reg = spec.regions[r];
            if (reg.is_full()) {
                o << "full";
            } else {
                o << (reg.complemented() ? "cobox" : "box");
                for (const auto& b : reg.boxes()) o << " " << num(b.lo[0]) << " " << num(b.hi[0]);
            }
        }
        o << "\n";
    }
    if (!c.esck_times.empty()) {
        o << "esck times:";
        for (double t : c.esck_times) o << " " << num(t);
        o << "\n";
    }
    if (!c.esck_points.empty()) {
        o << "esck points:";
        for (double x : c.esck_points) o << " " << num(x);
        o << "\n";
    }
    if (c.reconstruct_interval)
        o << "reconstruct interval: " << num(c.reconstruct_interval->first) << " "
          << num(c.reconstruct_interval->second) << "\n";
    if (c.reconstruct_interval || !c.step_terms.empty())
        o << "reconstruct eps: " << num(c.reconstruct_eps) << "\n";
    for (const auto& [w, iv] : c.step_terms)
        o << "step term: " << cnum(w) << " " << num(iv.first) << " " << num(iv.second) << "\n";
    if (!c.interference_a.empty())
        o << "interference: " << c.interference_a << " " << c.interference_b << "\n";
    if (c.expect_interference_above != 0.0)
        o << "expect interference above: " << num(c.expect_interference_above) << "\n";
    return o.str();
}

} // namespace qm
