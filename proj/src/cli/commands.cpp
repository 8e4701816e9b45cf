#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <variant>

#include "cli/registry.hpp"
#include "strictlyap/errors.hpp"

namespace strictlyap::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

std::string arc_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "arc_%03zu", i);
    return buf;
}

std::vector<double> as_vector(const State& x) { return {x.data(), x.data() + x.size()}; }

// --- simulation ------------------------------------------------------------

struct Simulation {
    std::vector<HybridArc> arcs;
    json record;
};

Simulation simulate(const Instance& in, const fs::path& out_dir) {
    Simulation sim;
    const Policy policy = in.simulation.policy.to_policy();
    const auto x0s = in.initial_states();
    if (x0s.empty()) throw ConfigError("simulation: no initial states");
    json arcs = json::array();
    for (std::size_t i = 0; i < x0s.size(); ++i) {
        HybridArc arc = simulate_hybrid(in.system, x0s[i], in.simulation.t0, policy, in.simulation.budget);
        const std::string name = arc_name(i);
        json side = arc_sidecar(arc, policy);
        side["initial_state"] = as_vector(x0s[i]);
        side["t0"] = in.simulation.t0;
        side["csv"] = name + ".csv";
        write_file(out_dir / "arcs" / (name + ".csv"), arc_to_csv(arc));
        write_json(out_dir / "arcs" / (name + ".json"), side);
        arcs.push_back({{"file", "arcs/" + name + ".csv"},
                        {"status", to_string(arc.status)},
                        {"segments", arc.segments.size()},
                        {"final_time", arc.final_time()},
                        {"final_state", as_vector(arc.final_state())}});
        sim.arcs.push_back(std::move(arc));
    }
    sim.record = {{"policy", in.simulation.to_json()}, {"arcs", arcs}};
    return sim;
}

// --- construction ------------------------------------------------------------

struct Construction {
    std::variant<std::monostate, DiscreteStrictification, ContinuousStrictification, HybridStrictification,
                 MatrosovResult>
        result;
    json record;
    std::map<std::string, GridFunction> gains;
};

std::vector<double> axis_points(const GridSpec& g, int count) {
    std::vector<double> s(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) s[i] = g.box_min[0] + (g.box_max[0] - g.box_min[0]) * i / (count - 1);
    return s;
}

// Field values along the first coordinate axis, for the listed (t, k).
json field_table(const ScalarField& V, const GridSpec& g, const std::vector<std::pair<double, long>>& tk) {
    const int n = g.dim();
    json rows = json::array();
    for (const auto& [t, k] : tk) {
        json vals = json::array();
        for (double s : axis_points(g, 21)) {
            State x = State::Zero(n);
            x[0] = s;
            vals.push_back(V(x, t, k));
        }
        rows.push_back({{"t", t}, {"k", k}, {"values", vals}});
    }
    return {{"axis", axis_points(g, 21)}, {"rows", rows}};
}

GridFunction time_table(const WindowIntegralCache& cache, double t_max, double step, bool derivative) {
    std::vector<double> nodes, vals;
    for (double t = 0.0; t <= t_max + 1e-12; t += step) {
        nodes.push_back(t);
        vals.push_back(derivative ? cache.dR(t) : cache.R(t));
    }
    return GridFunction(nodes, vals, Extension::Constant);
}

Construction construct(const Instance& in) {
    Construction c;
    const auto nodes = default_grid();
    switch (in.kind) {
        case InstanceKind::DiscretePE: {
            auto d = strictify_discrete_pe(in.pe);
            c.record = d.to_json();
            std::vector<std::pair<double, long>> tk;
            for (long k = 0; k <= d.l + 1; ++k) tk.emplace_back(0.0, k);
            c.record["U_table"] = field_table(d.U, in.grid, tk);
            c.gains["kappa"] = tabulate(d.kappa, nodes);
            c.gains["g"] = tabulate(d.g, nodes);
            c.result = std::move(d);
            break;
        }
        case InstanceKind::ContinuousPE: {
            auto d = strictify_continuous_pe(in.pe);
            c.record = d.to_json();
            const double tmax = std::max(in.grid.t_max, 2.0 * d.tau);
            c.record["V_table"] = field_table(d.V_cts, in.grid, {{0.0, 0}, {d.tau, 0}});
            c.gains["R"] = time_table(*d.cache, tmax, d.tau / 64.0, false);
            c.gains["dR"] = time_table(*d.cache, tmax, d.tau / 64.0, true);
            c.result = std::move(d);
            break;
        }
        case InstanceKind::HybridPE: {
            auto d = strictify_hybrid_pe(in.hybrid);
            c.record = d.to_json();
            c.record["V_table"] = field_table(d.V_sharp, in.grid, {{0.0, 0}, {0.0, 1}});
            const Gain gamma = in.hybrid.gamma ? in.hybrid.gamma : Gain([](double s) { return s; });
            c.gains["gamma"] = tabulate(gamma, nodes);
            if (d.cache) {
                const double tau = in.hybrid.q->tau();
                c.gains["R"] = time_table(*d.cache, std::max(in.grid.t_max, 2.0 * tau), tau / 64.0, false);
            }
            c.result = std::move(d);
            break;
        }
        case InstanceKind::Matrosov: {
            PipelineOptions opts;
            if (in.mode == MatrosovMode::Discrete) {
                opts.tolerance_dis = in.tolerance;
            } else {
                opts.tolerance_cts = in.tolerance;
            }
            auto r = run_pipeline(in.matrosov, in.mode, enumerate_samples(in.grid), opts);
            c.record = r.provenance();
            c.record["V8_table"] = field_table(r.V8, in.grid, {{0.0, 0}, {0.0, 1}});
            c.gains = r.tabulated_gains();
            c.result = std::move(r);
            break;
        }
        case InstanceKind::SystemOnly:
            throw ConfigError("a composite system config can only be simulated");
    }
    return c;
}

void write_gains(const Construction& c, const fs::path& out_dir) {
    for (const auto& [name, f] : c.gains) write_file(out_dir / "gains" / (name + ".csv"), to_csv(f));
}

json gain_files(const Construction& c) {
    json files = json::array();
    for (const auto& [name, f] : c.gains) files.push_back("gains/" + name + ".csv");
    return files;
}

// --- certification ------------------------------------------------------------

ScalarField scaled(const ScalarField& f, double s) {
    ScalarField out = f;
    out.eval = [f, s](const State& x, double t, long k) { return s * f(x, t, k); };
    out.grad_x = nullptr;
    out.dt = nullptr;
    return out;
}

// Smallest least-squares decay rate over flow segments with at least three positive samples.
InequalityRecord fitted_rate_record(const ScalarField& V, const HybridArc& arc, double threshold, double tol,
                                    const std::string& suffix) {
    InequalityRecord r;
    r.name = "arc_fitted_rate" + suffix;
    r.step = "fitted flow decay rate >= threshold";
    r.tolerance = tol;
    for (const auto& seg : arc.segments) {
        std::vector<double> ts, vs;
        for (std::size_t j = 0; j < seg.t.size(); ++j) {
            const double v = V(seg.x[j], seg.t[j], seg.k);
            if (v > 1e-12) {
                ts.push_back(seg.t[j]);
                vs.push_back(v);
            }
        }
        if (ts.size() < 3 || ts.back() - ts.front() <= 0.0) continue;
        const double m = threshold - fit_exponential_rate(ts, vs);
        ++r.samples_checked;
        if (!r.witness || m > r.worst_margin) {
            r.worst_margin = m;
            r.witness = Sample{seg.x.front(), seg.t.front(), seg.k};
        }
    }
    r.pass = !(r.worst_margin > tol);
    return r;
}

CertificationReport certify(const Instance& in, const Construction& c, const std::vector<HybridArc>& arcs,
                            json& extra) {
    CertificationReport rep;
    const double scale = in.decay_bound_scale;
    switch (in.kind) {
        case InstanceKind::DiscretePE: {
            const auto& d = std::get<DiscreteStrictification>(c.result);
            const auto samples = enumerate_samples(in.grid);
            rep.add(check_pe_decay_hypothesis(in.pe.V, *in.F, *in.pe.p, in.pe.theta.f, samples, in.tolerance));
            rep.add(check_discrete_decay(d.U, *in.F, scaled(d.decay_bound, scale), samples, in.tolerance));
            if (d.lower_envelope && d.upper_envelope) {
                rep.add(check_uppd(d.U, d.lower_envelope, d.upper_envelope, samples));
            }
            break;
        }
        case InstanceKind::ContinuousPE: {
            const auto& d = std::get<ContinuousStrictification>(c.result);
            const auto samples = enumerate_samples(in.grid);
            rep.add(check_flow_pe_hypothesis(in.pe.V, *in.G, *in.pe.q, samples, in.tolerance));
            rep.add(check_continuous_decay(d.V_cts, *in.G, scaled(d.provable_bound, scale), samples, in.tolerance));
            rep.add(check_field_derivatives(d.V_cts, *in.G, samples));
            break;
        }
        case InstanceKind::HybridPE: {
            const auto& d = std::get<HybridStrictification>(c.result);
            const double jump_rate = scale * d.jump_rate;
            const double flow_rate = scale * (std::min(d.flow_rate, d.jump_rate) - 0.05);
            extra["jump_rate_checked"] = jump_rate;
            extra["flow_rate_threshold"] = flow_rate;
            for (std::size_t i = 0; i < arcs.size(); ++i) {
                const std::string suffix = "_" + arc_name(i);
                auto arc_rep = check_arc_decay(d.V_sharp, arcs[i], jump_rate, flow_rate, in.tolerance);
                for (auto& r : arc_rep.records) {
                    r.name += suffix;
                    rep.add(r);
                }
                rep.add(fitted_rate_record(d.V_sharp, arcs[i], flow_rate, in.tolerance, suffix));
            }
            break;
        }
        case InstanceKind::Matrosov:
            rep = std::get<MatrosovResult>(c.result).report;
            break;
        case InstanceKind::SystemOnly:
            throw ConfigError("a composite system config can only be simulated");
    }
    return rep;
}

json header(const std::string& command, const ExperimentConfig& cfg, const Instance& in) {
    return {{"schema_version", kSchemaVersion},
            {"command", command},
            {"example", in.id},
            {"kind", to_string(in.kind)},
            {"config", cfg.to_json()}};
}

const InequalityRecord* worst_failure(const CertificationReport& rep) {
    for (const auto& r : rep.records) {
        if (!r.pass) return &r;
    }
    return nullptr;
}

void print_verdict(std::ostream& out, const std::string& what, const CertificationReport& rep,
                   const fs::path& report) {
    out << what << ": " << (rep.pass() ? "pass" : "FAIL") << " (" << rep.records.size() << " checks) -> "
        << report.string() << "\n";
    if (const auto* f = worst_failure(rep)) {
        out << "  first failing check: " << f->name << " margin=" << f->worst_margin;
        if (f->witness) out << " witness=" << sample_to_json(*f->witness).dump();
        out << "\n";
    }
}

}  // namespace

ExperimentConfig apply_overrides(ExperimentConfig cfg, const CommandOptions& opts) {
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.tolerance) {
        if (!(*opts.tolerance >= 0.0) || !std::isfinite(*opts.tolerance)) throw ConfigError("--tol must be >= 0");
        cfg.tolerance = *opts.tolerance;
    }
    return cfg;
}

int cmd_strictify(const ExperimentConfig& cfg0, const CommandOptions& opts, std::ostream& out) {
    const ExperimentConfig cfg = apply_overrides(cfg0, opts);
    const Instance in = resolve(cfg);
    const fs::path dir(opts.out_dir);
    const Construction c = construct(in);
    write_gains(c, dir);
    json j = header("strictify", cfg, in);
    j["construction"] = c.record;
    j["gains"] = gain_files(c);
    j["verdict"] = "constructed";
    write_json(dir / "report.json", j);
    out << "strictify " << in.id << ": constructed, " << c.gains.size() << " gains -> " << (dir / "report.json").string()
        << "\n";
    return kExitPass;
}

int cmd_certify(const ExperimentConfig& cfg0, const CommandOptions& opts, std::ostream& out) {
    const ExperimentConfig cfg = apply_overrides(cfg0, opts);
    const Instance in = resolve(cfg);
    const fs::path dir(opts.out_dir);
    const Construction c = construct(in);
    std::vector<HybridArc> arcs;
    json j = header("certify", cfg, in);
    if (in.kind == InstanceKind::HybridPE) {
        Simulation sim = simulate(in, dir);
        arcs = std::move(sim.arcs);
        j["simulation"] = sim.record;
    }
    json extra = json::object();
    const CertificationReport rep = certify(in, c, arcs, extra);
    j["construction"] = c.record;
    if (!extra.empty()) j["thresholds"] = extra;
    j["checks"] = rep.to_json();
    j["verdict"] = rep.pass() ? "pass" : "fail";
    write_json(dir / "report.json", j);
    print_verdict(out, "certify " + in.id, rep, dir / "report.json");
    return rep.pass() ? kExitPass : kExitCertification;
}

int cmd_simulate(const ExperimentConfig& cfg0, const CommandOptions& opts, std::ostream& out) {
    const ExperimentConfig cfg = apply_overrides(cfg0, opts);
    const Instance in = resolve(cfg);
    const fs::path dir(opts.out_dir);
    const Simulation sim = simulate(in, dir);
    json j = header("simulate", cfg, in);
    j["simulation"] = sim.record;
    j["verdict"] = "simulated";
    write_json(dir / "report.json", j);
    out << "simulate " << in.id << ": " << sim.arcs.size() << " arcs -> " << (dir / "arcs").string() << "\n";
    return kExitPass;
}

int cmd_examples_list(std::ostream& out) {
    for (const auto& e : registry()) out << e.id << "\t" << to_string(e.kind) << "\t" << e.summary << "\n";
    return kExitPass;
}

int cmd_examples_run(const std::string& id, const CommandOptions& opts, std::ostream& out) {
    const ExperimentConfig cfg = apply_overrides(default_config(id), opts);
    const Instance in = resolve(cfg);
    const fs::path dir(opts.out_dir);

    Simulation sim = simulate(in, dir);
    const Construction c = construct(in);
    write_gains(c, dir);
    json extra = json::object();
    const CertificationReport rep = certify(in, c, sim.arcs, extra);

    json j = header("examples run", cfg, in);
    j["simulation"] = sim.record;
    j["construction"] = c.record;
    j["gains"] = gain_files(c);
    if (!extra.empty()) j["thresholds"] = extra;
    j["checks"] = rep.to_json();
    j["verdict"] = rep.pass() ? "pass" : "fail";
    write_json(dir / "report.json", j);
    print_verdict(out, "examples run " + in.id, rep, dir / "report.json");
    return rep.pass() ? kExitPass : kExitCertification;
}

int run_guarded(const std::function<int()>& fn, std::ostream& err) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ZenoError& e) {
        err << "simulation guard: " << e.what() << "\n";
        return kExitZeno;
    } catch (const ConstructionError& e) {
        err << "construction failed: " << e.what() << "\n";
        return kExitConstruction;
    } catch (const PEError& e) {
        err << "construction failed: " << e.what() << "\n";
        return kExitConstruction;
    } catch (const Error& e) {
        err << "construction failed: " << e.what() << "\n";
        return kExitConstruction;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitConstruction;
    }
}

}  // namespace strictlyap::cli
