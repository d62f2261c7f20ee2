#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evospec/evospec.hpp"
#include "evospec/io.hpp"
#include "evospec/montecarlo.hpp"

using namespace evospec;
using nlohmann::json;

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out;
    int threads = 0;
    bool debug_dumps = false;
};

SpectralConfig load_config(int T, const Common& o) {
    SpectralConfig c = default_config(T);
    if (!o.config_path.empty()) c = read_config_file(o.config_path, c);
    if (!o.overrides.empty()) {
        std::string text;
        for (const auto& s : o.overrides) text += s + "\n";
        c = apply_key_values(c, parse_key_values(text));
    }
    return c;
}

std::vector<double> parse_omegas(const std::string& list) {
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(detail::parse_double("omegas", item));
    if (out.empty()) throw ConfigError("empty frequency list");
    return out;
}

// Writes to --out when given, stdout otherwise.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    f << text;
}

std::string dump_path(const Common& o, const std::string& suffix) {
    return (o.out.empty() ? std::string("evospec") : o.out) + suffix;
}

// Autocovariance profile behind each sigma_L, for every block and requested frequency.
void dump_lrv_profile(const TimeSeries& x, const SpectralConfig& c, const std::vector<double>& omegas,
                      const std::string& path) {
    SpectralEngine eng(x.demeaned().values(), c, omegas);
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    f << std::setprecision(12) << "r,omega,lag,gamma,weight\n";
    for (int r = 1; r <= c.M_T - 1; ++r) {
        const BlockIndexSet set = block_set(r, c);
        for (std::size_t k = 0; k < omegas.size(); ++k) {
            std::vector<double> v;
            for (int j : set.indices) v.push_back(eng.left(j)[k]);
            double mean = 0.0;
            for (double e : v) mean += e;
            mean /= static_cast<double>(v.size());
            for (std::size_t lag = 0; lag < v.size(); ++lag) {
                double g = 0.0;
                for (std::size_t t = lag; t < v.size(); ++t) g += (v[t] - mean) * (v[t - lag] - mean);
                g /= static_cast<double>(v.size());
                f << r << ',' << omegas[k] << ',' << lag << ',' << g << ','
                  << lrv_weight(c.lrv_kernel, c.b_1T * static_cast<double>(lag)) << '\n';
            }
        }
    }
}

std::string report_table(const std::vector<TestReport>& reps) {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-8s %10s %12s %12s %10s %10s %8s %6s\n", "stat", "omega", "raw_max",
                  "normalized", "crit", "p_value", "argmax_r", "reject");
    os << line;
    for (const TestReport& r : reps) {
        std::snprintf(line, sizeof line, "%-8s %10.6f %12.6g %12.6f %10.6f %10.6f %8d %6s\n",
                      to_string(r.statistic).c_str(), r.statistic == Statistic::Smax || r.statistic == Statistic::Rmax ? r.omega : r.argmax_omega,
                      r.raw_max, r.normalized, r.critical_value, r.p_value, r.argmax_r, r.reject ? "yes" : "no");
        os << line;
    }
    return os.str();
}

struct TestOptions {
    std::string input;
    std::string stat = "all";
    std::optional<double> omega;
    std::string omegas;
    double alpha = 0.05;
    bool fail_on_reject = false;
    bool table = false;
};

int run_test(const TestOptions& t, const Common& o) {
    const TimeSeries x(read_series_csv(t.input));
    const SpectralConfig c = load_config(x.size(), o);
    const FrequencyGrid g = build_frequency_grid(c);
    std::vector<double> omegas{0.0, pi / 4, pi / 2, 3 * pi / 4};
    if (t.omega) omegas = {*t.omega};
    else if (!t.omegas.empty()) omegas = parse_omegas(t.omegas);

    std::vector<TestReport> reps;
    if (t.stat == "smax" || t.stat == "all")
        for (double w : omegas) reps.push_back(s_max(x, w, c, t.alpha));
    if (t.stat == "rmax" || t.stat == "all")
        for (double w : omegas) reps.push_back(r_max(x, w, c, t.alpha));
    if (t.stat == "sdmax" || t.stat == "all") reps.push_back(s_dmax(x, c, g, t.alpha));
    if (t.stat == "rdmax" || t.stat == "all") reps.push_back(r_dmax(x, c, g, t.alpha));

    if (t.table) {
        emit(o.out, report_table(reps));
    } else {
        json j = json::array();
        for (const auto& r : reps) j.push_back(to_json(r));
        emit(o.out, (reps.size() == 1 ? j[0] : j).dump(2) + "\n");
    }
    if (o.debug_dumps) dump_lrv_profile(x, c, omegas, dump_path(o, ".lrv.csv"));

    bool any = false;
    for (const auto& r : reps) any |= r.reject;
    return t.fail_on_reject && any ? 2 : 0;
}

struct DetectOptions {
    std::string input;
    std::uint64_t seed = 1;
    std::string profile;
};

int run_detect(const DetectOptions& d, const Common& o) {
    const TimeSeries x(read_series_csv(d.input));
    const SpectralConfig c = load_config(x.size(), o);
    const FrequencyGrid g = build_frequency_grid(c);
    const ChangePointSet s = algorithm1(x, c, g, d.seed, {resolve_threads(o.threads)});
    json j = to_json(s);
    j["seed"] = d.seed;
    j["config"] = to_key_values(c);
    emit(o.out, j.dump(2) + "\n");
    std::string profile = d.profile;
    if (profile.empty() && o.debug_dumps) profile = dump_path(o, ".profile.csv");
    if (!profile.empty()) {
        std::ofstream f(profile);
        if (!f) throw Error("cannot write " + profile);
        f << std::setprecision(12) << "r,max_d\n";
        for (const auto& [r, v] : d_profile(x, c, g)) f << r << ',' << v << '\n';
    }
    return 0;
}

struct SimulateOptions {
    std::string model = "M1";
    int T = 1000;
    double rho = 0.3;
    double l1 = 0.33, l2 = 0.66;
    int burn_in = 500;
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;
    std::string truth;
};

DgpSpec make_spec(const SimulateOptions& s) {
    DgpSpec spec{parse_model(s.model), s.T};
    spec.rho = s.rho;
    spec.l1 = s.l1;
    spec.l2 = s.l2;
    spec.burn_in = s.burn_in;
    spec.validate();
    return spec;
}

int run_simulate(const SimulateOptions& s, const Common& o) {
    const DgpSpec spec = make_spec(s);
    const TimeSeries x = simulate(spec, s.seed, s.stream);
    std::ostringstream os;
    write_series_csv(os, x);
    emit(o.out, os.str());
    if (!s.truth.empty()) {
        json j;
        j["model"] = to_string(spec.model);
        j["T"] = spec.T;
        j["seed"] = s.seed;
        j["breaks"] = json::array();
        for (const auto& b : x.truth()) j["breaks"].push_back({{"t", b.break_time}, {"lambda", static_cast<double>(b.break_time) / spec.T}});
        std::ofstream f(s.truth);
        if (!f) throw Error("cannot write " + s.truth);
        f << j.dump(2) << '\n';
    }
    return 0;
}

struct MonteCarloOptions {
    SimulateOptions sim;
    int reps = 1000;
    double alpha = 0.05;
    std::string omegas;
    std::string mode = "rates";
    std::string json_out;
};

int run_montecarlo(const MonteCarloOptions& m, const Common& o) {
    if (m.reps < 100) throw ConfigError("replications must be at least 100");
    if (!(m.alpha > 0.0 && m.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    const DgpSpec spec = make_spec(m.sim);
    const SpectralConfig c = load_config(spec.T, o);
    const FrequencyGrid g = build_frequency_grid(c);
    const int threads = resolve_threads(o.threads);
    json j;
    std::ostringstream os;
    os << std::setprecision(10);
    if (m.mode == "rates") {
        const std::vector<double> omegas =
            m.omegas.empty() ? std::vector<double>{0.0, pi / 4, pi / 2, 3 * pi / 4} : parse_omegas(m.omegas);
        const NullDraws d = simulate_statistics(spec, c, g, omegas, m.reps, m.sim.seed, threads);
        os << "model,T,statistic,alpha,reject_rate,replications,seed\n";
        j["rows"] = json::array();
        for (const RateRow& r : rate_rows(spec, d, m.alpha, m.sim.seed)) {
            os << r.model << ',' << r.T << ',' << r.statistic << ',' << r.alpha << ',' << r.reject_rate << ','
               << r.replications << ',' << r.seed << '\n';
            j["rows"].push_back({{"model", r.model}, {"T", r.T}, {"statistic", r.statistic}, {"alpha", r.alpha},
                                 {"reject_rate", r.reject_rate}, {"replications", r.replications}, {"seed", r.seed}});
        }
    } else if (m.mode == "breaks") {
        const BreakSummary b = simulate_breaks(spec, c, g, m.reps, m.sim.seed, threads);
        std::map<int, int> hist;
        for (int v : b.m_hat) ++hist[v];
        os << "model,T,m0,percent_correct,break,q25,median,q75,replications,seed\n";
        const std::string head = to_string(spec.model) + "," + std::to_string(spec.T) + "," + std::to_string(b.m0) + ",";
        if (b.date_quantiles.empty()) {
            os << head << 100.0 * b.fraction_correct << ",,,,," << m.reps << ',' << m.sim.seed << '\n';
        }
        for (std::size_t l = 0; l < b.date_quantiles.size(); ++l) {
            const auto& q = b.date_quantiles[l];
            os << head << 100.0 * b.fraction_correct << ',' << l + 1 << ',' << q[0] << ',' << q[1] << ',' << q[2]
               << ',' << m.reps << ',' << m.sim.seed << '\n';
        }
        j["percent_correct"] = 100.0 * b.fraction_correct;
        j["m0"] = b.m0;
        j["m_hat_counts"] = json::object();
        for (const auto& [k, v] : hist) j["m_hat_counts"][std::to_string(k)] = v;
        j["date_quantiles"] = b.date_quantiles;
    } else {
        throw ConfigError("unknown mode '" + m.mode + "'");
    }
    j["model"] = to_string(spec.model);
    j["T"] = spec.T;
    j["replications"] = m.reps;
    j["seed"] = m.sim.seed;
    emit(o.out, os.str());
    if (!m.json_out.empty()) {
        std::ofstream f(m.json_out);
        if (!f) throw Error("cannot write " + m.json_out);
        f << j.dump(2) << '\n';
    }
    return 0;
}

struct SpectrumOptions {
    std::string input;
    std::string side = "left";
};

int run_spectrum(const SpectrumOptions& s, const Common& o) {
    const TimeSeries x(read_series_csv(s.input));
    const SpectralConfig c = load_config(x.size(), o);
    const FrequencyGrid g = build_frequency_grid(c);
    if (s.side != "left" && s.side != "right") throw ConfigError("side must be left or right");
    const LocalSpectrum L = spectrum_field(x.demeaned(), s.side == "left" ? Side::Left : Side::Right, c, g);
    std::ostringstream os;
    write_spectrum_csv(os, L);
    emit(o.out, os.str());
    return 0;
}

void add_common(CLI::App* sub, Common& o, bool threads) {
    sub->add_option("--config", o.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--set", o.overrides, "configuration override key=value (repeatable)");
    sub->add_option("--out", o.out, "output path (default stdout)");
    sub->add_flag("--debug-dumps", o.debug_dumps, "write diagnostic CSV files next to --out");
    if (threads) sub->add_option("--threads", o.threads, "worker threads (default EVOSPEC_THREADS or all cores)");
}

void add_model(CLI::App* sub, SimulateOptions& s) {
    sub->add_option("--model", s.model, "M1..M7");
    sub->add_option("-T,--length", s.T, "series length");
    sub->add_option("--rho", s.rho, "AR coefficient for M1");
    sub->add_option("--l1", s.l1, "first break fraction");
    sub->add_option("--l2", s.l2, "second break fraction");
    sub->add_option("--burn-in", s.burn_in, "discarded initial samples");
    sub->add_option("--seed", s.seed, "random seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Change-point detection for time series with evolving spectra"};
    app.require_subcommand(1);
    Common common;

    TestOptions topt;
    auto* test = app.add_subcommand("test", "max-type tests for a spectral change");
    test->add_option("input", topt.input, "single-column CSV")->required();
    test->add_option("--stat", topt.stat, "statistic")->check(CLI::IsMember({"smax", "sdmax", "rmax", "rdmax", "all"}));
    auto* om = test->add_option("--omega", topt.omega, "single frequency");
    test->add_option("--omegas", topt.omegas, "comma-separated frequencies")->excludes(om);
    test->add_option("--alpha", topt.alpha, "significance level");
    test->add_flag("--fail-on-reject", topt.fail_on_reject, "exit with status 2 when any test rejects");
    test->add_flag("--table", topt.table, "print a fixed-column table instead of JSON");
    add_common(test, common, false);

    DetectOptions dopt;
    auto* det = app.add_subcommand("detect", "locate multiple change-points");
    det->add_option("input", dopt.input, "single-column CSV")->required();
    det->add_option("--seed", dopt.seed, "seed for the refinement draws");
    det->add_option("--profile", dopt.profile, "write max-over-frequency D profile CSV");
    add_common(det, common, true);

    SimulateOptions sopt;
    auto* sim = app.add_subcommand("simulate", "generate a series from one of the models");
    add_model(sim, sopt);
    sim->add_option("--stream", sopt.stream, "replication stream");
    sim->add_option("--truth", sopt.truth, "write break metadata JSON");
    add_common(sim, common, false);

    MonteCarloOptions mopt;
    auto* mc = app.add_subcommand("montecarlo", "rejection rates or break-date summaries over replications");
    add_model(mc, mopt.sim);
    mc->add_option("--reps", mopt.reps, "replications");
    mc->add_option("--alpha", mopt.alpha, "significance level");
    mc->add_option("--omegas", mopt.omegas, "comma-separated frequencies");
    mc->add_option("--mode", mopt.mode, "rates or breaks")->check(CLI::IsMember({"rates", "breaks"}));
    mc->add_option("--json", mopt.json_out, "write the summary as JSON too");
    add_common(mc, common, true);

    SpectrumOptions popt;
    auto* spec = app.add_subcommand("spectrum", "export the local spectral estimates as CSV");
    spec->add_option("input", popt.input, "single-column CSV")->required();
    spec->add_option("--side", popt.side, "left or right")->check(CLI::IsMember({"left", "right"}));
    add_common(spec, common, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*test) return run_test(topt, common);
        if (*det) return run_detect(dopt, common);
        if (*sim) return run_simulate(sopt, common);
        if (*mc) return run_montecarlo(mopt, common);
        if (*spec) return run_spectrum(popt, common);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
