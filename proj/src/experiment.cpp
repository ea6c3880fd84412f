#include "csdet/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "csdet/air.hpp"
#include "csdet/packing.hpp"
#include "csdet/satchan.hpp"
#include "csdet/shortening.hpp"
#include "csdet/txfilter.hpp"

namespace csdet {

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

ParsedConfig parse_config_text(const std::string& text) {
    ParsedConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError{lineno, "unterminated section header"};
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError{lineno, "empty section name"};
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError{lineno, "expected key = value"};
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError{lineno, "empty key"};
        if (section.empty()) throw ConfigError{lineno, "key outside any [section]"};
        cfg.kv[section + "." + key] = ParsedConfig::Entry{value, lineno};
    }
    return cfg;
}

std::string ParsedConfig::get(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError{0, "missing required key: " + key};
    return it->second.value;
}

std::string ParsedConfig::get_or(const std::string& key, const std::string& def) const {
    auto it = kv.find(key);
    return it == kv.end() ? def : it->second.value;
}

double ParsedConfig::get_double(const std::string& key) const {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError{0, "missing required key: " + key};
    try {
        size_t pos = 0;
        const double v = std::stod(it->second.value, &pos);
        if (pos != it->second.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError{it->second.line, "not a number: " + key};
    }
}

double ParsedConfig::get_double_or(const std::string& key, double def) const {
    return has(key) ? get_double(key) : def;
}

long ParsedConfig::get_long_or(const std::string& key, long def) const {
    return has(key) ? static_cast<long>(get_double(key)) : def;
}

std::vector<double> ParsedConfig::get_list(const std::string& key) const {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError{0, "missing required key: " + key};
    const std::string& v = it->second.value;
    std::vector<double> out;
    if (v.find(':') != std::string::npos) {
        double a, b, step;
        if (std::sscanf(v.c_str(), "%lf:%lf:%lf", &a, &b, &step) != 3 || step <= 0.0)
            throw ConfigError{it->second.line, "bad range (want a:b:step): " + key};
        for (double x = a; x <= b + 1e-12; x += step) out.push_back(x);
        return out;
    }
    std::istringstream in(v);
    double x;
    while (in >> x) out.push_back(x);
    if (out.empty()) throw ConfigError{it->second.line, "empty list: " + key};
    return out;
}

std::string ParsedConfig::canonical() const {
    std::string out;
    for (const auto& [k, e] : kv) {
        out += k;
        out += '=';
        out += e.value;
        out += '\n';
    }
    return out;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// CSV writing
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(std::string path, const ParsedConfig& cfg, std::uint64_t seed)
        : path_(std::move(path)) {
        body_ += "# csdet ";
        body_ += kVersion;
        body_ += "\n# config-hash ";
        char buf[24];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(cfg.canonical())));
        body_ += buf;
        body_ += "\n# seed ";
        body_ += std::to_string(seed);
        body_ += "\n";
    }
    void line(const std::string& s) {
        body_ += s;
        body_ += "\n";
    }
    void row(const std::vector<double>& vals) {
        std::string s;
        for (size_t i = 0; i < vals.size(); ++i) {
            if (i) s += ",";
            s += fmt(vals[i]);
        }
        line(s);
    }
    void commit() const {  // atomic: temp file + rename
        const std::string tmp = path_ + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write " + tmp);
            out << body_;
        }
        if (std::rename(tmp.c_str(), path_.c_str()) != 0)
            throw std::runtime_error("cannot rename " + tmp + " -> " + path_);
    }

  private:
    std::string path_;
    std::string body_;
};

// ---------------------------------------------------------------------------
// Shared config pieces
// ---------------------------------------------------------------------------

ChannelTaps channel_from_config(const ParsedConfig& cfg, const std::string& section) {
    if (cfg.has(section + ".taps_file")) {
        const std::string path = cfg.get(section + ".taps_file");
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open taps file: " + path);
        std::vector<cplx> taps;
        double re, im;
        while (in >> re >> im) taps.emplace_back(re, im);
        if (taps.empty()) throw std::runtime_error("empty taps file: " + path);
        return make_channel_taps(std::move(taps));
    }
    const std::vector<double> v = cfg.get_list(section + ".taps");
    std::vector<cplx> taps;
    if (cfg.get_or(section + ".taps_format", "real") == "complex") {
        if (v.size() % 2 != 0) throw std::runtime_error("complex taps need re im pairs");
        for (size_t i = 0; i < v.size(); i += 2) taps.emplace_back(v[i], v[i + 1]);
    } else {
        for (double x : v) taps.emplace_back(x, 0.0);
    }
    return make_channel_taps(std::move(taps));
}

double n0_from_config(const ParsedConfig& cfg, const std::string& section,
                      const ChannelTaps& h) {
    if (cfg.has(section + ".n0")) return cfg.get_double(section + ".n0");
    const double snr = cfg.get_double(section + ".snr_db");
    return h.energy() / std::pow(10.0, snr / 10.0);
}

PulseSamples pulse_from_config(const ParsedConfig& cfg, const std::string& section) {
    const std::string kind = cfg.get_or(section + ".pulse", "rrc");
    const int span = static_cast<int>(cfg.get_long_or(section + ".span", 32));
    const int eta = static_cast<int>(cfg.get_long_or(section + ".eta_s", 8));
    if (kind == "rrc") return rrc_pulse(cfg.get_double_or(section + ".rolloff", 0.2), span, eta);
    if (kind == "rc") return rc_pulse(cfg.get_double_or(section + ".rolloff", 0.2), span, eta);
    if (kind == "gaussian")
        return gaussian_pulse(cfg.get_double_or(section + ".bt", 0.3), span, eta);
    throw std::runtime_error("unknown pulse kind: " + kind);
}

// ---------------------------------------------------------------------------
// Experiment kinds
// ---------------------------------------------------------------------------

void run_design_cs(const ParsedConfig& cfg, const std::string& out, std::uint64_t seed) {
    const ChannelTaps h = channel_from_config(cfg, "channel");
    const double n0 = n0_from_config(cfg, "channel", h);
    const int l = static_cast<int>(cfg.get_long_or("design.L", 1));
    const std::string kind = cfg.get_or("design.shortener", "cs");

    CsvWriter w(out, cfg, seed);
    if (kind == "cs") {
        const ShortenerDesign d = design_scalar_cs(h, n0, l);
        w.line("section,index,re,im");
        for (size_t i = 0; i < d.core.b.size(); ++i)
            w.line("b," + std::to_string(i) + "," + fmt(d.core.b[i].real()) + "," +
                   fmt(d.core.b[i].imag()));
        for (size_t i = 0; i < d.core.target.size(); ++i)
            w.line("Gr," + std::to_string(i) + "," + fmt(d.core.target[i].real()) + "," +
                   fmt(d.core.target[i].imag()));
        for (size_t i = 0; i < d.fe_forney.size(); ++i)
            w.line("Hr," + std::to_string(static_cast<int>(i) + d.fe_forney_min_lag) + "," +
                   fmt(d.fe_forney[i].real()) + "," + fmt(d.fe_forney[i].imag()));
        w.line("I_OPT,," + fmt(d.i_opt()) + ",0");
    } else if (kind == "trunc") {
        const MismatchedLaw ml = truncation_baseline(
            autocorrelate(h), n0, l, cfg.get_double_or("design.noise_scale", 1.0));
        w.line("section,index,re,im");
        for (size_t i = 0; i < ml.target.size(); ++i)
            w.line("Gr," + std::to_string(i) + "," + fmt(ml.target[i].real()) + "," +
                   fmt(ml.target[i].imag()));
    } else if (kind == "mmse-legacy") {
        const LegacyMmseDesign d = mmse_legacy_cs(h, n0, l);
        w.line("section,index,re,im");
        for (size_t i = 0; i < d.q.size(); ++i)
            w.line("q," + std::to_string(i) + "," + fmt(d.q[i].real()) + "," +
                   fmt(d.q[i].imag()));
        for (size_t i = 0; i < d.w.size(); ++i)
            w.line("w," + std::to_string(static_cast<int>(i) + d.w_min_lag) + "," +
                   fmt(d.w[i].real()) + "," + fmt(d.w[i].imag()));
        w.line("MSE,," + fmt(d.mse) + ",0");
    } else {
        throw std::runtime_error("unknown shortener kind: " + kind);
    }
    w.commit();
}

void run_air_curve(const ParsedConfig& cfg, const std::string& out, std::uint64_t seed,
                   int threads) {
    const ChannelTaps h = channel_from_config(cfg, "channel");
    const std::vector<double> snrs = cfg.get_list("air.snr_db");
    const int l = static_cast<int>(cfg.get_long_or("air.L", 1));
    const long n = cfg.get_long_or("air.n", 100000);
    const int blocks = static_cast<int>(cfg.get_long_or("air.blocks", 10));
    const std::string law_kind = cfg.get_or("air.law", "cs");
    const Constellation c =
        make_constellation(constellation_kind_from_name(cfg.get_or("air.constellation", "bpsk")));
    const double es = h.energy();
    const double ni_scale = cfg.get_double_or("air.noise_scale", 1.0);

    CsvWriter w(out, cfg, seed);
    w.line("snr_db,air,stderr");
    for (double snr : snrs) {
        const double n0 = es / std::pow(10.0, snr / 10.0);
        DetectionLaw law = ForneyModel{h, n0};
        int guard = 0;
        if (law_kind == "cs") {
            const ShortenerDesign d = design_scalar_cs(h, n0 * ni_scale, l);
            const MismatchedLaw ml = d.law(Observable::Forney);
            guard = std::abs(ml.fe_min_lag) + static_cast<int>(ml.front_end.size());
            law = ml;
        } else if (law_kind == "trunc") {
            law = truncation_baseline_forney(h, n0, l, ni_scale);
            guard = h.memory() + 1;
        } else if (law_kind == "mmse-legacy") {
            const LegacyMmseDesign d = mmse_legacy_cs(h, n0 * ni_scale, l);
            guard = std::abs(d.law.fe_min_lag) + static_cast<int>(d.law.front_end.size());
            law = d.law;
        } else if (law_kind != "exact") {
            throw std::runtime_error("unknown law: " + law_kind);
        }
        TrellisChannel ch;
        ch.constellation = c;
        const ForneyModel fm{h, n0};
        ch.simulate = [fm, guard](std::span<const cplx> cc, SeededRng& rng) {
            return simulate_forney(fm, cc, rng, guard);
        };
        const AirEstimate est = mc_air_trellis(ch, law, n, blocks, seed, threads);
        w.row({snr, est.value, est.std_err});
    }
    w.commit();
}

void run_txfilter_opt(const ParsedConfig& cfg, const std::string& out, std::uint64_t seed) {
    const ChannelTaps h = channel_from_config(cfg, "channel");
    const double n0 = n0_from_config(cfg, "channel", h);
    const int l = static_cast<int>(cfg.get_long_or("txfilter.L", 1));
    const int ms = static_cast<int>(cfg.get_long_or("txfilter.multistart", 3));
    const std::vector<double> h2 = abs2(dtft(h, kDefaultGrid));
    const TransmitFilterSpec spec = optimize_transmit_filter(h2, n0, l, ms, seed);

    CsvWriter w(out, cfg, seed);
    w.line("section,index,re,im");
    for (size_t i = 0; i < spec.a_coef.size(); ++i)
        w.line("A," + std::to_string(i) + "," + fmt(spec.a_coef[i].real()) + "," +
               fmt(spec.a_coef[i].imag()));
    w.line("objective,," + fmt(spec.objective) + ",0");
    w.line("power,," + fmt(spec.power) + ",0");
    w.line("omega,psq,,");
    const int n = static_cast<int>(spec.psq.size());
    const int stride = std::max(1, n / 512);
    for (int i = 0; i < n; i += stride)
        w.line(fmt(-kPi + 2.0 * kPi * i / n) + "," + fmt(spec.psq[i]) + ",,");
    w.commit();
}

void run_pack(const ParsedConfig& cfg, const std::string& out, std::uint64_t seed) {
    PackingConfig pc;
    pc.constellation =
        make_constellation(constellation_kind_from_name(cfg.get_or("pack.constellation", "qpsk")));
    pc.pulse = pulse_from_config(cfg, "pack");
    pc.detector = detector_kind_from_name(cfg.get_or("pack.detector", "trellis-cs"));
    pc.l = static_cast<int>(cfg.get_long_or("pack.L", 1));
    pc.qpsk_gray_rails = cfg.get_or("pack.gray_rails", "false") == "true";
    pc.tau_grid = cfg.get_list("pack.tau");
    pc.nuf_grid = cfg.get_list("pack.nu_f");
    if (cfg.has("pack.w")) pc.w_grid = cfg.get_list("pack.w");
    pc.esn0_db = cfg.get_list("pack.esn0_db");
    if (cfg.has("pack.ebn0_db")) pc.ebn0_db = cfg.get_list("pack.ebn0_db");
    pc.n_per_point = cfg.get_long_or("pack.n", 10000);
    pc.blocks = static_cast<int>(cfg.get_long_or("pack.blocks", 4));
    pc.seed = seed;
    pc.ni_scale = cfg.get_double_or("pack.ni_scale", 1.0);
    pc.j_carriers = static_cast<int>(cfg.get_long_or("pack.j_carriers", 0));
    pc.mc_budget = cfg.get_long_or("pack.mc_budget", 0);

    const PackingGridResult res = optimize_ase(pc);
    CsvWriter w(out, cfg, seed);
    if (res.budget_exceeded) w.line("# warning: mc budget exceeded, partial grid");
    w.line("tau,nu,W,esn0_db,air,stderr,eta");
    for (const auto& pt : res.points)
        for (size_t i = 0; i < pt.air.size(); ++i)
            w.row({pt.tau, pt.nuf, pt.w, pc.esn0_db[i], pt.air[i].value, pt.air[i].std_err,
                   pt.eta[i]});
    if (!res.summary.empty()) {
        w.line("ebn0_db,eta_max,tau_opt,nu_opt,w_opt,esn0_db_opt");
        for (const auto& s : res.summary)
            w.row({s.ebn0_db, s.eta_max, s.tau_opt, s.nuf_opt, s.w_opt, s.esn0_db_opt});
    }
    w.commit();
}

void run_satellite_sim(const ParsedConfig& cfg, const std::string& out, std::uint64_t seed) {
    const int eta = static_cast<int>(cfg.get_long_or("satellite.eta_s", 8));
    const double ibo = cfg.get_double_or("satellite.ibo_db", 0.0);
    const SalehHpa hpa;  // thesis parameters by default
    const TransponderSpec spec =
        make_transponder(eta, cfg.get_double_or("satellite.imux_bw", 0.94),
                         cfg.get_double_or("satellite.omux_bw", 0.85), hpa, ibo);
    const Constellation c = make_constellation(
        constellation_kind_from_name(cfg.get_or("satellite.mod", "8psk")));
    const PulseSamples tx =
        rrc_pulse(cfg.get_double_or("satellite.rolloff", 0.05),
                  static_cast<int>(cfg.get_long_or("satellite.span", 32)), eta);
    const int l = static_cast<int>(cfg.get_long_or("satellite.L", 2));
    const std::string det = cfg.get_or("satellite.detector", "cs");
    const std::vector<double> psat_n0 = cfg.get_list("satellite.psat_n0_db");
    const long n = cfg.get_long_or("satellite.n", 10000);
    const int blocks = static_cast<int>(cfg.get_long_or("satellite.blocks", 2));
    const double ni_scale = cfg.get_double_or("satellite.noise_scale", 1.0);

    const SatellitePskChain chain =
        build_satellite_psk_chain(spec, tx, c, cfg.get_long_or("satellite.fit_n", 20000), seed);
    const double psat = hpa.sat_power();
    const SpectrumSamples gs = dtft(chain.g, kDefaultGrid);
    std::vector<double> vsq(gs.size());
    for (int i = 0; i < gs.size(); ++i) vsq[i] = std::max(0.0, gs.v[i].real());

    CsvWriter w(out, cfg, seed);
    w.line("# obo_db " + fmt(chain.obo_db) + " fit_residual_db " + fmt(chain.fit_residual_db));
    w.line("psat_n0_db,air,stderr");
    for (double x : psat_n0) {
        const double n0 = psat / std::pow(10.0, x / 10.0);
        DetectionLaw law =
            det == "cs"
                ? DetectionLaw(design_scalar_cs_psd(vsq, n0 * ni_scale, l).law(
                      Observable::Ungerboeck))
                : DetectionLaw(truncation_baseline(chain.g, n0, l, ni_scale));
        TrellisChannel ch;
        ch.constellation = c;
        ch.simulate = [&chain, n0](std::span<const cplx> cc, SeededRng& rng) {
            return satellite_psk_observable(chain, cc, n0, rng);
        };
        const AirEstimate est = mc_air_trellis(ch, law, n, blocks, seed + 31, 1);
        w.row({x, est.value, est.std_err});
    }
    w.commit();
}

void run_szego_check(const ParsedConfig& cfg, const std::string& out, std::uint64_t seed) {
    const ChannelTaps h = channel_from_config(cfg, "szego");
    const AutocorrTaps g = autocorrelate(h);
    const double n0 = cfg.get_double_or("szego.n0", 1.0);
    std::vector<double> ns = {64, 256, 1024};
    if (cfg.has("szego.n_list")) ns = cfg.get_list("szego.n_list");

    CsvWriter w(out, cfg, seed);
    w.line("n,finite,asymptotic");
    for (double nd : ns) {
        const SzegoResult r = szego_logdet(g, static_cast<int>(nd), n0);
        w.row({nd, r.finite_n, r.asymptotic});
    }
    w.commit();
}

}  // namespace

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

int run_experiment_text(const std::string& config_text, const CliOverrides& overrides,
                        std::string* diag) {
    ParsedConfig cfg;
    try {
        cfg = parse_config_text(config_text);
        if (overrides.seed)
            cfg.kv["experiment.seed"] = ParsedConfig::Entry{std::to_string(*overrides.seed), 0};
        if (overrides.out) cfg.kv["experiment.out"] = ParsedConfig::Entry{*overrides.out, 0};
        if (overrides.threads)
            cfg.kv["experiment.threads"] =
                ParsedConfig::Entry{std::to_string(*overrides.threads), 0};

        const std::string kind = cfg.get("experiment.kind");
        const std::string out = cfg.get("experiment.out");
        const std::uint64_t seed =
            static_cast<std::uint64_t>(cfg.get_long_or("experiment.seed", 1));
        int threads = static_cast<int>(cfg.get_long_or("experiment.threads", 1));
        if (const char* env = std::getenv("CSDET_THREADS")) threads = std::atoi(env);

        if (kind == "design-cs") {
            run_design_cs(cfg, out, seed);
        } else if (kind == "air-curve") {
            run_air_curve(cfg, out, seed, std::max(1, threads));
        } else if (kind == "txfilter-opt") {
            run_txfilter_opt(cfg, out, seed);
        } else if (kind == "pack") {
            run_pack(cfg, out, seed);
        } else if (kind == "satellite-sim") {
            run_satellite_sim(cfg, out, seed);
        } else if (kind == "szego-check") {
            run_szego_check(cfg, out, seed);
        } else {
            throw ConfigError{cfg.kv.at("experiment.kind").line,
                              "unknown experiment kind: " + kind};
        }
        return 0;
    } catch (const ConfigError& e) {
        if (diag)
            *diag = "config error (line " + std::to_string(e.line) + "): " + e.message;
        return 2;
    } catch (const std::exception& e) {
        if (diag) *diag = std::string("error: ") + e.what();
        return 1;
    }
}

int run_experiment_file(const std::string& path, const CliOverrides& overrides,
                        std::string* diag) {
    std::ifstream in(path);
    if (!in) {
        if (diag) *diag = "cannot open config: " + path;
        return 2;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return run_experiment_text(ss.str(), overrides, diag);
}

}  // namespace csdet
